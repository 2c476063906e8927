"""Unit tests for the pointwise constitutive algebra."""

import numpy as np
import pytest

from viscofrac.constitutive import (
    ConstitutiveError,
    ConstitutiveLaw,
    DegradationSpec,
    Section,
    StrainBoundError,
    SymTensor,
    conjugate_potential,
    conjugate_radial,
    degradation,
    inverse_magnitude,
    inverse_response,
    potential,
    potential_radial,
    response,
    response_jacobian,
    response_magnitude,
    tensor_norm,
)
from viscofrac.oracles import fd_jacobian, numeric_inverse

ALL_LAWS = [
    ConstitutiveLaw.p_growth(1.5),
    ConstitutiveLaw.p_growth(2.0),
    ConstitutiveLaw.p_growth(3.0),
    ConstitutiveLaw.strain_limiting(0.5),
    ConstitutiveLaw.strain_limiting(1.0),
    ConstitutiveLaw.strain_limiting(2.0),
    ConstitutiveLaw.regularized(1.0, 10),
    ConstitutiveLaw.regularized(2.0, 50),
]


def random_sym(rng, n, d=2, scale=1.0):
    T = rng.normal(size=(n, d, d)) * scale
    return 0.5 * (T + np.swapaxes(T, -1, -2))


def feasible_stress(law, rng, n, d=2):
    """Random stresses S in the domain of the inverse response."""
    S = random_sym(rng, n, d)
    if law.kind.value == "strain-limiting":
        s = tensor_norm(S)
        S = S * (0.95 * rng.uniform(0.05, 1.0, n) / np.maximum(s, 1e-12))[:, None, None]
    return S


# -- parameter validation ----------------------------------------------------


def test_law_parameter_validation():
    with pytest.raises(ConstitutiveError):
        ConstitutiveLaw.p_growth(1.0)
    with pytest.raises(ConstitutiveError):
        ConstitutiveLaw.strain_limiting(0.0)
    with pytest.raises(ConstitutiveError):
        ConstitutiveLaw.regularized(1.0, 0)
    with pytest.raises(ConstitutiveError):
        DegradationSpec(section=Section.TWO, eta=0.0)


def test_sym_tensor_roundtrip():
    mat = np.array([[1.0, 2.0], [2.0, -3.0]])
    t = SymTensor.from_matrix(mat)
    assert np.array_equal(t.mat, mat)
    assert t.norm == pytest.approx(np.linalg.norm(mat))
    with pytest.raises(ConstitutiveError):
        SymTensor.from_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ConstitutiveError):
        SymTensor(2, np.array([1.0, np.nan, 0.0]))


def test_non_finite_tensor_rejected():
    law = ConstitutiveLaw.p_growth(2.0)
    with pytest.raises(ConstitutiveError):
        response(law, np.array([[np.inf, 0.0], [0.0, 0.0]]))


# -- radial maps -------------------------------------------------------------


def test_response_zero_at_zero():
    for law in ALL_LAWS:
        assert np.all(response(law, np.zeros((2, 2))) == 0.0)
        assert np.all(inverse_response(law, np.zeros((2, 2))) == 0.0)


def test_pgrowth_identity_at_p2():
    law = ConstitutiveLaw.p_growth(2.0)
    T = random_sym(np.random.default_rng(0), 50)
    assert np.allclose(response(law, T), T)
    assert np.allclose(inverse_response(law, T), T)


def test_strain_limiting_magnitude_below_one():
    # |F(T)| < 1 regardless of |T|
    law = ConstitutiveLaw.strain_limiting(1.0)
    t = np.array([0.0, 1.0, 10.0, 1e6])
    m = response_magnitude(law, t)
    assert np.all(m < 1.0)
    assert np.all(np.diff(m) > 0.0)


def test_strain_limiting_known_inverse():
    # a=1: m(t) = t/(1+t) so m(1) = 1/2
    law = ConstitutiveLaw.strain_limiting(1.0)
    assert inverse_magnitude(law, 0.5) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(StrainBoundError):
        inverse_magnitude(law, 1.0)


def test_regularized_inverse_against_bisection_oracle():
    rng = np.random.default_rng(7)
    for law in (ConstitutiveLaw.regularized(1.0, 10), ConstitutiveLaw.regularized(2.0, 50)):
        S = random_sym(rng, 200, scale=3.0)
        T = inverse_response(law, S)
        worst = 0.0
        for i in range(0, 200, 10):
            T_o = numeric_inverse(law, S[i])
            worst = max(worst, float(np.max(np.abs(T[i] - T_o))))
        assert worst <= 1e-9


def test_potential_closed_forms():
    # a=1: phi(t) = t - log(1+t); value at t=1 is 1 - log 2
    law1 = ConstitutiveLaw.strain_limiting(1.0)
    assert potential_radial(law1, 1.0) == pytest.approx(1.0 - np.log(2.0), abs=1e-12)
    # a=2: phi(t) = sqrt(1+t^2) - 1
    law2 = ConstitutiveLaw.strain_limiting(2.0)
    assert potential_radial(law2, 1.0) == pytest.approx(np.sqrt(2.0) - 1.0, abs=1e-12)
    # conjugates: a=1 at s=1/2 -> -1/2 - log(1/2) = log 2 - 1/2
    assert conjugate_radial(law1, 0.5) == pytest.approx(np.log(2.0) - 0.5, abs=1e-12)
    assert conjugate_radial(law2, 0.5) == pytest.approx(1.0 - np.sqrt(0.75), abs=1e-12)
    # outside the unit ball the unregularized conjugate is +inf
    assert conjugate_radial(law1, 1.5) == np.inf


def test_generic_a_potential_matches_quadrature():
    from scipy.integrate import quad

    law = ConstitutiveLaw.strain_limiting(0.5)
    for t in (0.3, 1.0, 4.0):
        ref, _ = quad(lambda x: x / (1.0 + np.sqrt(x)) ** 2, 0.0, t, epsabs=1e-13)
        assert potential_radial(law, t) == pytest.approx(ref, abs=1e-9)


def test_regularized_conjugate_matches_quadrature_of_inverse():
    from scipy.integrate import quad

    law = ConstitutiveLaw.regularized(1.0, 10)
    for s in (0.2, 0.8, 1.5):
        ref, _ = quad(lambda x: float(inverse_magnitude(law, np.array(x))), 0.0, s,
                      epsabs=1e-12, limit=200)
        assert conjugate_radial(law, s) == pytest.approx(ref, abs=1e-9)


# -- identities over random samples ------------------------------------------


@pytest.mark.parametrize("law", ALL_LAWS, ids=str)
def test_inverse_round_trip(law):
    rng = np.random.default_rng(11)
    T = random_sym(rng, 1000, scale=2.0)
    S = response(law, T)
    T2 = inverse_response(law, S)
    tol = 1e-8 * (1.0 + tensor_norm(T))
    assert np.all(tensor_norm(T2 - T) <= tol)


@pytest.mark.parametrize("law", ALL_LAWS, ids=str)
def test_fenchel_identity(law):
    # phi(T) + phi*(F(T)) = F(T) : T
    rng = np.random.default_rng(13)
    T = random_sym(rng, 1000, scale=2.0)
    S = response(law, T)
    lhs = potential(law, T) + conjugate_potential(law, S)
    rhs = np.sum(S * T, axis=(-2, -1))
    assert np.all(np.abs(lhs - rhs) <= 1e-8 * (1.0 + tensor_norm(T) ** 2))


@pytest.mark.parametrize("law", ALL_LAWS, ids=str)
def test_young_inequality(law):
    # phi(T) + phi*(S) >= S : T for arbitrary pairs
    rng = np.random.default_rng(17)
    T = random_sym(rng, 300, scale=2.0)
    S = feasible_stress(law, rng, 300)
    gap = potential(law, T) + conjugate_potential(law, S) - np.sum(S * T, axis=(-2, -1))
    assert np.all(gap >= -1e-10 * (1.0 + tensor_norm(T) ** 2))


@pytest.mark.parametrize("law", ALL_LAWS, ids=str)
def test_monotonicity(law):
    # (F(T1) - F(T2)) : (T1 - T2) >= 0
    rng = np.random.default_rng(19)
    T1 = random_sym(rng, 1000, scale=2.0)
    T2 = random_sym(rng, 1000, scale=2.0)
    dots = np.sum((response(law, T1) - response(law, T2)) * (T1 - T2), axis=(-2, -1))
    assert np.min(dots) >= -1e-12


@pytest.mark.parametrize("dim", [2, 3])
def test_isotropy_under_rotation(dim):
    # F(Q T Q^t) = Q F(T) Q^t for rotations Q
    rng = np.random.default_rng(23)
    for law in ALL_LAWS:
        T = random_sym(rng, 20, d=dim)
        A = rng.normal(size=(dim, dim))
        Q, _ = np.linalg.qr(A)
        rotated = response(law, np.einsum("ab,nbc,dc->nad", Q, T, Q))
        expected = np.einsum("ab,nbc,dc->nad", Q, response(law, T), Q)
        assert np.allclose(rotated, expected, atol=1e-12)


def test_bounds_lemma():
    # min{1, 2^(1/a - 1)} (1 + y) <= (1 + y^a)^(1/a) <= max{1, 2^(1/a - 1)} (1 + y)
    rng = np.random.default_rng(29)
    y = rng.uniform(0.0, 50.0, 2000)
    for a in (0.5, 1.0, 2.0, 3.7):
        mid = (1.0 + y**a) ** (1.0 / a)
        c = 2.0 ** (1.0 / a - 1.0)
        lo = min(1.0, c) * (1.0 + y)
        hi = max(1.0, c) * (1.0 + y)
        assert np.all(lo <= mid * (1.0 + 1e-12))
        assert np.all(mid <= hi * (1.0 + 1e-12))


def test_coercivity_constants():
    # sampled check of phi(T) >= c0 |T|^growth - c1 with (c0, c1) = (1/2, 1)
    rng = np.random.default_rng(31)
    t = rng.uniform(0.0, 20.0, 2000)
    for law in ALL_LAWS:
        vals = potential_radial(law, t)
        if law.kind.value == "p-growth":
            lower = 0.5 * t**law.p / law.p - 1.0
        else:
            lower = 0.5 * t - 1.0  # linear growth of the strain-limiting potential
        assert np.all(vals >= lower - 1e-12)


# -- Jacobian ----------------------------------------------------------------


@pytest.mark.parametrize("law", ALL_LAWS, ids=str)
def test_jacobian_matches_finite_differences(law):
    rng = np.random.default_rng(37)
    for _ in range(20):
        T = random_sym(rng, 1)[0]
        T *= 0.5 + rng.uniform()  # keep |T| away from 0 where p<2 blows up
        A = response_jacobian(law, T).components
        A_fd = fd_jacobian(law, T, h_fd=1e-6)
        scale = np.abs(A).max() + 1.0
        assert np.max(np.abs(A - A_fd)) <= 1e-5 * scale


def test_jacobian_symmetry_and_sign():
    rng = np.random.default_rng(41)
    law = ConstitutiveLaw.regularized(1.0, 5)
    T = random_sym(rng, 1)[0]
    A = response_jacobian(law, T)
    assert A.has_major_symmetry
    S = random_sym(rng, 1)[0]
    assert A.quadratic_form(S, S) >= 0.0


def test_jacobian_singular_below_p2_at_zero():
    law = ConstitutiveLaw.p_growth(1.5)
    with pytest.raises(ConstitutiveError, match="singular"):
        response_jacobian(law, np.zeros((2, 2)))


def test_regularized_jacobian_entrywise_bound():
    # |A_n(T)_ijkl| <= 3 for the regularized strain-limiting family
    rng = np.random.default_rng(43)
    for law in (ConstitutiveLaw.regularized(1.0, 5), ConstitutiveLaw.regularized(2.0, 100)):
        for scale in (0.1, 1.0, 10.0, 1000.0):
            T = random_sym(rng, 1, scale=scale)[0]
            A = response_jacobian(law, T).components
            assert np.max(np.abs(A)) <= 3.0 + 1e-6


# -- degradation -------------------------------------------------------------


def test_degradation_both_sections():
    v = np.array([-0.5, 0.0, 0.5, 1.0])
    b2, db2 = degradation(DegradationSpec(Section.TWO, 1e-3), v)
    assert np.allclose(b2, v**2 + 1e-3)
    assert np.allclose(db2, 2 * v)
    b3, db3 = degradation(DegradationSpec(Section.THREE, 1e-3), v)
    assert np.allclose(b3, np.maximum(v, 0.0) ** 2 + 1e-3)
    assert np.allclose(db3, 2 * np.maximum(v, 0.0))
    assert np.all(b2 > 0) and np.all(b3 > 0)
