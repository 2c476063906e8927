"""Pointwise constitutive algebra for nonlinear viscoelastic response families.

Three isotropic response families are supported, all of the radial form
``F(T) = m(|T|) T/|T|`` for a monotone magnitude map ``m``:

  - ``PGrowth``:                 F(T) = |T|^(p-2) T,              p > 1
  - ``StrainLimiting``:          F(T) = T / (1 + |T|^a)^(1/a),    a > 0
  - ``RegularizedStrainLimiting``: the strain-limiting response plus the
    elliptic term T/n, which makes the map a bijection of tensor space.

The module also provides the stress potential ``phi``, its convex conjugate
``phi*`` (the elastic energy density is ``b(v)/alpha * phi*(eps(alpha u))``),
the response Jacobian as a fourth-order tensor, the inverse response, and the
degradation function ``b(v)``.

All operations are pure functions on value types.  Tensor arguments are plain
``numpy`` arrays of shape ``(..., d, d)`` (leading axes broadcast, so a
quadrature field of cell tensors is processed in one call) or ``SymTensor``
wrappers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "LawKind",
    "ConstitutiveLaw",
    "SymTensor",
    "FourthOrderTensor",
    "DegradationSpec",
    "Section",
    "ConstitutiveError",
    "StrainBoundError",
    "response",
    "inverse_response",
    "potential",
    "conjugate_potential",
    "response_jacobian",
    "degradation",
    "tensor_norm",
    "response_magnitude",
    "inverse_magnitude",
    "potential_radial",
    "conjugate_radial",
    "inverse_tangent_mandel",
    "mandel_vector",
    "mandel_matrix",
    "sym_dim",
]


class ConstitutiveError(ValueError):
    """Invalid constitutive input (non-finite tensor, bad parameters)."""


class StrainBoundError(ConstitutiveError):
    """A strain magnitude reached the a-priori bound of a strain-limiting law."""


class LawKind(Enum):
    PGROWTH = "p-growth"
    STRAIN_LIMITING = "strain-limiting"
    REGULARIZED = "regularized-strain-limiting"


class Section(Enum):
    """Which model variant a degradation function belongs to."""

    TWO = 2
    THREE = 3


@dataclass(frozen=True)
class ConstitutiveLaw:
    kind: LawKind
    p: float = 2.0
    a: float = 1.0
    n: int = 0

    def __post_init__(self):
        if self.kind is LawKind.PGROWTH:
            if not self.p > 1.0:
                raise ConstitutiveError(f"p-growth exponent must be > 1, got {self.p}")
        else:
            if not self.a > 0.0:
                raise ConstitutiveError(f"strain-limiting parameter a must be > 0, got {self.a}")
            if self.kind is LawKind.REGULARIZED and self.n < 1:
                raise ConstitutiveError(f"regularization parameter n must be >= 1, got {self.n}")

    @classmethod
    def p_growth(cls, p: float) -> "ConstitutiveLaw":
        return cls(kind=LawKind.PGROWTH, p=p)

    @classmethod
    def strain_limiting(cls, a: float) -> "ConstitutiveLaw":
        return cls(kind=LawKind.STRAIN_LIMITING, a=a)

    @classmethod
    def regularized(cls, a: float, n: int) -> "ConstitutiveLaw":
        return cls(kind=LawKind.REGULARIZED, a=a, n=n)

    @property
    def is_strain_limiting(self) -> bool:
        return self.kind is not LawKind.PGROWTH


@dataclass(frozen=True)
class DegradationSpec:
    """Stiffness weight b(v): v^2 + eta (Section.TWO) or max{0,v}^2 + eta (Section.THREE)."""

    section: Section
    eta: float

    def __post_init__(self):
        if not self.eta > 0.0:
            raise ConstitutiveError(f"stability parameter eta must be > 0, got {self.eta}")


class SymTensor:
    """Symmetric d x d tensor storing only the upper triangle.

    Construction from a full matrix symmetrizes nothing: the input must be
    symmetric already.  ``mat`` reconstructs the dense matrix.
    """

    __slots__ = ("dim", "packed")

    def __init__(self, dim: int, packed: np.ndarray):
        packed = np.asarray(packed, dtype=float)
        if dim not in (1, 2, 3):
            raise ConstitutiveError(f"dimension must be 1, 2 or 3, got {dim}")
        if packed.shape != (dim * (dim + 1) // 2,):
            raise ConstitutiveError("packed component count does not match dimension")
        if not np.all(np.isfinite(packed)):
            raise ConstitutiveError("non-finite tensor")
        self.dim = dim
        self.packed = packed

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "SymTensor":
        mat = np.asarray(mat, dtype=float)
        d = mat.shape[0]
        if mat.shape != (d, d):
            raise ConstitutiveError("expected a square matrix")
        if not np.allclose(mat, mat.T, atol=1e-13 * (1.0 + np.abs(mat).max(initial=0.0))):
            raise ConstitutiveError("matrix is not symmetric")
        iu = np.triu_indices(d)
        return cls(d, mat[iu])

    @classmethod
    def zero(cls, dim: int) -> "SymTensor":
        return cls(dim, np.zeros(dim * (dim + 1) // 2))

    @classmethod
    def identity(cls, dim: int) -> "SymTensor":
        return cls.from_matrix(np.eye(dim))

    @property
    def mat(self) -> np.ndarray:
        d = self.dim
        out = np.zeros((d, d))
        iu = np.triu_indices(d)
        out[iu] = self.packed
        out[(iu[1], iu[0])] = self.packed
        return out

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.mat))

    def __repr__(self):
        return f"SymTensor(dim={self.dim}, mat=\n{self.mat})"


class FourthOrderTensor:
    """Dense d x d x d x d tensor indexed (i, j, k, l)."""

    __slots__ = ("components",)

    def __init__(self, components: np.ndarray):
        components = np.asarray(components, dtype=float)
        if components.ndim != 4 or len(set(components.shape)) != 1:
            raise ConstitutiveError("expected a d x d x d x d array")
        self.components = components

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def apply(self, S: np.ndarray) -> np.ndarray:
        """Contract against a second-order tensor: (A S)_ij = A_ijkl S_kl."""
        return np.einsum("ijkl,kl->ij", self.components, np.asarray(S, dtype=float))

    def quadratic_form(self, S: np.ndarray, U: np.ndarray) -> float:
        return float(np.einsum("ijkl,ij,kl->", self.components, S, U))

    @property
    def has_major_symmetry(self) -> bool:
        c = self.components
        return bool(np.allclose(c, c.transpose(2, 3, 0, 1), atol=1e-12 * (1.0 + np.abs(c).max())))


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _as_mat(T) -> np.ndarray:
    if isinstance(T, SymTensor):
        return T.mat
    T = np.asarray(T, dtype=float)
    if T.ndim == 0:
        T = T.reshape(1, 1)
    if T.ndim < 2 or T.shape[-1] != T.shape[-2]:
        raise ConstitutiveError("expected tensor(s) of shape (..., d, d)")
    return T


def _check_finite(T: np.ndarray):
    if not np.all(np.isfinite(T)):
        raise ConstitutiveError("non-finite tensor")


def tensor_norm(T) -> np.ndarray:
    """Frobenius norm over the trailing two axes."""
    T = _as_mat(T)
    return np.sqrt(np.sum(T * T, axis=(-2, -1)))


def sym_dim(d: int) -> int:
    return d * (d + 1) // 2


_SQRT2 = np.sqrt(2.0)


def mandel_vector(T: np.ndarray) -> np.ndarray:
    """Map symmetric tensors (..., d, d) to Mandel vectors (..., d(d+1)/2).

    Off-diagonal components carry sqrt(2) so the Euclidean inner product of
    Mandel vectors equals the Frobenius product of the tensors.
    """
    T = _as_mat(T)
    d = T.shape[-1]
    if d == 1:
        return T[..., 0, 0][..., None]
    if d == 2:
        return np.stack([T[..., 0, 0], T[..., 1, 1], _SQRT2 * T[..., 0, 1]], axis=-1)
    return np.stack(
        [T[..., 0, 0], T[..., 1, 1], T[..., 2, 2],
         _SQRT2 * T[..., 1, 2], _SQRT2 * T[..., 0, 2], _SQRT2 * T[..., 0, 1]],
        axis=-1,
    )


def mandel_matrix(vec: np.ndarray, d: int) -> np.ndarray:
    """Inverse of :func:`mandel_vector`."""
    vec = np.asarray(vec, dtype=float)
    out = np.zeros(vec.shape[:-1] + (d, d))
    if d == 1:
        out[..., 0, 0] = vec[..., 0]
        return out
    if d == 2:
        out[..., 0, 0] = vec[..., 0]
        out[..., 1, 1] = vec[..., 1]
        out[..., 0, 1] = out[..., 1, 0] = vec[..., 2] / _SQRT2
        return out
    out[..., 0, 0], out[..., 1, 1], out[..., 2, 2] = vec[..., 0], vec[..., 1], vec[..., 2]
    out[..., 1, 2] = out[..., 2, 1] = vec[..., 3] / _SQRT2
    out[..., 0, 2] = out[..., 2, 0] = vec[..., 4] / _SQRT2
    out[..., 0, 1] = out[..., 1, 0] = vec[..., 5] / _SQRT2
    return out


def _simpson_doubling(f, upper: np.ndarray, tol: float, max_doublings: int = 18) -> np.ndarray:
    """Vectorized adaptive Simpson of integral_0^b f on a shared dyadic grid.

    ``f`` must accept arrays of the same shape as ``upper`` broadcast against
    a quadrature axis.  Refinement doubles the panel count everywhere until
    the Richardson estimate max|I_2n - I_n| falls below ``tol``.
    """
    b = np.asarray(upper, dtype=float)
    n = 2

    def composite(n):
        u = np.linspace(0.0, 1.0, n + 1)
        x = b[..., None] * u
        fx = f(x)
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return (b / (3.0 * n)) * np.einsum("q,...q->...", w, fx)

    prev = composite(n)
    for _ in range(max_doublings):
        n *= 2
        cur = composite(n)
        if np.max(np.abs(cur - prev), initial=0.0) <= tol:
            return cur
        prev = cur
    return prev


def _radial_quadrature(kernel, upper: np.ndarray, a: float, tol: float) -> np.ndarray:
    """Integrate kernel over [0, b] with the substitution x = b w^nu.

    The radial integrands carry an x**a kink at the origin that stalls the
    panel doubling for small a; nu is chosen so w**(nu*a) is C^4 and the
    composite rule converges at full order.
    """
    nu = int(np.ceil(4.0 / a)) + 1
    b = np.asarray(upper, dtype=float)

    def g(w):
        return kernel(b[..., None] * w**nu) * (nu * b[..., None] * w ** (nu - 1))

    return _simpson_doubling(g, np.ones_like(b), tol)


# ---------------------------------------------------------------------------
# radial (scalar) maps
# ---------------------------------------------------------------------------


def response_magnitude(law: ConstitutiveLaw, t) -> np.ndarray:
    """The scalar magnitude map m with F(T) = m(|T|) T/|T|."""
    t = np.asarray(t, dtype=float)
    if law.kind is LawKind.PGROWTH:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(t > 0.0, t ** (law.p - 1.0), 0.0)
        return out
    out = t / (1.0 + t ** law.a) ** (1.0 / law.a)
    if law.kind is LawKind.REGULARIZED:
        out = out + t / law.n
    return out


def _response_magnitude_deriv(law: ConstitutiveLaw, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    a = law.a
    out = (1.0 + t ** a) ** (-(1.0 + 1.0 / a))
    if law.kind is LawKind.REGULARIZED:
        out = out + 1.0 / law.n
    return out


def inverse_magnitude(law: ConstitutiveLaw, s, tol: float = 1e-12) -> np.ndarray:
    """Solve m(t) = s for t >= 0 (m strictly increasing on the relevant range).

    Closed form for p-growth and unregularized strain-limiting; bisection on
    ``[0, n s + 1]`` to relative tolerance ``tol`` plus two Newton polish
    steps for the regularized law.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise ConstitutiveError("magnitude must be nonnegative")
    if law.kind is LawKind.PGROWTH:
        pprime = law.p / (law.p - 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(s > 0.0, s ** (pprime - 1.0), 0.0)
    if law.kind is LawKind.STRAIN_LIMITING:
        if np.any(s >= 1.0):
            raise StrainBoundError("strain bound violated")
        return s / (1.0 - s ** law.a) ** (1.0 / law.a)
    lo = np.zeros_like(s)
    hi = law.n * s + 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        high = response_magnitude(law, mid) > s
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
    t = 0.5 * (lo + hi)
    for _ in range(2):
        t = t - (response_magnitude(law, t) - s) / _response_magnitude_deriv(law, t)
        t = np.maximum(t, 0.0)
    resid = np.max(np.abs(response_magnitude(law, t) - s) / (1.0 + np.abs(s)), initial=0.0)
    if resid > 1e-10:
        raise ConstitutiveError(f"inverse magnitude root-find did not converge, residual {resid:.3e}")
    return t


def potential_radial(law: ConstitutiveLaw, t) -> np.ndarray:
    """phi as a function of |T|: the antiderivative of the magnitude map."""
    t = np.asarray(t, dtype=float)
    if law.kind is LawKind.PGROWTH:
        return t ** law.p / law.p
    a = law.a
    if a == 1.0:
        base = t - np.log1p(t)
    elif a == 2.0:
        base = np.sqrt(1.0 + t * t) - 1.0
    else:
        base = _radial_quadrature(
            lambda x: x / (1.0 + x ** a) ** (1.0 / a), t, a, tol=1e-12
        )
    if law.kind is LawKind.REGULARIZED:
        base = base + t * t / (2.0 * law.n)
    return base


def conjugate_radial(law: ConstitutiveLaw, s) -> np.ndarray:
    """phi* as a function of |S|; +inf outside the unit ball for the
    unregularized strain-limiting law."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise ConstitutiveError("magnitude must be nonnegative")
    if law.kind is LawKind.PGROWTH:
        pprime = law.p / (law.p - 1.0)
        return s ** pprime / pprime
    a = law.a
    if law.kind is LawKind.STRAIN_LIMITING:
        ok = s < 1.0
        sk = np.where(ok, s, 0.0)
        if a == 1.0:
            val = -sk - np.log1p(-sk)
        elif a == 2.0:
            val = 1.0 - np.sqrt(1.0 - sk * sk)
        else:
            val = _radial_quadrature(
                lambda x: x / (1.0 - x ** a) ** (1.0 / a), sk, a, tol=1e-10
            )
        return np.where(ok, val, np.inf)
    # Regularized: integral of the radial inverse, evaluated through the
    # substitution sigma = m(tau):  phi*(s) = s t - phi(t),  t = m^{-1}(s).
    t = inverse_magnitude(law, s)
    return s * t - potential_radial(law, t)


# ---------------------------------------------------------------------------
# tensor operations
# ---------------------------------------------------------------------------


def _radial_apply(mag_of_norm: np.ndarray, T: np.ndarray, norm: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > 0.0, mag_of_norm / np.where(norm > 0.0, norm, 1.0), 0.0)
    return scale[..., None, None] * T


def response(law: ConstitutiveLaw, T) -> np.ndarray:
    """Evaluate F(T) (or F_n(T)).  Value 0 at T = 0 for every family."""
    T = _as_mat(T)
    _check_finite(T)
    t = tensor_norm(T)
    return _radial_apply(response_magnitude(law, t), T, t)


def inverse_response(law: ConstitutiveLaw, S, tol: float = 1e-12) -> np.ndarray:
    """Solve F(T) = S.  Direction of T equals the direction of S; the
    magnitude solves the scalar monotone equation m(t) = |S|."""
    S = _as_mat(S)
    _check_finite(S)
    s = tensor_norm(S)
    return _radial_apply(inverse_magnitude(law, s, tol=tol), S, s)


def potential(law: ConstitutiveLaw, T) -> np.ndarray:
    """Stress potential phi(T); nonnegative, convex, phi(0) = 0."""
    T = _as_mat(T)
    _check_finite(T)
    return potential_radial(law, tensor_norm(T))


def conjugate_potential(law: ConstitutiveLaw, S) -> np.ndarray:
    """Convex conjugate phi*(S).  Returns +inf for |S| >= 1 under the
    unregularized strain-limiting law (documented sentinel, not an error)."""
    S = _as_mat(S)
    _check_finite(S)
    return conjugate_radial(law, tensor_norm(S))


def tangent_coefficients(law: ConstitutiveLaw, T) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients (c1, c2) of the response Jacobian
    A(T)_ijkl = c1 delta_ik delta_jl + c2 T_ij T_kl."""
    T = _as_mat(T)
    t = tensor_norm(T)
    if law.kind is LawKind.PGROWTH:
        p = law.p
        if p == 2.0:
            return np.ones_like(t), np.zeros_like(t)
        if p < 2.0 and np.any(t == 0.0):
            raise ConstitutiveError("singular Jacobian")
        tsafe = np.where(t > 0.0, t, 1.0)
        c1 = np.where(t > 0.0, tsafe ** (p - 2.0), 0.0)
        c2 = np.where(t > 0.0, (p - 2.0) * tsafe ** (p - 4.0), 0.0)
        return c1, c2
    a = law.a
    c1 = (1.0 + t ** a) ** (-1.0 / a)
    if law.kind is LawKind.REGULARIZED:
        c1 = c1 + 1.0 / law.n
    # |T|^{a-2} T x T -> 0 continuously as T -> 0; define 0 there
    with np.errstate(divide="ignore", invalid="ignore"):
        c2 = np.where(
            t > 0.0,
            -np.where(t > 0.0, t, 1.0) ** (a - 2.0) * (1.0 + t ** a) ** (-(1.0 + 1.0 / a)),
            0.0,
        )
    return c1, c2


def response_jacobian(law: ConstitutiveLaw, T) -> FourthOrderTensor:
    """The fourth-order tensor dF/dT at T.

    For p-growth with p < 2 the Jacobian is unbounded at T = 0 and an error
    is raised; Newton linearizations use :func:`inverse_tangent_mandel`, which
    mollifies the radius only inside the tangent.
    """
    Tm = _as_mat(T)
    _check_finite(Tm)
    if Tm.ndim != 2:
        raise ConstitutiveError("response_jacobian expects a single tensor")
    d = Tm.shape[-1]
    c1, c2 = tangent_coefficients(law, Tm)
    eye = np.eye(d)
    comp = float(c1) * np.einsum("ik,jl->ijkl", eye, eye) + float(c2) * np.einsum(
        "ij,kl->ijkl", Tm, Tm
    )
    return FourthOrderTensor(comp)


def inverse_tangent_mandel(
    law: ConstitutiveLaw, S, mollify: float = 0.0
) -> np.ndarray:
    """Mandel-block tangent B = dF^{-1}/dS at strain S, shape (..., m, m).

    Computed by the inverse-function rule: invert the Mandel block of
    A(T) = dF/dT at T = F^{-1}(S).  ``mollify`` shifts the radius
    (|T|^2 + mu^2)^(1/2) inside the p-growth tangent only, keeping residual
    evaluations exact while keeping Newton well-posed at T = 0.
    """
    S = _as_mat(S)
    d = S.shape[-1]
    T = inverse_response(law, S)
    t = tensor_norm(T)
    if law.kind is LawKind.PGROWTH and mollify > 0.0:
        r = np.sqrt(t * t + mollify * mollify)
        c1 = r ** (law.p - 2.0)
        c2 = (law.p - 2.0) * r ** (law.p - 4.0)
    else:
        c1, c2 = tangent_coefficients(law, T)
    m = sym_dim(d)
    that = mandel_vector(T)
    A = c1[..., None, None] * np.eye(m) + c2[..., None, None] * (
        that[..., :, None] * that[..., None, :]
    )
    return np.linalg.inv(A)


def degradation(spec: DegradationSpec, v) -> tuple[np.ndarray, np.ndarray]:
    """Return (b(v), b'(v)).  Always b >= eta > 0."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ConstitutiveError("non-finite phase-field value")
    if spec.section is Section.TWO:
        return v * v + spec.eta, 2.0 * v
    vp = np.maximum(v, 0.0)
    return vp * vp + spec.eta, 2.0 * vp
