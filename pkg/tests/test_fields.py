"""Unit tests for the structured-grid field operations."""

import numpy as np
import pytest

from viscofrac.fields import Grid, boundary_load, hk_gram, hk_inner, internal_force, sym_gradient


@pytest.fixture
def grid():
    return Grid(dim=2, extents=(4, 4), spacing=(0.25, 0.25))


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(dim=3, extents=(4, 4, 4), spacing=(1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        Grid(dim=2, extents=(1, 4), spacing=(1.0, 1.0))
    with pytest.raises(ValueError):
        Grid(dim=2, extents=(4, 4), spacing=(0.0, 1.0))
    with pytest.raises(ValueError):
        Grid(dim=2, extents=(4, 4), spacing=(1.0, 1.0), dirichlet_sides=frozenset())
    with pytest.raises(ValueError):
        Grid(dim=2, extents=(4, 4), spacing=(1.0, 1.0), dirichlet_sides=frozenset({"north"}))


def test_grid_counts(grid):
    assert grid.n_nodes == 25
    assert grid.n_cells == 16
    assert grid.cell_volume == pytest.approx(0.0625)
    assert grid.neumann_sides == ("right", "bottom", "top")
    assert grid.dirichlet_node_mask().sum() == 5


def test_node_weights_sum_to_area(grid):
    assert grid.node_weights().sum() == pytest.approx(1.0, abs=1e-14)


# -- symmetric gradient ------------------------------------------------------


def test_sym_gradient_kills_translations(grid):
    u = np.ones((grid.n_nodes, 2))
    assert np.allclose(sym_gradient(grid, u), 0.0)


def test_sym_gradient_exact_on_linear_fields(grid):
    xy = grid.node_coords()
    u = np.column_stack([xy[:, 0], np.zeros(grid.n_nodes)])
    e = sym_gradient(grid, u)
    assert np.allclose(e, np.array([[1.0, 0.0], [0.0, 0.0]]))
    u = 0.5 * xy[:, ::-1]
    e = sym_gradient(grid, u)
    assert np.allclose(e, np.array([[0.0, 0.5], [0.5, 0.0]]))


def test_sym_gradient_exact_on_affine_random():
    rng = np.random.default_rng(0)
    grid = Grid(dim=2, extents=(5, 3), spacing=(0.2, 0.5))
    A = rng.normal(size=(2, 2))
    u = grid.node_coords() @ A.T + rng.normal(size=2)
    e = sym_gradient(grid, u)
    expected = 0.5 * (A + A.T)
    assert np.allclose(e, expected[None], atol=1e-13)


def test_sym_gradient_1d():
    grid = Grid(dim=1, extents=(4,), spacing=(0.25,))
    u = 2.0 * grid.node_coords()
    assert np.allclose(sym_gradient(grid, u), 2.0)


# -- internal force (adjoint) ------------------------------------------------


def test_internal_force_zero_stress(grid):
    assert np.all(internal_force(grid, np.zeros((grid.n_cells, 2, 2))) == 0.0)


def test_internal_force_adjoint_identity(grid):
    rng = np.random.default_rng(1)
    free = ~grid.dirichlet_node_mask()
    for _ in range(100):
        stress = rng.normal(size=(grid.n_cells, 2, 2))
        stress = 0.5 * (stress + np.swapaxes(stress, -1, -2))
        w = np.zeros((grid.n_nodes, 2))
        w[free] = rng.normal(size=(int(free.sum()), 2))
        lhs = float(np.sum(internal_force(grid, stress) * w))
        rhs = grid.cell_volume * float(np.sum(stress * sym_gradient(grid, w)))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)


def test_internal_force_constant_stress_interior_balance(grid):
    # constant stress is discretely divergence free: interior forces vanish
    stress = np.tile(np.array([[2.0, 0.5], [0.5, -1.0]]), (grid.n_cells, 1, 1))
    r = internal_force(grid, stress)
    interior = np.ones(grid.n_nodes, dtype=bool)
    for side in ("left", "right", "bottom", "top"):
        interior[grid.side_nodes(side)] = False
    assert np.allclose(r[interior], 0.0, atol=1e-14)


# -- discrete H^k inner product ----------------------------------------------


def test_hk_inner_constants_give_area():
    grid = Grid(dim=2, extents=(8, 8), spacing=(0.125, 0.125))
    ones = np.ones(grid.n_nodes)
    assert hk_inner(grid, 0, ones, ones) == pytest.approx(1.0, abs=1e-12)
    # difference quotients of constants vanish for every order
    for k in (1, 2, 3):
        assert hk_inner(grid, k, 3.0 * ones, 3.0 * ones) == pytest.approx(9.0, abs=1e-10)


def test_hk_inner_linear_field_converges():
    # v = x on the unit interval: (v,v)_{1,2} -> int x^2 + 1 = 4/3
    vals = []
    for n in (16, 32, 64):
        grid = Grid(dim=1, extents=(n,), spacing=(1.0 / n,))
        v = grid.node_coords()[:, 0]
        vals.append(hk_inner(grid, 1, v, v))
    errs = [abs(v - 4.0 / 3.0) for v in vals]
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] < 1e-3


def test_hk_gram_symmetric_positive_definite():
    grid = Grid(dim=2, extents=(4, 4), spacing=(0.25, 0.25))
    G = hk_gram(grid, 3).toarray()
    assert np.allclose(G, G.T)
    evals = np.linalg.eigvalsh(G)
    assert evals.min() > 0.0


def test_hk_inner_nested_in_k():
    grid = Grid(dim=2, extents=(6, 6), spacing=(1 / 6, 1 / 6))
    rng = np.random.default_rng(3)
    v = rng.normal(size=grid.n_nodes)
    vals = [hk_inner(grid, k, v, v) for k in range(4)]
    assert vals[0] > 0.0
    assert vals[0] <= vals[1] <= vals[2] <= vals[3]


def test_hk_inner_definiteness():
    grid = Grid(dim=1, extents=(8,), spacing=(0.125,))
    z = np.zeros(grid.n_nodes)
    assert hk_inner(grid, 0, z, z) == 0.0


# -- boundary load -----------------------------------------------------------


def test_boundary_load_zero(grid):
    load = boundary_load(grid, lambda t, x: np.zeros_like(x), 0.0)
    assert np.all(load == 0.0)


def test_boundary_load_constant_traction_total():
    # only the right face is Neumann: a constant traction g on a face of
    # length 1 lumps to total force g
    grid = Grid(dim=2, extents=(4, 4), spacing=(0.25, 0.25),
                dirichlet_sides=frozenset({"left", "top", "bottom"}))
    g = lambda t, x: np.tile([2.0, 0.0], (x.shape[0], 1))

    load = boundary_load(grid, g, 0.0)
    right = grid.side_nodes("right")
    # the two face corners sit on the Dirichlet boundary, so their trapezoid
    # halves (h/2 * g each) drop out of the lumped total
    h = grid.spacing[1]
    assert load[right, 0].sum() == pytest.approx(2.0 * (1.0 - h), abs=1e-14)


def test_boundary_load_linear_traction_matches_trapezoid():
    grid = Grid(dim=2, extents=(4, 4), spacing=(0.25, 0.25),
                dirichlet_sides=frozenset({"bottom"}))

    def g(t, x):
        out = np.zeros_like(x)
        # vanishes on the left/right faces so only the top face contributes
        out[:, 1] = x[:, 0] * (1.0 - x[:, 0])
        return out

    load = boundary_load(grid, g, 0.0)
    top = grid.side_nodes("top")
    xs = grid.node_coords()[top, 0]
    expected = np.trapezoid(g(0.0, grid.node_coords()[top])[:, 1], xs)
    assert load[top, 1].sum() == pytest.approx(expected, abs=1e-12)


def test_boundary_load_zero_on_dirichlet(grid):
    g = lambda t, x: np.ones_like(x)
    load = boundary_load(grid, g, 0.0)
    assert np.all(load[grid.dirichlet_node_mask()] == 0.0)


# -- Korn-type bound ---------------------------------------------------------


def test_discrete_korn_constant_finite():
    # power iteration on u -> u against vol * |eps(u)|^2 over fields vanishing
    # on the Dirichlet side: the generalized Rayleigh quotient stays bounded
    grid = Grid(dim=2, extents=(16, 16), spacing=(1 / 16, 1 / 16))
    rng = np.random.default_rng(5)
    free = ~grid.dirichlet_node_mask()
    worst = 0.0
    for _ in range(50):
        u = np.zeros((grid.n_nodes, 2))
        u[free] = rng.normal(size=(int(free.sum()), 2))
        num = float(np.sum(u * u))
        den = grid.cell_volume * float(np.sum(sym_gradient(grid, u) ** 2))
        worst = max(worst, num / den)
    assert np.isfinite(worst)
    assert worst < 1e4
