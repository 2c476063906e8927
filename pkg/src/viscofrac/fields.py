"""Structured-grid discretization: fields, discrete symmetric gradient and its
adjoint, boundary bookkeeping, discrete H^k inner product and quadrature.

Displacements live on nodes (Q1 quadrilaterals in 2D, P1 segments in 1D) with
one-point quadrature at cell centers; phase fields are nodal scalars.  Fields
are plain numpy arrays:

  - VectorField:      shape (n_nodes, dim)
  - ScalarField:      shape (n_nodes,)
  - QuadratureField:  shape (n_cells, ...) -- one value per cell

Node ordering is x-fastest; cell corners are (SW, SE, NE, NW) in 2D.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .constitutive import mandel_vector, sym_dim

__all__ = ["Grid", "sym_gradient", "internal_force", "hk_inner", "hk_gram", "boundary_load"]

_SIDES_1D = ("left", "right")
_SIDES_2D = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class Grid:
    """Tensor-product grid on [0, Lx] x [0, Ly] with per-side boundary type.

    ``extents`` counts cells per axis (>= 2); ``dirichlet_sides`` lists the
    sides forming Gamma_D (must be non-empty); every other side is Gamma_N.
    """

    dim: int
    extents: tuple[int, ...]
    spacing: tuple[float, ...]
    dirichlet_sides: frozenset[str] = field(default_factory=lambda: frozenset({"left"}))

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"grid dimension must be 1 or 2, got {self.dim}")
        object.__setattr__(self, "extents", tuple(int(n) for n in self.extents))
        object.__setattr__(self, "spacing", tuple(float(h) for h in self.spacing))
        object.__setattr__(self, "dirichlet_sides", frozenset(self.dirichlet_sides))
        if len(self.extents) != self.dim or len(self.spacing) != self.dim:
            raise ValueError("extents/spacing must have one entry per axis")
        if any(n < 2 for n in self.extents):
            raise ValueError("need at least 2 cells per axis")
        if any(h <= 0.0 for h in self.spacing):
            raise ValueError("spacing must be positive")
        valid = _SIDES_1D if self.dim == 1 else _SIDES_2D
        bad = self.dirichlet_sides - set(valid)
        if bad:
            raise ValueError(f"unknown sides {sorted(bad)}; valid: {valid}")
        if not self.dirichlet_sides:
            raise ValueError("Dirichlet boundary must be non-empty")

    # -- counts and coordinates ------------------------------------------------

    @property
    def node_shape(self) -> tuple[int, ...]:
        return tuple(n + 1 for n in self.extents)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.node_shape))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.extents))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def node_coords(self) -> np.ndarray:
        """Coordinates of all nodes, shape (n_nodes, dim)."""
        axes = [np.arange(n + 1) * h for n, h in zip(self.extents, self.spacing)]
        if self.dim == 1:
            return axes[0][:, None]
        X, Y = np.meshgrid(axes[0], axes[1], indexing="xy")
        return np.column_stack([X.ravel(), Y.ravel()])

    def cell_centers(self) -> np.ndarray:
        axes = [(np.arange(n) + 0.5) * h for n, h in zip(self.extents, self.spacing)]
        if self.dim == 1:
            return axes[0][:, None]
        X, Y = np.meshgrid(axes[0], axes[1], indexing="xy")
        return np.column_stack([X.ravel(), Y.ravel()])

    # -- connectivity ----------------------------------------------------------

    def cell_nodes(self) -> np.ndarray:
        """Corner node ids per cell, shape (n_cells, 2**dim)."""
        if self.dim == 1:
            i = np.arange(self.extents[0])
            return np.column_stack([i, i + 1])
        nx, ny = self.extents
        cx, cy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
        n0 = (cy * (nx + 1) + cx).ravel()
        return np.column_stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1])

    def side_nodes(self, side: str) -> np.ndarray:
        if self.dim == 1:
            nx = self.extents[0]
            return np.array([0]) if side == "left" else np.array([nx])
        nx, ny = self.extents
        if side == "left":
            return np.arange(ny + 1) * (nx + 1)
        if side == "right":
            return np.arange(ny + 1) * (nx + 1) + nx
        if side == "bottom":
            return np.arange(nx + 1)
        if side == "top":
            return np.arange(nx + 1) + ny * (nx + 1)
        raise ValueError(f"unknown side {side!r}")

    def dirichlet_node_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_nodes, dtype=bool)
        for side in self.dirichlet_sides:
            mask[self.side_nodes(side)] = True
        return mask

    @property
    def neumann_sides(self) -> tuple[str, ...]:
        valid = _SIDES_1D if self.dim == 1 else _SIDES_2D
        return tuple(s for s in valid if s not in self.dirichlet_sides)

    # -- quadrature weights ----------------------------------------------------

    def node_weights(self) -> np.ndarray:
        """Trapezoid nodal volumes (also the row-sum lumped mass for unit
        density): product over axes of h (interior) and h/2 (ends)."""
        ws = []
        for n, h in zip(self.extents, self.spacing):
            w = np.full(n + 1, h)
            w[0] = w[-1] = h / 2.0
            ws.append(w)
        if self.dim == 1:
            return ws[0]
        return (ws[1][:, None] * ws[0][None, :]).ravel()

    def lumped_mass(self) -> np.ndarray:
        return self.node_weights()

    # -- cell-center shape function derivatives --------------------------------

    def shape_derivatives(self) -> np.ndarray:
        """dN_a/dx_j at the cell center, shape (n_corners, dim); identical
        for every cell of the uniform grid."""
        if self.dim == 1:
            h = self.spacing[0]
            return np.array([[-1.0 / h], [1.0 / h]])
        hx, hy = self.spacing
        dNdx = np.array([-1.0, 1.0, 1.0, -1.0]) / (2.0 * hx)
        dNdy = np.array([-1.0, -1.0, 1.0, 1.0]) / (2.0 * hy)
        return np.column_stack([dNdx, dNdy])

    def strain_matrix(self) -> np.ndarray:
        """Mandel strain operator G, shape (sym_dim, n_corners * dim), mapping
        element displacement dofs (node-major, component-minor) to the Mandel
        strain at the cell center."""
        dN = self.shape_derivatives()
        nc = dN.shape[0]
        d = self.dim
        m = sym_dim(d)
        G = np.zeros((m, nc * d))
        if d == 1:
            G[0, :] = dN[:, 0]
            return G
        sq2 = np.sqrt(2.0)
        for a in range(nc):
            G[0, a * d + 0] = dN[a, 0]
            G[1, a * d + 1] = dN[a, 1]
            G[2, a * d + 0] = dN[a, 1] / sq2
            G[2, a * d + 1] = dN[a, 0] / sq2
        return G

    def scalar_gradient_matrix(self) -> np.ndarray:
        """Cell-center gradient of a nodal scalar, shape (dim, n_corners)."""
        return self.shape_derivatives().T


# ---------------------------------------------------------------------------
# field operations
# ---------------------------------------------------------------------------


def _element_dofs(grid: Grid) -> np.ndarray:
    """Global dof ids per element, shape (n_cells, n_corners * dim)."""
    cn = grid.cell_nodes()
    d = grid.dim
    return (cn[:, :, None] * d + np.arange(d)[None, None, :]).reshape(grid.n_cells, -1)


def sym_gradient(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Cell-center symmetric gradient of a nodal vector field.

    Exact for affine displacement fields.  Returns shape (n_cells, d, d).
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.n_nodes, grid.dim):
        raise ValueError(f"expected displacement of shape {(grid.n_nodes, grid.dim)}, got {u.shape}")
    G = grid.strain_matrix()
    ue = u.reshape(-1)[_element_dofs(grid)]
    em = ue @ G.T
    from .constitutive import mandel_matrix

    return mandel_matrix(em, grid.dim)


def internal_force(grid: Grid, weighted_stress: np.ndarray) -> np.ndarray:
    """Adjoint of the symmetric gradient with cell-volume weighting.

    Returns the nodal vector r with r . w = sum_cells vol * stress : eps(w)
    for every discrete w; rows of Dirichlet nodes are zeroed.
    """
    weighted_stress = np.asarray(weighted_stress, dtype=float)
    if weighted_stress.shape != (grid.n_cells, grid.dim, grid.dim):
        raise ValueError("stress field shape mismatch")
    G = grid.strain_matrix()
    sm = mandel_vector(weighted_stress)
    fe = grid.cell_volume * (sm @ G)
    r = np.zeros(grid.n_nodes * grid.dim)
    np.add.at(r, _element_dofs(grid), fe)
    r = r.reshape(grid.n_nodes, grid.dim)
    r[grid.dirichlet_node_mask()] = 0.0
    return r


def _forward_diff(grid: Grid, axis: int) -> sp.csr_matrix:
    """Forward difference quotient along one axis, one-sided (shifted inward)
    at the far boundary, as a sparse operator on nodal scalars."""
    shape = grid.node_shape if grid.dim == 2 else (grid.node_shape[0],)
    h = grid.spacing[axis]
    n1d = shape[axis]
    # 1D stencil: row i couples (i, i+1), last row reuses (n-2, n-1)
    rows = np.arange(n1d)
    lo = np.minimum(rows, n1d - 2)
    D1 = sp.csr_matrix(
        (np.concatenate([-np.ones(n1d), np.ones(n1d)]) / h,
         (np.concatenate([rows, rows]), np.concatenate([lo, lo + 1]))),
        shape=(n1d, n1d),
    )
    if grid.dim == 1:
        return D1
    nx1, ny1 = grid.node_shape
    # node id = iy * nx1 + ix: x is the fast axis
    if axis == 0:
        return sp.kron(sp.identity(ny1, format="csr"), D1, format="csr")
    return sp.kron(D1, sp.identity(nx1, format="csr"), format="csr")


@lru_cache(maxsize=32)
def hk_gram(grid: Grid, k: int) -> sp.csr_matrix:
    """Gram matrix of the discrete H^k inner product.

    sum over multi-indices |alpha| <= k of D^alpha' W D^alpha with forward
    difference quotients (one-sided at the boundary) and trapezoid nodal
    weights W.  Symmetric positive definite.
    """
    if k < 0 or k > 3:
        raise ValueError("k must be in 0..3")
    W = sp.diags(grid.node_weights())
    G = sp.csr_matrix((grid.n_nodes, grid.n_nodes))
    axes = range(grid.dim)
    D = {ax: _forward_diff(grid, ax) for ax in axes}

    def multi_indices(k, dim):
        if dim == 1:
            return [(a,) for a in range(k + 1)]
        return [(ax, ay) for ax in range(k + 1) for ay in range(k + 1 - ax)]

    for alpha in multi_indices(k, grid.dim):
        Dm = sp.identity(grid.n_nodes, format="csr")
        for ax, power in enumerate(alpha):
            for _ in range(power):
                Dm = D[ax] @ Dm
        G = G + Dm.T @ W @ Dm
    return G.tocsr()


def hk_inner(grid: Grid, k: int, v: np.ndarray, w: np.ndarray) -> float:
    """Discrete substitute for the H^k(Omega) inner product."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != (grid.n_nodes,) or w.shape != (grid.n_nodes,):
        raise ValueError("scalar field shape mismatch")
    return float(v @ (hk_gram(grid, k) @ w))


def boundary_load(grid: Grid, g, t: float) -> np.ndarray:
    """Face-lumped traction load over Gamma_N.

    ``g(t, x)`` maps time and boundary coordinates (shape (m, dim)) to
    tractions (shape (m, dim)).  Trapezoid lumping along each Neumann side;
    zero at Gamma_D nodes.  In 1D the boundary integral is point evaluation.
    """
    load = np.zeros((grid.n_nodes, grid.dim))
    coords = grid.node_coords()
    for side in grid.neumann_sides:
        nodes = grid.side_nodes(side)
        gv = np.asarray(g(t, coords[nodes]), dtype=float).reshape(len(nodes), grid.dim)
        if grid.dim == 1:
            w = np.ones(1)
        else:
            h = grid.spacing[1] if side in ("left", "right") else grid.spacing[0]
            w = np.full(len(nodes), h)
            w[0] = w[-1] = h / 2.0
        load[nodes] += w[:, None] * gv
    load[grid.dirichlet_node_mask()] = 0.0
    return load
