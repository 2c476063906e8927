"""Implicit time step of the nonlinear elastodynamic equation.

One staggered step solves, for the unknown displacement u_m with the phase
field frozen at v_{m-1},

    M d2u + assemble( b(v_{m-1}) F^{-1}(eps(du + alpha u_m)) ) = load,

where d and d2 are the first and second backward difference quotients and M
is the row-sum lumped mass (unit density).  The nonlinear system is solved by
Newton with an exact cell-block tangent (inverse-function rule on the
response Jacobian) and a backtracking line search.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import constitutive as law_mod
from .constitutive import ConstitutiveLaw, DegradationSpec, LawKind, StrainBoundError, degradation
from .fields import Grid, _element_dofs, internal_force, sym_gradient

__all__ = ["MomentumStepInput", "NewtonConfig", "MomentumResult", "NewtonError",
           "momentum_residual", "momentum_step"]

# dense direct solve below this node count; CG + Jacobi above
_DENSE_NODE_LIMIT = 400


@dataclass
class MomentumStepInput:
    grid: Grid
    u_prev: np.ndarray
    u_prev2: np.ndarray
    v_prev: np.ndarray
    dt: float
    law: ConstitutiveLaw
    alpha: float
    degradation: DegradationSpec
    load: np.ndarray

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.alpha > 0.0:
            raise ValueError("alpha must be positive")
        n, d = self.grid.n_nodes, self.grid.dim
        for name in ("u_prev", "u_prev2", "load"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n, d):
                raise ValueError(f"{name} has shape {arr.shape}, expected {(n, d)}")
            setattr(self, name, arr)
        self.v_prev = np.asarray(self.v_prev, dtype=float)
        if self.v_prev.shape != (n,):
            raise ValueError("v_prev shape mismatch")


@dataclass
class NewtonConfig:
    max_iters: int = 30
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    line_search: str = "backtracking"  # "none" | "backtracking"

    def __post_init__(self):
        if self.abs_tol <= 0.0 or self.rel_tol < 0.0:
            raise ValueError("tolerances must be positive")


@dataclass
class MomentumResult:
    u: np.ndarray
    stress: np.ndarray
    iters: int
    final_residual_norm: float
    max_strain_norm: float
    residual_history: list[float] = field(default_factory=list)


class NewtonError(RuntimeError):
    def __init__(self, msg, best_u=None, history=None):
        super().__init__(msg)
        self.best_u = best_u
        self.history = history or []


def cell_degradation(grid: Grid, spec: DegradationSpec, v: np.ndarray) -> np.ndarray:
    """b(v) at cell centers, v interpolated as the corner average."""
    vbar = v[grid.cell_nodes()].mean(axis=1)
    b, _ = degradation(spec, vbar)
    return b


def _strain_argument(inp: MomentumStepInput, u: np.ndarray) -> np.ndarray:
    """eps(du + alpha u) per cell for candidate displacement u."""
    coeff = 1.0 / inp.dt + inp.alpha
    return sym_gradient(inp.grid, coeff * u - inp.u_prev / inp.dt)


def _cell_stress(inp: MomentumStepInput, strain_arg: np.ndarray) -> np.ndarray:
    if inp.law.kind is LawKind.STRAIN_LIMITING:
        mags = law_mod.tensor_norm(strain_arg)
        if np.any(mags >= 1.0):
            raise StrainBoundError(
                "strain bound violated: |eps(du + alpha u)| >= 1 in a cell; "
                "use the regularized law for time stepping"
            )
    return law_mod.inverse_response(inp.law, strain_arg)


def momentum_residual(inp: MomentumStepInput, u: np.ndarray) -> np.ndarray:
    """Nodal residual of the implicit step at candidate u; Dirichlet rows zero."""
    u = np.asarray(u, dtype=float)
    grid = inp.grid
    d2u = (u - 2.0 * inp.u_prev + inp.u_prev2) / inp.dt**2
    stress = _cell_stress(inp, _strain_argument(inp, u))
    b = cell_degradation(grid, inp.degradation, inp.v_prev)
    r = grid.lumped_mass()[:, None] * d2u + internal_force(grid, b[:, None, None] * stress) - inp.load
    r[grid.dirichlet_node_mask()] = 0.0
    return r


def _assemble_tangent(inp: MomentumStepInput, strain_arg: np.ndarray) -> sp.csr_matrix:
    """Sparse Newton matrix M/dt^2 + (1/dt + alpha) * K(b * dF^{-1}/dS)."""
    grid = inp.grid
    G = grid.strain_matrix()
    b = cell_degradation(grid, inp.degradation, inp.v_prev)
    mu = 0.0
    if inp.law.kind is LawKind.PGROWTH and inp.law.p != 2.0:
        mu = 1e-8 * max(1.0, float(np.max(law_mod.tensor_norm(strain_arg), initial=0.0)))
    B = law_mod.inverse_tangent_mandel(inp.law, strain_arg, mollify=mu)
    D = b[:, None, None] * B
    Ke = grid.cell_volume * np.einsum("ai,cij,jb->cab", G.T, D, G)
    edofs = _element_dofs(grid)
    ndof_e = edofs.shape[1]
    rows = np.repeat(edofs, ndof_e, axis=1).ravel()
    cols = np.tile(edofs, (1, ndof_e)).ravel()
    ndof = grid.n_nodes * grid.dim
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(ndof, ndof)).tocsr()
    coeff = 1.0 / inp.dt + inp.alpha
    M = sp.diags(np.repeat(grid.lumped_mass(), grid.dim))
    return (M / inp.dt**2 + coeff * K).tocsr()


def _solve_linear(J_free: sp.csr_matrix, rhs: np.ndarray, n_nodes: int) -> np.ndarray:
    if n_nodes <= _DENSE_NODE_LIMIT:
        return np.linalg.solve(J_free.toarray(), rhs)
    diag = J_free.diagonal()
    precond = spla.LinearOperator(J_free.shape, matvec=lambda x: x / diag)
    x, info = spla.cg(J_free, rhs, rtol=1e-10, atol=0.0, M=precond, maxiter=10 * J_free.shape[0])
    if info != 0:
        x = spla.spsolve(J_free, rhs)
    return x


def momentum_step(inp: MomentumStepInput, cfg: NewtonConfig | None = None) -> MomentumResult:
    """Solve one implicit momentum step by Newton's method.

    Initial guess is the linear extrapolation u_prev + dt * du_prev.
    Raises :class:`NewtonError` on divergence, carrying the best iterate and
    residual history.
    """
    cfg = cfg or NewtonConfig()
    grid = inp.grid
    free = np.repeat(~grid.dirichlet_node_mask(), grid.dim)

    u = (2.0 * inp.u_prev - inp.u_prev2).copy()
    u[grid.dirichlet_node_mask()] = 0.0

    tol = cfg.abs_tol + cfg.rel_tol * float(np.linalg.norm(inp.load))
    r = momentum_residual(inp, u)
    rnorm = float(np.linalg.norm(r))
    history = [rnorm]
    iters = 0
    while rnorm > tol:
        if iters >= cfg.max_iters:
            raise NewtonError(
                f"Newton did not converge in {cfg.max_iters} iterations "
                f"(residual {rnorm:.3e}, tol {tol:.3e})",
                best_u=u, history=history,
            )
        strain_arg = _strain_argument(inp, u)
        J = _assemble_tangent(inp, strain_arg)
        J_free = J[free][:, free]
        du = np.zeros(grid.n_nodes * grid.dim)
        du[free] = _solve_linear(J_free, -r.reshape(-1)[free], grid.n_nodes)
        du = du.reshape(grid.n_nodes, grid.dim)

        lam = 1.0
        u_new = u + du
        r_new = momentum_residual(inp, u_new)
        rnorm_new = float(np.linalg.norm(r_new))
        if cfg.line_search == "backtracking":
            cuts = 0
            while rnorm_new > rnorm and cuts < 20:
                lam *= 0.5
                cuts += 1
                u_new = u + lam * du
                r_new = momentum_residual(inp, u_new)
                rnorm_new = float(np.linalg.norm(r_new))
        u, r, rnorm = u_new, r_new, rnorm_new
        history.append(rnorm)
        iters += 1

    strain_arg = _strain_argument(inp, u)
    stress = _cell_stress(inp, strain_arg)
    max_strain = float(np.max(law_mod.tensor_norm(strain_arg), initial=0.0))
    return MomentumResult(
        u=u, stress=stress, iters=iters, final_residual_norm=rnorm,
        max_strain_norm=max_strain, residual_history=history,
    )
