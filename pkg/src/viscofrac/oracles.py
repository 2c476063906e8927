"""Independent brute-force references used only by the test suite.

Each routine here re-derives its result with a deliberately different
algorithm (scalar bisection, finite differences, projected cyclic coordinate
descent, loop-based dense assembly) so it shares no code path with the
operation it validates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constitutive import ConstitutiveLaw, LawKind, Section, StrainBoundError
from .fields import Grid, hk_gram
from .phasefield import PhaseStepInput

__all__ = [
    "OracleConfig", "numeric_inverse", "fd_jacobian", "brute_phasefield",
    "linear_kv_trajectory",
]


@dataclass(frozen=True)
class OracleConfig:
    tolerance: float = 1e-10
    max_sweeps: int = 20000
    seed: int = 0

    def __post_init__(self):
        if not self.tolerance > 0.0:
            raise ValueError("tolerance must be positive")


def _magnitude(law: ConstitutiveLaw, t: float) -> float:
    # independent scalar re-derivation of the radial response magnitude
    if law.kind is LawKind.PGROWTH:
        return t ** (law.p - 1.0) if t > 0.0 else 0.0
    out = t / (1.0 + t ** law.a) ** (1.0 / law.a)
    if law.kind is LawKind.REGULARIZED:
        out += t / law.n
    return out


def numeric_inverse(law: ConstitutiveLaw, S: np.ndarray) -> np.ndarray:
    """Invert the response at a single tensor by scalar bisection on |S|."""
    S = np.asarray(S, dtype=float)
    s = float(np.sqrt(np.sum(S * S)))
    if s == 0.0:
        return np.zeros_like(S)
    if law.kind is LawKind.STRAIN_LIMITING and s >= 1.0:
        raise StrainBoundError("infeasible magnitude for the strain-limiting law")
    hi = 1.0
    while _magnitude(law, hi) < s:
        hi *= 2.0
        if hi > 1e30:
            raise RuntimeError("bracketing failed")
    lo = 0.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if _magnitude(law, mid) > s:
            hi = mid
        else:
            lo = mid
    t = 0.5 * (lo + hi)
    return (t / s) * S


def fd_jacobian(law: ConstitutiveLaw, T: np.ndarray, h_fd: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian dF/dT, componentwise, shape (d, d, d, d)."""
    from .constitutive import response

    if not h_fd > 0.0:
        raise ValueError("h_fd must be positive")
    T = np.asarray(T, dtype=float)
    d = T.shape[0]
    out = np.zeros((d, d, d, d))
    for k in range(d):
        for l in range(d):
            E = np.zeros((d, d))
            E[k, l] = h_fd
            out[:, :, k, l] = (response(law, T + E) - response(law, T - E)) / (2.0 * h_fd)
    return out


def _oracle_surface_pieces(grid: Grid, eps_pf: float):
    """Loop-assembled dense surface Hessian W/(2e) + 2e L and its constant."""
    # trapezoid nodal weights, re-derived by explicit loops
    shape = grid.node_shape
    n = grid.n_nodes
    W = np.zeros(n)
    for idx in range(n):
        w = 1.0
        rem = idx
        for ax in range(grid.dim):
            i = rem % shape[ax]
            rem //= shape[ax]
            h = grid.spacing[ax]
            w *= h / 2.0 if i in (0, shape[ax] - 1) else h
        W[idx] = w

    if grid.dim == 1:
        h = grid.spacing[0]
        dN = np.array([[-1.0 / h], [1.0 / h]])
    else:
        hx, hy = grid.spacing
        dN = np.array([
            [-1.0 / (2 * hx), -1.0 / (2 * hy)],
            [1.0 / (2 * hx), -1.0 / (2 * hy)],
            [1.0 / (2 * hx), 1.0 / (2 * hy)],
            [-1.0 / (2 * hx), 1.0 / (2 * hy)],
        ])
    cn = grid.cell_nodes()
    nc = cn.shape[1]
    L = np.zeros((n, n))
    for c in range(grid.n_cells):
        for a in range(nc):
            for b in range(nc):
                L[cn[c, a], cn[c, b]] += grid.cell_volume * float(dN[a] @ dN[b])
    H = np.diag(W / (2.0 * eps_pf)) + 2.0 * eps_pf * L
    c0 = -W / (2.0 * eps_pf)
    return H, c0


def brute_phasefield(inp: PhaseStepInput, cfg: OracleConfig | None = None) -> np.ndarray:
    """Cyclic projected coordinate descent on the phase-field objective.

    Intended for node counts <= 100; the convex objective makes the unique
    minimizer the limit of the sweep iteration.
    """
    cfg = cfg or OracleConfig()
    grid = inp.grid
    if grid.n_nodes > 100:
        raise ValueError("brute_phasefield is limited to 100 nodes")
    n = grid.n_nodes
    H, c0 = _oracle_surface_pieces(grid, inp.eps_pf)
    if inp.has_rate_term:
        Gk = hk_gram(grid, inp.k).toarray()
        H = H + Gk / inp.dt
        c0 = c0 - (Gk @ inp.v_prev) / inp.dt

    cn = grid.cell_nodes()
    ncorn = cn.shape[1]
    w_cell = (2.0 / inp.alpha) * grid.cell_volume * inp.elastic_density / ncorn
    cells_of = [[] for _ in range(n)]
    for c in range(grid.n_cells):
        for a in range(ncorn):
            cells_of[cn[c, a]].append(c)

    sec2 = inp.section is Section.TWO
    if sec2:
        # vbar^2 term is a plain quadratic: fold it into the dense Hessian
        for c in range(grid.n_cells):
            for a in range(ncorn):
                for b in range(ncorn):
                    H[cn[c, a], cn[c, b]] += w_cell[c] / ncorn

    dmask = grid.dirichlet_node_mask()
    v = inp.v_prev.astype(float).copy()
    v[dmask] = 1.0

    for _ in range(cfg.max_sweeps):
        max_change = 0.0
        for i in range(n):
            if dmask[i]:
                continue
            aii = H[i, i]
            bi = float(H[i] @ v) - aii * v[i] + c0[i]
            if sec2:
                x = -bi / aii
            else:
                # piecewise-linear increasing derivative
                #   D(x) = aii x + bi + sum_c w_c * max(base_c + x/m, 0)
                bases, ws = [], []
                for c in cells_of[i]:
                    if inp.elastic_density[c] == 0.0:
                        continue
                    vb = sum(v[cn[c, a]] for a in range(ncorn) if cn[c, a] != i) / ncorn
                    bases.append(vb)
                    ws.append(w_cell[c])
                x = _piecewise_root(aii, bi, bases, ws, ncorn)
            x = min(x, inp.v_prev[i])
            if sec2:
                # the quadratic variant carries the lower half of the box bound
                x = max(x, 0.0)
            max_change = max(max_change, abs(x - v[i]))
            v[i] = x
        if max_change <= cfg.tolerance:
            return v
    raise RuntimeError("coordinate-descent sweep budget exhausted")


def _piecewise_root(a: float, b: float, bases: list, ws: list, ncorn: int) -> float:
    """Root of the increasing piecewise-linear D(x) = a x + b + sum w max(base + x/m, 0)."""
    if not bases:
        return -b / a
    brk = sorted(-ncorn * bb for bb in bases)
    pts = [brk[0] - 1.0] + brk + [brk[-1] + 1.0]
    lo = pts[0]
    while True:
        val = a * lo + b + sum(w * max(bb + lo / ncorn, 0.0) for bb, w in zip(bases, ws))
        if val <= 0.0:
            break
        lo -= max(1.0, abs(lo))
    # scan breakpoint intervals left to right for the sign change
    x = lo
    candidates = [p for p in pts if p > lo] + [None]
    for p in candidates:
        slope = a + sum(w / ncorn for bb, w in zip(bases, ws) if bb + x / ncorn >= 0.0)
        val = a * x + b + sum(w * max(bb + x / ncorn, 0.0) for bb, w in zip(bases, ws))
        root = x - val / slope
        if p is None or root <= p:
            return root
        x = p
    return x  # pragma: no cover


def linear_kv_trajectory(
    grid: Grid,
    alpha: float,
    dt: float,
    u0: np.ndarray,
    u1: np.ndarray,
    v_sequence: list,
    loads: list,
    eta: float,
    section: Section = Section.TWO,
) -> list:
    """Direct dense solve of the linear Kelvin-Voigt recursion (identity response).

    ``v_sequence[m]`` is the nodal phase field frozen during step m+1;
    ``loads[m]`` the nodal load of step m+1.  Assembly is loop-based and
    independent of the main solver; Dirichlet dofs are pinned to zero.
    Returns the displacement trajectory [u_1, ..., u_M].
    """
    d = grid.dim
    n = grid.n_nodes
    cn = grid.cell_nodes()
    ncorn = cn.shape[1]
    if grid.dim == 1:
        h = grid.spacing[0]
        dN = np.array([[-1.0 / h], [1.0 / h]])
    else:
        hx, hy = grid.spacing
        dN = np.array([
            [-1.0 / (2 * hx), -1.0 / (2 * hy)],
            [1.0 / (2 * hx), -1.0 / (2 * hy)],
            [1.0 / (2 * hx), 1.0 / (2 * hy)],
            [-1.0 / (2 * hx), 1.0 / (2 * hy)],
        ])

    # unit element stiffness ke0[(a,i),(b,j)] = vol * eps(N_a e_i) : eps(N_b e_j)
    ke0 = np.zeros((ncorn * d, ncorn * d))
    for a in range(ncorn):
        for i in range(d):
            Ea = np.zeros((d, d))
            Ea[i, :] += 0.5 * dN[a]
            Ea[:, i] += 0.5 * dN[a]
            for b in range(ncorn):
                for j in range(d):
                    Eb = np.zeros((d, d))
                    Eb[j, :] += 0.5 * dN[b]
                    Eb[:, j] += 0.5 * dN[b]
                    ke0[a * d + i, b * d + j] = grid.cell_volume * float(np.sum(Ea * Eb))

    M_lumped = np.repeat(grid.node_weights(), d)
    dir_dofs = np.repeat(grid.dirichlet_node_mask(), d)
    ndof = n * d

    u_prev = np.asarray(u0, dtype=float).reshape(-1).copy()
    u_prev2 = (np.asarray(u0, dtype=float) - dt * np.asarray(u1, dtype=float)).reshape(-1)
    out = []
    for v, load in zip(v_sequence, loads):
        K = np.zeros((ndof, ndof))
        for c in range(grid.n_cells):
            vbar = sum(v[cn[c, a]] for a in range(ncorn)) / ncorn
            if section is Section.THREE:
                vbar = max(vbar, 0.0)
            bc = vbar * vbar + eta
            dofs = [cn[c, a] * d + i for a in range(ncorn) for i in range(d)]
            for p, gp in enumerate(dofs):
                for q, gq in enumerate(dofs):
                    K[gp, gq] += bc * ke0[p, q]
        A = np.diag(M_lumped) / dt**2 + (1.0 / dt + alpha) * K
        rhs = (
            np.asarray(load, dtype=float).reshape(-1)
            + M_lumped * (2.0 * u_prev - u_prev2) / dt**2
            + K @ (u_prev / dt)
        )
        A[dir_dofs, :] = 0.0
        A[:, dir_dofs] = 0.0
        A[dir_dofs, dir_dofs] = 1.0
        rhs[dir_dofs] = 0.0
        u = np.linalg.solve(A, rhs)
        out.append(u.reshape(n, d).copy())
        u_prev2, u_prev = u_prev, u
    return out
