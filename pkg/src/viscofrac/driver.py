"""Simulation orchestration: configuration, validation, the staggered time
loop, traction ramping and outputs.

A run alternates, per time step, an implicit momentum solve for the
displacement with the phase field frozen and a constrained phase-field
minimization with the displacement frozen, while an energy ledger checks the
one-sided dissipation inequality at every step.
"""

from __future__ import annotations

import time as _time

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import constitutive as law_mod
from .constitutive import ConstitutiveLaw, DegradationSpec, LawKind, Section
from .energy import EnergyLedger, EnergyReport
from .fields import Grid, boundary_load, sym_gradient
from .io import write_metadata, write_vtk
from .momentum import MomentumStepInput, NewtonConfig, cell_degradation, momentum_step
from .phasefield import KKTReport, PhaseStepInput, kkt_residual, phasefield_step

__all__ = [
    "SimConfig", "SimOutput", "Finding", "StepFailure",
    "validate", "run", "neumann_ramp", "compatibility_load", "ramp_weight",
    "config_from_toml", "initial_phasefield",
]

_SAFETY_MARGIN = 1e-6
_COMPAT_RTOL = 1e-8


@dataclass
class SimConfig:
    grid: Grid
    section: Section
    law: ConstitutiveLaw
    alpha: float
    eta: float
    eps_pf: float
    dt: float
    t_final: float
    u0: np.ndarray
    u1: np.ndarray
    v0: np.ndarray
    traction: object = None  # g(t, coords (m,d)) -> (m,d); None means zero
    body_force: object = None  # f(t, coords (n,d)) -> (n,d); None means zero
    k: int | None = None
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    output_dir: str | None = None
    cadence: int = 10
    store_history: bool = False
    use_ramp: bool | None = None  # default: ramp iff regularized law

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.t_final < self.dt:
            raise ValueError("t_final must be at least dt")
        if not (self.alpha > 0.0 and self.eta > 0.0 and self.eps_pf > 0.0):
            raise ValueError("alpha, eta, eps_pf must be positive")
        n, d = self.grid.n_nodes, self.grid.dim
        self.u0 = np.asarray(self.u0, dtype=float).reshape(n, d)
        self.u1 = np.asarray(self.u1, dtype=float).reshape(n, d)
        self.v0 = np.asarray(self.v0, dtype=float).reshape(n)
        if self.k is None:
            self.k = 2 if d == 1 else 3
        if self.section is Section.THREE and self.k <= d / 2 + 1:
            raise ValueError(f"rate-regularized variant needs k > d/2 + 1, got k={self.k}")
        if self.use_ramp is None:
            self.use_ramp = self.law.kind is LawKind.REGULARIZED
        if self.cadence < 1:
            raise ValueError("cadence must be >= 1")

    @property
    def degradation(self) -> DegradationSpec:
        return DegradationSpec(section=self.section, eta=self.eta)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass
class Finding:
    name: str
    passed: bool
    detail: str


@dataclass
class StepRecord:
    step: int
    time: float
    newton_iters: int
    newton_residual: float
    max_strain_norm: float
    max_stress_norm: float
    kkt: KKTReport


@dataclass
class SimOutput:
    config: SimConfig
    u: np.ndarray
    v: np.ndarray
    reports: list[EnergyReport]
    steps: list[StepRecord]
    ledger: EnergyLedger
    history: list | None
    metadata: dict


class StepFailure(RuntimeError):
    """A solver failure at a specific step, carrying the last good state."""

    def __init__(self, msg, step, u_last, v_last, cause):
        super().__init__(msg)
        self.step = step
        self.u_last = u_last
        self.v_last = v_last
        self.cause = cause


# ---------------------------------------------------------------------------
# traction ramp and compatibility
# ---------------------------------------------------------------------------


def ramp_weight(n: int, t: float) -> float:
    """Smooth nonincreasing weight: 1 on [0, 1/(2n)], 0 on [1/n, inf).

    Quintic smoothstep in s = clamp(2 t n - 1, 0, 1).
    """
    s = min(max(2.0 * t * n - 1.0, 0.0), 1.0)
    return 1.0 - (6.0 * s**5 - 15.0 * s**4 + 10.0 * s**3)


def _side_normal(dim: int, side: str) -> np.ndarray:
    normals = {
        "left": (-1.0, 0.0), "right": (1.0, 0.0),
        "bottom": (0.0, -1.0), "top": (0.0, 1.0),
    }
    return np.array(normals[side][:dim])


def _boundary_cells_of_node(grid: Grid, side: str, j: int) -> list:
    """Cells of the boundary row adjacent to the j-th node along ``side``."""
    if grid.dim == 1:
        return [0 if side == "left" else grid.n_cells - 1]
    nx, ny = grid.extents
    if side in ("left", "right"):
        cx = 0 if side == "left" else nx - 1
        return [cy * nx + cx for cy in (j - 1, j) if 0 <= cy < ny]
    cy = 0 if side == "bottom" else ny - 1
    return [cy * nx + cx for cx in (j - 1, j) if 0 <= cx < nx]


def compatibility_load(
    grid: Grid, law: ConstitutiveLaw, deg: DegradationSpec, alpha: float,
    u0: np.ndarray, u1: np.ndarray, v0: np.ndarray,
) -> np.ndarray:
    """Face-lumped load of the traction b(v0) F^{-1}(eps(u1 + alpha u0)) n.

    This is the boundary traction the initial data induces; the applied g(0)
    must match it for the momentum equation to hold at t = 0.
    """
    T = law_mod.inverse_response(law, sym_gradient(grid, u1 + alpha * u0))
    b0, _ = law_mod.degradation(deg, v0)
    load = np.zeros((grid.n_nodes, grid.dim))
    for side in grid.neumann_sides:
        nodes = grid.side_nodes(side)
        normal = _side_normal(grid.dim, side)
        if grid.dim == 1:
            w = np.ones(1)
        else:
            h = grid.spacing[1] if side in ("left", "right") else grid.spacing[0]
            w = np.full(len(nodes), h)
            w[0] = w[-1] = h / 2.0
        for j, node in enumerate(nodes):
            cells = _boundary_cells_of_node(grid, side, j)
            T_node = np.mean([T[c] for c in cells], axis=0)
            load[node] += w[j] * b0[node] * (T_node @ normal)
    load[grid.dirichlet_node_mask()] = 0.0
    return load


def neumann_ramp(cfg: SimConfig, t: float) -> np.ndarray:
    """Traction load at time t, blended from the compatibility traction into
    the configured g over the ramp window [1/(2n), 1/n]."""
    g_load = (
        boundary_load(cfg.grid, cfg.traction, t)
        if cfg.traction is not None
        else np.zeros((cfg.grid.n_nodes, cfg.grid.dim))
    )
    if not cfg.use_ramp:
        return g_load
    n = max(cfg.law.n, 1)
    psi = ramp_weight(n, t)
    if psi == 0.0:
        return g_load
    compat = compatibility_load(
        cfg.grid, cfg.law, cfg.degradation, cfg.alpha, cfg.u0, cfg.u1, cfg.v0
    )
    return psi * compat + (1.0 - psi) * g_load


def external_load(cfg: SimConfig, t: float) -> np.ndarray:
    """Total nodal load l(t): lumped body force plus (ramped) traction."""
    load = neumann_ramp(cfg, t)
    if cfg.body_force is not None:
        fv = np.asarray(cfg.body_force(t, cfg.grid.node_coords()), dtype=float)
        load = load + cfg.grid.node_weights()[:, None] * fv.reshape(cfg.grid.n_nodes, cfg.grid.dim)
        load[cfg.grid.dirichlet_node_mask()] = 0.0
    return load


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def initial_phasefield(cfg: SimConfig) -> np.ndarray:
    """Initial constrained minimization fixing v at t=0 (quadratic variant).

    Runs the ordinary phase-field step machinery without a rate term, with
    the elastic density of the initial displacement and bound v <= v0.
    """
    e0 = law_mod.conjugate_potential(cfg.law, sym_gradient(cfg.grid, cfg.alpha * cfg.u0))
    inp = PhaseStepInput(
        grid=cfg.grid, v_prev=cfg.v0, elastic_density=e0, eps_pf=cfg.eps_pf,
        eta=cfg.eta, alpha=cfg.alpha, section=Section.TWO, dt=None, k=cfg.k,
    )
    return phasefield_step(inp).v


def validate(cfg: SimConfig) -> list[Finding]:
    """Pre-run checks; each finding names the violated condition."""
    findings = []
    grid = cfg.grid

    if cfg.section is Section.TWO:
        bad = np.any((cfg.v0 < 0.0) | (cfg.v0 > 1.0))
        findings.append(Finding(
            "initial-phase-field-box", not bad,
            "v0 must lie in [0,1] nodewise for the quadratic variant",
        ))
        try:
            v0N = initial_phasefield(cfg)
            findings.append(Finding(
                "initial-phase-field-minimization", True,
                f"initial minimization succeeded, min v = {v0N.min():.6g}",
            ))
        except Exception as exc:  # pragma: no cover - defensive
            findings.append(Finding("initial-phase-field-minimization", False, str(exc)))
        return findings

    # strain-limiting variant: safety strain and Neumann compatibility
    s1 = law_mod.tensor_norm(sym_gradient(grid, cfg.alpha * cfg.u0))
    s2 = law_mod.tensor_norm(sym_gradient(grid, cfg.u1 + cfg.alpha * cfg.u0))
    c_star = float(max(s1.max(initial=0.0), s2.max(initial=0.0)))
    ok = c_star < 1.0 - _SAFETY_MARGIN
    findings.append(Finding(
        "safety-strain", ok,
        f"safety strain C* = {c_star:.6g} must be < 1 - {_SAFETY_MARGIN:g}"
        + ("" if ok else " : safety strain violated"),
    ))

    if not ok:
        findings.append(Finding(
            "neumann-compatibility", False,
            "not evaluable: the initial data violates the strain bound",
        ))
        return findings

    compat = compatibility_load(grid, cfg.law, cfg.degradation, cfg.alpha,
                                cfg.u0, cfg.u1, cfg.v0)
    g0 = (
        boundary_load(grid, cfg.traction, 0.0)
        if cfg.traction is not None
        else np.zeros_like(compat)
    )
    scale = 1.0 + float(np.linalg.norm(compat))
    diff = float(np.linalg.norm(g0 - compat)) / scale
    ok = cfg.use_ramp or diff <= _COMPAT_RTOL
    findings.append(Finding(
        "neumann-compatibility", ok,
        f"relative mismatch of g(0) against the induced initial traction: {diff:.3e}"
        + (" (traction ramp active)" if cfg.use_ramp else ""),
    ))
    return findings


# ---------------------------------------------------------------------------
# time loop
# ---------------------------------------------------------------------------


def run(cfg: SimConfig) -> SimOutput:
    """Execute the staggered time loop and return fields, ledger and metadata."""
    t_start = _time.perf_counter()
    grid = cfg.grid
    deg = cfg.degradation
    findings = validate(cfg)
    failed = [f for f in findings if not f.passed]
    if failed:
        raise ValueError("validation failed: " + "; ".join(f"{f.name}: {f.detail}" for f in failed))

    if cfg.section is Section.TWO:
        v = initial_phasefield(cfg)
    else:
        v = cfg.v0.copy()
        v[grid.dirichlet_node_mask()] = 1.0
    u = cfg.u0.copy()
    u_prev2 = cfg.u0 - cfg.dt * cfg.u1

    ledger = EnergyLedger(
        grid=grid, law=cfg.law, deg=deg, alpha=cfg.alpha, eps_pf=cfg.eps_pf,
        k=cfg.k, with_rate_term=cfg.section is Section.THREE,
    )
    load = external_load(cfg, 0.0)
    ledger.start(u, cfg.u1, v, load)

    out_dir = Path(cfg.output_dir) if cfg.output_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
        _snapshot(out_dir, 0, cfg, u, v, None)

    steps: list[StepRecord] = []
    history = [] if cfg.store_history else None
    for m in range(1, cfg.n_steps + 1):
        t = m * cfg.dt
        load = external_load(cfg, t)
        m_inp = MomentumStepInput(
            grid=grid, u_prev=u, u_prev2=u_prev2, v_prev=v, dt=cfg.dt,
            law=cfg.law, alpha=cfg.alpha, degradation=deg, load=load,
        )
        try:
            m_res = momentum_step(m_inp, cfg.newton)
        except Exception as exc:
            raise StepFailure(f"momentum solve failed at step {m}: {exc}", m, u, v, exc) from exc

        e_density = law_mod.conjugate_potential(
            cfg.law, sym_gradient(grid, cfg.alpha * m_res.u)
        )
        p_inp = PhaseStepInput(
            grid=grid, v_prev=v, elastic_density=e_density, eps_pf=cfg.eps_pf,
            eta=cfg.eta, alpha=cfg.alpha, section=cfg.section,
            dt=cfg.dt if cfg.section is Section.THREE else None, k=cfg.k,
        )
        try:
            p_res = phasefield_step(p_inp)
        except Exception as exc:
            raise StepFailure(f"phase-field solve failed at step {m}: {exc}", m, u, v, exc) from exc

        u_prev2, u, v = u, m_res.u, p_res.v
        ledger.record_step(m, t, cfg.dt, u, v, load, m_res.iters, m_res.max_strain_norm)
        steps.append(StepRecord(
            step=m, time=t, newton_iters=m_res.iters,
            newton_residual=m_res.final_residual_norm,
            max_strain_norm=m_res.max_strain_norm,
            max_stress_norm=float(law_mod.tensor_norm(m_res.stress).max(initial=0.0)),
            kkt=p_res.kkt,
        ))
        if history is not None:
            history.append((u.copy(), v.copy()))
        if out_dir and m % cfg.cadence == 0:
            _snapshot(out_dir, m, cfg, u, v, m_res.stress)

    metadata = {
        "section": cfg.section.value,
        "law": cfg.law.kind.value,
        "law_params": {"p": cfg.law.p, "a": cfg.law.a, "n": cfg.law.n},
        "alpha": cfg.alpha, "eta": cfg.eta, "eps_pf": cfg.eps_pf, "k": cfg.k,
        "grid": {"dim": grid.dim, "extents": list(grid.extents),
                 "spacing": list(grid.spacing),
                 "dirichlet_sides": sorted(grid.dirichlet_sides)},
        "dt": cfg.dt, "t_final": cfg.t_final, "steps": cfg.n_steps,
        "final_inequality_residual": ledger.rows[-1].inequality_residual,
        "statement_form_residual": ledger.statement_residual,
        "max_strain_norm": max((s.max_strain_norm for s in steps), default=0.0),
        "wall_time_s": _time.perf_counter() - t_start,
        "validation": [{"name": f.name, "passed": f.passed, "detail": f.detail} for f in findings],
    }
    if out_dir:
        ledger.write_csv(out_dir / "ledger.csv")
        meta = dict(metadata)
        meta.pop("wall_time_s")  # keep output files byte-deterministic
        write_metadata(out_dir / "metadata.json", meta)

    return SimOutput(
        config=cfg, u=u, v=v, reports=ledger.rows, steps=steps,
        ledger=ledger, history=history, metadata=metadata,
    )


def _snapshot(out_dir: Path, step: int, cfg: SimConfig, u, v, stress) -> None:
    cell_scalars = {}
    if stress is not None:
        cell_scalars["stress_norm"] = law_mod.tensor_norm(stress)
    write_vtk(
        out_dir / f"snapshot_{step:05d}.vtk", cfg.grid,
        point_scalars={"phase": v}, point_vectors={"displacement": u},
        cell_scalars=cell_scalars or None,
    )


# ---------------------------------------------------------------------------
# TOML configuration
# ---------------------------------------------------------------------------

_EXPR_NAMES = {
    "np": np, "pi": np.pi, "sin": np.sin, "cos": np.cos, "exp": np.exp,
    "sqrt": np.sqrt, "abs": np.abs, "where": np.where, "tanh": np.tanh,
    "minimum": np.minimum, "maximum": np.maximum, "clip": np.clip,
}


def _eval_field(expr, coords: np.ndarray, t: float | None = None) -> np.ndarray:
    """Evaluate a numeric constant or numpy expression of x[, y][, t] on coordinates."""
    if isinstance(expr, (int, float)):
        return np.full(coords.shape[0], float(expr))
    ns = dict(_EXPR_NAMES)
    ns["x"] = coords[:, 0]
    if coords.shape[1] == 2:
        ns["y"] = coords[:, 1]
    if t is not None:
        ns["t"] = t
    out = eval(expr, {"__builtins__": {}}, ns)  # noqa: S307 - restricted namespace
    return np.broadcast_to(np.asarray(out, dtype=float), (coords.shape[0],)).copy()


def _vector_expr(exprs, dim):
    def f(t, coords):
        coords = np.asarray(coords, dtype=float)
        cols = [_eval_field(exprs[i], coords, t) for i in range(dim)]
        return np.column_stack(cols)

    return f


def config_from_toml(path) -> SimConfig:
    """Build a :class:`SimConfig` from a TOML file with sections
    [model], [grid], [time], [initial], [boundary], [solver], [output]."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)

    g = raw["grid"]
    dim = int(g.get("dim", 2))
    grid = Grid(
        dim=dim,
        extents=tuple(g["extents"]) if isinstance(g["extents"], list) else (g["extents"],),
        spacing=tuple(g["spacing"]) if isinstance(g["spacing"], list) else (g["spacing"],),
        dirichlet_sides=frozenset(g.get("dirichlet_sides", ["left"])),
    )

    mo = raw["model"]
    section = Section(int(mo.get("section", 2)))
    law_name = mo.get("law", "p-growth")
    if law_name == "p-growth":
        law = ConstitutiveLaw.p_growth(float(mo.get("p", 2.0)))
    elif law_name == "strain-limiting":
        law = ConstitutiveLaw.strain_limiting(float(mo.get("a", 1.0)))
    elif law_name == "regularized":
        law = ConstitutiveLaw.regularized(float(mo.get("a", 1.0)), int(mo.get("n", 10)))
    else:
        raise ValueError(f"unknown law {law_name!r}")

    tm = raw["time"]
    init = raw.get("initial", {})
    coords = grid.node_coords()
    u0 = _vector_expr([init.get(f"u0_{c}", 0.0) for c in "xy"[:dim]], dim)(None, coords)
    u1 = _vector_expr([init.get(f"u1_{c}", 0.0) for c in "xy"[:dim]], dim)(None, coords)
    v0 = _eval_field(init.get("v0", 1.0), coords)

    bc = raw.get("boundary", {})
    traction = None
    if any(f"g_{c}" in bc for c in "xy"[:dim]):
        traction = _vector_expr([bc.get(f"g_{c}", 0.0) for c in "xy"[:dim]], dim)
    body = None
    if any(f"f_{c}" in bc for c in "xy"[:dim]):
        body = _vector_expr([bc.get(f"f_{c}", 0.0) for c in "xy"[:dim]], dim)

    so = raw.get("solver", {})
    newton = NewtonConfig(
        max_iters=int(so.get("newton_max_iters", 30)),
        abs_tol=float(so.get("newton_abs_tol", 1e-10)),
        rel_tol=float(so.get("newton_rel_tol", 1e-10)),
    )
    out = raw.get("output", {})
    return SimConfig(
        grid=grid, section=section, law=law,
        alpha=float(mo.get("alpha", 1.0)), eta=float(mo.get("eta", 1e-4)),
        eps_pf=float(mo.get("eps_pf", 0.1)),
        dt=float(tm["dt"]), t_final=float(tm["t_final"]),
        u0=u0, u1=u1, v0=v0, traction=traction, body_force=body,
        k=int(mo["k"]) if "k" in mo else None,
        newton=newton,
        output_dir=out.get("dir"), cadence=int(out.get("cadence", 10)),
    )
