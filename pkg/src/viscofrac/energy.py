"""Discrete energy bookkeeping and the one-sided dissipation inequality.

Per time step the ledger records kinetic, elastic, surface and external-work
contributions of the staggered iterate, accumulates the viscous dissipation

    dt * sum_cells vol * b(vbar_{m-1}) *
        [ F^{-1}(eps(du_m + alpha u_m)) - F^{-1}(eps(alpha u_m)) ] : eps(du_m)

and, for the rate-regularized variant, the Sobolev rate penalty
dt * ||dv_m||_{k,2}^2.  The scheme satisfies, up to round-off,

    Total_m + Dissipation_m + Rate_m <= Total_0 + sum_j <l_j - l_{j-1}, u_{j-1}>,

and ``inequality_residual`` is the left side minus the right side (so it
should be <= tolerance).  The variant of the work sum paired with u_j instead
of u_{j-1} is tracked as ``statement_residual`` on the ledger.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import constitutive as law_mod
from .constitutive import ConstitutiveLaw, DegradationSpec
from .fields import Grid, hk_gram, sym_gradient
from .momentum import cell_degradation
from .phasefield import _stiffness_scalar

__all__ = [
    "EnergyReport", "EnergyLedger",
    "kinetic_energy", "elastic_energy", "surface_energy",
    "dissipation_increment", "rate_increment",
]

CSV_COLUMNS = (
    "step", "time", "kinetic", "elastic", "surface", "rate_penalty",
    "external", "dissipation", "total", "inequality_residual",
    "newton_iters", "max_strain_norm",
)


@dataclass
class EnergyReport:
    step: int
    time: float
    kinetic: float
    elastic: float
    surface: float
    rate_penalty: float
    external: float
    dissipation: float
    total: float
    inequality_residual: float
    newton_iters: int
    max_strain_norm: float

    def row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


def kinetic_energy(grid: Grid, velocity: np.ndarray) -> float:
    """(1/2) sum_i M_i |velocity_i|^2 with the lumped mass."""
    M = grid.lumped_mass()
    return 0.5 * float(np.sum(M[:, None] * velocity**2))


def elastic_energy(
    grid: Grid, law: ConstitutiveLaw, deg: DegradationSpec, alpha: float,
    u: np.ndarray, v: np.ndarray,
) -> float:
    """sum_cells vol * b(vbar) / alpha * phi*(eps(alpha u))."""
    e = law_mod.conjugate_potential(law, sym_gradient(grid, alpha * u))
    b = cell_degradation(grid, deg, v)
    return grid.cell_volume / alpha * float(np.sum(b * e))


def surface_energy(grid: Grid, eps_pf: float, v: np.ndarray) -> float:
    """Ambrosio-Tortorelli surface term (1/4eps) <1-v, 1-v>_W + eps |grad v|^2."""
    W = grid.node_weights()
    one_m_v = 1.0 - v
    val = float(one_m_v @ (W * one_m_v)) / (4.0 * eps_pf)
    L = _stiffness_scalar(grid)
    return val + eps_pf * float(v @ (L @ v))


def dissipation_increment(
    grid: Grid, law: ConstitutiveLaw, deg: DegradationSpec, alpha: float,
    dt: float, u: np.ndarray, u_prev: np.ndarray, v_prev: np.ndarray,
) -> float:
    du = (u - u_prev) / dt
    eps_du = sym_gradient(grid, du)
    T_full = law_mod.inverse_response(law, sym_gradient(grid, du + alpha * u))
    T_eq = law_mod.inverse_response(law, sym_gradient(grid, alpha * u))
    b = cell_degradation(grid, deg, v_prev)
    dots = np.sum((T_full - T_eq) * eps_du, axis=(-2, -1))
    return dt * grid.cell_volume * float(np.sum(b * dots))


def rate_increment(grid: Grid, k: int, dt: float, v: np.ndarray, v_prev: np.ndarray) -> float:
    """dt * ||(v - v_prev)/dt||_{k,2}^2 for the rate-regularized variant."""
    dv = v - v_prev
    return float(dv @ (hk_gram(grid, k) @ dv)) / dt


@dataclass
class EnergyLedger:
    """Accumulates the per-step energy balance of a staggered run."""

    grid: Grid
    law: ConstitutiveLaw
    deg: DegradationSpec
    alpha: float
    eps_pf: float
    k: int
    with_rate_term: bool

    rows: list[EnergyReport] = field(default_factory=list)
    statement_residual: float = 0.0

    def start(self, u0: np.ndarray, velocity0: np.ndarray, v0: np.ndarray,
              load0: np.ndarray) -> EnergyReport:
        self._u_prev = np.asarray(u0, dtype=float)
        self._v_prev = np.asarray(v0, dtype=float)
        self._load_prev = np.asarray(load0, dtype=float)
        self._cum_dissipation = 0.0
        self._cum_rate = 0.0
        self._cum_work = 0.0
        self._cum_work_statement = 0.0

        kin = kinetic_energy(self.grid, velocity0)
        ela = elastic_energy(self.grid, self.law, self.deg, self.alpha, u0, v0)
        sur = surface_energy(self.grid, self.eps_pf, v0)
        ext = float(np.sum(load0 * u0))
        total = kin + ela + sur - ext
        self._total0 = total
        report = EnergyReport(
            step=0, time=0.0, kinetic=kin, elastic=ela, surface=sur,
            rate_penalty=0.0, external=ext, dissipation=0.0, total=total,
            inequality_residual=0.0, newton_iters=0, max_strain_norm=0.0,
        )
        self.rows.append(report)
        return report

    def record_step(self, step: int, time: float, dt: float, u: np.ndarray,
                    v: np.ndarray, load: np.ndarray, newton_iters: int,
                    max_strain_norm: float) -> EnergyReport:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        load = np.asarray(load, dtype=float)

        self._cum_dissipation += dissipation_increment(
            self.grid, self.law, self.deg, self.alpha, dt, u, self._u_prev, self._v_prev
        )
        if self.with_rate_term:
            self._cum_rate += rate_increment(self.grid, self.k, dt, v, self._v_prev)
        dload = load - self._load_prev
        self._cum_work += float(np.sum(dload * self._u_prev))
        self._cum_work_statement += float(np.sum(dload * u))

        kin = kinetic_energy(self.grid, (u - self._u_prev) / dt)
        ela = elastic_energy(self.grid, self.law, self.deg, self.alpha, u, v)
        sur = surface_energy(self.grid, self.eps_pf, v)
        ext = float(np.sum(load * u))
        total = kin + ela + sur - ext
        lhs = total + self._cum_dissipation + self._cum_rate
        report = EnergyReport(
            step=step, time=time, kinetic=kin, elastic=ela, surface=sur,
            rate_penalty=self._cum_rate, external=ext,
            dissipation=self._cum_dissipation, total=total,
            inequality_residual=lhs - self._total0 - self._cum_work,
            newton_iters=newton_iters, max_strain_norm=max_strain_norm,
        )
        self.statement_residual = lhs - self._total0 - self._cum_work_statement
        self.rows.append(report)
        self._u_prev, self._v_prev, self._load_prev = u, v, load
        return report

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in self.rows:
                writer.writerow(r.row())
