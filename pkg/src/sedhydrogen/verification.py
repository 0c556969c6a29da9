"""Self-checks of the field synthesis: lambda identity, gauge/consistency and Monte-Carlo correlators.

Each suite returns a :class:`SuiteResult`; ``verify-correlators`` on the
command line runs them in sequence and prints the results.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import lambdas
from .bank import ModeBank
from .correlators import (
    CorrelatorConfig,
    CorrelatorPoint,
    leading_target,
    mc_autocorrelator,
    mc_r2_coefficient,
    r2_target,
)
from .fields import field_coefficients
from .units import ALPHA

log = logging.getLogger(__name__)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)  # per-item detail (z-table rows, failing tuples, ...)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        detail = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"{status}  {self.name}: {detail}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


# ---------------------------------------------------------------------------
# lambda identity


def lambda_identity_suite() -> SuiteResult:
    """Exact integer check over all 81 index tuples, using the live pattern table."""
    lhs = lambdas.completeness_lhs(lambdas.PATTERNS, lambdas.SCALE_SQ)
    rhs = lambdas.completeness_rhs()
    bad = np.argwhere(lhs != rhs)
    rows = [tuple(int(i) for i in idx) + (int(lhs[tuple(idx)]), int(rhs[tuple(idx)])) for idx in bad]
    return SuiteResult("lambda-identity", len(rows) == 0, {"tuples": 81, "mismatches": len(rows)}, rows)


# ---------------------------------------------------------------------------
# gauge and field consistency


@dataclass(frozen=True)
class GaugeSettings:
    n_banks: int = 10
    points_per_bank: int = 10
    N: int = 200
    omega_max: float = 20.0
    Z: float = 3.0
    r_max: float = 5.0
    t_max: float = 1000.0
    dr: float = 1e-3  # step in scaled position; A is quadratic there, so central differences are exact
    dt: float = 1e-3
    div_tol: float = 1e-6
    consistency_tol: float = 1e-5
    seed: int = 12345


def _jacobian(coef, rbar, step):
    """J[i, j] = dA_j / d rbar_i by central differences."""
    J = np.empty((3, 3))
    for i in range(3):
        d = np.zeros(3)
        d[i] = step
        J[i] = (coef.assemble(rbar + d) - coef.assemble(rbar - d)) / (2.0 * step)
    return J


def gauge_checks(bank: ModeBank, r, t, zalpha: float, dr: float = 1e-3, dt: float = 1e-3) -> dict:
    """Relative residuals of div A = 0, E = -dA/dt and F = curl A at one (bank, r, t)."""
    r = np.asarray(r, dtype=float)
    rbar = zalpha * r
    times = t + dt * np.array([-2.0, -1.0, 1.0, 2.0, 0.0])
    coefA = field_coefficients(bank, times, "A")
    A = [
        type(coefA)(coefA.t[k], coefA.T0[k], coefA.lam[k], coefA.T2[k], "A")
        for k in range(len(times))
    ]
    here = A[4]
    J = zalpha * _jacobian(here, rbar, dr)  # derivatives with respect to unscaled r
    div = np.trace(J)
    div_rel = abs(div) / max(np.linalg.norm(J), 1e-300)

    a = [c.assemble(rbar) for c in A[:4]]
    dA_dt = (a[0] - 8.0 * a[1] + 8.0 * a[2] - a[3]) / (12.0 * dt)
    E = field_coefficients(bank, t, "E").assemble(rbar)
    e_rel = np.linalg.norm(E + dA_dt) / max(np.linalg.norm(E), 1e-300)

    F = here.field_tensor(r, zalpha)
    curl = J - J.T
    f_rel = np.linalg.norm(F - curl) / max(np.linalg.norm(F), 1e-300)
    return {"div": float(div_rel), "E": float(e_rel), "F": float(f_rel)}


def gauge_suite(settings: GaugeSettings = GaugeSettings()) -> SuiteResult:
    rng = np.random.default_rng(settings.seed)
    zalpha = settings.Z * ALPHA
    tau_c = zalpha**2
    n_max = int(settings.omega_max * settings.N)
    worst = {"div": 0.0, "E": 0.0, "F": 0.0}
    rows = []
    for b in range(settings.n_banks):
        bank = ModeBank(int(rng.integers(0, 2**63)), settings.N, n_max, tau_c)
        for _ in range(settings.points_per_bank):
            direction = rng.standard_normal(3)
            r = settings.r_max * rng.random() ** (1 / 3) * direction / np.linalg.norm(direction)
            t = settings.t_max * rng.random()
            res = gauge_checks(bank, r, t, zalpha, settings.dr, settings.dt)
            rows.append((b, tuple(r), t, res))
            for k in worst:
                worst[k] = max(worst[k], res[k])
    passed = (
        worst["div"] < settings.div_tol
        and worst["E"] < settings.consistency_tol
        and worst["F"] < settings.consistency_tol
    )
    metrics = {
        "points": len(rows),
        "max_div_rel": worst["div"],
        "max_E_rel": worst["E"],
        "max_F_rel": worst["F"],
    }
    return SuiteResult("gauge+consistency", passed, metrics, rows)


# ---------------------------------------------------------------------------
# Monte-Carlo correlators


@dataclass(frozen=True)
class MCSettings:
    leading: CorrelatorConfig
    leading_ensembles: int
    leading_dts: tuple
    r2: CorrelatorConfig | None
    r2_ensembles: int
    r2_dts: tuple
    z_max: float
    r2_rel_tol: float = 0.10
    direction: tuple = (0.0, 0.0, 1.0)


QUICK = MCSettings(
    leading=CorrelatorConfig(N=2000, tau_c=0.5, omega_max=40.0, seed=1),
    leading_ensembles=1000,
    leading_dts=(0.5, 1.0, 2.0, 5.0),
    r2=None,
    r2_ensembles=0,
    r2_dts=(),
    z_max=4.0,
)

FULL = MCSettings(
    leading=CorrelatorConfig(N=2000, tau_c=0.5, omega_max=40.0, seed=1),
    leading_ensembles=20_000,
    leading_dts=(0.5, 1.0, 2.0, 5.0),
    r2=CorrelatorConfig(N=500, tau_c=0.5, omega_max=50.0, seed=2, linear_term=False),
    r2_ensembles=100_000,
    r2_dts=(0.5, 1.0, 2.0),
    z_max=3.0,
)


@dataclass
class ZRow:
    label: str
    component: tuple
    mean: float
    stderr: float
    target: float
    z: float

    def format(self) -> str:
        i, j = self.component
        return f"{self.label:<22} A{i}A{j}  {self.mean:+.6e}  {self.stderr:.2e}  {self.target:+.6e}  {self.z:+6.2f}"


Z_HEADER = f"{'point':<22} comp  {'MC mean':>13}  {'stderr':>8}  {'target':>13}  {'z':>6}"


def leading_table(settings: MCSettings, workers: int = 1) -> tuple[list[ZRow], float]:
    """z-scores of the nine components at rbar = qbar = 0 for each dt; returns rows and max |z|."""
    cfg = settings.leading
    points = [CorrelatorPoint(dt=float(dt)) for dt in settings.leading_dts]
    res = mc_autocorrelator(cfg, points, settings.leading_ensembles, workers=workers)
    rows = []
    for k, dt in enumerate(settings.leading_dts):
        target = leading_target(dt, cfg.tau_c) * np.eye(3)
        se = np.where(res.stderr[k] > 0, res.stderr[k], np.inf)
        z = (res.mean[k] - target) / se
        for i in range(3):
            for j in range(3):
                rows.append(ZRow(f"r=q=0 dt={dt:g}", (i, j), float(res.mean[k, i, j]),
                                 float(res.stderr[k, i, j]), float(target[i, j]), float(z[i, j])))
    zmax = max(abs(r.z) for r in rows)
    return rows, zmax


def r2_table(settings: MCSettings, workers: int = 1) -> tuple[list[ZRow], float]:
    """Relative error of the extracted rbar^2 coefficient per dt (nonzero components)."""
    cfg = settings.r2
    res = mc_r2_coefficient(cfg, settings.direction, settings.r2_dts, settings.r2_ensembles, workers=workers)
    rows, worst = [], 0.0
    for k, dt in enumerate(settings.r2_dts):
        target = r2_target(settings.direction, dt, cfg.tau_c)
        for i in range(3):
            for j in range(3):
                se = float(res.stderr[k, i, j])
                z = (res.mean[k, i, j] - target[i, j]) / se if se > 0 else 0.0
                rows.append(ZRow(f"r2 coeff dt={dt:g}", (i, j), float(res.mean[k, i, j]), se,
                                 float(target[i, j]), float(z)))
                if target[i, j] != 0.0:
                    worst = max(worst, abs(res.mean[k, i, j] / target[i, j] - 1.0))
    return rows, worst


def mc_suite(settings: MCSettings, workers: int = 1) -> SuiteResult:
    rows, zmax = leading_table(settings, workers)
    metrics = {"ensembles": settings.leading_ensembles, "max_abs_z": zmax, "z_limit": settings.z_max}
    passed = zmax < settings.z_max
    if settings.r2 is not None:
        r2_rows, worst = r2_table(settings, workers)
        rows += r2_rows
        metrics["r2_ensembles"] = settings.r2_ensembles
        metrics["r2_max_rel_err"] = worst
        passed = passed and worst < settings.r2_rel_tol
    return SuiteResult("mc-correlator", passed, metrics, rows)


def run_all(level: str = "quick", workers: int = 1) -> list[SuiteResult]:
    if level not in ("quick", "full"):
        raise ValueError(f"unknown verification level {level!r}")
    settings = QUICK if level == "quick" else FULL
    gauge = GaugeSettings() if level == "quick" else GaugeSettings(n_banks=20, points_per_bank=10, N=400)
    out = [lambda_identity_suite(), gauge_suite(gauge), mc_suite(settings, workers)]
    for r in out:
        log.info(r.line())
    return out
