"""Analytic vacuum-field autocorrelators and a Monte-Carlo estimator over synthesized banks.

All quantities are in Bohr units with sigma = dt - i tau_c. The closed forms are

    C_s = -(3 / 2 pi) Re 1 / (sigma^2 - r^2)
    C_p = -(3 / (2 pi r^2)) Re[(sigma / 2r) log((sigma + r) / (sigma - r)) - 1]

and C_A = C0 1 - C1 rhat rhat with C0 = C_s - C_p, C1 = C_s - 3 C_p.

The estimator works in mode space. At scaled position rbar every mode
contributes X(rbar) cos(omega t) + Y(rbar) sin(omega t) to A, with X and Y
polynomials of degree two in rbar. Averaging the product A_i(t, rbar) A_j(s, qbar)
over a full period of time origins removes all cross-mode terms, so each bank
yields the unbiased, much less noisy estimate

    sum_n 1/2 [(X_i X'_j + Y_i Y'_j) cos phi + (Y_i X'_j - X_i Y'_j) sin phi]

with phi = omega_n (t - s). The literal single-origin product is available
with ``time_average=False``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bank import ModeBank
from .fields import LAMBDA, LINEAR_FACTOR, QUADRATIC_FACTOR

log = logging.getLogger(__name__)

SERIES_SWITCH = 1e-3
MC_STREAM = 0x5EDC


def _sigma(dt, tau_c):
    return np.asarray(dt, dtype=float) - 1j * np.asarray(tau_c, dtype=float)


def cs_analytic(rbar, dt, tau_c):
    """Spherical part C_s of the A-field autocorrelator."""
    s = _sigma(dt, tau_c)
    rbar = np.asarray(rbar, dtype=float)
    return -(3.0 / (2.0 * math.pi)) * np.real(1.0 / (s * s - rbar * rbar))


def cp_analytic(rbar, dt, tau_c):
    """Projected part C_p; switches to its small-rbar series below 1e-3 |sigma|."""
    s = np.asarray(_sigma(dt, tau_c), dtype=complex)
    rbar = np.asarray(rbar, dtype=float)
    s, rbar = np.broadcast_arrays(s, rbar)
    series = -(1.0 / (2.0 * math.pi)) * np.real(1.0 / s**2 + 0.6 * rbar**2 / s**4)
    small = rbar < SERIES_SWITCH * np.abs(s)
    out = np.array(series, dtype=float)
    if np.any(~small):
        r = rbar[~small]
        z = s[~small]
        w = r / z
        inside = np.abs(w) < 1.0
        # 2 atanh(w) equals log((z + r)/(z - r)) for |w| < 1 and avoids cancellation in the ratio
        logs = np.where(inside, 2.0 * np.arctanh(np.where(inside, w, 0.0)), np.log((z + r) / (z - r)))
        closed = (z / (2.0 * r)) * logs - 1.0
        out[~small] = -(3.0 / (2.0 * math.pi * r * r)) * np.real(closed)
    return out if out.ndim else float(out)


def ca_smallr(rbar, dt, tau_c) -> np.ndarray:
    """Leading small-distance form of the A autocorrelator tensor."""
    rbar = np.asarray(rbar, dtype=float)
    s = complex(_sigma(dt, tau_c))
    r2 = float(rbar @ rbar)
    lead = -np.real(1.0 / s**2) / math.pi
    quad = 0.6 / math.pi * np.real(1.0 / s**4)
    return lead * np.eye(3) + quad * (np.outer(rbar, rbar) - 2.0 * r2 * np.eye(3))


def leading_target(dt, tau_c):
    """-(1/pi) Re 1/(dt - i tau_c)^2: the diagonal at rbar = qbar = 0."""
    return -np.real(1.0 / _sigma(dt, tau_c) ** 2) / math.pi


def r2_target(direction, dt, tau_c) -> np.ndarray:
    """Coefficient of h^2 in C_A(h * direction): (3/5pi) Re[(e e - 2 I) / sigma^4]."""
    e = np.asarray(direction, dtype=float)
    e = e / np.linalg.norm(e)
    return 0.6 / math.pi * np.real(1.0 / complex(_sigma(dt, tau_c)) ** 4) * (np.outer(e, e) - 2.0 * np.eye(3))


@dataclass(frozen=True)
class CorrelatorDecomposition:
    C0: float
    C1: float
    Cs: float
    Cp: float

    @classmethod
    def from_parts(cls, Cs: float, Cp: float) -> "CorrelatorDecomposition":
        return cls(Cs - Cp, Cs - 3.0 * Cp, Cs, Cp)

    def tensor(self, rhat) -> np.ndarray:
        rhat = np.asarray(rhat, dtype=float)
        rhat = rhat / np.linalg.norm(rhat)
        return self.C0 * np.eye(3) - self.C1 * np.outer(rhat, rhat)


def decomposition(rbar: float, dt: float, tau_c: float) -> CorrelatorDecomposition:
    return CorrelatorDecomposition.from_parts(float(cs_analytic(rbar, dt, tau_c)), float(cp_analytic(rbar, dt, tau_c)))


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class CorrelatorPoint:
    rbar: tuple = (0.0, 0.0, 0.0)
    qbar: tuple = (0.0, 0.0, 0.0)
    dt: float = 1.0
    t0: float = 0.0  # time of the second argument; only used without time averaging


@dataclass(frozen=True)
class CorrelatorConfig:
    """Grid for Monte-Carlo banks. omega_max defaults to 20 / tau_c."""

    N: int = 2000
    tau_c: float = 0.01
    omega_max: float | None = None
    seed: int = 0
    linear_term: bool = True

    @property
    def n_modes(self) -> int:
        top = 20.0 / self.tau_c if self.omega_max is None else self.omega_max
        return int(math.floor(top * self.N + 1e-9))


class Accumulator:
    """Running (sum, sum of squares, count) with a commutative merge."""

    def __init__(self, shape=()):
        self.sum = np.zeros(shape)
        self.sumsq = np.zeros(shape)
        self.count = 0

    def add(self, x):
        x = np.asarray(x, dtype=float)
        self.sum += x
        self.sumsq += x * x
        self.count += 1

    def merge(self, other: "Accumulator") -> "Accumulator":
        out = Accumulator(self.sum.shape)
        out.sum = self.sum + other.sum
        out.sumsq = self.sumsq + other.sumsq
        out.count = self.count + other.count
        return out

    @property
    def mean(self) -> np.ndarray:
        return self.sum / self.count

    @property
    def stderr(self) -> np.ndarray:
        n = self.count
        var = (self.sumsq - self.sum**2 / n) / (n - 1)
        return np.sqrt(np.maximum(var, 0.0) / n)


@dataclass
class MCResult:
    mean: np.ndarray
    stderr: np.ndarray
    n_ensembles: int
    points: list = field(default_factory=list)

    def zscores(self, target) -> np.ndarray:
        se = np.where(self.stderr > 0, self.stderr, np.inf)
        return (self.mean - np.asarray(target)) / se


def _bank_rng(cfg: CorrelatorConfig, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[cfg.seed & ((1 << 64) - 1), (MC_STREAM << 32) | index]))


def draw_bank(cfg: CorrelatorConfig, index: int, need_beta: bool) -> ModeBank:
    """Independent bank number ``index``; one bulk Philox stream per bank."""
    n = cfg.n_modes
    rng = _bank_rng(cfg, index)
    ab = rng.standard_normal((6, n))
    beta = rng.standard_normal((16, n)) if need_beta else np.zeros((16, n))
    return ModeBank.from_coefficients(cfg.N, cfg.tau_c, ab[:3].T, ab[3:].T, beta[:8].T, beta[8:].T)


def mode_polynomials(bank: ModeBank, rbar, linear_term: bool = True):
    """Per-mode X(rbar), Y(rbar), each of shape (n, 3)."""
    n = bank.n_cutoff
    omega = bank.frequencies(n)
    amp = bank.amplitudes(n)[:, None]
    A, B = bank.ab(n)
    rbar = np.asarray(rbar, dtype=float)
    X, Y = B.copy(), A.copy()
    r2 = float(rbar @ rbar)
    if r2 > 0.0:
        quad = (omega**2 * QUADRATIC_FACTOR)[:, None]
        X += quad * ((B @ rbar)[:, None] * rbar - 2.0 * r2 * B)
        Y += quad * ((A @ rbar)[:, None] * rbar - 2.0 * r2 * A)
        if linear_term:
            beta1, beta2 = bank.beta(n)
            lam_r = LAMBDA @ rbar  # (8, 3)
            lin = (omega * LINEAR_FACTOR)[:, None]
            X += lin * (beta1 @ lam_r)
            Y += lin * (beta2 @ lam_r)
    return amp * X, amp * Y


def bank_estimates(bank: ModeBank, points, time_average: bool = True, linear_term: bool = True) -> np.ndarray:
    """One bank's estimate of <A_i(t, rbar) A_j(s, qbar)> for each point, shape (P, 3, 3)."""
    omega = bank.frequencies(bank.n_cutoff)
    cache = {}

    def poly(v):
        key = tuple(float(c) for c in v)
        if key not in cache:
            cache[key] = mode_polynomials(bank, key, linear_term)
        return cache[key]

    out = np.empty((len(points), 3, 3))
    for k, pt in enumerate(points):
        X, Y = poly(pt.rbar)
        Xq, Yq = poly(pt.qbar)
        if time_average:
            phi = omega * pt.dt
            c, s = np.cos(phi)[:, None], np.sin(phi)[:, None]
            out[k] = 0.5 * ((c * X).T @ Xq + (c * Y).T @ Yq + (s * Y).T @ Xq - (s * X).T @ Yq)
        else:
            t, s0 = pt.t0 + pt.dt, pt.t0
            a = np.cos(omega * t) @ X + np.sin(omega * t) @ Y
            b = np.cos(omega * s0) @ Xq + np.sin(omega * s0) @ Yq
            out[k] = np.outer(a, b)
    return out


def _need_beta(cfg, points):
    return cfg.linear_term and any(np.any(np.asarray(p.rbar)) or np.any(np.asarray(p.qbar)) for p in points)


def _quad_projector(v) -> np.ndarray:
    """P with P b = (b . v) v - 2 v^2 b, the quadratic spatial structure."""
    v = np.asarray(v, dtype=float)
    return np.outer(v, v) - 2.0 * float(v @ v) * np.eye(3)


_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
_ANTI = ((0, 1), (0, 2), (1, 2))


class _MomentEstimator:
    """Vectorized time-averaged estimator for banks without the order-rbar term.

    With X = a (1 + q P_r) B and Y = a (1 + q P_r) A, q = omega^2 / 10, each
    point's estimate is a fixed combination of the per-mode moments
    AA^T + BB^T and AB^T - BA^T summed against bank-independent weights
    a^2 q^k cos(omega dt) and a^2 q^k sin(omega dt), k = 0, 1, 2.
    """

    def __init__(self, cfg: CorrelatorConfig, points):
        self.cfg = cfg
        self.points = points
        n = cfg.n_modes
        omega = np.arange(1, n + 1) / cfg.N
        a2 = omega * np.exp(-omega * cfg.tau_c) / (cfg.N * math.pi)
        q = omega**2 * QUADRATIC_FACTOR
        self.dts = sorted({float(p.dt) for p in points})
        cols = []
        for dt in self.dts:
            c, s = np.cos(omega * dt), np.sin(omega * dt)
            cols += [a2 * c, a2 * q * c, a2 * q * q * c, a2 * s, a2 * q * s, a2 * q * q * s]
        self.weights = np.stack(cols, axis=1)
        self.proj = [(_quad_projector(p.rbar), _quad_projector(p.qbar)) for p in points]

    def __call__(self, index: int) -> np.ndarray:
        ab = _bank_rng(self.cfg, index).standard_normal((6, self.cfg.n_modes))
        A, B = ab[:3], ab[3:]
        U = np.empty((9, ab.shape[1]))
        for k, (i, j) in enumerate(_PAIRS):
            np.multiply(A[i], A[j], out=U[k])
            U[k] += B[i] * B[j]
        for k, (i, j) in enumerate(_ANTI):
            np.multiply(A[i], B[j], out=U[6 + k])
            U[6 + k] -= B[i] * A[j]
        G = U @ self.weights  # (9, 6 * n_dt)
        out = np.empty((len(self.points), 3, 3))
        for m, pt in enumerate(self.points):
            d = self.dts.index(float(pt.dt))
            Pr, Pq = self.proj[m]
            total = np.zeros((3, 3))
            for part in (0, 1):  # cos with symmetric moments, sin with antisymmetric ones
                Sk = []
                for order in range(3):
                    col = G[:, 6 * d + 3 * part + order]
                    M = np.zeros((3, 3))
                    if part == 0:
                        for k, (i, j) in enumerate(_PAIRS):
                            M[i, j] = M[j, i] = col[k]
                    else:
                        for k, (i, j) in enumerate(_ANTI):
                            M[i, j], M[j, i] = col[6 + k], -col[6 + k]
                    Sk.append(M)
                total += Sk[0] + Pr @ Sk[1] + Sk[1] @ Pq + Pr @ Sk[2] @ Pq
            out[m] = 0.5 * total
        return out


def _mc_range(cfg, points, lo, hi, time_average, contrasts):
    need_beta = _need_beta(cfg, points)
    shape = (len(points), 3, 3) if contrasts is None else (contrasts.shape[0], 3, 3)
    acc = Accumulator(shape)
    fast = _MomentEstimator(cfg, points) if time_average and not need_beta else None
    for index in range(lo, hi):
        if fast is not None:
            est = fast(index)
        else:
            est = bank_estimates(draw_bank(cfg, index, need_beta), points, time_average, cfg.linear_term)
        if contrasts is not None:
            est = np.einsum("kp,pij->kij", contrasts, est)
        acc.add(est)
    return acc


def mc_autocorrelator(
    cfg: CorrelatorConfig,
    points,
    n_ensembles: int,
    *,
    time_average: bool = True,
    contrasts=None,
    workers: int = 1,
    first_index: int = 0,
) -> MCResult:
    """Mean and standard error of A_i(t, rbar) A_j(s, qbar) over independent banks.

    ``contrasts`` (K x P) applies fixed linear combinations of the points per
    bank before averaging, which gives correct standard errors for finite
    differences. Banks ``first_index .. first_index + n_ensembles - 1`` are used,
    so disjoint ranges are independent.
    """
    if n_ensembles < 100:
        raise ValueError("need at least 100 ensembles for a meaningful standard error")
    points = list(points)
    contrasts = None if contrasts is None else np.asarray(contrasts, dtype=float)
    lo, hi = first_index, first_index + n_ensembles
    if workers <= 1:
        acc = _mc_range(cfg, points, lo, hi, time_average, contrasts)
    else:
        edges = np.linspace(lo, hi, workers + 1).astype(int)
        with ProcessPoolExecutor(workers) as pool:
            futures = [
                pool.submit(_mc_range, cfg, points, int(a), int(b), time_average, contrasts)
                for a, b in zip(edges[:-1], edges[1:])
            ]
            parts = [f.result() for f in futures]
        acc = parts[0]
        for p in parts[1:]:
            acc = acc.merge(p)
    log.debug("mc_autocorrelator: %d banks x %d modes", acc.count, cfg.n_modes)
    return MCResult(acc.mean, acc.stderr, acc.count, points)


def mc_r2_coefficient(cfg: CorrelatorConfig, direction, dts, n_ensembles: int, h: float = 0.05, **kw) -> MCResult:
    """h^2 coefficient of <A(t, h e) A(s, 0)> by a central second difference per bank.

    The per-bank estimate is a quadratic polynomial in h, so the difference is
    exact for any h; the result is directly comparable with :func:`r2_target`.
    """
    e = np.asarray(direction, dtype=float)
    e = e / np.linalg.norm(e)
    points, rows = [], []
    for k, dt in enumerate(dts):
        points += [
            CorrelatorPoint(tuple(h * e), (0.0, 0.0, 0.0), float(dt)),
            CorrelatorPoint((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), float(dt)),
            CorrelatorPoint(tuple(-h * e), (0.0, 0.0, 0.0), float(dt)),
        ]
        row = np.zeros(3 * len(dts))
        row[3 * k : 3 * k + 3] = np.array([1.0, -2.0, 1.0]) / (2.0 * h**2)
        rows.append(row)
    return mc_autocorrelator(cfg, points, n_ensembles, contrasts=np.array(rows), **kw)


def direct_sum_variance(cfg: CorrelatorConfig) -> float:
    """Sum_n d_omega omega_n W^2 / pi, the exact diagonal at dt = 0, rbar = qbar = 0."""
    omega = np.arange(1, cfg.n_modes + 1) / cfg.N
    return float(np.sum(omega * np.exp(-omega * cfg.tau_c)) / (cfg.N * math.pi))
