"""Reference densities, histograms, Kolmogorov-Smirnov distances and run bookkeeping."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, special

from .units import PhysicalParams

ENERGY_RANGE = (-4.0, 0.0)
RADIUS_RANGE = (0.0, 6.0)
DEFAULT_BINS = 100


# ---------------------------------------------------------------------------
# reference densities


def conjecture_energy_pdf(E):
    """(4 / 3|E|^6) exp(-2/|E|) for E < 0."""
    E = np.asarray(E, dtype=float)
    if np.any(E >= 0):
        raise ValueError("the conjectured energy density is defined for E < 0 only")
    x = np.abs(E)
    out = 4.0 / (3.0 * x**6) * np.exp(-2.0 / x)
    return out if out.ndim else float(out)


def quantum_radial_pdf(r):
    """4 r^2 exp(-2 r) for r >= 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("the radial density is defined for r >= 0 only")
    out = 4.0 * r * r * np.exp(-2.0 * r)
    return out if out.ndim else float(out)


def conjecture_energy_cdf(E):
    """Closed form: the substitution u = 2/|E| turns the density into a Gamma(5) law."""
    E = np.minimum(np.asarray(E, dtype=float), 0.0)
    with np.errstate(divide="ignore"):
        u = np.where(E < 0, 2.0 / np.abs(np.where(E < 0, E, -1.0)), np.inf)
    out = special.gammainc(5, u)
    return out if out.ndim else float(out)


def quantum_radial_cdf(r):
    r = np.maximum(np.asarray(r, dtype=float), 0.0)
    out = special.gammainc(3, 2.0 * r)
    return out if out.ndim else float(out)


def sample_conjecture_energy(n: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-transform samples: E = -2 / P^{-1}(5, U) with P the regularized lower gamma."""
    u = rng.random(n)
    return -2.0 / special.gammaincinv(5, u)


def sample_quantum_radius(n: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(n)
    return 0.5 * special.gammaincinv(3, u)


@dataclass(frozen=True)
class ReferenceDensity:
    name: str
    pdf: object
    cdf: object
    domain: tuple
    plot_range: tuple


def tabulated_cdf(pdf, lo: float, hi: float, n: int = 200_001):
    """Reference CDF by composite Simpson integration of the pdf on a fine uniform grid."""
    grid = np.linspace(lo, hi, n)
    values = integrate.cumulative_simpson(np.asarray(pdf(grid), dtype=float), x=grid, initial=0.0)
    return grid, values


def normalisation(pdf, lo: float, hi: float, breakpoints=()) -> float:
    pts = [lo, *breakpoints, hi]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += integrate.quad(pdf, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    return total


def energy_pdf_safe(E):
    """Conjecture density extended by 0 for E >= 0 (for quadrature near the origin)."""
    E = np.asarray(E, dtype=float)
    x = np.where(E < 0, np.abs(E), 1.0)
    out = np.where(E < 0, 4.0 / (3.0 * x**6) * np.exp(-2.0 / x), 0.0)
    return out if out.ndim else float(out)


class QuadratureCDF:
    """CDF on [lo, hi] built by numerical integration of a pdf; mass outside is added analytically if given."""

    def __init__(self, pdf, lo: float, hi: float, below: float = 0.0, n: int = 200_001):
        self.grid, self.values = tabulated_cdf(pdf, lo, hi, n)
        self.values = self.values + below
        self.lo, self.hi = lo, hi

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.grid, self.values, left=self.values[0], right=self.values[-1])
        return out if out.ndim else float(out)


_ENERGY_CDF = None
_RADIUS_CDF = None


def energy_reference_cdf():
    """Quadrature CDF of the conjecture density (cached); mass below -60 comes from the tail integral."""
    global _ENERGY_CDF
    if _ENERGY_CDF is None:
        lo = -60.0
        tail = integrate.quad(energy_pdf_safe, -np.inf, lo, epsabs=1e-15)[0]
        _ENERGY_CDF = QuadratureCDF(energy_pdf_safe, lo, 0.0, below=tail)
    return _ENERGY_CDF


def radius_reference_cdf():
    global _RADIUS_CDF
    if _RADIUS_CDF is None:
        _RADIUS_CDF = QuadratureCDF(quantum_radial_pdf, 0.0, 40.0)
    return _RADIUS_CDF


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov


def ks_distance(samples, cdf, weights=None) -> float:
    """sup |F_n - F| between the (optionally weighted) empirical CDF and ``cdf``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("ks_distance needs at least one sample")
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float).ravel()
    if w.shape != x.shape:
        raise ValueError("weights must match samples")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be non-negative with positive total")
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    # merge ties so the empirical CDF jumps once per distinct value
    uniq, start = np.unique(x, return_index=True)
    wsum = np.add.reduceat(w, start)
    upper = np.cumsum(wsum) / w.sum()
    lower = np.concatenate([[0.0], upper[:-1]])
    F = np.asarray(cdf(uniq), dtype=float)
    return float(max(np.max(np.abs(upper - F)), np.max(np.abs(F - lower))))


def ks_against_histogram(hist: "Histogram", cdf) -> float:
    """KS distance evaluated at the bin edges of a histogram (a lower bound on the sample KS)."""
    inner = np.cumsum(hist.counts)
    total = hist.total
    emp = (hist.underflow + np.concatenate([[0.0], inner])) / total
    return float(np.max(np.abs(emp - cdf(hist.edges))))


# ---------------------------------------------------------------------------
# histograms


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    underflow: float = 0.0
    overflow: float = 0.0

    @property
    def total(self) -> float:
        return float(self.counts.sum() + self.underflow + self.overflow)

    @property
    def centres(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def density(self) -> np.ndarray:
        """Counts normalised so that the in-range density integrates to one."""
        inside = self.counts.sum()
        if inside <= 0:
            return np.zeros_like(self.counts, dtype=float)
        return self.counts / (inside * self.widths)

    def merge(self, other: "Histogram") -> "Histogram":
        if not np.array_equal(self.edges, other.edges):
            raise ValueError("cannot merge histograms with different edges")
        return Histogram(
            self.edges.copy(),
            self.counts + other.counts,
            self.underflow + other.underflow,
            self.overflow + other.overflow,
        )

    @property
    def nondegenerate(self) -> bool:
        """At least two bins carry weight."""
        return int(np.count_nonzero(self.counts > 0)) >= 2


def histogram_edges(lo: float, hi: float, bins: int = DEFAULT_BINS, log: bool = False) -> np.ndarray:
    if log:
        if lo <= 0:
            raise ValueError("log bins need a positive lower edge")
        return np.geomspace(lo, hi, bins + 1)
    return np.linspace(lo, hi, bins + 1)


def build_histogram(series, edges, weights=None) -> Histogram:
    x = np.asarray(series, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("build_histogram needs at least one sample")
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float).ravel()
    edges = np.asarray(edges, dtype=float)
    counts, _ = np.histogram(x, bins=edges, weights=w)
    return Histogram(edges, counts.astype(float), float(w[x < edges[0]].sum()), float(w[x > edges[-1]].sum()))


def dwell_weights(t) -> np.ndarray:
    """Time each sample represents: t_k - t_{k-1}; the first sample (t = t_0) gets zero weight."""
    t = np.asarray(t, dtype=float)
    if t.size == 0:
        return t
    return np.concatenate([[0.0], np.diff(t)])


# ---------------------------------------------------------------------------
# run bookkeeping


@dataclass(frozen=True)
class RunSummary:
    t_total: float
    seconds: float
    t_damp: float
    N_orbit: float
    N_damp: float
    ionised: bool = False
    push_count: int = 0
    cutoff_updates: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def run_summary(
    t_total: float,
    params: PhysicalParams,
    *,
    n_orbit: float | None = None,
    ionised: bool = False,
    push_count: int = 0,
    cutoff_updates: int = 0,
) -> RunSummary:
    """Table-style bookkeeping. Without an explicit orbit count, a unit-circle period 2 pi is assumed."""
    t_damp = 1.0 / params.beta**2
    if n_orbit is None:
        n_orbit = t_total / (2.0 * math.pi)
    return RunSummary(
        float(t_total),
        float(t_total * params.tau0_seconds),
        t_damp,
        float(n_orbit),
        float(t_total / t_damp),
        bool(ionised),
        int(push_count),
        int(cutoff_updates),
    )


def significant(x: float, digits: int, mode: str = "round") -> float:
    """x to ``digits`` significant figures, rounded or truncated toward zero."""
    if x == 0:
        return 0.0
    exp = math.floor(math.log10(abs(x))) - digits + 1
    scaled = x / 10.0**exp
    scaled = round(scaled) if mode == "round" else math.trunc(scaled)
    return scaled * 10.0**exp
