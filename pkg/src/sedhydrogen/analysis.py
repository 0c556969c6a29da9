"""Post-processing of finished runs: dwell-weighted histograms, KS values and overlay plots."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import statistics as st
from .plotting import write_histogram_svg
from .simulation import SUMMARY, TIMESERIES, read_timeseries

log = logging.getLogger(__name__)

ANALYSIS_JSON = "analysis.json"
ENERGY_CSV = "energy_histogram.csv"
RADIUS_CSV = "radius_histogram.csv"
ENERGY_SVG = "energy_histogram.svg"
RADIUS_SVG = "radius_histogram.svg"

COL_T, COL_E, COL_R = 0, 1, 2


class AnalysisError(RuntimeError):
    """Nothing to analyse, or an input file is unreadable."""


@dataclass
class Observable:
    name: str
    histogram: st.Histogram
    ks: float | None
    samples: int

    def to_dict(self) -> dict:
        h = self.histogram
        return {
            "ks": self.ks,
            "samples": self.samples,
            "bins": int(h.counts.size),
            "range": [float(h.edges[0]), float(h.edges[-1])],
            "weight_total": h.total,
            "underflow": h.underflow,
            "overflow": h.overflow,
            "nondegenerate": h.nondegenerate,
        }


@dataclass
class Analysis:
    runs: list
    energy: Observable
    radius: Observable
    summaries: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "energy": self.energy.to_dict(),
            "radius": self.radius.to_dict(),
            "summaries": self.summaries,
        }


def find_runs(run_dir) -> list[Path]:
    """Directories holding a time series: ``run_dir`` itself and/or its immediate subdirectories."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise AnalysisError(f"{run_dir} is not a directory")
    found = []
    if (run_dir / TIMESERIES).is_file():
        found.append(run_dir)
    found += sorted(p for p in run_dir.iterdir() if p.is_dir() and (p / TIMESERIES).is_file())
    return found


def _load(run: Path) -> np.ndarray:
    try:
        return read_timeseries(run / TIMESERIES)
    except (OSError, ValueError) as exc:
        raise AnalysisError(f"unreadable time series in {run}: {exc}") from None


def _observable(name, values, weights, edges, cdf) -> Observable:
    hist = st.build_histogram(values, edges, weights)
    ks = st.ks_distance(values, cdf, weights) if weights.sum() > 0 else None
    return Observable(name, hist, ks, int(values.size))


def analyze(run_dir, bins: int = st.DEFAULT_BINS) -> Analysis:
    runs = find_runs(run_dir)
    if not runs:
        raise AnalysisError(f"no {TIMESERIES} found in {run_dir} or its subdirectories")
    energies, radii, weights, info, summaries = [], [], [], [], []
    for run in runs:
        data = _load(run)
        if data.shape[0] == 0:
            raise AnalysisError(f"time series in {run} has no rows")
        w = st.dwell_weights(data[:, COL_T])
        energies.append(data[:, COL_E])
        radii.append(data[:, COL_R])
        weights.append(w)
        info.append({"dir": str(run), "rows": int(data.shape[0]), "t_last": float(data[-1, COL_T])})
        summary_path = run / SUMMARY
        if summary_path.is_file():
            try:
                summaries.append(json.loads(summary_path.read_text()))
            except json.JSONDecodeError as exc:
                raise AnalysisError(f"unreadable {summary_path}: {exc}") from None
    E = np.concatenate(energies)
    r = np.concatenate(radii)
    w = np.concatenate(weights)
    energy = _observable("energy", E, w, st.histogram_edges(*st.ENERGY_RANGE, bins), st.energy_reference_cdf())
    radius = _observable("radius", r, w, st.histogram_edges(*st.RADIUS_RANGE, bins), st.radius_reference_cdf())
    return Analysis(info, energy, radius, summaries)


def histogram_table(obs: Observable, cdf) -> str:
    """CSV rows: bin edges, dwell weight, density (normalised by total weight) and the reference bin average."""
    h = obs.histogram
    total = h.total
    density = h.counts / (total * h.widths) if total > 0 else np.zeros_like(h.counts)
    lo, hi = h.edges[:-1], h.edges[1:]
    reference = (cdf(hi) - cdf(lo)) / h.widths
    lines = ["bin_lo,bin_hi,weight,density,reference"]
    for row in zip(lo, hi, h.counts, density, reference):
        lines.append(",".join(f"{v:.10g}" for v in row))
    return "\n".join(lines) + "\n"


def write_outputs(result: Analysis, out_dir, svg: bool = True) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    path = out_dir / ANALYSIS_JSON
    path.write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
    written.append(path)
    specs = [
        (result.energy, st.energy_reference_cdf(), ENERGY_CSV, ENERGY_SVG,
         st.energy_pdf_safe, "energy E (Bohr units)", "Energy distribution"),
        (result.radius, st.radius_reference_cdf(), RADIUS_CSV, RADIUS_SVG,
         st.quantum_radial_pdf, "radius r (Bohr radii)", "Radial distribution"),
    ]
    for obs, cdf, csv_name, svg_name, pdf, xlabel, title in specs:
        path = out_dir / csv_name
        path.write_text(histogram_table(obs, cdf))
        written.append(path)
        if svg:
            h = obs.histogram
            total = h.total
            density = h.counts / (total * h.widths) if total > 0 else np.zeros_like(h.counts)
            x = np.linspace(h.edges[0], h.edges[-1], 801)
            if obs.name == "energy":
                x = x[x < 0]
            path = out_dir / svg_name
            write_histogram_svg(path, h.edges, density, x, pdf(x), title=title, xlabel=xlabel)
            written.append(path)
    return written
