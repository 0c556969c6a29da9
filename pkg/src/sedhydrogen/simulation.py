"""Trajectory driver: window management, pushes, output files, checkpoints and resume.

The compiled loop in :mod:`sedhydrogen._kernel` does the stepping and hands
control back here whenever something needs bookkeeping (a window update, a
push, the end of the sampled field span, a full output buffer, ...). All
decisions depend only on the integration state, so a run that is paused and
resumed from its checkpoint reproduces the uninterrupted run bit for bit.
"""

from __future__ import annotations

import json
import logging
import math
import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernel
from .bank import CH_INIT, ModeBank, build_mode_bank, philox, uniforms_from_raw, update_window
from .checkpoint import Checkpoint, CheckpointError, read_checkpoint, write_checkpoint
from .config import ConfigError, RunConfig, write_config
from .dynamics import Toggles, energy_push, isotropic_direction, kernel_params, push_uniforms
from .sampling import FieldSampler
from .statistics import RunSummary, run_summary
from .units import SPIN_MAGNITUDE, ElectronState, SingularityError

log = logging.getLogger(__name__)

CSV_HEADER = "t,E,r,L,Lz,S_norm,omega_K,window_modes"
TIMESERIES = "timeseries.csv"
EVENTS = "events.jsonl"
SUMMARY = "summary.json"
CHECKPOINT = "checkpoint.sedh"
CONFIG_COPY = "config.txt"

COMPLETED = "completed"
IONISED = "ionised"
PAUSED = "paused"
SINGULAR = "singular"
FAILED = "failed"

_BUFFER_ROWS = 8192
_NO_FIELD = np.zeros((20, 1))


def format_row(row) -> str:
    return ",".join(f"{v:.17g}" for v in row[:7]) + f",{int(row[7])}"


@dataclass
class EventLog:
    records: list = field(default_factory=list)

    def add(self, kind: str, t: float, state=None, **data) -> dict:
        if self.records and t < self.records[-1]["t"]:
            raise ValueError("event timestamps must be non-decreasing")
        rec = {"type": kind, "t": float(t)}
        if state is not None:
            rec["state"] = {"r": [float(v) for v in state[0:3]], "p": [float(v) for v in state[3:6]], "S": [float(v) for v in state[6:9]]}
        rec.update(data)
        self.records.append(rec)
        return rec

    def count(self, kind: str, **match) -> int:
        return sum(1 for r in self.records if r["type"] == kind and all(r.get(k) == v for k, v in match.items()))

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    def __len__(self):
        return len(self.records)


@dataclass
class TrajectorySummary:
    status: str
    summary: RunSummary
    events: EventLog
    rows: int
    out_dir: Path | None

    @property
    def exit_code(self) -> int:
        return {COMPLETED: 0, PAUSED: 0, IONISED: 2}.get(self.status, 1)


def initial_spin(config: RunConfig) -> np.ndarray:
    if config.spin is not None:
        return np.asarray(config.spin, dtype=float)
    u = uniforms_from_raw(philox(config.seed, CH_INIT).random_raw(4))
    return SPIN_MAGNITUDE * isotropic_direction(u[0], u[1])


class Simulation:
    """One trajectory with its mode bank, window and output files."""

    def __init__(self, config: RunConfig, out_dir=None, *, bank: ModeBank | None = None):
        self.config = config
        self.params = config.params
        self.toggles = Toggles.from_config(config)
        self.prm = kernel_params(self.params, self.toggles, config.singularity_floor)
        self.use_field = bool(config.enable_noise)
        self.bank = bank if bank is not None else build_mode_bank(config)
        self.y = np.concatenate([config.r0, config.p0, initial_spin(config)]).astype(float)
        self.fstate = np.zeros(_kernel.N_FSTATE)
        self.istate = np.zeros(_kernel.N_ISTATE, dtype=np.int64)
        self.push_count = 0
        self.cutoff_updates = 0
        self.warned = False
        self.events = EventLog()
        self.out_dir = None if out_dir is None else Path(out_dir)
        self.csv_bytes = 0
        self.csv_rows = 0
        self.status = None
        self._sampler = None
        self._track = None
        self._buffer = np.zeros((_BUFFER_ROWS, _kernel.OUT_COLS))
        self._csv = None
        self._rows_mem = [] if self.out_dir is None else None
        self._started = False

    # -- state helpers -------------------------------------------------

    @property
    def t(self) -> float:
        return float(self.fstate[_kernel.F_T])

    @property
    def state(self) -> ElectronState:
        return ElectronState.from_vector(self.y, self.t)

    def energy(self) -> float:
        e = _kernel.energy(self.y, self.prm)
        if not e == e:
            raise SingularityError("|r| below the singularity floor")
        return float(e)

    @property
    def window_modes(self) -> int:
        return self.bank.n_cutoff if self.use_field else 0

    # -- output --------------------------------------------------------

    def _open_outputs(self, fresh: bool):
        if self.out_dir is None:
            return
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / TIMESERIES
        if fresh:
            self._csv = open(path, "wb")
            self._emit_text(CSV_HEADER + "\n", count=False)
            write_config(self.config, self.out_dir / CONFIG_COPY)
        else:
            self._csv = open(path, "r+b")
            self._csv.truncate(self.csv_bytes)
            self._csv.seek(self.csv_bytes)

    def _emit_text(self, text: str, count: bool = True):
        data = text.encode()
        if self._csv is not None:
            self._csv.write(data)
        self.csv_bytes += len(data)
        if count:
            self.csv_rows += text.count("\n")

    def _emit_rows(self, rows):
        if len(rows) == 0:
            return
        if self._rows_mem is not None:
            self._rows_mem.append(np.array(rows))
        self._emit_text("".join(format_row(r) + "\n" for r in rows))

    def _flush_buffer(self):
        n = int(self.istate[_kernel.I_NROWS])
        self._emit_rows(self._buffer[:n])
        self.istate[_kernel.I_NROWS] = 0

    def _current_row(self):
        row = np.zeros((1, _kernel.OUT_COLS))
        _kernel._write_row(row, 0, self.t, self.y, self.energy(), self.window_modes)
        return row

    def timeseries(self) -> np.ndarray:
        """In-memory rows (only when running without an output directory)."""
        if self._rows_mem is None:
            raise RuntimeError("rows are on disk; read the CSV instead")
        return np.concatenate(self._rows_mem) if self._rows_mem else np.zeros((0, _kernel.OUT_COLS))

    # -- window --------------------------------------------------------

    def _update_window(self, reason: str):
        E = self.energy()
        omega_K = (2.0 * abs(E)) ** 1.5
        period = 2.0 * math.pi / omega_K
        old_ref = float(self.fstate[_kernel.F_PERIOD_REF])
        self.fstate[_kernel.F_PERIOD_REF] = period
        self.istate[_kernel.I_SEG_LEFT] = 0
        if not self.use_field:
            return
        change = update_window(self.bank, omega_K, self.config.cutoff_multiplier)
        self._rebuild_sampler()
        if reason != "initial":
            self.cutoff_updates += 1
        self.events.add(
            "cutoff_update", self.t, self.y, reason=reason, E=E, omega_K=omega_K, cutoff=change.cutoff,
            n_cutoff=change.n_cutoff, entered=change.entered, left=change.left, period=period,
            previous_period=old_ref if reason != "initial" else None,
        )
        log.info("t=%.6g cutoff update (%s): %d modes", self.t, reason, change.n_cutoff)

    def _rebuild_sampler(self):
        self._sampler = None
        self._track = None
        if self.use_field and self.bank.n_cutoff > 0:
            self._sampler = FieldSampler(self.bank, self.config.samples_per_period, self.config.max_chunk_samples)

    def _refresh_track(self):
        self._track = self._sampler.track(self.t)

    # -- push ----------------------------------------------------------

    def _push(self):
        u = push_uniforms(self.config.seed, self.push_count)
        new, rec = energy_push(
            self.state, u, self.config.push_target, self.params, self.toggles,
            self.config.singularity_floor, index=self.push_count,
        )
        self.y[3:6] = new.p
        self.push_count += 1
        self.istate[_kernel.I_SEG_LEFT] = 0
        self.events.add(
            "push", self.t, self.y, index=rec.index, branch=rec.branch, direction=list(rec.direction),
            magnitude=rec.magnitude, E_before=rec.energy_before, E_after=rec.energy_after,
        )

    # -- driving -------------------------------------------------------

    def start(self):
        """Initial checks, window and the t = 0 row."""
        self._open_outputs(fresh=True)
        self._started = True
        self.fstate[_kernel.F_T] = 0.0
        self._update_window("initial")
        self._emit_rows(self._current_row())
        E = self.energy()
        if E < self.config.push_threshold:
            self._push()
            self._update_window("push")
        elif E > self.config.ionisation_threshold:
            self.status = IONISED
            self.events.add("ionisation", self.t, self.y, E=E)

    def run(self, stop_at: float | None = None) -> TrajectorySummary:
        """Integrate to t_end (or pause at the first step boundary at or after ``stop_at``)."""
        cfg = self.config
        if not self._started:
            try:
                self.start()
            except SingularityError as exc:
                return self._abort_singular(str(exc))
            except ValueError as exc:  # push could not reach its target
                return self._abort(FAILED, "push_failed", str(exc))
        if self.status in (IONISED, SINGULAR, COMPLETED, FAILED):
            return self._finish()
        t_pause = math.inf if stop_at is None else float(stop_at)
        next_ckpt = self._next_checkpoint_time()
        t_warn = math.inf if (self.warned or not self.use_field) else float(cfg.N)
        while True:
            if self._sampler is not None and self._track is None:
                self._refresh_track()
            track = self._track
            tables = track.tables if track is not None else _NO_FIELD
            k_first = track.k_first if track is not None else 0
            dts = track.dts if track is not None else 1.0
            use_field = track is not None
            code = _kernel.advance(
                self.y, self.fstate, self.istate, self.prm, use_field, tables, k_first, dts,
                self.params.zalpha, cfg.steps_per_orbit, cfg.sample_stride, cfg.period_update_threshold,
                cfg.push_threshold, cfg.ionisation_threshold, cfg.t_end, min(t_pause, next_ckpt), t_warn,
                1 << 62, self._buffer, self.window_modes,
            )
            if code == _kernel.OUTPUT_FULL:
                self._flush_buffer()
            elif code == _kernel.CHUNK_EXHAUSTED:
                previous = track
                self._refresh_track()
                if previous is not None and self._track.k_first == previous.k_first:
                    raise RuntimeError("RK4 step longer than the padding of a coefficient block")
            elif code == _kernel.WINDOW_UPDATE:
                self._flush_buffer()
                self._update_window("period_change")
            elif code == _kernel.PUSH:
                self._flush_buffer()
                try:
                    self._push()
                except ValueError as exc:
                    return self._abort(FAILED, "push_failed", str(exc))
            elif code == _kernel.IONISED:
                self._flush_buffer()
                self.status = IONISED
                self.events.add("ionisation", self.t, self.y, E=self.energy())
                return self._finish()
            elif code == _kernel.T_END:
                self._flush_buffer()
                self.status = COMPLETED
                return self._finish()
            elif code == _kernel.T_WARN:
                self._flush_buffer()
                self.warned = True
                t_warn = math.inf
                self.events.add("t_exceeds_N_warning", self.t, self.y, N=cfg.N)
                log.warning("t = %.6g exceeds N = %d: the discrete field repeats from here on", self.t, cfg.N)
            elif code == _kernel.PAUSE:
                self._flush_buffer()
                if self.t >= t_pause:
                    self.status = PAUSED
                    self.write_checkpoint()
                    return self._finish()
                self.write_checkpoint()
                next_ckpt = self._next_checkpoint_time()
            elif code == _kernel.SINGULAR:
                self._flush_buffer()
                return self._abort_singular("|r| fell below the singularity floor")

    def _next_checkpoint_time(self) -> float:
        every = self.config.checkpoint_every
        if every <= 0 or self.out_dir is None:
            return math.inf
        return (math.floor(self.t / every) + 1) * every

    def _abort_singular(self, message: str) -> TrajectorySummary:
        return self._abort(SINGULAR, "singularity_abort", message)

    def _abort(self, status: str, kind: str, message: str) -> TrajectorySummary:
        self.status = status
        self.events.add(kind, self.t, self.y, message=message)
        log.error("t=%.6g %s: %s", self.t, kind, message)
        return self._finish()

    def summary(self) -> RunSummary:
        steps = int(self.istate[_kernel.I_STEPS])
        return run_summary(
            self.t, self.params, n_orbit=steps / self.config.steps_per_orbit,
            ionised=self.status == IONISED, push_count=self.push_count, cutoff_updates=self.cutoff_updates,
        )

    def _finish(self) -> TrajectorySummary:
        summary = self.summary()
        if self.out_dir is not None:
            if self._csv is not None:
                self._csv.close()
                self._csv = None
            (self.out_dir / EVENTS).write_text(self.events.to_jsonl())
            info = {"status": self.status, "steps": int(self.istate[_kernel.I_STEPS]), "rows": self.csv_rows, **summary.to_dict()}
            (self.out_dir / SUMMARY).write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")
        return TrajectorySummary(self.status, summary, self.events, self.csv_rows, self.out_dir)

    # -- checkpoints ---------------------------------------------------

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(
            self.config.hash(), self.t, float(self.fstate[_kernel.F_H]), float(self.fstate[_kernel.F_PERIOD_REF]),
            self.y.copy(), int(self.istate[_kernel.I_STEPS]), int(self.istate[_kernel.I_SEG_LEFT]),
            self.push_count, self.cutoff_updates, self.warned, self.csv_bytes, self.csv_rows,
            self.bank.to_bytes(), list(self.events.records), self.config.to_dict(),
        )

    def write_checkpoint(self, path=None):
        if path is None:
            if self.out_dir is None:
                return None
            path = self.out_dir / CHECKPOINT
        if self._csv is not None:
            self._csv.flush()
        (Path(path).parent / EVENTS).write_text(self.events.to_jsonl())
        write_checkpoint(self.checkpoint(), path)
        return Path(path)

    @classmethod
    def from_checkpoint(cls, cp: Checkpoint, config: RunConfig | None = None, out_dir=None, source_dir=None) -> "Simulation":
        stored = _config_from_dict(cp.config)
        if config is None:
            config = stored
        if config.hash() != cp.config_hash:
            raise CheckpointError("config does not match the checkpoint (config hash mismatch)")
        try:
            bank = ModeBank.from_bytes(cp.bank)
        except ValueError as exc:
            raise CheckpointError(f"bad mode-bank snapshot: {exc}") from None
        sim = cls(config, out_dir, bank=bank)
        sim.y = cp.y.copy()
        sim.fstate[:] = [cp.t, cp.h, cp.period_ref]
        sim.istate[:] = [cp.steps, cp.seg_left, 0]
        sim.push_count = cp.push_count
        sim.cutoff_updates = cp.cutoff_updates
        sim.warned = cp.warned
        sim.events = EventLog(list(cp.events))
        sim.csv_bytes = cp.csv_bytes
        sim.csv_rows = cp.csv_rows
        sim._started = True
        sim._rebuild_sampler()
        if sim.out_dir is not None:
            sim.out_dir.mkdir(parents=True, exist_ok=True)
            target = sim.out_dir / TIMESERIES
            if source_dir is not None and Path(source_dir).resolve() != sim.out_dir.resolve():
                src = Path(source_dir) / TIMESERIES
                if not src.exists():
                    raise CheckpointError(f"time series {src} needed to resume is missing")
                with open(src, "rb") as fin, open(target, "wb") as fout:
                    shutil.copyfileobj(_Limited(fin, cp.csv_bytes), fout)
                write_config(config, sim.out_dir / CONFIG_COPY)
            if not target.exists() or target.stat().st_size < cp.csv_bytes:
                raise CheckpointError(f"time series {target} is shorter than the checkpoint records")
            sim._open_outputs(fresh=False)
        return sim


class _Limited:
    """File wrapper that reads at most ``n`` bytes."""

    def __init__(self, f, n):
        self.f, self.left = f, n

    def read(self, size=-1):
        if self.left <= 0:
            return b""
        size = self.left if size < 0 else min(size, self.left)
        data = self.f.read(size)
        self.left -= len(data)
        return data


def _config_from_dict(d: dict) -> RunConfig:
    try:
        return RunConfig(**d)
    except (TypeError, ConfigError) as exc:
        raise CheckpointError(f"checkpoint config unreadable: {exc}") from None


def run_trajectory(config: RunConfig, out_dir=None, stop_at: float | None = None) -> TrajectorySummary:
    """Run one trajectory from its initial condition."""
    return Simulation(config, out_dir).run(stop_at)


def resume(checkpoint_path, config: RunConfig | None = None, out_dir=None, stop_at: float | None = None) -> TrajectorySummary:
    """Continue a run from its checkpoint; output goes next to the checkpoint unless ``out_dir`` is given."""
    path = Path(checkpoint_path)
    cp = read_checkpoint(path)
    out = path.parent if out_dir is None else Path(out_dir)
    sim = Simulation.from_checkpoint(cp, config, out, source_dir=path.parent)
    return sim.run(stop_at)


def read_timeseries(path) -> np.ndarray:
    """Load a time-series CSV as an (n, 8) float array."""
    path = Path(path)
    with open(path) as f:
        header = f.readline().strip()
    if header != CSV_HEADER:
        raise ValueError(f"{path}: unexpected header {header!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data.reshape(-1, _kernel.OUT_COLS)
