import json
import math

import numpy as np
import pytest

from sedhydrogen.checkpoint import (
    Checkpoint,
    CheckpointError,
    decode,
    encode,
    read_checkpoint,
    write_checkpoint,
)
from sedhydrogen.config import RunConfig
from sedhydrogen.simulation import (
    CHECKPOINT,
    CSV_HEADER,
    EVENTS,
    SUMMARY,
    TIMESERIES,
    EventLog,
    Simulation,
    read_timeseries,
    resume,
    run_trajectory,
)

QUIET = dict(enable_noise=False, enable_damping=False, enable_magnetic=False)
COL_T, COL_E, COL_R, COL_L, COL_LZ, COL_S, COL_WK, COL_MODES = range(8)


def small_full(**kw):
    base = dict(N=2000, t_end=400.0, sample_stride=40, seed=11, spin=[0.0, 0.5, 0.7])
    base.update(kw)
    return RunConfig(**base)


def test_deterministic_limit_has_no_events_and_constant_energy(tmp_path):
    cfg = RunConfig(t_end=20 * 2 * math.pi, r0=[1.0, 0.0, 0.0], p0=[0.0, 1.2, 0.0], spin=[0.3, 0.0, 0.8], **QUIET)
    res = run_trajectory(cfg, tmp_path)
    assert res.status == "completed" and res.exit_code == 0
    assert len(res.events) == 0
    assert (tmp_path / EVENTS).read_text() == ""
    data = read_timeseries(tmp_path / TIMESERIES)
    assert data[-1, COL_T] == pytest.approx(cfg.t_end, abs=1e-9)
    orbits = res.summary.N_orbit
    assert abs(data[-1, COL_E] / data[0, COL_E] - 1) / orbits < 1e-9
    np.testing.assert_allclose(data[:, COL_S], math.sqrt(0.3**2 + 0.8**2), rtol=1e-10)
    assert np.all(data[:, COL_MODES] == 0)


def test_output_files_and_header(tmp_path):
    cfg = RunConfig(t_end=30.0, sample_stride=500, **QUIET)
    res = run_trajectory(cfg, tmp_path)
    lines = (tmp_path / TIMESERIES).read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) - 1 == res.rows
    summary = json.loads((tmp_path / SUMMARY).read_text())
    assert summary["status"] == "completed" and summary["rows"] == res.rows
    assert summary["t_total"] == pytest.approx(30.0)
    steps = summary["steps"]
    # one row at t = 0, one per stride, and the final row
    assert res.rows == 1 + steps // 500 + (steps % 500 != 0)


def test_in_memory_run_matches_disk(tmp_path):
    cfg = RunConfig(t_end=15.0, sample_stride=100, **QUIET)
    sim = Simulation(cfg)
    sim.run()
    mem = sim.timeseries()
    run_trajectory(cfg, tmp_path)
    np.testing.assert_array_equal(mem, read_timeseries(tmp_path / TIMESERIES))


def test_damping_only_energy_decreases_monotonically(tmp_path):
    cfg = RunConfig(t_end=3000.0, sample_stride=400, enable_noise=False, enable_magnetic=False,
                    enable_p4=False, enable_spin_orbit=False)
    res = run_trajectory(cfg, tmp_path)
    E = read_timeseries(tmp_path / TIMESERIES)[:, COL_E]
    assert res.status == "completed" and res.events.count("ionisation") == 0
    assert np.all(np.diff(E) < 0)


def test_full_physics_run_is_reproducible(tmp_path):
    cfg = small_full()
    a = run_trajectory(cfg, tmp_path / "a")
    b = run_trajectory(cfg, tmp_path / "b")
    assert a.exit_code in (0, 2)
    for name in (TIMESERIES, EVENTS, SUMMARY):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    events = [json.loads(line) for line in (tmp_path / "a" / EVENTS).read_text().splitlines()]
    assert events[0]["type"] == "cutoff_update" and events[0]["reason"] == "initial"
    times = [e["t"] for e in events]
    assert times == sorted(times)
    data = read_timeseries(tmp_path / "a" / TIMESERIES)
    assert np.all(data[:, COL_MODES] > 0)


def test_different_seeds_diverge(tmp_path):
    a = run_trajectory(small_full(seed=1, t_end=100.0), tmp_path / "a")
    b = run_trajectory(small_full(seed=2, t_end=100.0), tmp_path / "b")
    assert (tmp_path / "a" / TIMESERIES).read_bytes() != (tmp_path / "b" / TIMESERIES).read_bytes()
    assert a.rows > 0 and b.rows > 0


def test_checkpoint_resume_is_byte_identical(tmp_path):
    cfg = small_full()
    run_trajectory(cfg, tmp_path / "full")
    paused = run_trajectory(cfg, tmp_path / "split", stop_at=170.0)
    assert paused.status == "paused" and paused.exit_code == 0
    assert (tmp_path / "split" / CHECKPOINT).is_file()
    resume(tmp_path / "split" / CHECKPOINT)
    for name in (TIMESERIES, EVENTS):
        assert (tmp_path / "split" / name).read_bytes() == (tmp_path / "full" / name).read_bytes()


def test_block_sampled_field_resumes_byte_identically(tmp_path):
    # a small block limit forces the chirp-z block path instead of the cached period
    cfg = small_full(max_chunk_samples=512, t_end=150.0)
    sim = Simulation(cfg)
    sim.start()
    assert not sim._sampler.cached
    run_trajectory(cfg, tmp_path / "full")
    run_trajectory(cfg, tmp_path / "split", stop_at=61.3)
    resume(tmp_path / "split" / CHECKPOINT)
    for name in (TIMESERIES, EVENTS):
        assert (tmp_path / "split" / name).read_bytes() == (tmp_path / "full" / name).read_bytes()


def test_resume_into_new_directory(tmp_path):
    cfg = small_full(t_end=200.0)
    run_trajectory(cfg, tmp_path / "full")
    run_trajectory(cfg, tmp_path / "first", stop_at=90.0)
    resume(tmp_path / "first" / CHECKPOINT, out_dir=tmp_path / "second")
    assert (tmp_path / "second" / TIMESERIES).read_bytes() == (tmp_path / "full" / TIMESERIES).read_bytes()


def test_periodic_checkpoints_do_not_change_output(tmp_path):
    cfg = small_full(t_end=150.0)
    run_trajectory(cfg, tmp_path / "plain")
    run_trajectory(cfg.replace(checkpoint_every=40.0), tmp_path / "ckpt")
    assert (tmp_path / "ckpt" / CHECKPOINT).is_file()
    assert (tmp_path / "ckpt" / TIMESERIES).read_bytes() == (tmp_path / "plain" / TIMESERIES).read_bytes()


def test_resume_with_altered_config_is_rejected(tmp_path):
    cfg = small_full(t_end=100.0)
    run_trajectory(cfg, tmp_path, stop_at=30.0)
    with pytest.raises(CheckpointError, match="hash mismatch"):
        resume(tmp_path / CHECKPOINT, config=cfg.replace(cutoff_multiplier=2.6))


def make_checkpoint():
    return Checkpoint(
        b"\x01" * 32, 12.5, 1e-3, 6.2, np.arange(9.0), 1000, 17, 2, 3, True, 4096, 88,
        b"bank-bytes", [{"type": "push", "t": 1.0}], {"Z": 3.0},
    )


def test_checkpoint_encode_round_trip(tmp_path):
    cp = make_checkpoint()
    back = decode(encode(cp))
    for name in ("config_hash", "t", "h", "period_ref", "steps", "seg_left", "push_count",
                 "cutoff_updates", "warned", "csv_bytes", "csv_rows", "bank", "events", "config"):
        assert getattr(back, name) == getattr(cp, name)
    np.testing.assert_array_equal(back.y, cp.y)
    write_checkpoint(cp, tmp_path / "x.sedh")
    assert read_checkpoint(tmp_path / "x.sedh").t == 12.5
    assert encode(cp)[:4] == b"SEDH"


@pytest.mark.parametrize("cut", [0, 3, 40, 200, -1])
def test_truncated_checkpoint_is_rejected(cut):
    blob = encode(make_checkpoint())
    with pytest.raises(CheckpointError):
        decode(blob[:cut])


def test_corrupt_checkpoint_is_rejected():
    blob = bytearray(encode(make_checkpoint()))
    blob[60] ^= 0xFF
    with pytest.raises(CheckpointError, match="checksum"):
        decode(bytes(blob))
    with pytest.raises(CheckpointError, match="magic"):
        decode(b"XXXX" + bytes(blob[4:]))


def test_checkpoint_version_checked():
    blob = bytearray(encode(make_checkpoint()))
    blob[4:6] = (99).to_bytes(2, "little")
    with pytest.raises(CheckpointError, match="version"):
        decode(bytes(blob))


def test_missing_checkpoint():
    with pytest.raises(CheckpointError, match="cannot read"):
        read_checkpoint("/nonexistent/checkpoint.sedh")


def test_push_at_start(tmp_path):
    cfg = RunConfig(t_end=5.0, r0=[0.25, 0.0, 0.0], p0=[0.0, 2.0, 0.0], **QUIET)
    res = run_trajectory(cfg, tmp_path)
    assert res.summary.push_count == 1
    push = [e for e in res.events.records if e["type"] == "push"][0]
    assert push["E_after"] == pytest.approx(cfg.push_target, rel=1e-12)
    assert push["t"] == 0.0


def test_pushes_during_run_are_reproducible(tmp_path):
    # damping with a strong coupling drives the energy below the push threshold repeatedly
    cfg = RunConfig(Z=1.0, alpha=0.2, N=50, t_end=60.0, enable_noise=False, enable_magnetic=False,
                    enable_p4=False, r0=[0.7, 0.0, 0.0], p0=[0.0, 1.1, 0.0], spin=[0.0, 0.0, 0.5])
    a = run_trajectory(cfg, tmp_path / "a")
    b = run_trajectory(cfg, tmp_path / "b")
    assert a.summary.push_count >= 1
    assert (tmp_path / "a" / EVENTS).read_bytes() == (tmp_path / "b" / EVENTS).read_bytes()
    for e in a.events.records:
        if e["type"] == "push":
            assert e["E_after"] == pytest.approx(cfg.push_target, rel=1e-10)


def test_ionisation_at_start_gives_exit_code_2(tmp_path):
    cfg = RunConfig(t_end=5.0, p0=[0.0, 1.38, 0.0], **QUIET)
    res = run_trajectory(cfg, tmp_path)
    assert res.status == "ionised" and res.exit_code == 2
    assert res.summary.ionised
    assert res.events.count("ionisation") == 1


def test_t_exceeds_n_warning(tmp_path):
    cfg = small_full(N=100, t_end=120.0)
    res = run_trajectory(cfg, tmp_path)
    assert res.events.count("t_exceeds_N_warning") == 1
    warn = [e for e in res.events.records if e["type"] == "t_exceeds_N_warning"][0]
    assert warn["t"] >= 100.0


def test_singularity_abort(tmp_path):
    cfg = RunConfig(t_end=5.0, r0=[1.0, 0.0, 0.0], p0=[0.0, 0.0, 0.0], singularity_floor=0.05,
                    enable_p4=False, enable_spin_orbit=False, **QUIET)
    res = run_trajectory(cfg, tmp_path)
    assert res.status == "singular" and res.exit_code == 1
    assert res.events.count("singularity_abort") == 1


def test_unreachable_push_target_fails_cleanly(tmp_path):
    # with the p^4 term the kinetic energy peaks at p^2 = 2 / eps; deep in the well no kick suffices
    cfg = RunConfig(Z=1.0, alpha=0.5, t_end=5.0, r0=[0.05, 0.0, 0.0], p0=[0.0, 0.0, 0.0], **QUIET)
    res = run_trajectory(cfg, tmp_path)
    assert res.status == "failed" and res.exit_code == 1
    assert res.events.count("push_failed") == 1


def test_event_log_rejects_time_reversal():
    log = EventLog()
    log.add("push", 2.0)
    with pytest.raises(ValueError):
        log.add("push", 1.0)
    assert log.count("push") == 1
