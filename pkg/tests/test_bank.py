import math

import numpy as np
import pytest

from sedhydrogen.bank import (
    CH_AB,
    ModeBank,
    build_mode_bank,
    mode_gaussians,
    philox,
    update_window,
)
from sedhydrogen.config import ConfigError, RunConfig
from sedhydrogen.units import kepler_frequency


def test_identical_banks_are_bit_identical():
    a, b = ModeBank(5, 10, 20, 0.01), ModeBank(5, 10, 20, 0.01)
    for x, y in zip(a.ab() + a.beta(), b.ab() + b.beta()):
        assert np.array_equal(x, y)


def test_materialisation_order_does_not_matter():
    a = ModeBank(11, 10, 500, 0.01)
    a.ab(7)
    a.ab(120)
    a.ab(500)
    b = ModeBank(11, 10, 500, 0.01)
    assert np.array_equal(a.ab()[0], b.ab()[0])
    assert np.array_equal(a.ab()[1], b.ab()[1])
    blocks = np.concatenate([mode_gaussians(11, CH_AB, lo, lo + 99, 6) for lo in range(1, 500, 100)])
    assert np.array_equal(blocks, mode_gaussians(11, CH_AB, 1, 500, 6))


def test_different_seeds_differ():
    assert not np.array_equal(ModeBank(1, 10, 20, 0.01).ab()[0], ModeBank(2, 10, 20, 0.01).ab()[0])


def test_frequencies():
    np.testing.assert_allclose(ModeBank(0, 10, 3, 0.0).frequencies(), [0.1, 0.2, 0.3], rtol=0, atol=0)
    bank = ModeBank(0, 7, 70, 0.0)
    assert np.array_equal(bank.frequencies(), np.arange(1, 71) / 7)


def test_coefficient_statistics():
    bank = ModeBank(2024, 100, 100_000 // 3 + 1, 0.01)
    A, B = bank.ab()
    b1, _ = bank.beta()
    for x in (A[:, 0], B[:, 2], b1[:, 4]):
        assert abs(x.mean()) < 4.5 / math.sqrt(x.size)
        assert x.var() == pytest.approx(1.0, abs=0.02)


def test_amplitude_definition():
    bank = ModeBank(0, 4, 12, 0.3)
    w = bank.frequencies()
    np.testing.assert_allclose(bank.amplitudes(), np.sqrt(w / (4 * math.pi)) * np.exp(-0.15 * w), rtol=1e-15)


def test_build_mode_bank_grid():
    c = RunConfig(N=100, omega_max=3.0)
    bank = build_mode_bank(c)
    assert bank.n_max == 300 and bank.omega_max == 3.0
    with pytest.raises(ConfigError, match="below the requested omega_max"):
        build_mode_bank(c, n_max=299)


def test_update_window_quoted_cutoff():
    wk = kepler_frequency(-1.6)
    bank = ModeBank(0, 100_000, 1_500_000, 1e-3)
    change = update_window(bank, wk, 2.5)
    assert change.cutoff == pytest.approx(14.31, abs=0.005)
    assert change.n_cutoff == math.floor(2.5 * wk * 1e5)
    assert 1_430_000 < change.n_cutoff < 1_432_000


def test_update_window_idempotent_and_counts():
    bank = ModeBank(0, 10, 100, 0.01)
    first = update_window(bank, 2.0, 2.5)
    assert first.n_cutoff == 50 and first.left == 50 and first.entered == 0
    again = update_window(bank, 2.0, 2.5)
    assert again.entered == 0 and again.left == 0
    grow = update_window(bank, 3.0, 2.5)
    assert grow.entered == 25 and grow.left == 0


def test_update_window_empty_and_errors():
    bank = ModeBank(0, 10, 100, 0.01)
    assert update_window(bank, 0.01, 2.5).empty
    with pytest.raises(ConfigError):
        update_window(bank, 5.0, 2.5)
    with pytest.raises(ValueError):
        update_window(bank, 0.0, 2.5)


def test_window_changes_never_alter_coefficients():
    bank = ModeBank(3, 10, 100, 0.01)
    before = bank.ab()[0].copy()
    update_window(bank, 1.0, 2.5)
    update_window(bank, 3.9, 2.5)
    assert np.array_equal(bank.ab()[0], before)


def test_taper_edge():
    bank = ModeBank(0, 10, 1000, 0.01, taper=True)
    update_window(bank, 30.0, 2.5)
    w = bank.window()
    assert w[0] == 1.0 and w[bank.n_cutoff:].sum() == 0.0
    edge = w[int(0.98 * bank.n_cutoff): bank.n_cutoff]
    assert np.all(np.diff(edge) <= 0) and 0 < edge[-1] < 1


def test_snapshot_round_trip():
    bank = ModeBank(99, 10, 100, 0.02, taper=True)
    update_window(bank, 2.0, 2.5)
    bank.ab(60)
    clone = ModeBank.from_bytes(bank.to_bytes())
    assert clone.n_cutoff == 50 and clone.taper and clone.seed == 99
    assert np.array_equal(clone.ab(60)[1], bank.ab(60)[1])
    with pytest.raises(ValueError):
        ModeBank.from_bytes(bank.to_bytes()[:-1])
    with pytest.raises(ValueError):
        ModeBank.from_bytes(b"XXXX" + bank.to_bytes()[4:])


def test_philox_streams_are_counter_addressable():
    full = philox(7, 3).random_raw(40)
    assert np.array_equal(philox(7, 3, 5).random_raw(20), full[20:])
