import math

import numpy as np
import pytest

from sedhydrogen.bank import ModeBank
from sedhydrogen.fields import (
    LAMBDA,
    eval_A,
    eval_E,
    eval_F,
    field_coefficients,
    field_sample,
    magnetic_vector,
)
from sedhydrogen.lambdas import ANTISYMMETRIC, SYMMETRIC
from sedhydrogen.verification import gauge_checks

ZA = 3 / 137.036


def one_mode(N=4, tau_c=0.2, A=(0, 0, 0), B=(0, 0, 0), beta1=None, beta2=None):
    b1 = None if beta1 is None else [beta1]
    b2 = None if beta2 is None else [beta2]
    return ModeBank.from_coefficients(N, tau_c, [A], [B], b1, b2)


def base_amplitude(N, tau_c, omega):
    return math.sqrt(omega / (N * math.pi)) * math.exp(-0.5 * omega * tau_c)


def random_bank(seed=0, N=50, n_max=800, tau_c=0.01):
    return ModeBank(seed, N, n_max, tau_c)


def test_single_b_mode_hand_value():
    N, tau_c = 4, 0.2
    bank = one_mode(N, tau_c, B=(1, 0, 0))
    w = 1 / N
    amp = base_amplitude(N, tau_c, w)
    rng = np.random.default_rng(1)
    for _ in range(10):
        rb = rng.normal(size=3)
        t = rng.uniform(-10, 10)
        r2 = rb @ rb
        expected = amp * math.cos(w * t) * (np.eye(3)[0] + w**2 / 10 * (rb[0] * rb - 2 * np.eye(3)[0] * r2))
        np.testing.assert_allclose(eval_A(bank, rb, t), expected, rtol=1e-13, atol=1e-16)


def test_single_a_mode_electric_field_at_origin():
    N, tau_c = 4, 0.2
    bank = one_mode(N, tau_c, A=(1, 0, 0))
    w = 1 / N
    E = eval_E(bank, np.zeros(3), 0.0)
    assert E[0] == pytest.approx(-math.sqrt(w**3 / (N * math.pi)) * math.exp(-0.5 * w * tau_c), rel=1e-14)
    assert E[1] == E[2] == 0.0


def test_origin_gives_leading_sum():
    bank = random_bank()
    c = field_coefficients(bank, 2.5, "A")
    np.testing.assert_array_equal(eval_A(bank, np.zeros(3), 2.5), c.T0)


def test_electric_field_is_minus_time_derivative():
    bank = random_bank(3)
    rng = np.random.default_rng(2)
    h = 1e-6
    for _ in range(10):
        rb, t = 0.05 * rng.normal(size=3), rng.uniform(0, 100)
        fd = -(eval_A(bank, rb, t + h) - eval_A(bank, rb, t - h)) / (2 * h)
        E = eval_E(bank, rb, t)
        assert np.linalg.norm(E - fd) < 1e-6 * np.linalg.norm(E)


def test_gauge_and_curl_at_random_points():
    rng = np.random.default_rng(5)
    for seed in range(5):
        bank = random_bank(seed, N=100, n_max=2000, tau_c=ZA**2)
        for _ in range(4):
            res = gauge_checks(bank, rng.uniform(-4, 4, 3), rng.uniform(0, 500), ZA)
            assert res["div"] < 1e-6
            assert res["E"] < 1e-5
            assert res["F"] < 1e-5


def test_field_tensor_exactly_antisymmetric():
    bank = random_bank(8)
    rng = np.random.default_rng(8)
    for _ in range(10):
        F = eval_F(bank, rng.normal(size=3), rng.uniform(0, 50), ZA)
        assert np.max(np.abs(F + F.T)) == 0.0


def test_symmetric_lambdas_do_not_enter_field_tensor():
    r = np.array([0.3, -1.2, 0.7])
    for a in SYMMETRIC:
        beta = np.zeros(8)
        beta[a] = 1.0
        bank = one_mode(beta1=beta, beta2=beta)
        assert np.all(eval_F(bank, r, 0.7, ZA) == 0.0)


def test_linear_field_tensor_amplitude():
    N, tau_c = 4, 0.2
    w = 1 / N
    for a in ANTISYMMETRIC:
        beta = np.zeros(8)
        beta[a] = 1.0
        F = eval_F(one_mode(N, tau_c, beta1=beta), np.zeros(3), 0.0, ZA)
        expected = -ZA * math.sqrt(w**3 / (5 * N * math.pi)) * math.exp(-0.5 * w * tau_c) * LAMBDA[a]
        np.testing.assert_allclose(F, expected, rtol=1e-14)


def test_quadratic_field_tensor_amplitude():
    N, tau_c = 4, 0.2
    w = 1 / N
    r = np.array([0.4, 1.1, -0.3])
    F = eval_F(one_mode(N, tau_c, B=(0, 0, 1)), r, 0.0, ZA)
    Bv = np.array([0, 0, 1.0])
    amp = math.sqrt(w**5 / (4 * N * math.pi)) * math.exp(-0.5 * w * tau_c)
    expected = ZA**2 * amp * (np.outer(Bv, r) - np.outer(r, Bv))
    np.testing.assert_allclose(F, expected, rtol=1e-13)


def test_zero_bank_gives_zero_fields():
    bank = ModeBank.from_coefficients(10, 0.1, np.zeros((5, 3)), np.zeros((5, 3)))
    s = field_sample(bank, [0.1, 0.2, 0.3], 1.0, ZA)
    assert not np.any(s.E) and not np.any(s.F)
    assert not np.any(eval_A(bank, [1, 2, 3], 4.0))


def test_magnetic_vector_view():
    F = np.array([[0, 3.0, -2.0], [-3.0, 0, 1.0], [2.0, -1.0, 0]])
    np.testing.assert_array_equal(magnetic_vector(F), [1.0, 2.0, 3.0])
    v = np.array([0.2, -0.5, 0.9])
    np.testing.assert_allclose(F @ v, np.cross(v, magnetic_vector(F)))


def test_window_truncates_the_sum():
    bank = random_bank(4)
    full = eval_A(bank, [0.01, 0, 0], 3.0)
    bank.n_cutoff = 400
    part = eval_A(bank, [0.01, 0, 0], 3.0)
    ref = ModeBank.from_coefficients(bank.N, bank.tau_c, bank.ab(400)[0], bank.ab(400)[1], *bank.beta(400))
    np.testing.assert_allclose(part, eval_A(ref, [0.01, 0, 0], 3.0), rtol=1e-12)
    assert not np.allclose(full, part)


def test_stationary_zero_mean_over_banks():
    rb, t = np.array([0.02, -0.01, 0.03]), 17.0
    values = np.array([eval_A(random_bank(s, N=20, n_max=200), rb, t) for s in range(400)])
    se = values.std(axis=0, ddof=1) / math.sqrt(len(values))
    assert np.all(np.abs(values.mean(axis=0)) < 4 * se)
