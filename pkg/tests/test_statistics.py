import math

import numpy as np
import pytest
from scipy import integrate, optimize, special

from sedhydrogen import statistics as st
from sedhydrogen.units import PhysicalParams


def test_conjecture_pdf_values():
    assert st.conjecture_energy_pdf(-1.0) == pytest.approx(4 / 3 * math.exp(-2), rel=1e-15)
    assert st.conjecture_energy_pdf(-1.0) == pytest.approx(0.180447, abs=1e-6)
    with pytest.raises(ValueError):
        st.conjecture_energy_pdf(0.0)
    with pytest.raises(ValueError):
        st.conjecture_energy_pdf([-1.0, 0.5])


def test_radial_pdf_values():
    assert st.quantum_radial_pdf(1.0) == pytest.approx(4 * math.exp(-2), rel=1e-15)
    assert st.quantum_radial_pdf(0.0) == 0.0
    with pytest.raises(ValueError):
        st.quantum_radial_pdf(-0.1)


def test_normalisations_by_quadrature():
    assert st.normalisation(st.energy_pdf_safe, -np.inf, 0.0, breakpoints=(-1.0, -1 / 3, -0.05)) == pytest.approx(1.0, abs=1e-8)
    assert st.normalisation(st.quantum_radial_pdf, 0.0, np.inf, breakpoints=(1.0, 10.0)) == pytest.approx(1.0, abs=1e-8)


def test_mean_radius():
    mean = integrate.quad(lambda r: r * st.quantum_radial_pdf(r), 0, np.inf)[0]
    assert mean == pytest.approx(1.5, rel=1e-10)


def test_modes():
    res = optimize.minimize_scalar(lambda e: -st.conjecture_energy_pdf(e), bounds=(-2, -0.05), method="bounded",
                                   options={"xatol": 1e-12})
    assert res.x == pytest.approx(-1 / 3, abs=1e-6)
    res = optimize.minimize_scalar(lambda r: -st.quantum_radial_pdf(r), bounds=(0.1, 5), method="bounded",
                                   options={"xatol": 1e-12})
    assert res.x == pytest.approx(1.0, abs=1e-6)


def test_pdfs_nonnegative():
    assert np.all(st.conjecture_energy_pdf(-np.geomspace(1e-3, 1e3, 2000)) >= 0)
    assert np.all(st.quantum_radial_pdf(np.linspace(0, 50, 2000)) >= 0)


def test_closed_form_cdfs_match_quadrature():
    E = np.linspace(-10, -0.01, 300)
    np.testing.assert_allclose(st.energy_reference_cdf()(E), st.conjecture_energy_cdf(E), atol=1e-6)
    r = np.linspace(0, 12, 300)
    np.testing.assert_allclose(st.radius_reference_cdf()(r), st.quantum_radial_cdf(r), atol=1e-6)
    assert st.conjecture_energy_cdf(0.0) == 1.0 and st.quantum_radial_cdf(0.0) == 0.0


def test_samplers_follow_their_densities():
    rng = np.random.default_rng(1)
    E = st.sample_conjecture_energy(200_000, rng)
    r = st.sample_quantum_radius(200_000, rng)
    assert np.all(E < 0) and np.all(r >= 0)
    assert st.ks_distance(E, st.energy_reference_cdf()) < 1.63 / math.sqrt(E.size) * 1.5
    assert st.ks_distance(r, st.radius_reference_cdf()) < 1.63 / math.sqrt(r.size) * 1.5
    assert r.mean() == pytest.approx(1.5, abs=0.01)


def test_ks_quantiles_give_near_zero():
    q = (np.arange(1000) + 0.5) / 1000
    x = 0.5 * special.gammaincinv(3, q)
    assert st.ks_distance(x, st.quantum_radial_cdf) == pytest.approx(0.0005, abs=1e-9)


def test_ks_degenerate_samples():
    d = st.ks_distance(np.full(50, 1.0), st.quantum_radial_cdf)
    c = st.quantum_radial_cdf(1.0)
    assert d == pytest.approx(max(c, 1 - c)) and d < 1


def test_ks_permutation_invariant_and_weighted():
    rng = np.random.default_rng(2)
    x = rng.exponential(size=500)
    w = rng.random(500)
    perm = rng.permutation(500)
    cdf = lambda v: 1 - np.exp(-np.asarray(v))  # noqa: E731
    assert st.ks_distance(x, cdf) == st.ks_distance(x[perm], cdf)
    assert st.ks_distance(x, cdf, w) == pytest.approx(st.ks_distance(x[perm], cdf, w[perm]), rel=1e-12)
    # integer weights are equivalent to repeated samples
    k = rng.integers(1, 4, 500)
    assert st.ks_distance(x, cdf, k) == pytest.approx(st.ks_distance(np.repeat(x, k), cdf), rel=1e-12)


def test_ks_errors():
    with pytest.raises(ValueError):
        st.ks_distance([], st.quantum_radial_cdf)
    with pytest.raises(ValueError):
        st.ks_distance([1.0, 2.0], st.quantum_radial_cdf, [0.0, 0.0])
    with pytest.raises(ValueError):
        st.ks_distance([1.0, 2.0], st.quantum_radial_cdf, [1.0])


def test_histogram_density_integrates_to_one():
    rng = np.random.default_rng(3)
    x = rng.normal(-1.5, 1.2, 10_000)
    h = st.build_histogram(x, st.histogram_edges(-4, 0, 100), rng.random(10_000))
    assert np.sum(h.density() * h.widths) == pytest.approx(1.0, abs=1e-12)
    assert h.underflow > 0 and h.overflow > 0
    assert h.total == pytest.approx(h.counts.sum() + h.underflow + h.overflow)
    assert np.all(h.counts >= 0)


def test_log_edges():
    e = st.histogram_edges(0.01, 100, 4, log=True)
    np.testing.assert_allclose(e, [0.01, 0.1, 1, 10, 100])
    with pytest.raises(ValueError):
        st.histogram_edges(0.0, 1.0, 4, log=True)


def test_histogram_merge_associative_commutative():
    rng = np.random.default_rng(4)
    edges = st.histogram_edges(0, 6, 30)
    a, b, c = (st.build_histogram(rng.gamma(3, 0.5, 300), edges, rng.random(300)) for _ in range(3))
    left = a.merge(b).merge(c)
    right = a.merge(b.merge(c))
    swapped = c.merge(a).merge(b)
    for h in (right, swapped):
        np.testing.assert_allclose(h.counts, left.counts, rtol=1e-14)
        assert h.overflow == pytest.approx(left.overflow)
    with pytest.raises(ValueError):
        a.merge(st.build_histogram([1.0], st.histogram_edges(0, 5, 30)))


def test_nondegenerate():
    edges = st.histogram_edges(0, 1, 10)
    assert not st.build_histogram([0.5, 0.51], edges).nondegenerate
    assert st.build_histogram([0.05, 0.95], edges).nondegenerate


def test_dwell_weights():
    np.testing.assert_array_equal(st.dwell_weights([0.0, 0.5, 2.0, 2.25]), [0.0, 0.5, 1.5, 0.25])
    assert st.dwell_weights([]).size == 0


def test_run_summary_table_values():
    p = PhysicalParams(3.0, 1 / 137.036)
    s = st.run_summary(2.05e7, p)
    assert st.significant(s.t_damp, 3, "trunc") == pytest.approx(4.28e5)
    assert round(s.N_damp) == 48
    assert st.significant(s.seconds, 2) == pytest.approx(5.5e-11)
    assert s.N_damp == s.t_total / s.t_damp
    assert p.tau0_seconds == pytest.approx(2.688e-18, rel=1e-3)


def test_run_summary_zero_time():
    s = st.run_summary(0.0, PhysicalParams())
    assert s.N_damp == 0 and s.N_orbit == 0 and s.seconds == 0


def test_significant():
    assert st.significant(4.2890e5, 3) == pytest.approx(4.29e5)
    assert st.significant(4.2890e5, 3, "trunc") == pytest.approx(4.28e5)
    assert st.significant(-0.0123456, 2) == pytest.approx(-0.012)
    assert st.significant(0.0, 3) == 0.0
