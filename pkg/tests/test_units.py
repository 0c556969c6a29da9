import math

import numpy as np
import pytest

from sedhydrogen.units import (
    ALPHA,
    SPIN_MAGNITUDE,
    ElectronState,
    PhysicalParams,
    SingularityError,
    UnboundOrbitError,
    angular_momentum,
    beta_coupling,
    circular_state,
    hamiltonian,
    kepler_frequency,
    kepler_period,
    total_J,
)

NO_CORRECTIONS = dict(p4=False, spin_orbit=False)


def test_beta_hydrogen_matches_quoted_value():
    # beta = Z / 1964.71
    assert beta_coupling(1, 1 / 137.036) == pytest.approx(1 / 1964.71, rel=2e-6)
    assert beta_coupling(1, 1 / 137.036) == pytest.approx(5.0898e-4, rel=1e-4)


def test_beta_lithium_like_and_damping_time():
    b = beta_coupling(3, 1 / 137.036)
    assert b == pytest.approx(1.52694e-3, rel=1e-5)
    assert 1 / b**2 == pytest.approx(4.289e5, rel=1e-3)


def test_beta_zero_charge():
    assert beta_coupling(0, ALPHA) == 0.0


def test_params_follow_their_definitions_exactly():
    rng = np.random.default_rng(3)
    for _ in range(50):
        Z = rng.uniform(0.5, 10)
        a = rng.uniform(1e-4, 0.5)
        p = PhysicalParams(Z, a)
        assert p.beta == math.sqrt(2.0 / 3.0) * Z * a**1.5
        assert p.tau_c == (Z * a) ** 2
        assert p.za2 == p.tau_c


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
def test_params_reject_bad_alpha(alpha):
    with pytest.raises(ValueError):
        PhysicalParams(1.0, alpha)


def test_tau0_seconds_for_z3():
    assert PhysicalParams(3.0).tau0_seconds == pytest.approx(2.688e-18, rel=1e-3)


def test_hamiltonian_unit_circle_and_rest():
    p = PhysicalParams()
    assert hamiltonian(ElectronState([1, 0, 0], [0, 1, 0]), p, **NO_CORRECTIONS) == -0.5
    assert hamiltonian(ElectronState([1, 0, 0], [0, 0, 0]), p, **NO_CORRECTIONS) == -1.0


def test_hamiltonian_with_corrections_hand_value():
    p = PhysicalParams(3.0)
    eps = p.za2
    s = ElectronState([1, 0, 0], [0, 1, 0], [0, 0, math.sqrt(3) / 2])
    assert hamiltonian(s, p) == pytest.approx(-0.5 + eps * (math.sqrt(3) / 4 - 1 / 8), rel=1e-14)


def test_hamiltonian_without_corrections_is_kepler_energy():
    rng = np.random.default_rng(0)
    p = PhysicalParams()
    for _ in range(20):
        r, v = rng.normal(size=3), rng.normal(size=3)
        e = hamiltonian(ElectronState(r, v, rng.normal(size=3)), p, **NO_CORRECTIONS)
        assert e == 0.5 * float(v @ v) - 1.0 / float(np.linalg.norm(r))


def test_hamiltonian_singularity_floor():
    with pytest.raises(SingularityError):
        hamiltonian(ElectronState([1e-7, 0, 0], [0, 1, 0]), PhysicalParams())
    with pytest.raises(SingularityError):
        hamiltonian(ElectronState([1e-3, 0, 0], [0, 1, 0]), PhysicalParams(), floor=1e-2)


@pytest.mark.parametrize(
    "E, expected", [(-0.5, 1.0), (-1.6, 3.2**1.5), (-0.05, 0.1**1.5)]
)
def test_kepler_frequency_examples(E, expected):
    assert kepler_frequency(E) == pytest.approx(expected, rel=1e-14)


def test_kepler_frequency_values_quoted():
    assert kepler_frequency(-1.6) == pytest.approx(5.7243, abs=1e-4)
    assert kepler_frequency(-0.05) == pytest.approx(0.031623, abs=1e-6)
    assert kepler_period(-0.5) == pytest.approx(2 * math.pi)


@pytest.mark.parametrize("E", [0.0, 0.3])
def test_kepler_frequency_rejects_unbound(E):
    with pytest.raises(UnboundOrbitError):
        kepler_frequency(E)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 4.0])
def test_circular_orbit_frequency(a):
    s = circular_state(a)
    e = hamiltonian(s, PhysicalParams(), **NO_CORRECTIONS)
    assert kepler_frequency(e) == pytest.approx(a**-1.5, rel=1e-13)


def test_angular_momenta():
    s = ElectronState([1, 0, 0], [0, 1, 0], [0, 0, SPIN_MAGNITUDE])
    np.testing.assert_array_equal(angular_momentum(s), [0, 0, 1])
    np.testing.assert_allclose(total_J(s), [0, 0, 1 + math.sqrt(3) / 2])
    np.testing.assert_array_equal(angular_momentum(ElectronState([1, 2, 3], [0, 0, 0])), [0, 0, 0])


def test_state_vector_round_trip():
    s = ElectronState([1, 2, 3], [4, 5, 6], [7, 8, 9], t=1.5)
    back = ElectronState.from_vector(s.as_vector(), s.t)
    np.testing.assert_array_equal(back.as_vector(), s.as_vector())
    assert back.t == 1.5
