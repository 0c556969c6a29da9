"""Bohr-unit constants and orbital quantities.

Lengths are in Bohr radii a0 = hbar/(Z alpha m c), times in tau0 = hbar/(Z^2 alpha^2 m c^2).
In these units the Kepler problem is parameter free; relativistic corrections
scale with Z^2 alpha^2 and the vacuum field couples through ``beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ALPHA = 1.0 / 137.036
#: hbar / (m_e c^2) in seconds (reduced Compton time of the electron).
COMPTON_TIME_SECONDS = 1.28808866712e-21
#: |S| for a spin-1/2 particle in units of hbar.
SPIN_MAGNITUDE = 0.5 * math.sqrt(3.0)
DEFAULT_SINGULARITY_FLOOR = 1e-6


class SingularityError(ValueError):
    """Raised when the electron comes closer to the nucleus than the floor."""


class UnboundOrbitError(ValueError):
    """Raised when a Keplerian quantity is requested for E >= 0."""


def beta_coupling(Z: float, alpha: float) -> float:
    """Radiation coupling sqrt(2/3) Z alpha^(3/2)."""
    return math.sqrt(2.0 / 3.0) * Z * alpha**1.5


@dataclass(frozen=True)
class PhysicalParams:
    Z: float = 3.0
    alpha: float = ALPHA

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.Z < 0:
            raise ValueError(f"Z must be non-negative, got {self.Z}")

    @property
    def beta(self) -> float:
        return beta_coupling(self.Z, self.alpha)

    @property
    def za2(self) -> float:
        return (self.Z * self.alpha) ** 2

    @property
    def tau_c(self) -> float:
        # Compton time hbar/mc^2 expressed in tau0.
        return (self.Z * self.alpha) ** 2

    @property
    def zalpha(self) -> float:
        return self.Z * self.alpha

    @property
    def tau0_seconds(self) -> float:
        return COMPTON_TIME_SECONDS / self.za2


@dataclass
class ElectronState:
    """Position, momentum and spin of the electron at time ``t``.

    ``p`` is the mechanical momentum in units of m a0/tau0. To leading order it
    equals the velocity; the velocity itself follows from :func:`sedhydrogen.dynamics.velocity`.
    """

    r: np.ndarray
    p: np.ndarray
    S: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, SPIN_MAGNITUDE]))
    t: float = 0.0

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float).reshape(3)
        self.p = np.asarray(self.p, dtype=float).reshape(3)
        self.S = np.asarray(self.S, dtype=float).reshape(3)
        self.t = float(self.t)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.r, self.p, self.S])

    @classmethod
    def from_vector(cls, y, t: float = 0.0) -> "ElectronState":
        y = np.asarray(y, dtype=float)
        return cls(y[0:3].copy(), y[3:6].copy(), y[6:9].copy(), t)

    def copy(self) -> "ElectronState":
        return ElectronState(self.r.copy(), self.p.copy(), self.S.copy(), self.t)


def angular_momentum(state: ElectronState) -> np.ndarray:
    return np.cross(state.r, state.p)


def total_J(state: ElectronState) -> np.ndarray:
    return angular_momentum(state) + state.S


def hamiltonian(
    state: ElectronState,
    params: PhysicalParams,
    *,
    p4: bool = True,
    spin_orbit: bool = True,
    floor: float = DEFAULT_SINGULARITY_FLOOR,
) -> float:
    """Energy 1/2 p^2 - 1/r - (Z a)^2 p^4/8 + (Z a)^2 (L.S)/(2 r^3).

    The contact (delta-function) term vanishes for r != 0 and is not represented.
    """
    r = float(np.linalg.norm(state.r))
    if r < floor:
        raise SingularityError(f"|r| = {r:.3e} below singularity floor {floor:.1e}")
    p2 = float(state.p @ state.p)
    energy = 0.5 * p2 - 1.0 / r
    if p4:
        energy -= params.za2 * p2 * p2 / 8.0
    if spin_orbit:
        energy += 0.5 * params.za2 * float(angular_momentum(state) @ state.S) / r**3
    return energy


def kepler_frequency(E: float) -> float:
    """Angular frequency (2|E|)^(3/2) of the bound Kepler orbit with energy E."""
    if E >= 0:
        raise UnboundOrbitError(f"no Keplerian frequency for E = {E} >= 0")
    return (2.0 * abs(E)) ** 1.5


def kepler_period(E: float) -> float:
    return 2.0 * math.pi / kepler_frequency(E)


def circular_state(radius: float = 1.0, S=None) -> ElectronState:
    """Circular Kepler orbit in the x-y plane, moving counter-clockwise."""
    S = np.array([0.0, 0.0, SPIN_MAGNITUDE]) if S is None else S
    return ElectronState([radius, 0.0, 0.0], [0.0, radius**-0.5, 0.0], S)


def elliptic_state(eccentricity: float, semi_major: float = 1.0, S=None) -> ElectronState:
    """Kepler ellipse started at pericentre on the x axis."""
    e = eccentricity
    rp = semi_major * (1.0 - e)
    vp = math.sqrt((1.0 + e) / rp)
    S = np.array([0.0, 0.0, SPIN_MAGNITUDE]) if S is None else S
    return ElectronState([rp, 0.0, 0.0], [0.0, vp, 0.0], S)
