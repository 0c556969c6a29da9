"""Equations of motion, RK4 stepping and the energy push.

The electron is integrated in Hamilton form with state (r, p, S):

    rdot = p (1 - eps p^2 / 2) + (eps / 2) S x r / r^3
    pdot = -r / r^3 + (eps / 2) S x p / r^3 + (3 eps / 2) (L.S) r / r^5
           - beta (E + rdot x B) + beta^2 rddd
    Sdot = (eps / 2) L x S / r^3

with eps = (Z alpha)^2, L = r x p, and the radiation reaction rddd reduced to
the time derivative of the Coulomb acceleration, -rdot/r^3 + 3 (r.rdot) r / r^5.
Without field and damping these flows conserve the Hamiltonian and J = L + S.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.optimize import brentq

from . import _kernel
from .bank import CH_PUSH, philox, uniforms_from_raw
from .fields import FieldSample
from .units import (
    DEFAULT_SINGULARITY_FLOOR,
    ElectronState,
    PhysicalParams,
    SingularityError,
    hamiltonian,
)

log = logging.getLogger(__name__)

PUSH_WORDS = 8  # Philox words consumed per push (two 4-word blocks)


@dataclass(frozen=True)
class Toggles:
    damping: bool = True
    noise: bool = True
    magnetic: bool = True
    p4: bool = True
    spin_orbit: bool = True

    @classmethod
    def from_config(cls, config) -> "Toggles":
        return cls(
            config.enable_damping,
            config.enable_noise,
            config.enable_magnetic,
            config.enable_p4,
            config.enable_spin_orbit,
        )

    @classmethod
    def conservative(cls) -> "Toggles":
        """No field, no damping, relativistic terms on."""
        return cls(damping=False, noise=False, magnetic=False)

    @classmethod
    def kepler(cls) -> "Toggles":
        return cls(False, False, False, False, False)


ALL_ON = Toggles()


def kernel_params(params: PhysicalParams, toggles: Toggles = ALL_ON, floor: float = DEFAULT_SINGULARITY_FLOOR) -> np.ndarray:
    eps = params.za2
    beta = params.beta
    return np.array(
        [
            eps if toggles.p4 else 0.0,
            eps if toggles.spin_orbit else 0.0,
            beta if toggles.noise else 0.0,
            beta if (toggles.noise and toggles.magnetic) else 0.0,
            beta * beta if toggles.damping else 0.0,
            floor,
        ]
    )


def _derivative(state: ElectronState, sample, params, toggles, floor) -> np.ndarray:
    E = np.zeros(3) if sample is None else np.asarray(sample.E, dtype=float)
    F = np.zeros((3, 3)) if sample is None else np.ascontiguousarray(sample.F, dtype=float)
    out = np.empty(9)
    if not _kernel.rhs(state.as_vector(), E, F, kernel_params(params, toggles, floor), out):
        raise SingularityError(f"|r| = {np.linalg.norm(state.r):.3e} below singularity floor {floor:.1e}")
    return out


def velocity(state: ElectronState, params: PhysicalParams, toggles: Toggles = ALL_ON, floor: float = DEFAULT_SINGULARITY_FLOOR) -> np.ndarray:
    """rdot = dH/dp."""
    return _derivative(state, None, params, toggles, floor)[0:3]


def acceleration(
    state: ElectronState,
    field_sample: FieldSample | None,
    params: PhysicalParams,
    toggles: Toggles = ALL_ON,
    floor: float = DEFAULT_SINGULARITY_FLOOR,
) -> np.ndarray:
    """Force on the electron, pdot, for the given local field (None means no field)."""
    return _derivative(state, field_sample, params, toggles, floor)[3:6]


def spin_derivative(state: ElectronState, params: PhysicalParams, toggles: Toggles = ALL_ON, floor: float = DEFAULT_SINGULARITY_FLOOR) -> np.ndarray:
    """Sdot = (Z alpha)^2 / 2 (L x S) / r^3."""
    return _derivative(state, None, params, toggles, floor)[6:9]


def rk4_step(
    state: ElectronState,
    field_source,
    params: PhysicalParams,
    h: float,
    toggles: Toggles = ALL_ON,
    floor: float = DEFAULT_SINGULARITY_FLOOR,
) -> ElectronState:
    """One classical RK4 step.

    ``field_source(r, t)`` returns (E, F) at position r (Bohr radii) and time t,
    or ``field_source`` is None for a field-free step.
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    prm = kernel_params(params, toggles, floor)
    zero_E, zero_F = np.zeros(3), np.zeros((3, 3))

    def deriv(y, t):
        if field_source is None:
            E, F = zero_E, zero_F
        else:
            E, F = field_source(y[0:3], t)
            E = np.asarray(E, dtype=float)
            F = np.ascontiguousarray(F, dtype=float)
        out = np.empty(9)
        if not _kernel.rhs(y, E, F, prm, out):
            raise SingularityError(f"|r| = {np.linalg.norm(y[0:3]):.3e} below singularity floor {floor:.1e}")
        return out

    y, t = state.as_vector(), state.t
    k1 = deriv(y, t)
    k2 = deriv(y + 0.5 * h * k1, t + 0.5 * h)
    k3 = deriv(y + 0.5 * h * k2, t + 0.5 * h)
    k4 = deriv(y + h * k3, t + h)
    return ElectronState.from_vector(y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), t + h)


def integrate(
    state: ElectronState,
    params: PhysicalParams,
    h: float,
    n_steps: int,
    toggles: Toggles = ALL_ON,
    floor: float = DEFAULT_SINGULARITY_FLOOR,
    record_every: int = 0,
):
    """Field-free fixed-step integration in compiled code.

    Returns the final state and, if ``record_every`` > 0, the array of state
    vectors after every ``record_every`` steps (first row is the initial state).
    """
    y = state.as_vector()
    rows = [y.copy()] if record_every else None
    ynew = np.empty(9)
    prm = kernel_params(params, toggles, floor)
    dummy = np.zeros((20, 1))
    t = state.t
    done = 0
    chunk = record_every if record_every else n_steps
    while done < n_steps:
        m = min(chunk, n_steps - done)
        ok, t = _fixed_steps(y, t, h, m, prm, dummy, ynew)
        if not ok:
            raise SingularityError("trajectory reached the singularity floor")
        done += m
        if record_every:
            rows.append(y.copy())
    final = ElectronState.from_vector(y, t)
    return (final, np.array(rows)) if record_every else final


@njit(cache=True)
def _fixed_steps(y, t, h, m, prm, dummy, ynew):
    work = np.empty((5, 9))
    ch = np.empty(20)
    E = np.zeros(3)
    F = np.zeros((3, 3))
    for _ in range(m):
        if not _kernel.rk4_work(y, t, h, prm, False, dummy, 0, 1.0, 0.0, ynew, work, ch, E, F):
            return False, t
        for i in range(9):
            y[i] = ynew[i]
        t += h
    return True, t


# ---------------------------------------------------------------------------
# energy push


@dataclass(frozen=True)
class PushRecord:
    index: int
    branch: str  # "parallel" or "perpendicular"
    direction: tuple
    magnitude: float
    energy_before: float
    energy_after: float


def push_uniforms(seed: int, index: int) -> np.ndarray:
    """The fixed block of uniforms used by push number ``index``."""
    bg = philox(seed, CH_PUSH, index * (PUSH_WORDS // 4))
    return uniforms_from_raw(bg.random_raw(PUSH_WORDS))


def _perpendicular_basis(d):
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(d)))] = 1.0
    e1 = np.cross(d, axis)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(d, e1)


def isotropic_direction(u1: float, u2: float) -> np.ndarray:
    z = 2.0 * u1 - 1.0
    phi = 2.0 * math.pi * u2
    s = math.sqrt(max(0.0, 1.0 - z * z))
    return np.array([s * math.cos(phi), s * math.sin(phi), z])


def push_direction(p, u) -> tuple[str, np.ndarray]:
    """Parallel to p with probability 1/2, otherwise uniform on the circle perpendicular to p."""
    pn = float(np.linalg.norm(p))
    if pn == 0.0:
        return "isotropic", isotropic_direction(u[1], u[2])
    d = np.asarray(p, dtype=float) / pn
    if u[0] < 0.5:
        return "parallel", d
    e1, e2 = _perpendicular_basis(d)
    phi = 2.0 * math.pi * u[1]
    return "perpendicular", math.cos(phi) * e1 + math.sin(phi) * e2


def energy_push(
    state: ElectronState,
    u,
    push_target: float,
    params: PhysicalParams,
    toggles: Toggles = ALL_ON,
    floor: float = DEFAULT_SINGULARITY_FLOOR,
    index: int = 0,
) -> tuple[ElectronState, PushRecord]:
    """Kick the momentum so that the energy becomes ``push_target``.

    ``u`` holds at least three uniforms (e.g. from :func:`push_uniforms`). The
    kick magnitude is the smallest positive root found by bracketing; position
    and spin are unchanged.
    """
    kw = dict(p4=toggles.p4, spin_orbit=toggles.spin_orbit, floor=floor)
    e0 = hamiltonian(state, params, **kw)
    if e0 >= push_target:
        raise ValueError(f"energy {e0} already at or above the push target {push_target}")
    branch, d = push_direction(state.p, u)

    def excess(lam):
        trial = ElectronState(state.r, state.p + lam * d, state.S, state.t)
        return hamiltonian(trial, params, **kw) - push_target

    # kinetic energy with the p^4 term grows only while p^2 < 2 / eps
    p_limit = math.sqrt(2.0 / params.za2) if toggles.p4 and params.za2 > 0 else math.inf
    lam_hi = math.sqrt(2.0 * (push_target - e0)) + 1e-12
    while excess(lam_hi) < 0.0:
        lam_hi *= 2.0
        if np.linalg.norm(state.p + lam_hi * d) > p_limit:
            raise ValueError("no momentum kick reaches the push target")
    lam = brentq(excess, 0.0, lam_hi, xtol=1e-300, rtol=4.0 * np.finfo(float).eps, maxiter=500)
    new = ElectronState(state.r, state.p + lam * d, state.S, state.t)
    e1 = hamiltonian(new, params, **kw)
    record = PushRecord(index, branch, tuple(float(x) for x in d), float(lam), float(e0), float(e1))
    return new, record


# ---------------------------------------------------------------------------
# orbit diagnostics


def runge_lenz(state: ElectronState) -> np.ndarray:
    """A = p x L - rhat (Kepler units); points to pericentre with length e."""
    L = np.cross(state.r, state.p)
    return np.cross(state.p, L) - state.r / np.linalg.norm(state.r)


def eccentricity(state: ElectronState) -> float:
    return float(np.linalg.norm(runge_lenz(state)))
