"""Vector potential, electric field and field tensor as single frequency sums.

For every admitted mode the field is a polynomial of degree two in the scaled
position rbar = Z alpha r, with time-dependent coefficients:

    A_i = T0_i + sum_a L_a lambda^a_ik rbar_k + Q_k rbar_k rbar_i - 2 Q_i rbar^2

where, with amp_n = sqrt(d_omega omega_n / pi) W(omega_n) w_n,

    T0_i = sum_n amp_n (B_ni cos + A_ni sin)
    L_a  = sum_n amp_n omega_n / (2 sqrt 5) (beta1_na cos + beta2_na sin)
    Q_i  = sum_n amp_n omega_n^2 / 10 (B_ni cos + A_ni sin)

The electric field E = -dA/dt has the same structure with each mode term
X cos + Y sin replaced by omega (X sin - Y cos). The field tensor is the curl
taken with respect to the unscaled position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bank import ModeBank
from .lambdas import ANTISYMMETRIC, lambda_matrices

LAMBDA = lambda_matrices()
LINEAR_FACTOR = 1.0 / (2.0 * math.sqrt(5.0))
QUADRATIC_FACTOR = 0.1


@dataclass
class FieldCoefficients:
    """Coefficient sums at time(s) t; ``kind`` is "A" (potential) or "E" (electric field)."""

    t: np.ndarray
    T0: np.ndarray  # (..., 3)
    lam: np.ndarray  # (..., 8)
    T2: np.ndarray  # (..., 3)
    kind: str = "A"

    @property
    def T1(self) -> np.ndarray:
        """Order-r tensor sum_a lam_a lambda^a, shape (..., 3, 3)."""
        return np.einsum("...a,aik->...ik", self.lam, LAMBDA)

    def assemble(self, rbar) -> np.ndarray:
        rbar = np.asarray(rbar, dtype=float)
        r2 = np.sum(rbar * rbar, axis=-1, keepdims=True)
        proj = np.sum(self.T2 * rbar, axis=-1, keepdims=True)
        return (
            self.T0
            + np.einsum("...ik,...k->...i", self.T1, rbar)
            + proj * rbar
            - 2.0 * self.T2 * r2
        )

    def field_tensor(self, r, zalpha: float) -> np.ndarray:
        """F_ij = d_i A_j - d_j A_i at unscaled r; only valid for kind "A"."""
        if self.kind != "A":
            raise ValueError("field tensor is built from vector-potential coefficients")
        r = np.asarray(r, dtype=float)
        anti = np.einsum("...a,aij->...ij", self.lam[..., list(ANTISYMMETRIC)], LAMBDA[list(ANTISYMMETRIC)])
        outer = self.T2[..., :, None] * r[..., None, :]
        return -2.0 * zalpha * anti + 5.0 * zalpha**2 * (outer - np.swapaxes(outer, -1, -2))


@dataclass
class FieldSample:
    E: np.ndarray
    F: np.ndarray

    @property
    def B(self) -> np.ndarray:
        return magnetic_vector(self.F)


def magnetic_vector(F) -> np.ndarray:
    """B_k = 1/2 eps_ijk F_ij."""
    F = np.asarray(F)
    return np.stack([F[..., 1, 2], F[..., 2, 0], F[..., 0, 1]], axis=-1)


def _mode_terms(bank: ModeBank):
    n = bank.n_cutoff
    omega = bank.frequencies(n)
    amp = bank.amplitudes(n)
    A, B = bank.ab(n)
    beta1, beta2 = bank.beta(n)
    return omega, amp, A, B, beta1, beta2


def field_coefficients(bank: ModeBank, t, kind: str = "A") -> FieldCoefficients:
    """Exact coefficient sums over the windowed modes at time(s) t."""
    t = np.asarray(t, dtype=float)
    omega, amp, A, B, beta1, beta2 = _mode_terms(bank)
    phase = np.multiply.outer(t, omega)
    c, s = np.cos(phase), np.sin(phase)
    if kind == "A":
        w0 = amp
        x_c, x_s = c * w0, s * w0
        T0 = x_c @ B + x_s @ A
        wl = w0 * omega * LINEAR_FACTOR
        lam = (c * wl) @ beta1 + (s * wl) @ beta2
        wq = w0 * omega**2 * QUADRATIC_FACTOR
        T2 = (c * wq) @ B + (s * wq) @ A
    elif kind == "E":
        w0 = amp * omega
        T0 = (s * w0) @ B - (c * w0) @ A
        wl = w0 * omega * LINEAR_FACTOR
        lam = (s * wl) @ beta1 - (c * wl) @ beta2
        wq = w0 * omega**2 * QUADRATIC_FACTOR
        T2 = (s * wq) @ B - (c * wq) @ A
    else:
        raise ValueError(f"unknown coefficient kind {kind!r}")
    return FieldCoefficients(t, T0, lam, T2, kind)


def eval_A(bank: ModeBank, rbar, t) -> np.ndarray:
    """Vector potential at scaled position rbar = Z alpha r."""
    return field_coefficients(bank, t, "A").assemble(rbar)


def eval_E(bank: ModeBank, rbar, t) -> np.ndarray:
    """Transverse electric field -dA/dt at scaled position rbar."""
    return field_coefficients(bank, t, "E").assemble(rbar)


def eval_F(bank: ModeBank, r, t, zalpha: float) -> np.ndarray:
    """Antisymmetric field tensor at unscaled position r (Bohr radii)."""
    return field_coefficients(bank, t, "A").field_tensor(r, zalpha)


def field_sample(bank: ModeBank, r, t, zalpha: float) -> FieldSample:
    r = np.asarray(r, dtype=float)
    return FieldSample(eval_E(bank, zalpha * r, t), eval_F(bank, r, t, zalpha))
