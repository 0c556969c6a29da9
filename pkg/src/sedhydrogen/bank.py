"""Mode bank: the Gaussian coefficients that define one realisation of the vacuum field.

Mode n has frequency n/N. Its coefficients are drawn from counter-based Philox
streams keyed by (seed, channel) with the counter fixed by n, so any mode can be
materialised on its own and extending the bank never reshuffles existing modes.
The moving cutoff is a window over this immutable bank.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .config import ConfigError

# Philox key[1] values; key[0] is the seed
CH_AB = 1
CH_BETA = 2
CH_PUSH = 3
CH_INIT = 4

_SEED_MASK = (1 << 64) - 1
_TWO_PI = 2.0 * math.pi

SNAPSHOT_MAGIC = b"SEDB"
SNAPSHOT_VERSION = 1
_SNAPSHOT = struct.Struct("<4sHQQQQBQd")

TAPER_FRACTION = 0.02


def philox(seed: int, channel: int, block: int = 0) -> np.random.Philox:
    bg = np.random.Philox(key=[int(seed) & _SEED_MASK, int(channel)])
    if block:
        bg.advance(int(block))
    return bg


def uniforms_from_raw(raw: np.ndarray) -> np.ndarray:
    return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def mode_gaussians(seed: int, channel: int, n_lo: int, n_hi: int, per_mode: int) -> np.ndarray:
    """Standard normals for modes n_lo..n_hi (inclusive, 1-based), shape (n, per_mode).

    Each mode owns a fixed run of Philox words; Box-Muller turns consecutive
    word pairs into normal pairs, so values depend only on (seed, channel, n).
    """
    if per_mode % 2:
        raise ValueError("per_mode must be even")
    count = n_hi - n_lo + 1
    if count <= 0:
        return np.empty((0, per_mode))
    words = -(-per_mode // 4) * 4
    bg = philox(seed, channel, (n_lo - 1) * (words // 4))
    raw = bg.random_raw(count * words).reshape(count, words)[:, :per_mode]
    u = uniforms_from_raw(raw)
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0::2]))
    angle = _TWO_PI * u[:, 1::2]
    out = np.empty((count, per_mode))
    out[:, 0::2] = radius * np.cos(angle)
    out[:, 1::2] = radius * np.sin(angle)
    return out


@dataclass(frozen=True)
class WindowChange:
    entered: int
    left: int
    n_cutoff: int
    cutoff: float

    @property
    def empty(self) -> bool:
        return self.n_cutoff == 0


class ModeBank:
    """Lazily materialised Gaussian coefficients plus the current window.

    Arrays returned by :meth:`ab` and :meth:`beta` are indexed by n-1.
    """

    def __init__(self, seed: int, N: int, n_max: int, tau_c: float, taper: bool = False):
        if N < 1 or n_max < 1:
            raise ConfigError(f"mode bank needs N >= 1 and n_max >= 1 (got N={N}, n_max={n_max})")
        self.seed = int(seed)
        self.N = int(N)
        self.n_max = int(n_max)
        self.tau_c = float(tau_c)
        self.taper = bool(taper)
        self.n_cutoff = self.n_max
        self._explicit = False
        self._A = np.empty((0, 3))
        self._B = np.empty((0, 3))
        self._beta1 = np.empty((0, 8))
        self._beta2 = np.empty((0, 8))

    @classmethod
    def from_coefficients(cls, N, tau_c, A, B, beta1=None, beta2=None):
        """Bank with prescribed (non-random) coefficients, mainly for hand-checkable cases."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        n = A.shape[0]
        beta1 = np.zeros((n, 8)) if beta1 is None else np.atleast_2d(np.asarray(beta1, float))
        beta2 = np.zeros((n, 8)) if beta2 is None else np.atleast_2d(np.asarray(beta2, float))
        bank = cls(0, N, n, tau_c)
        bank._explicit = True
        bank._A, bank._B, bank._beta1, bank._beta2 = A, B, beta1, beta2
        return bank

    @property
    def d_omega(self) -> float:
        return 1.0 / self.N

    @property
    def omega_max(self) -> float:
        return self.n_max / self.N

    @property
    def high_water(self) -> int:
        return max(self._A.shape[0], self._beta1.shape[0])

    def frequencies(self, n_hi: int | None = None) -> np.ndarray:
        n_hi = self.n_max if n_hi is None else n_hi
        return np.arange(1, n_hi + 1) / self.N

    def _check(self, n_hi):
        if n_hi > self.n_max:
            raise ValueError(f"mode {n_hi} beyond bank n_max={self.n_max}")

    def ab(self, n_hi: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        n_hi = self.n_max if n_hi is None else n_hi
        self._check(n_hi)
        have = self._A.shape[0]
        if n_hi > have:
            g = mode_gaussians(self.seed, CH_AB, have + 1, n_hi, 6)
            self._A = np.concatenate([self._A, g[:, 0:3]])
            self._B = np.concatenate([self._B, g[:, 3:6]])
        return self._A[:n_hi], self._B[:n_hi]

    def beta(self, n_hi: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        n_hi = self.n_max if n_hi is None else n_hi
        self._check(n_hi)
        have = self._beta1.shape[0]
        if n_hi > have:
            g = mode_gaussians(self.seed, CH_BETA, have + 1, n_hi, 16)
            self._beta1 = np.concatenate([self._beta1, g[:, 0:8]])
            self._beta2 = np.concatenate([self._beta2, g[:, 8:16]])
        return self._beta1[:n_hi], self._beta2[:n_hi]

    def window(self, n_hi: int | None = None) -> np.ndarray:
        """Per-mode multiplier w_n for n = 1..n_hi."""
        n_hi = self.n_max if n_hi is None else n_hi
        n = np.arange(1, n_hi + 1)
        w = (n <= self.n_cutoff).astype(float)
        if self.taper and self.n_cutoff > 0:
            n0 = int(math.floor((1.0 - TAPER_FRACTION) * self.n_cutoff))
            edge = (n > n0) & (n <= self.n_cutoff)
            w[edge] = 0.5 * (1.0 + np.cos(math.pi * (n[edge] - n0) / (self.n_cutoff - n0 + 1)))
        return w

    def amplitudes(self, n_hi: int | None = None) -> np.ndarray:
        """sqrt(d_omega omega_n / pi) W(omega_n) w_n with W = exp(-omega tau_c / 2)."""
        omega = self.frequencies(n_hi)
        return np.sqrt(self.d_omega * omega / math.pi) * np.exp(-0.5 * omega * self.tau_c) * self.window(n_hi)

    def active_modes(self) -> int:
        return self.n_cutoff

    def to_bytes(self) -> bytes:
        if self._explicit:
            raise ValueError("explicit-coefficient banks cannot be snapshotted")
        return _SNAPSHOT.pack(
            SNAPSHOT_MAGIC, SNAPSHOT_VERSION, self.seed & _SEED_MASK, self.N, self.n_max,
            self.n_cutoff, int(self.taper), self.high_water, self.tau_c,
        )

    @classmethod
    def from_bytes(cls, blob: bytes) -> "ModeBank":
        if len(blob) != _SNAPSHOT.size:
            raise ValueError(f"bank snapshot has {len(blob)} bytes, expected {_SNAPSHOT.size}")
        magic, version, seed, N, n_max, n_cut, taper, high_water, tau_c = _SNAPSHOT.unpack(blob)
        if magic != SNAPSHOT_MAGIC:
            raise ValueError("not a mode-bank snapshot")
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported bank snapshot version {version}")
        bank = cls(seed, N, n_max, tau_c, bool(taper))
        bank.n_cutoff = n_cut
        if high_water:
            bank.ab(high_water)
            bank.beta(high_water)
        return bank


def build_mode_bank(config, seed: int | None = None, n_max: int | None = None) -> ModeBank:
    """Bank for a run configuration; n_max defaults to ceil(omega_max * N)."""
    seed = config.seed if seed is None else seed
    needed = int(math.ceil(config.omega_max * config.N - 1e-9))
    if n_max is None:
        n_max = needed
    elif n_max < needed:
        raise ConfigError(
            f"n_max/N = {n_max / config.N:g} is below the requested omega_max = {config.omega_max:g}"
        )
    return ModeBank(seed, config.N, n_max, config.effective_tau_c, config.taper)


def update_window(bank: ModeBank, omega_K: float, multiplier: float) -> WindowChange:
    """Admit the modes with omega_n <= multiplier * omega_K."""
    if omega_K <= 0:
        raise ValueError("omega_K must be positive")
    cutoff = multiplier * omega_K
    if cutoff > bank.omega_max * (1.0 + 1e-12):
        raise ConfigError(
            f"cutoff {cutoff:g} exceeds the frequency grid (omega_max = {bank.omega_max:g})"
        )
    new = min(int(math.floor(cutoff * bank.N + 1e-9)), bank.n_max)
    old = bank.n_cutoff
    bank.n_cutoff = new
    return WindowChange(max(new - old, 0), max(old - new, 0), new, cutoff)
