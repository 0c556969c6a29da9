"""Coarse sampling of the field coefficients and 5-point Lagrange interpolation.

The coefficient sums are sampled on the grid t_k = k * dts with
dts = 2 pi N / M, so that omega_n t_k = 2 pi n k / M and one real inverse FFT
of length M yields a full period of exact samples. M is the smallest fast FFT
length giving at least ``samples_per_period`` samples per period of the
highest admitted mode. Twenty channels are kept: the fourteen electric-field
sums and the six vector-potential sums (antisymmetric linear part and the
quadratic part) that build the field tensor.

When a full period is too long to be worth transforming (the window usually
moves again long before the period is used up), samples are produced in
blocks aligned to absolute grid indices by a chirp-z transform whose cost
scales with the block length and the number of modes rather than with M.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.fft

from .bank import ModeBank
from .fields import LINEAR_FACTOR, QUADRATIC_FACTOR, FieldCoefficients
from .lambdas import ANTISYMMETRIC

N_CHANNELS = 20
# channel slices
E_T0 = slice(0, 3)
E_LAM = slice(3, 11)
E_Q = slice(11, 14)
A_LAM_ANTI = slice(14, 17)
A_Q = slice(17, 20)

STENCIL_HALF = 2


class ExtrapolationError(ValueError):
    """A time outside the sampled span was requested."""


def lagrange5_weights(s: float) -> np.ndarray:
    """Weights of nodes -2..2 for a query at offset s (in sample units) from the centre node."""
    s2 = s * s
    return np.array(
        [
            s * (s2 - 1.0) * (s - 2.0) / 24.0,
            -s * (s - 1.0) * (s2 - 4.0) / 6.0,
            (s2 - 1.0) * (s2 - 4.0) / 4.0,
            -s * (s + 1.0) * (s2 - 4.0) / 6.0,
            s * (s2 - 1.0) * (s + 2.0) / 24.0,
        ]
    )


def lagrange5(values, t0: float, dt: float, t: float):
    """Interpolate samples values[k] taken at t0 + k dt (last axis is time)."""
    values = np.asarray(values)
    u = (t - t0) / dt
    k = int(math.floor(u + 0.5))
    if k - STENCIL_HALF < 0 or k + STENCIL_HALF >= values.shape[-1]:
        raise ExtrapolationError(f"t = {t} outside sampled span")
    w = lagrange5_weights(u - k)
    return values[..., k - 2 : k + 3] @ w


def grid_length(n_cutoff: int, samples_per_period: float) -> int:
    target = max(int(math.ceil(samples_per_period * n_cutoff)), 2 * n_cutoff + 2, 16)
    return scipy.fft.next_fast_len(target, real=True)


def channel_spectra(bank: ModeBank) -> np.ndarray:
    """Complex mode weights c such that channel(t) = Re sum_n c_n exp(i omega_n t).

    Returns an array of shape (20, n_cutoff).
    """
    n = bank.n_cutoff
    omega = bank.frequencies(n)
    amp = bank.amplitudes(n)
    A, B = bank.ab(n)
    beta1, beta2 = bank.beta(n)
    # X cos + Y sin = Re[(X - iY) e^{i omega t}]
    # E-channels: X' = -Y, Y' = X, amplitude times omega
    ae = (amp * omega)[:, None]
    lin = omega[:, None] * LINEAR_FACTOR
    quad = omega[:, None] ** 2 * QUADRATIC_FACTOR
    a0 = amp[:, None]
    anti = list(ANTISYMMETRIC)
    out = np.empty((N_CHANNELS, n), dtype=complex)
    out[E_T0] = (ae * (-A - 1j * B)).T
    out[E_LAM] = (ae * lin * (-beta2 - 1j * beta1)).T
    out[E_Q] = (ae * quad * (-A - 1j * B)).T
    out[A_LAM_ANTI] = (a0 * lin * (beta1[:, anti] - 1j * beta2[:, anti])).T
    out[A_Q] = (a0 * quad * (B - 1j * A)).T
    return out


class ChirpZ:
    """Re sum_{n=1}^{n_modes} c_n exp(2 pi i n k / M) for K consecutive k (Bluestein's algorithm).

    The chirp phases pi j^2 / M are reduced modulo 2 pi in integer arithmetic
    before exponentiation, so the result keeps FFT accuracy even when j^2 / M
    is large; ``scipy.signal.CZT`` forms them as powers of a complex number and
    loses about nine digits at the sizes used here.
    """

    def __init__(self, n_modes: int, K: int, M: int):
        self.n_in = n_modes + 1
        self.K = int(K)
        self.M = int(M)
        self.L = scipy.fft.next_fast_len(self.n_in + self.K - 1)
        self.b_in = self._chirp(np.arange(self.n_in))
        self.b_out = self._chirp(np.arange(self.K))
        kernel = np.zeros(self.L, dtype=complex)
        kernel[: self.K] = np.conj(self.b_out)
        kernel[self.L - self.n_in + 1 :] = np.conj(self._chirp(np.arange(self.n_in - 1, 0, -1)))
        self.kernel_ft = scipy.fft.fft(kernel)

    def _chirp(self, j) -> np.ndarray:
        j = np.asarray(j, dtype=np.int64)
        return np.exp(1j * math.pi * ((j * j) % (2 * self.M)) / self.M)

    def __call__(self, spectra: np.ndarray, k_first: int) -> np.ndarray:
        """Samples k_first .. k_first+K-1 of every row of ``spectra`` (shape (channels, n_modes))."""
        n = np.arange(self.n_in, dtype=np.int64)
        shift = np.exp(2j * math.pi * ((n * (k_first % self.M)) % self.M) / self.M)
        x = np.zeros((spectra.shape[0], self.n_in), dtype=complex)
        x[:, 1:] = spectra
        x *= shift * self.b_in
        y = scipy.fft.ifft(scipy.fft.fft(x, n=self.L, axis=-1) * self.kernel_ft, axis=-1)
        return (y[:, : self.K] * self.b_out).real


MIN_BLOCK = 4096
BLOCK_PAD = 64  # samples past the block end, so that a step starting inside it always fits


class FieldSampler:
    """Exact coefficient samples for the bank's current window.

    A full period of M samples is computed with inverse FFTs and cached when
    M is small compared with one block; otherwise tracks are blocks of
    ``block`` samples starting at multiples of ``block``, computed with
    :class:`ChirpZ`. Either way the samples depend only on the window and the
    grid, not on when they were requested.
    """

    def __init__(self, bank: ModeBank, samples_per_period: float = 27.0, max_chunk_samples: int = 1 << 20):
        if samples_per_period < 25:
            raise ValueError("need at least 25 samples per period of the highest mode")
        self.n_cutoff = bank.n_cutoff
        self.M = grid_length(self.n_cutoff, samples_per_period)
        self.dts = 2.0 * math.pi * bank.N / self.M
        self.max_chunk_samples = int(max_chunk_samples)
        self.block = max(16, min(self.max_chunk_samples, max(MIN_BLOCK, self.n_cutoff // 2)))
        self._spectra = channel_spectra(bank)
        self._period = None
        self._zooms: dict[int, ChirpZ] = {}
        if self.M <= min(self.max_chunk_samples, 8 * self.block):
            # one period with 2 wrapped samples in front and 3 behind, so that a
            # track over [base - 2, base + M + 2] needs no copy
            ext = np.empty((N_CHANNELS, self.M + 5))
            self._transform_into(ext[:, 2 : self.M + 2])
            ext[:, :2] = ext[:, self.M : self.M + 2]
            ext[:, self.M + 2 :] = ext[:, 2:5]
            self._period = ext

    @property
    def cached(self) -> bool:
        return self._period is not None

    def _transform_into(self, out) -> None:
        n = self.n_cutoff
        M = self.M
        spec = np.zeros(M // 2 + 1, dtype=complex)
        for c in range(N_CHANNELS):
            spec[1 : n + 1] = 0.5 * M * self._spectra[c]
            out[c] = scipy.fft.irfft(spec, n=M)

    def _zoom(self, k_first: int, length: int) -> np.ndarray:
        zoom = self._zooms.get(length)
        if zoom is None:
            zoom = self._zooms[length] = ChirpZ(self.n_cutoff, length, self.M)
        return zoom(self._spectra, k_first)

    def samples(self, k_first: int, length: int) -> np.ndarray:
        """Samples for absolute indices k_first .. k_first+length-1, shape (20, length)."""
        if self._period is not None:
            index = np.arange(k_first, k_first + length) % self.M
            return self._period[:, index + 2]
        return self._zoom(k_first, length)

    def chunk_length(self) -> int:
        if self._period is not None:
            return self.M + 2 * STENCIL_HALF + 1
        return self.block + 2 * STENCIL_HALF + 1 + BLOCK_PAD

    def track(self, t_start: float, length: int | None = None) -> "CoefficientTrack":
        """Samples covering t_start onwards.

        Without an explicit length the track is the cached period, or the
        aligned block, containing t_start.
        """
        k = int(math.floor(t_start / self.dts + 0.5))
        if length is None:
            if self._period is not None:
                base = (k // self.M) * self.M
                return CoefficientTrack(self._period, base - STENCIL_HALF, self.dts, self.n_cutoff)
            k_first = (k // self.block) * self.block - STENCIL_HALF
            return CoefficientTrack(self.samples(k_first, self.chunk_length()), k_first, self.dts, self.n_cutoff)
        k_first = k - STENCIL_HALF
        return CoefficientTrack(self.samples(k_first, length), k_first, self.dts, self.n_cutoff)


class CoefficientTrack:
    """Samples for a contiguous block of absolute grid indices with interpolation."""

    def __init__(self, tables: np.ndarray, k_first: int, dts: float, window_modes: int):
        self.tables = np.ascontiguousarray(tables)
        self.k_first = int(k_first)
        self.dts = float(dts)
        self.window_modes = int(window_modes)

    @property
    def t_first(self) -> float:
        return self.k_first * self.dts

    @property
    def t_last(self) -> float:
        return (self.k_first + self.tables.shape[1] - 1) * self.dts

    def covers(self, t: float) -> bool:
        k = int(math.floor(t / self.dts + 0.5))
        return k - STENCIL_HALF >= self.k_first and k + STENCIL_HALF < self.k_first + self.tables.shape[1]

    def channels(self, t: float) -> np.ndarray:
        u = t / self.dts
        k = int(math.floor(u + 0.5))
        lo = k - STENCIL_HALF - self.k_first
        if lo < 0 or lo + 5 > self.tables.shape[1]:
            raise ExtrapolationError(
                f"t = {t} outside sampled span [{self.t_first}, {self.t_last}]"
            )
        return self.tables[:, lo : lo + 5] @ lagrange5_weights(u - k)

    def coefficients(self, t: float) -> tuple[FieldCoefficients, FieldCoefficients]:
        """Interpolated (E-kind, partial A-kind) coefficients at t.

        The A-kind object only carries the antisymmetric linear sums and the
        quadratic sums; its T0 and symmetric linear entries are zero.
        """
        ch = self.channels(t)
        e = FieldCoefficients(np.asarray(t), ch[E_T0], ch[E_LAM], ch[E_Q], "E")
        lam = np.zeros(8)
        lam[list(ANTISYMMETRIC)] = ch[A_LAM_ANTI]
        a = FieldCoefficients(np.asarray(t), np.zeros(3), lam, ch[A_Q], "A")
        return e, a

    def fields(self, r, t: float, zalpha: float) -> tuple[np.ndarray, np.ndarray]:
        r = np.asarray(r, dtype=float)
        e, a = self.coefficients(t)
        return e.assemble(zalpha * r), a.field_tensor(r, zalpha)


def sample_and_interpolate(
    bank: ModeBank, t_start: float, t_stop: float, samples_per_period: float = 27.0
) -> CoefficientTrack:
    """Coefficient track covering [t_start, t_stop] for the bank's current window."""
    sampler = FieldSampler(bank, samples_per_period, max_chunk_samples=1 << 30)
    k0 = int(math.floor(t_start / sampler.dts + 0.5)) - STENCIL_HALF
    k1 = int(math.floor(t_stop / sampler.dts + 0.5)) + STENCIL_HALF
    return CoefficientTrack(sampler.samples(k0, k1 - k0 + 1), k0, sampler.dts, bank.n_cutoff)
