"""Compiled inner loop: equations of motion, field interpolation and the stepping driver.

State vector y = [r, p, S] (nine floats). Parameter vector
prm = [eps_p4, eps_so, beta_e, beta_b, beta2, floor] where each coupling is
already multiplied by its on/off toggle.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .lambdas import ANTISYMMETRIC, lambda_matrices

_LAMBDA = np.ascontiguousarray(lambda_matrices())
_ANTI = np.array(ANTISYMMETRIC, dtype=np.int64)

# status codes returned by advance()
STEPS_DONE = 0
T_END = 1
PUSH = 2
IONISED = 3
SINGULAR = 4
CHUNK_EXHAUSTED = 5
WINDOW_UPDATE = 6
OUTPUT_FULL = 7
T_WARN = 8
PAUSE = 9

STATUS_NAMES = {
    STEPS_DONE: "steps_done",
    T_END: "t_end",
    PUSH: "push",
    IONISED: "ionised",
    SINGULAR: "singular",
    CHUNK_EXHAUSTED: "chunk_exhausted",
    WINDOW_UPDATE: "window_update",
    OUTPUT_FULL: "output_full",
    T_WARN: "t_warn",
    PAUSE: "pause",
}

# integer state slots passed in/out of advance()
I_STEPS = 0  # total completed steps
I_SEG_LEFT = 1  # steps left in the current orbit segment (0 forces a new h)
I_NROWS = 2  # rows used in the output buffer
N_ISTATE = 3

# float state slots
F_T = 0
F_H = 1
F_PERIOD_REF = 2
N_FSTATE = 3

OUT_COLS = 8


@njit(cache=True)
def energy(y, prm):
    """Hamiltonian with p^4 and spin-orbit terms; nan if |r| is below the floor."""
    x0, x1, x2 = y[0], y[1], y[2]
    p0, p1, p2 = y[3], y[4], y[5]
    rn = math.sqrt(x0 * x0 + x1 * x1 + x2 * x2)
    if rn < prm[5]:
        return np.nan
    pp = p0 * p0 + p1 * p1 + p2 * p2
    L0 = x1 * p2 - x2 * p1
    L1 = x2 * p0 - x0 * p2
    L2 = x0 * p1 - x1 * p0
    LS = L0 * y[6] + L1 * y[7] + L2 * y[8]
    return 0.5 * pp - 1.0 / rn - prm[0] * pp * pp / 8.0 + 0.5 * prm[1] * LS / (rn * rn * rn)


@njit(cache=True)
def rhs(y, E, F, prm, out):
    """Time derivative of y; returns False if |r| is below the singularity floor."""
    eps_p4, eps_so, beta_e, beta_b, beta2, floor = prm[0], prm[1], prm[2], prm[3], prm[4], prm[5]
    x0, x1, x2 = y[0], y[1], y[2]
    p0, p1, p2 = y[3], y[4], y[5]
    s0, s1, s2 = y[6], y[7], y[8]
    r2 = x0 * x0 + x1 * x1 + x2 * x2
    rn = math.sqrt(r2)
    if rn < floor:
        return False
    ir3 = 1.0 / (r2 * rn)
    ir5 = ir3 / r2
    pp = p0 * p0 + p1 * p1 + p2 * p2
    L0 = x1 * p2 - x2 * p1
    L1 = x2 * p0 - x0 * p2
    L2 = x0 * p1 - x1 * p0
    LS = L0 * s0 + L1 * s1 + L2 * s2
    k = 0.5 * eps_so * ir3
    kin = 1.0 - 0.5 * eps_p4 * pp
    # rdot = dH/dp
    v0 = p0 * kin + k * (s1 * x2 - s2 * x1)
    v1 = p1 * kin + k * (s2 * x0 - s0 * x2)
    v2 = p2 * kin + k * (s0 * x1 - s1 * x0)
    # -dH/dr
    c = 1.5 * eps_so * LS * ir5 - ir3
    a0 = c * x0 + k * (s1 * p2 - s2 * p1)
    a1 = c * x1 + k * (s2 * p0 - s0 * p2)
    a2 = c * x2 + k * (s0 * p1 - s1 * p0)
    if beta_e != 0.0:
        a0 -= beta_e * E[0]
        a1 -= beta_e * E[1]
        a2 -= beta_e * E[2]
    if beta_b != 0.0:
        a0 -= beta_b * (F[0, 1] * v1 + F[0, 2] * v2)
        a1 -= beta_b * (F[1, 0] * v0 + F[1, 2] * v2)
        a2 -= beta_b * (F[2, 0] * v0 + F[2, 1] * v1)
    if beta2 != 0.0:
        rv = 3.0 * (x0 * v0 + x1 * v1 + x2 * v2) * ir5
        a0 += beta2 * (rv * x0 - v0 * ir3)
        a1 += beta2 * (rv * x1 - v1 * ir3)
        a2 += beta2 * (rv * x2 - v2 * ir3)
    out[0] = v0
    out[1] = v1
    out[2] = v2
    out[3] = a0
    out[4] = a1
    out[5] = a2
    out[6] = k * (L1 * s2 - L2 * s1)
    out[7] = k * (L2 * s0 - L0 * s2)
    out[8] = k * (L0 * s1 - L1 * s0)
    return True


@njit(cache=True)
def covers(k_first, n_samples, dts, t):
    k = int(math.floor(t / dts + 0.5))
    return k - 2 >= k_first and k + 2 < k_first + n_samples


@njit(cache=True)
def interp_channels(tables, k_first, dts, t, out):
    u = t / dts
    k = int(math.floor(u + 0.5))
    s = u - k
    s2 = s * s
    w0 = s * (s2 - 1.0) * (s - 2.0) / 24.0
    w1 = -s * (s - 1.0) * (s2 - 4.0) / 6.0
    w2 = (s2 - 1.0) * (s2 - 4.0) / 4.0
    w3 = -s * (s + 1.0) * (s2 - 4.0) / 6.0
    w4 = s * (s2 - 1.0) * (s + 2.0) / 24.0
    lo = k - 2 - k_first
    for c in range(tables.shape[0]):
        row = tables[c]
        out[c] = w0 * row[lo] + w1 * row[lo + 1] + w2 * row[lo + 2] + w3 * row[lo + 3] + w4 * row[lo + 4]


@njit(cache=True)
def assemble_fields(ch, r, za, E, F):
    """E at rbar = za r from channels 0..13, F at r from channels 14..19."""
    rb0, rb1, rb2 = za * r[0], za * r[1], za * r[2]
    rb2sum = rb0 * rb0 + rb1 * rb1 + rb2 * rb2
    rb = (rb0, rb1, rb2)
    q0, q1, q2 = ch[11], ch[12], ch[13]
    proj = q0 * rb0 + q1 * rb1 + q2 * rb2
    for i in range(3):
        acc = ch[i]
        for a in range(8):
            la = ch[3 + a]
            acc += la * (_LAMBDA[a, i, 0] * rb0 + _LAMBDA[a, i, 1] * rb1 + _LAMBDA[a, i, 2] * rb2)
        E[i] = acc + proj * rb[i] - 2.0 * ch[11 + i] * rb2sum
    za2 = 5.0 * za * za
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for m in range(3):
                acc += ch[14 + m] * _LAMBDA[_ANTI[m], i, j]
            F[i, j] = -2.0 * za * acc + za2 * (ch[17 + i] * r[j] - ch[17 + j] * r[i])


@njit(cache=True)
def _stage_fields(use_field, tables, k_first, dts, t, y, za, ch, E, F):
    if use_field:
        interp_channels(tables, k_first, dts, t, ch)
        assemble_fields(ch, y[:3], za, E, F)


@njit(cache=True)
def rk4_work(y, t, h, prm, use_field, tables, k_first, dts, za, ynew, work, ch, E, F):
    """One classical RK4 step using the scratch array ``work`` (5 x 9); False on a singularity."""
    k1 = work[0]
    k2 = work[1]
    k3 = work[2]
    k4 = work[3]
    tmp = work[4]
    _stage_fields(use_field, tables, k_first, dts, t, y, za, ch, E, F)
    if not rhs(y, E, F, prm, k1):
        return False
    for i in range(9):
        tmp[i] = y[i] + 0.5 * h * k1[i]
    _stage_fields(use_field, tables, k_first, dts, t + 0.5 * h, tmp, za, ch, E, F)
    if not rhs(tmp, E, F, prm, k2):
        return False
    for i in range(9):
        tmp[i] = y[i] + 0.5 * h * k2[i]
    _stage_fields(use_field, tables, k_first, dts, t + 0.5 * h, tmp, za, ch, E, F)
    if not rhs(tmp, E, F, prm, k3):
        return False
    for i in range(9):
        tmp[i] = y[i] + h * k3[i]
    _stage_fields(use_field, tables, k_first, dts, t + h, tmp, za, ch, E, F)
    if not rhs(tmp, E, F, prm, k4):
        return False
    for i in range(9):
        ynew[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return True


@njit(cache=True)
def rk4(y, t, h, prm, use_field, tables, k_first, dts, za, ynew):
    """One classical RK4 step; returns False on a singularity."""
    return rk4_work(
        y, t, h, prm, use_field, tables, k_first, dts, za, ynew,
        np.empty((5, 9)), np.empty(20), np.zeros(3), np.zeros((3, 3)),
    )


@njit(cache=True)
def _write_row(out, row, t, y, Ecur, window_modes):
    x0, x1, x2 = y[0], y[1], y[2]
    p0, p1, p2 = y[3], y[4], y[5]
    L0 = x1 * p2 - x2 * p1
    L1 = x2 * p0 - x0 * p2
    L2 = x0 * p1 - x1 * p0
    out[row, 0] = t
    out[row, 1] = Ecur
    out[row, 2] = math.sqrt(x0 * x0 + x1 * x1 + x2 * x2)
    out[row, 3] = math.sqrt(L0 * L0 + L1 * L1 + L2 * L2)
    out[row, 4] = L2
    out[row, 5] = math.sqrt(y[6] * y[6] + y[7] * y[7] + y[8] * y[8])
    out[row, 6] = (2.0 * abs(Ecur)) ** 1.5 if Ecur < 0.0 else 0.0
    out[row, 7] = window_modes


@njit(cache=True)
def advance(
    y, fstate, istate, prm, use_field, tables, k_first, dts, za,
    steps_per_orbit, stride, period_threshold, push_threshold, ionisation_threshold,
    t_end, t_pause, t_warn, max_steps, out, window_modes,
):
    """Step until an event needs Python attention; returns a status code.

    y, fstate and istate are updated in place. Rows of the time series are
    written into ``out``. A row is emitted after every ``stride``-th step and
    after the final clipped step that lands on t_end.
    """
    ynew = np.empty(9)
    work = np.empty((5, 9))
    ch = np.empty(20)
    E = np.zeros(3)
    F = np.zeros((3, 3))
    done = 0
    while True:
        t = fstate[F_T]
        if t >= t_end:
            return T_END
        if t >= t_pause:
            return PAUSE
        if t >= t_warn:
            return T_WARN
        if done >= max_steps:
            return STEPS_DONE
        if istate[I_NROWS] >= out.shape[0] - 1:
            return OUTPUT_FULL
        Ecur = energy(y, prm)
        if not (Ecur == Ecur):
            return SINGULAR
        period = 2.0 * math.pi / (2.0 * abs(Ecur)) ** 1.5
        if abs(period - fstate[F_PERIOD_REF]) > period_threshold * fstate[F_PERIOD_REF]:
            return WINDOW_UPDATE
        if istate[I_SEG_LEFT] <= 0:
            fstate[F_H] = period / steps_per_orbit
            istate[I_SEG_LEFT] = steps_per_orbit
        h = fstate[F_H]
        last = t + h >= t_end
        if last:
            h = t_end - t
        if use_field and not covers(k_first, tables.shape[1], dts, t + h):
            return CHUNK_EXHAUSTED
        if not rk4_work(y, t, h, prm, use_field, tables, k_first, dts, za, ynew, work, ch, E, F):
            return SINGULAR
        for i in range(9):
            y[i] = ynew[i]
        fstate[F_T] = t_end if last else t + h
        istate[I_STEPS] += 1
        istate[I_SEG_LEFT] -= 1
        done += 1
        Enew = energy(y, prm)
        if not (Enew == Enew):
            return SINGULAR
        if istate[I_STEPS] % stride == 0 or last:
            _write_row(out, istate[I_NROWS], fstate[F_T], y, Enew, window_modes)
            istate[I_NROWS] += 1
        if Enew < push_threshold:
            return PUSH
        if Enew > ionisation_threshold:
            return IONISED
