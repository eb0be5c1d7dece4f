"""Hot loops, each in a numba flavour and a pure-numpy flavour.

The public names (``majorant_series``, ``lattice_partial_sum``,
``lindley_waiting``) pick the numba version when ``_accel.USE_NUMBA`` is set
and fall back to numpy otherwise.  Both flavours are importable under
``*_numba`` / ``*_numpy`` so tests and the benchmark can compare them.
"""
from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import njit

# -- majorant series --------------------------------------------------------
#
# K! * M(t) = sum_{n<N} e^{-n w} sum_{k=1}^{K+1} c_k S(t)/(t-n)^k
#             + sum_{k=1}^{K} d_k S(t)/t^k,          S(t) = (sin(pi t)/pi)^{K+1}
#
# With j = round(t), d = t - j, S(t) = (d * sinc(d))^{K+1} because K+1 is
# even, so the term whose pole sits at j becomes d^{K+1-k} sinc(d)^{K+1}
# and no cancellation between a pole and a zero of sin is ever evaluated.


def majorant_series_numpy(t, c, dcoef, decay, nterms):
    """K!-scaled majorant at real or complex ``t`` (vectorised over ``t``).

    c[k-1], k = 1..K+1: series coefficients; dcoef[k-1], k = 1..K: coefficients
    of the t^-k terms; decay = omega; nterms: number of n-terms kept.
    """
    t = np.asarray(t)
    kp1 = c.shape[0]
    j = np.round(t.real)
    d = t - j
    pd = np.pi * d
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(np.abs(pd) < 1e-8, 1.0 - pd * pd / 6.0, np.sin(pd) / pd)
    spow = sinc ** kp1
    S = (d * sinc) ** kp1
    total = np.zeros_like(t, dtype=np.result_type(t, float))
    for n in range(nterms):
        w = math.exp(-n * decay)
        at = j == n
        x = np.where(at, 1.0, t - n)
        acc = np.zeros_like(total)
        for k in range(1, kp1 + 1):
            near = d ** (kp1 - k) * spow
            acc = acc + c[k - 1] * np.where(at, near, S / x**k)
        total = total + w * acc
    at0 = j == 0
    x0 = np.where(at0, 1.0, t)
    for k in range(1, kp1):
        near = d ** (kp1 - k) * spow
        total = total + dcoef[k - 1] * np.where(at0, near, S / x0**k)
    return total


@njit
def _majorant_series_nb(t, c, dcoef, decay, nterms):
    kp1 = c.shape[0]
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        ti = t[i]
        j = np.round(ti)
        d = ti - j
        pd = np.pi * d
        if abs(pd) < 1e-8:
            sinc = 1.0 - pd * pd / 6.0
        else:
            sinc = math.sin(pd) / pd
        spow = sinc ** kp1
        S = (d * sinc) ** kp1
        total = 0.0
        w = 1.0
        ew = math.exp(-decay)
        for n in range(nterms):
            if n > 0:
                w = math.exp(-n * decay) if n % 64 == 0 else w * ew
            acc = 0.0
            if j == n:
                for k in range(1, kp1 + 1):
                    acc += c[k - 1] * d ** (kp1 - k) * spow
            else:
                x = ti - n
                inv = 1.0 / x
                p = inv
                for k in range(1, kp1 + 1):
                    acc += c[k - 1] * S * p
                    p *= inv
            total += w * acc
        if j == 0:
            for k in range(1, kp1):
                total += dcoef[k - 1] * d ** (kp1 - k) * spow
        else:
            inv = 1.0 / ti
            p = inv
            for k in range(1, kp1):
                total += dcoef[k - 1] * S * p
                p *= inv
        out[i] = total
    return out


def majorant_series_numba(t, c, dcoef, decay, nterms):
    t = np.asarray(t, dtype=np.float64)
    shape = t.shape  # before ascontiguousarray, which lifts 0-d to 1-d
    out = _majorant_series_nb(np.ascontiguousarray(t.ravel()), np.ascontiguousarray(c, dtype=np.float64),
                              np.ascontiguousarray(dcoef, dtype=np.float64),
                              float(decay), int(nterms))
    return out.reshape(shape)


def majorant_series(t, c, dcoef, decay, nterms):
    t = np.asarray(t)
    if _accel.USE_NUMBA and not np.iscomplexobj(t):
        return majorant_series_numba(t, c, dcoef, decay, nterms)
    return majorant_series_numpy(t, c, dcoef, decay, nterms)


# -- lattice sum ------------------------------------------------------------


def lattice_partial_sum_numpy(t, power, nmax):
    """sum_{|n| <= nmax} (t - n)^-power, smallest terms first."""
    n = np.arange(nmax, 0, -1, dtype=np.float64)
    terms = (t - n) ** (-power) + (t + n) ** (-power)
    return float(np.sum(terms) + t ** (-power))


@njit
def _lattice_nb(t, power, nmax):
    s = 0.0
    comp = 0.0
    for m in range(nmax, 0, -1):
        term = (t - m) ** (-power) + (t + m) ** (-power)
        y = term - comp
        tot = s + y
        comp = (tot - s) - y
        s = tot
    return s + t ** (-power)


def lattice_partial_sum_numba(t, power, nmax):
    return float(_lattice_nb(float(t), int(power), int(nmax)))


def lattice_partial_sum(t, power, nmax):
    if _accel.USE_NUMBA:
        return lattice_partial_sum_numba(t, power, nmax)
    return lattice_partial_sum_numpy(t, power, nmax)


# -- Lindley recursion ------------------------------------------------------


def lindley_waiting_numpy(increments, w0=0.0):
    """W_0 = w0, W_{k+1} = max(0, W_k + increments[k]); returns W_0..W_{n-1}.

    Uses W_k = S_k - min(0, min_{i<=k} S_i) with S the running sum (w0 = 0),
    shifted for a non-zero start.
    """
    x = np.asarray(increments, dtype=np.float64)
    s = np.concatenate(([w0], w0 + np.cumsum(x[:-1])))
    floor = np.minimum.accumulate(np.minimum(s, 0.0))
    return s - floor


@njit
def _lindley_nb(x, w0):
    n = x.shape[0]
    out = np.empty(n)
    w = w0
    for k in range(n):
        out[k] = w
        w = w + x[k]
        if w < 0.0:
            w = 0.0
    return out


def lindley_waiting_numba(increments, w0=0.0):
    return _lindley_nb(np.ascontiguousarray(increments, dtype=np.float64), float(w0))


def lindley_waiting(increments, w0=0.0):
    if _accel.USE_NUMBA:
        return lindley_waiting_numba(increments, w0)
    return lindley_waiting_numpy(increments, w0)
