"""Numba hot loops: Ogata thinning and the O(N) intensity sweep.

Both kernels operate on the sum-of-exponentials decomposition
phi(tau) = sum_k coeffs[k] * exp(-tau / scales[k]); one decaying
accumulator per term makes every step O(K) instead of O(events).
"""

from __future__ import annotations

import numpy as np
from numba import njit

# thinning_simulate status codes
OK = 0
EXPLODED = 1


@njit(cache=True, nogil=True)
def thinning_simulate(rng, mu, coeffs, scales, a_init, horizon,
                      weights, bin_width, day_length, w_min, max_events):
    """Exact thinning on [0, horizon].

    The dominating rate is the positive-exponential part of the intensity
    divided by the smallest profile weight: the positive part only decays
    between events and 1/w(t) <= 1/w_min, so the bound is exact.  The
    negative smoothing term is included when scoring candidates.

    weights/bin_width/day_length describe the periodic detrending profile;
    a single weight of 1.0 means no detrending.  Returns (times, status).
    """
    K = coeffs.shape[0]
    A = a_init.copy()
    cap = 1024
    out = np.empty(cap, np.float64)
    n = 0
    t = 0.0
    flat = weights.shape[0] == 1
    while True:
        lam_pos = mu
        for k in range(K):
            if coeffs[k] > 0.0:
                lam_pos += coeffs[k] * A[k]
        lam_bar = lam_pos / w_min
        if lam_bar <= 0.0:
            break
        dt = rng.exponential(1.0 / lam_bar)
        tc = t + dt
        if tc <= t:  # zero-probability but numerically possible tie
            tc = np.nextafter(t, np.inf)
            dt = tc - t
        if tc > horizon:
            break
        for k in range(K):
            A[k] *= np.exp(-dt / scales[k])
        t = tc
        if flat:
            w = weights[0]
        else:
            idx = int((tc % day_length) / bin_width)
            if idx >= weights.shape[0]:
                idx = weights.shape[0] - 1
            w = weights[idx]
        lam = mu
        for k in range(K):
            lam += coeffs[k] * A[k]
        lam /= w
        if lam > 0.0 and rng.random() * lam_bar <= lam:
            if n >= max_events:
                return out[:n], EXPLODED
            if n == cap:
                cap *= 2
                tmp = np.empty(cap, np.float64)
                tmp[:n] = out[:n]
                out = tmp
            out[n] = tc
            n += 1
            for k in range(K):
                A[k] += w
    return out[:n], OK


@njit(cache=True, nogil=True)
def sweep(dt, kind, inv_w, w_ev, mu, coeffs, scales, a_init):
    """Single pass over merged checkpoints (events + profile-bin edges).

    dt[j] is the gap from the previous checkpoint, kind[j] is 1 for an
    event and 0 for a weight change, inv_w[j] is 1/w on the interval
    ending at checkpoint j, w_ev[i] is the weight multiplying event i's
    future influence.  Returns (log lambda at events, compensator at each
    event and at T, ok flag); ok drops to 0 if any event intensity is
    non-positive.
    """
    K = coeffs.shape[0]
    A = a_init.copy()
    nev = w_ev.shape[0]
    loglam = np.empty(nev, np.float64)
    tstar = np.empty(nev + 1, np.float64)
    comp = 0.0
    ie = 0
    ok = 1
    for j in range(dt.shape[0]):
        d = dt[j]
        if d > 0.0:
            inc = mu * d
            for k in range(K):
                em1 = np.expm1(-d / scales[k])
                inc -= coeffs[k] * A[k] * scales[k] * em1
                A[k] *= 1.0 + em1
            comp += inc * inv_w[j]
        if kind[j] == 1:
            lam = mu
            for k in range(K):
                lam += coeffs[k] * A[k]
            lam *= inv_w[j]
            if lam <= 0.0:
                ok = 0
                lam = 1e-300
            loglam[ie] = np.log(lam)
            tstar[ie] = comp
            wv = w_ev[ie]
            for k in range(K):
                A[k] += wv
            ie += 1
    tstar[nev] = comp
    return loglam, tstar, ok
