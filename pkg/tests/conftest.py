"""Shared oracles and helpers.

The oracles here are deliberately independent of the package's fast
paths: the likelihood oracle is a direct double loop over event pairs
with closed-form per-event kernel integrals, and kernel mass is checked
by adaptive quadrature of pointwise evaluations.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from hawkeslab.core import kernel_cumulative, kernel_eval


def oracle_loglik(times, T, params, profile=None, phase=0.0):
    """O(N^2) log-likelihood: direct intensity sums, per-segment
    compensator from the closed-form cumulative kernel."""
    mu = params.mu
    k = params.kernel
    if profile is None:
        w_ev = np.ones(times.size)
        inv_w_at = lambda t: 1.0
        seg_edges = np.array([0.0, T])
    else:
        w_ev = np.asarray(profile.weight_at(times, phase))
        inv_w_at = lambda t: 1.0 / profile.weight_at(t, phase)
        bw = profile.bin_width
        first = (np.floor(phase / bw) + 1.0) * bw - phase
        edges = np.arange(first, T, bw)
        seg_edges = np.concatenate([[0.0], edges[edges > 0], [T]])
    ll = 0.0
    for i, t in enumerate(times):
        lam = mu + np.sum(w_ev[:i] * kernel_eval(k, t - times[:i]))
        ll += np.log(lam * inv_w_at(t))
    comp = 0.0
    for a, b in zip(seg_edges[:-1], seg_edges[1:]):
        inv_w = inv_w_at(0.5 * (a + b))
        comp += mu * (b - a) * inv_w
        for j, tj in enumerate(times):
            if tj >= b:
                break
            lo = max(a, tj)
            comp += w_ev[j] * inv_w * (
                kernel_cumulative(k, b - tj) - kernel_cumulative(k, lo - tj))
    return ll - comp


def quad_kernel_mass(kernel, upper):
    """Adaptive quadrature of phi over [0, upper], split on log segments."""
    tau0 = getattr(kernel, "tau0", 1.0 / getattr(kernel, "beta", 1.0))
    knots = np.concatenate([
        [0.0],
        np.geomspace(tau0 * 1e-4, min(tau0 * 1e10, upper), 30),
    ])
    knots = np.unique(np.clip(knots, 0.0, upper))
    if knots[-1] < upper:
        knots = np.append(knots, upper)
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        val, _ = quad(lambda t: kernel_eval(kernel, t), a, b,
                      epsabs=1e-13, epsrel=1e-10, limit=200)
        total += val
    return total


def random_approx_kernel(rng, M=15):
    import hawkeslab as hl

    return hl.ApproxPowerLaw(
        n=rng.uniform(0.1, 1.5),
        epsilon=rng.uniform(0.05, 0.8),
        tau0=10.0 ** rng.uniform(-4, 0),
        m=rng.uniform(2.0, 8.0),
        M=M,
    )


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20130301)
