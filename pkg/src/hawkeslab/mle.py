"""Maximum-likelihood fitting via the O(N) recurrence likelihood.

Fits the four-parameter power-law model (mu, n, epsilon, tau0) or the
three-parameter exponential model (mu, alpha, beta), optionally with the
intraday detrending profile.  The optimizer is a bounded Nelder-Mead
simplex on log-scaled coordinates with random restarts.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import Bounds, minimize

from ._plan import build_sweep_plan, run_sweep
from .core import (
    ApproxPowerLaw,
    EventSeries,
    ExponentialKernel,
    HawkesParams,
    IntradayProfile,
    exp_terms,
)
from .errors import DataError, DomainError, KernelConstructionError

__all__ = [
    "FitResult",
    "log_likelihood",
    "fit_powerlaw",
    "fit_exponential",
    "expected_excess_mu",
]

XATOL = 1e-4          # simplex diameter in normalized coordinates
MAX_FEV = 2000        # per restart
N_RESTARTS = 3
MIN_EVENTS = 1000     # below this, warn that estimates are unreliable


@dataclass(frozen=True)
class FitResult:
    """Outcome of one likelihood maximisation."""

    family: str
    params: HawkesParams
    theta: dict[str, float]
    loglik: float
    iterations: int
    converged: bool
    window: tuple[float, float]
    restarts: tuple[float, ...]
    n_events: int

    def __post_init__(self):
        if not np.isfinite(self.loglik):
            raise DataError("fit produced a non-finite log-likelihood")

    @property
    def n(self) -> float:
        return self.params.n

    def to_record(self) -> dict:
        """Flat dict matching the one-object-per-window JSON schema."""
        rec = {
            "window_start": self.window[0],
            "window_end": self.window[1],
            "family": self.family,
            "mu": self.theta["mu"],
            "n": self.n,
            "loglik": self.loglik,
            "converged": self.converged,
            "n_events": self.n_events,
        }
        for key in ("epsilon", "tau0", "alpha", "beta"):
            if key in self.theta:
                rec[key] = self.theta[key]
        return rec


def _check_series(series: EventSeries):
    ts = series.timestamps
    if ts.size == 0:
        raise DataError("cannot fit an empty event series")
    if np.any(np.diff(ts) <= 0):
        raise DataError("event series must be strictly increasing")
    return ts


def log_likelihood(series: EventSeries, params: HawkesParams,
                   profile: IntradayProfile | None = None,
                   profile_phase: float = 0.0,
                   end_time: float | None = None) -> float:
    """Exact log-likelihood over [0, T] (T = end of last session).

    Returns -inf if the intensity is non-positive at any event, which can
    only happen through the negative smoothing term of the approximate
    power-law kernel.
    """
    ts = _check_series(series)
    T = series.span if end_time is None else float(end_time)
    coeffs, scales = exp_terms(params.kernel)
    plan = build_sweep_plan(ts, T, profile, profile_phase)
    loglam, tstar, ok = run_sweep(plan, params.mu, coeffs, scales)
    if not ok:
        return -np.inf
    return float(loglam.sum() - tstar[-1])


def _run_simplex(objective, x0, bounds, rng, restarts, max_fev, jitter):
    starts = [np.asarray(x0, dtype=np.float64)]
    lo, hi = bounds.lb, bounds.ub
    for _ in range(restarts):
        x = x0 + rng.uniform(-1.0, 1.0, len(x0)) * jitter
        starts.append(np.clip(x, lo + 1e-6, hi - 1e-6))
    results = []
    for start in starts:
        res = minimize(
            objective, start, method="Nelder-Mead", bounds=bounds,
            options={"xatol": XATOL, "fatol": 0.25, "maxfev": max_fev,
                     "maxiter": max_fev},
        )
        results.append(res)
    return results


def _pick_best(results, n_of):
    """Highest loglik wins; ties within 1e-9 go to the smaller n-hat."""
    best = None
    for res in results:
        if best is None:
            best = res
            continue
        if res.fun < best.fun - 1e-9:
            best = res
        elif abs(res.fun - best.fun) <= 1e-9 and n_of(res.x) < n_of(best.x):
            best = res
    return best


def fit_powerlaw(series: EventSeries,
                 profile: IntradayProfile | None = None,
                 init: tuple[float, float, float, float] | None = None,
                 m: float = 5.0, M: int = 15,
                 restarts: int = N_RESTARTS, seed: int = 0,
                 profile_phase: float = 0.0,
                 max_fev: int = MAX_FEV) -> FitResult:
    """Maximise the likelihood over theta = (mu, n, epsilon, tau0).

    mu and tau0 are optimized in log-space; n stays free up to 2 so
    criticality is measured rather than imposed.  ``init`` overrides the
    default starting point (a theta tuple in natural units).
    """
    ts = _check_series(series)
    N = ts.size
    if N < MIN_EVENTS:
        warnings.warn(
            f"only {N} events; parameter estimates are unreliable below "
            f"{MIN_EVENTS}", stacklevel=2)
    T = series.span
    rate = N / T
    plan = build_sweep_plan(ts, T, profile, profile_phase)

    lb = np.array([np.log(rate * 1e-8), 0.0, 1e-3,
                   np.log(max(series.resolution / 10.0, 1e-12))])
    ub = np.array([np.log(rate * 1e2), 2.0, 0.999, np.log(1e3)])
    bounds = Bounds(lb, ub)

    if init is None:
        tau0_guess = float(np.clip(10.0 * np.median(np.diff(ts)),
                                   np.exp(lb[3]) * 1.01, np.exp(ub[3]) * 0.99))
        init = (rate / 2.0, 0.5, 0.2, tau0_guess)
    x0 = np.array([np.log(init[0]), init[1], init[2], np.log(init[3])])
    x0 = np.clip(x0, lb + 1e-9, ub - 1e-9)

    def objective(x):
        try:
            kernel = ApproxPowerLaw(n=x[1], epsilon=x[2], tau0=np.exp(x[3]),
                                    m=m, M=M)
        except KernelConstructionError:
            return np.inf
        coeffs, scales = kernel._terms()
        loglam, tstar, ok = run_sweep(plan, np.exp(x[0]), coeffs, scales)
        if not ok:
            return np.inf
        return tstar[-1] - loglam.sum()

    rng = np.random.default_rng(seed)
    results = _run_simplex(objective, x0, bounds, rng, restarts, max_fev,
                           jitter=np.array([0.7, 0.25, 0.1, 0.7]))
    best = _pick_best(results, n_of=lambda x: x[1])
    mu, n, eps, tau0 = np.exp(best.x[0]), best.x[1], best.x[2], np.exp(best.x[3])
    params = HawkesParams(mu=mu, kernel=ApproxPowerLaw(n, eps, tau0, m, M))
    return FitResult(
        family="powerlaw", params=params,
        theta={"mu": mu, "n": n, "epsilon": eps, "tau0": tau0},
        loglik=-best.fun, iterations=int(best.nit),
        converged=bool(best.success), window=(0.0, T),
        restarts=tuple(-r.fun for r in results), n_events=N,
    )


def fit_exponential(series: EventSeries,
                    init: tuple[float, float, float] | None = None,
                    profile: IntradayProfile | None = None,
                    restarts: int = N_RESTARTS, seed: int = 0,
                    profile_phase: float = 0.0,
                    max_fev: int = MAX_FEV) -> FitResult:
    """Maximise the likelihood over theta = (mu, alpha, beta)."""
    ts = _check_series(series)
    N = ts.size
    if N < MIN_EVENTS:
        warnings.warn(
            f"only {N} events; parameter estimates are unreliable below "
            f"{MIN_EVENTS}", stacklevel=2)
    T = series.span
    rate = N / T
    median_dt = float(np.median(np.diff(ts))) if N > 1 else T
    plan = build_sweep_plan(ts, T, profile, profile_phase)

    lb = np.array([np.log(rate * 1e-8), np.log(rate * 1e-8),
                   np.log(1e-2 / T)])
    ub = np.array([np.log(rate * 1e2), np.log(1e7), np.log(1e7)])
    bounds = Bounds(lb, ub)

    if init is None:
        beta0 = 1.0 / (10.0 * median_dt)
        init = (rate / 2.0, 0.5 * beta0, beta0)
    x0 = np.clip(np.log(np.asarray(init, dtype=np.float64)),
                 lb + 1e-9, ub - 1e-9)

    def objective(x):
        alpha, beta = np.exp(x[1]), np.exp(x[2])
        coeffs = np.array([alpha])
        scales = np.array([1.0 / beta])
        loglam, tstar, ok = run_sweep(plan, np.exp(x[0]), coeffs, scales)
        if not ok:
            return np.inf
        return tstar[-1] - loglam.sum()

    rng = np.random.default_rng(seed)
    results = _run_simplex(objective, x0, bounds, rng, restarts, max_fev,
                           jitter=np.array([0.7, 0.7, 0.7]))
    best = _pick_best(results, n_of=lambda x: np.exp(x[1] - x[2]))
    mu, alpha, beta = np.exp(best.x)
    params = HawkesParams(mu=mu, kernel=ExponentialKernel(alpha, beta))
    return FitResult(
        family="exponential", params=params,
        theta={"mu": mu, "alpha": alpha, "beta": beta},
        loglik=-best.fun, iterations=int(best.nit),
        converged=bool(best.success), window=(0.0, T),
        restarts=tuple(-r.fun for r in results), n_events=N,
    )


def expected_excess_mu(epsilon: float, tau0: float, window_length: float) -> float:
    """Predicted spurious base-intensity fraction on a finite fit window.

    When a critical power-law process is fitted on a window of length T
    without its prior history, the kernel mass reaching in from the
    unobserved past shows up as base intensity; the predicted fraction of
    the mean rate is eps * (tau0 / T)**eps.
    """
    if epsilon < 0:
        raise DomainError("epsilon must be non-negative")
    if tau0 < 0 or window_length <= 0:
        raise DomainError("tau0 and window_length must be positive")
    if epsilon == 0.0 or tau0 == 0.0:
        return 0.0
    if window_length <= tau0:
        raise DomainError("window_length must exceed tau0")
    return float(epsilon * (tau0 / window_length) ** epsilon)
