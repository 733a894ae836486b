"""Scripted multi-stage studies: intraday profiles, the exponential-kernel
misspecification bias replication, rolling fit campaigns and the
two-regime kernel splice."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ApproxPowerLaw,
    EventSeries,
    HawkesParams,
    IntradayProfile,
    SplicedPowerLaw,
)
from .errors import ConfigError, DataError, HawkesError, ProfileError
from .mle import FitResult, fit_exponential, fit_powerlaw
from .simulate import SimulationConfig, quantize_and_randomize, simulate

__all__ = [
    "IntradayProfile",
    "BiasStudyConfig",
    "BiasStudyRow",
    "build_profile",
    "fs_bias_study",
    "rolling_fit_campaign",
    "spliced_kernel",
    "default_tau0_schedule",
]


def build_profile(series: EventSeries, bin_width: float = 300.0) -> IntradayProfile:
    """Average time-of-day event rate across sessions, inverted to weights.

    Sessions must share a common duration that is a whole number of bins.
    An empty bin cannot be inverted and raises a profile error.
    """
    bounds = series.session_bounds
    if len(bounds) < 20:
        raise DataError(
            f"profile estimation needs at least 20 sessions, got {len(bounds)}")
    durations = np.array([b - a for a, b in bounds])
    if np.ptp(durations) > 1e-6 * durations[0]:
        raise ConfigError("sessions must have equal length to build a profile")
    day = float(durations[0])
    n_bins = int(round(day / bin_width))
    if abs(n_bins * bin_width - day) > 1e-6 * day or n_bins < 1:
        raise ConfigError("bin_width must divide the session length")
    counts = np.zeros(n_bins)
    ts = series.timestamps
    for a, b in bounds:
        lo, hi = np.searchsorted(ts, [a, b + 1e-12])
        offs = ts[lo:hi] - a
        idx = np.minimum((offs / bin_width).astype(np.int64), n_bins - 1)
        counts += np.bincount(idx, minlength=n_bins)
    if np.any(counts == 0):
        empty = int(np.flatnonzero(counts == 0)[0])
        raise ProfileError(
            f"time-of-day bin {empty} has no events; cannot invert its rate")
    rates = counts / (len(bounds) * bin_width)
    return IntradayProfile.from_rates(bin_width, rates)


# ---------------------------------------------------------------------------
# Misspecification-bias replication
# ---------------------------------------------------------------------------

def default_tau0_schedule(n_periods: int = 14, tau0_start: float = 1.0,
                          tau0_end: float = 1e-3) -> tuple[tuple[str, float], ...]:
    """Geometric cut-off schedule standing in for the drifting estimates."""
    taus = np.geomspace(tau0_start, tau0_end, n_periods)
    return tuple((f"period-{i:02d}", float(t)) for i, t in enumerate(taus))


@dataclass(frozen=True)
class BiasStudyConfig:
    """Ensemble study: critical power-law data fit with an exponential
    kernel on short randomized windows, one cut-off per period."""

    base_mu: float = 0.02
    base_epsilon: float = 0.15
    base_n: float = 1.0
    tau0_schedule: tuple[tuple[str, float], ...] = field(
        default_factory=default_tau0_schedule)
    ensemble_size: int = 100
    window: float = 1800.0
    randomisation_grid: float = 1.0
    base_seed: int = 0
    horizon_factor: float = 6.0
    m: float = 5.0
    M: int = 15

    def __post_init__(self):
        if self.ensemble_size < 1:
            raise ConfigError("ensemble_size must be at least 1")
        if self.window <= 0:
            raise ConfigError("window must be positive")
        if self.horizon_factor < 2.0:
            raise ConfigError("horizon_factor must leave room for warm-up")


@dataclass(frozen=True)
class BiasStudyRow:
    period: str
    tau0: float
    mean_n: float
    std_n: float
    n_values: tuple[float, ...]
    n_failed: int


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(parts).generate_state(1, np.uint64)[0])


def fs_bias_study(config: BiasStudyConfig,
                  fit_kind: str = "exponential") -> list[BiasStudyRow]:
    """Run the windowed-fit ensemble for every period of the schedule.

    Each realisation simulates a critical power-law process for a few
    multiples of the window (the first half of the horizon serves as
    warm-up), draws one window uniformly from the second half, randomizes
    timestamps on the study grid, and fits the exponential kernel.
    Realisation seeds depend only on the realisation index, so periods
    share common random numbers.  Failed fits are excluded and counted.
    """
    if fit_kind not in ("exponential", "powerlaw"):
        raise ConfigError("fit_kind must be 'exponential' or 'powerlaw'")
    horizon = config.horizon_factor * config.window
    rows = []
    for period, tau0 in config.tau0_schedule:
        kernel = ApproxPowerLaw(n=config.base_n, epsilon=config.base_epsilon,
                                tau0=tau0, m=config.m, M=config.M)
        params = HawkesParams(mu=config.base_mu, kernel=kernel)
        values = []
        failed = 0
        for idx in range(config.ensemble_size):
            sim_seed = _derived_seed(config.base_seed, idx, 0)
            pick_seed = _derived_seed(config.base_seed, idx, 1)
            rand_seed = _derived_seed(config.base_seed, idx, 2)
            try:
                ev = simulate(SimulationConfig(params=params, horizon=horizon,
                                               seed=sim_seed))
                start = np.random.Generator(np.random.Philox(pick_seed)).uniform(
                    horizon / 2.0, horizon - config.window)
                win = ev.slice(start, start + config.window)
                if config.randomisation_grid > 0:
                    win = quantize_and_randomize(win, config.randomisation_grid,
                                                 rand_seed)
                if len(win) < 10:
                    raise DataError("window too sparse to fit")
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    if fit_kind == "exponential":
                        fit = fit_exponential(win, seed=idx)
                    else:
                        fit = fit_powerlaw(win, seed=idx)
                values.append(fit.n)
            except HawkesError:
                failed += 1
        if not values:
            raise DataError(f"every realisation failed in {period}")
        arr = np.asarray(values)
        rows.append(BiasStudyRow(
            period=period, tau0=tau0, mean_n=float(arr.mean()),
            std_n=float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
            n_values=tuple(values), n_failed=failed,
        ))
    return rows


# ---------------------------------------------------------------------------
# Rolling fit campaign
# ---------------------------------------------------------------------------

def rolling_fit_campaign(series: EventSeries, window: float,
                         profile: IntradayProfile | None = None,
                         threads: int = 1,
                         **fit_kwargs) -> list[FitResult | None]:
    """Independent power-law fits on non-overlapping windows.

    Returns one FitResult per window in order; windows whose fit fails
    are recorded as None and the campaign continues.  Windows are
    independent jobs, so ``threads`` > 1 runs them on a worker pool with
    results collected by index (output does not depend on scheduling).
    """
    span = series.span
    n_windows = int(np.floor(span / window))
    if n_windows < 1:
        raise DataError("series shorter than a single window")

    def fit_one(i: int) -> FitResult | None:
        start = i * window
        sub = series.slice(start, start + window)
        phase = start % profile.day_length if profile is not None else 0.0
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                fit = fit_powerlaw(sub, profile=profile, profile_phase=phase,
                                   **fit_kwargs)
        except HawkesError:
            return None
        return FitResult(
            family=fit.family, params=fit.params, theta=fit.theta,
            loglik=fit.loglik, iterations=fit.iterations,
            converged=fit.converged, window=(start, start + window),
            restarts=fit.restarts, n_events=fit.n_events,
        )

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fit_one, range(n_windows)))
    return [fit_one(i) for i in range(n_windows)]


# ---------------------------------------------------------------------------
# Two-regime kernel splice
# ---------------------------------------------------------------------------

def spliced_kernel(eps_short: float, eps_long: float, crossover: float,
                   n_total: float, tau0: float = 0.01, m: float = 5.0,
                   M: int = 15) -> SplicedPowerLaw:
    """Sum-of-exponentials kernel whose tail steepens past the crossover."""
    return SplicedPowerLaw(n=n_total, eps_short=eps_short, eps_long=eps_long,
                           crossover=crossover, tau0=tau0, m=m, M=M)
