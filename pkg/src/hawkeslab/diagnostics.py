"""Goodness-of-fit and long-memory diagnostics.

The residual transform maps event times through the fitted compensator;
under the true model the transformed process is unit-rate Poisson, so the
inter-arrivals should be standard exponential.  Detrended fluctuation
analysis quantifies long-range dependence of the event rate via the
scaling F(L) ~ L^H of per-window RMS deviations from local linear trends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._plan import build_sweep_plan, run_sweep
from .core import EventSeries, HawkesParams, IntradayProfile, exp_terms
from .errors import DataError, NumericalError

__all__ = ["ResidualReport", "DfaReport", "residual_transform", "dfa"]


@dataclass(frozen=True)
class ResidualReport:
    """Time-rescaled inter-arrivals and their distance from Exp(1)."""

    transformed_interarrivals: np.ndarray
    ks_distance: float
    pdf_bins: np.ndarray
    pdf_density: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.transformed_interarrivals.mean())


def residual_transform(series: EventSeries, params: HawkesParams,
                       profile: IntradayProfile | None = None,
                       profile_phase: float = 0.0) -> ResidualReport:
    """Map each event to t* = integral of the conditional intensity.

    Uses the same O(N) recurrence as the likelihood compensator.  Under
    the generating parameters the successive differences follow
    P(dt*) = exp(-dt*); the KS distance to that law is reported as the
    statistic of record (no p-value: with enough points any model fails).
    """
    ts = series.timestamps
    if ts.size < 2:
        raise DataError("need at least two events for residual analysis")
    coeffs, scales = exp_terms(params.kernel)
    plan = build_sweep_plan(ts, series.span, profile, profile_phase)
    _, tstar, _ = run_sweep(plan, params.mu, coeffs, scales)
    if not np.all(np.isfinite(tstar)):
        raise NumericalError("compensator is non-finite under these parameters")
    dts = np.diff(tstar[:-1])
    if np.any(dts <= 0):
        # compensator is non-decreasing; equality only from underflow
        dts = np.maximum(dts, 1e-300)
    ks = float(stats.kstest(dts, "expon").statistic)
    positive = dts[dts > 0]
    edges = np.geomspace(positive.min(), positive.max() * (1 + 1e-12), 41)
    hist, _ = np.histogram(dts, bins=edges, density=True)
    centers = np.sqrt(edges[:-1] * edges[1:])
    return ResidualReport(
        transformed_interarrivals=dts, ks_distance=ks,
        pdf_bins=centers, pdf_density=hist,
    )


@dataclass(frozen=True)
class DfaReport:
    """Fluctuation function with a two-regime Hurst fit.

    F is non-negative; it is exactly zero on pure linear trends, in which
    case the Hurst fields are NaN (no scaling to measure).
    """

    window_lengths: np.ndarray
    fluctuations: np.ndarray
    hurst_low: float
    hurst_high: float
    crossover: float
    hurst_global: float
    bin_width: float

    def __post_init__(self):
        f = np.asarray(self.fluctuations, dtype=np.float64)
        if np.any(~np.isfinite(f)) or np.any(f < 0):
            raise NumericalError("fluctuation function must be finite and >= 0")


def _window_rms(counts_cum: np.ndarray, w: int) -> float:
    """RMS residual of per-window linear fits to the counting process."""
    nwin = counts_cum.size // w
    Y = counts_cum[: nwin * w].reshape(nwin, w)
    x = np.arange(w, dtype=np.float64)
    xc = x - x.mean()
    varx = float(xc @ xc)
    ym = Y.mean(axis=1)
    slope = (Y @ xc) / varx
    resid = Y - ym[:, None] - slope[:, None] * xc[None, :]
    return float(np.sqrt(np.mean(resid * resid)))


_GUARD_FACTOR = 3.0  # transition zone excluded when re-estimating slopes


def _two_segment_fit(logL: np.ndarray, logF: np.ndarray):
    """Continuous piecewise-linear least squares in log-log space.

    The breakpoint is chosen on the grid of interior observations by
    least total squared error.  Each segment's exponent is then
    re-estimated away from the transition (points within a factor of the
    crossover are excluded) so a smeared crossover does not bias the
    asymptotic slopes; the joint fit is the fallback when a guarded side
    has too few points.  Returns (h_low, h_high, log-crossover).
    """
    best = None
    for b in range(2, logL.size - 2):
        xb = logL[b]
        d = logL - xb
        X = np.column_stack([np.ones_like(d), np.minimum(d, 0.0),
                             np.maximum(d, 0.0)])
        coef, *_ = np.linalg.lstsq(X, logF, rcond=None)
        sse = float(np.sum((X @ coef - logF) ** 2))
        if best is None or sse < best[0]:
            best = (sse, coef[1], coef[2], xb)
    if best is None:
        h = float(np.polyfit(logL, logF, 1)[0])
        return h, h, logL[logL.size // 2]
    _, h_low, h_high, xb = best
    guard = np.log10(_GUARD_FACTOR)
    lo = logL <= xb - guard
    hi = logL >= xb + guard
    if lo.sum() >= 3:
        h_low = float(np.polyfit(logL[lo], logF[lo], 1)[0])
    if hi.sum() >= 3:
        h_high = float(np.polyfit(logL[hi], logF[hi], 1)[0])
    return h_low, h_high, xb


def dfa(series: EventSeries, bin_width: float = 0.1,
        window_lengths=None) -> DfaReport:
    """Detrended fluctuation analysis of the event counting process.

    Events are counted in ``bin_width``-second bins over the concatenated
    timeline; windows that exceed the observed span are skipped.  The
    final partial window at each L is discarded.
    """
    ts = series.timestamps
    if ts.size < 10:
        raise DataError("too few events for DFA")
    span = series.span
    nbins = int(np.floor(span / bin_width))
    if nbins < 100:
        raise DataError("series span must cover at least 100 bins")
    counts, _ = np.histogram(ts, bins=np.linspace(0.0, nbins * bin_width,
                                                  nbins + 1))
    N = np.cumsum(counts).astype(np.float64)

    if window_lengths is None:
        window_lengths = np.geomspace(20.0 * bin_width, span / 20.0, 24)
    window_lengths = np.asarray(window_lengths, dtype=np.float64)

    Ls, Fs = [], []
    for L in window_lengths:
        w = int(round(L / bin_width))
        if w < 4 or w > nbins // 2:
            continue
        Ls.append(w * bin_width)
        Fs.append(_window_rms(N, w))
    if len(Ls) < 5:
        raise DataError("not enough usable window lengths for DFA")
    Ls = np.asarray(Ls)
    Fs = np.asarray(Fs)
    pos = Fs > 0
    if pos.sum() >= 5:
        logL, logF = np.log10(Ls[pos]), np.log10(Fs[pos])
        h_global = float(np.polyfit(logL, logF, 1)[0])
        h_low, h_high, log_xover = _two_segment_fit(logL, logF)
        crossover = float(10.0 ** log_xover)
    else:
        # pure trends leave nothing to fit
        h_global = h_low = h_high = crossover = float("nan")
    return DfaReport(
        window_lengths=Ls, fluctuations=Fs,
        hurst_low=float(h_low), hurst_high=float(h_high),
        crossover=crossover, hurst_global=h_global,
        bin_width=bin_width,
    )
