"""Non-parametric kernel recovery from the event-rate autocovariance.

The autocovariance of binned, detrended event rates is estimated on short
windows and averaged; the kernel follows from the spectral relation
nu_hat(w) = Lambda / |1 - phi_hat(w)|^2 by minimum-phase factorization:
for a stable monovariate process, 1 - phi_hat is causal and zero-free, so
its phase is recovered from the log-magnitude by a discrete Hilbert
transform (cepstral folding).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import EventSeries, IntradayProfile
from .errors import ConfigError, DataError, InversionError

__all__ = [
    "CovarianceEstimate",
    "KernelEstimate",
    "estimate_autocovariance",
    "invert_kernel",
    "estimate_kernel_integral_longlag",
]

RATIO_FLOOR = 1e-6        # floor on Lambda/nu_hat before taking logs
TUKEY_FLAT = 0.8          # flat fraction of the lag taper
LOG_BINS_PER_DECADE = 12


@dataclass(frozen=True)
class CovarianceEstimate:
    """Averaged autocovariance of the binned event rate.

    values[k] estimates nu(k*h) in events^2/s^2; lag spacing equals the
    sampling bin width h.  The lag-zero value carries the discretised
    atom, roughly Lambda/h for a Poisson stream.
    """

    lag_grid: np.ndarray
    values: np.ndarray
    mean_rate: float
    h: float
    window_length: float
    n_windows: int
    n_skipped: int = 0

    def __post_init__(self):
        lags = np.asarray(self.lag_grid, dtype=np.float64)
        vals = np.asarray(self.values, dtype=np.float64)
        if lags.size != vals.size or lags.size < 2:
            raise DataError("lag grid and values must align (>= 2 lags)")
        spacing = np.diff(lags)
        if not np.allclose(spacing, self.h, rtol=1e-9, atol=1e-12):
            raise DataError("lag grid must be uniform with spacing h")
        if vals[0] <= 0:
            raise DataError("nu(0) must be positive")
        if self.mean_rate <= 0:
            raise DataError("mean rate must be positive")
        object.__setattr__(self, "lag_grid", lags)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class KernelEstimate:
    """Log-binned kernel estimate with its running integral."""

    lags: np.ndarray
    phi: np.ndarray
    integral: np.ndarray
    counts: np.ndarray
    raw_lags: np.ndarray | None = None
    raw_phi: np.ndarray | None = None
    branching: float = field(default=np.nan)

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=np.float64)
        if np.any(np.diff(lags) <= 0):
            raise DataError("binned lags must be strictly increasing")
        integ = np.asarray(self.integral, dtype=np.float64)
        if np.any(np.diff(integ) < 0):
            raise DataError("kernel integral must be monotone")

    @property
    def one_minus_integral(self) -> np.ndarray:
        return 1.0 - self.integral


def _window_covariance(y: np.ndarray, nlags: int) -> np.ndarray:
    """Biased (1/B) autocovariance of one window via FFT."""
    B = y.size
    z = y - y.mean()
    nfft = 1 << int(np.ceil(np.log2(2 * B)))
    f = np.fft.rfft(z, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:nlags] / B
    return acov


def estimate_autocovariance(series: EventSeries, h: float, window: float,
                            profile: IntradayProfile | None = None) -> CovarianceEstimate:
    """Average the binned-rate autocovariance over windows of a session.

    Rates are detrended by dividing by the profile's time-of-day rate
    before the covariance is formed.  Windows are tiled per session;
    windows with no events are skipped and counted.
    """
    if h <= 0 or window <= 0:
        raise ConfigError("h and window must be positive")
    if window < 100 * h:
        raise ConfigError("window must cover at least 100 sampling bins")
    max_session = max(b - a for a, b in series.session_bounds)
    if window > max_session:
        raise ConfigError("window exceeds every session length")
    B = int(round(window / h))
    nlags = B
    acc = np.zeros(nlags)
    used = skipped = 0
    rate_sum = 0.0
    rate_bins = 0
    ts = series.timestamps
    for s_lo, s_hi in series.session_bounds:
        n_win = int(np.floor((s_hi - s_lo) / window))
        for i in range(n_win):
            w_lo = s_lo + i * window
            lo, hi = np.searchsorted(ts, [w_lo, w_lo + B * h])
            if hi == lo:
                skipped += 1
                continue
            counts, _ = np.histogram(ts[lo:hi] - w_lo,
                                     bins=np.linspace(0.0, B * h, B + 1))
            y = counts / h
            if profile is not None:
                edges = w_lo + np.arange(B + 1) * h
                centers = 0.5 * (edges[:-1] + edges[1:])
                y = y * profile.weight_at(centers)
            acc += _window_covariance(y, nlags)
            rate_sum += y.sum()
            rate_bins += B
            used += 1
    if used == 0:
        raise DataError("no non-empty windows available")
    nu = acc / used
    lam = rate_sum / rate_bins
    return CovarianceEstimate(
        lag_grid=h * np.arange(nlags), values=nu, mean_rate=lam,
        h=h, window_length=window, n_windows=used, n_skipped=skipped,
    )


def kernel_from_spectrum(nu_hat: np.ndarray, lam: float,
                         delta: float) -> tuple[np.ndarray, float]:
    """Solve |1 - phi_hat|^2 = Lambda/nu_hat for the causal kernel.

    ``nu_hat`` holds real spectrum values on the full FFT frequency grid
    (numpy ordering).  Returns phi sampled at tau = k*delta for
    k = 0..Nfft-1 and the implied branching ratio 1 - (1 - phi_hat)(0).
    The minimum-phase branch is constructed by cepstral folding.
    """
    nu_hat = np.asarray(nu_hat, dtype=np.float64)
    if not np.any(nu_hat > 0):
        raise InversionError("spectrum is non-positive everywhere")
    nfft = nu_hat.size
    with np.errstate(divide="ignore", over="ignore"):
        ratio = np.where(nu_hat > 0, lam / np.where(nu_hat > 0, nu_hat, 1.0),
                         np.inf)
    ratio = np.clip(ratio, RATIO_FLOOR, 1.0 / RATIO_FLOOR)
    logmag = 0.5 * np.log(ratio)
    cep = np.fft.ifft(logmag).real
    folded = np.zeros(nfft)
    folded[0] = cep[0]
    half = nfft // 2
    folded[1:half] = 2.0 * cep[1:half]
    if nfft % 2 == 0:
        folded[half] = cep[half]
    G = np.exp(np.fft.fft(folded))
    phi = np.fft.ifft(1.0 - G).real / delta
    return phi, float(1.0 - G[0].real)


def _tukey_taper(n: int, flat: float = TUKEY_FLAT) -> np.ndarray:
    """One-sided Tukey taper: flat up to ``flat``*n, cosine roll-off after."""
    k = np.arange(n, dtype=np.float64)
    knee = flat * (n - 1)
    out = np.ones(n)
    tail = k > knee
    width = max((n - 1) - knee, 1.0)
    out[tail] = 0.5 * (1.0 + np.cos(np.pi * (k[tail] - knee) / width))
    return out


def _log_bin(lags: np.ndarray, values: np.ndarray,
             per_decade: int = LOG_BINS_PER_DECADE):
    lo, hi = lags[0], lags[-1]
    n_edges = max(int(np.ceil(np.log10(hi / lo) * per_decade)), 1) + 1
    edges = np.geomspace(lo, hi * (1 + 1e-12), n_edges)
    idx = np.digitize(lags, edges) - 1
    idx = np.clip(idx, 0, n_edges - 2)
    sums = np.bincount(idx, weights=values, minlength=n_edges - 1)
    lag_sums = np.bincount(idx, weights=lags, minlength=n_edges - 1)
    counts = np.bincount(idx, minlength=n_edges - 1)
    keep = counts > 0
    return lag_sums[keep] / counts[keep], sums[keep] / counts[keep], counts[keep]


def invert_kernel(cov: CovarianceEstimate) -> KernelEstimate:
    """Recover phi(tau) from an autocovariance estimate.

    The lag function is tapered (Tukey, 80% flat), symmetrised and DFTed;
    the ratio Lambda/nu_hat is floored before the minimum-phase solve.
    The raw estimate on the sampling grid is kept alongside the
    log-binned presentation grid; the reported running integral is the
    monotone envelope of the raw cumulative sum.
    """
    nu = cov.values * _tukey_taper(cov.values.size)
    K = nu.size
    nfft = 1 << int(np.ceil(np.log2(2 * K)))
    f = np.zeros(nfft)
    f[0] = nu[0]
    f[1:K] = nu[1:]
    f[nfft - K + 1:] = nu[1:][::-1]
    nu_hat = np.fft.fft(f).real * cov.h
    phi_raw, _ = kernel_from_spectrum(nu_hat, cov.mean_rate, cov.h)
    raw_lags = cov.h * np.arange(1, K)
    raw_phi = phi_raw[1:K]
    cum = np.cumsum(raw_phi) * cov.h
    cum = np.maximum.accumulate(cum)
    # windowed covariances lose their DC to the per-window mean, so the
    # kernel mass is read off the integral rather than the spectrum at 0
    branching = float(cum[-1])
    lags_b, phi_b, counts = _log_bin(raw_lags, raw_phi)
    integral_b = np.interp(lags_b, raw_lags, cum)
    return KernelEstimate(
        lags=lags_b, phi=phi_b, integral=integral_b, counts=counts,
        raw_lags=raw_lags, raw_phi=raw_phi, branching=branching,
    )


def estimate_kernel_integral_longlag(series: EventSeries, bin_width: float = 300.0,
                                     max_lag: float | None = None) -> KernelEstimate:
    """Kernel integral at long lags from coarse-binned full-span covariance.

    The concatenated series is treated as one continuous record; the
    covariance is formed once over the whole span (lags up to a quarter
    of it by default) and inverted as usual.
    """
    ts = series.timestamps
    span = series.span
    nbins = int(np.floor(span / bin_width))
    if nbins < 1000:
        raise DataError("series must span at least 1000 bins")
    counts, _ = np.histogram(ts, bins=np.linspace(0.0, nbins * bin_width,
                                                  nbins + 1))
    y = counts / bin_width
    if max_lag is None:
        max_lag = span / 4.0
    nlags = min(int(round(max_lag / bin_width)), nbins - 1)
    nu = _window_covariance(y, nlags)
    lam = float(y.mean())
    cov = CovarianceEstimate(
        lag_grid=bin_width * np.arange(nlags), values=nu, mean_rate=lam,
        h=bin_width, window_length=span, n_windows=1,
    )
    return invert_kernel(cov)
