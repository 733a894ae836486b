"""Kernel families, parameter types and closed-form relations.

Everything here is immutable after construction and safe to share across
worker threads.  Times are double-precision seconds throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    CriticalityError,
    DataError,
    DomainError,
    KernelConstructionError,
    ProfileError,
)

__all__ = [
    "EventSeries",
    "ExponentialKernel",
    "IdealPowerLaw",
    "ApproxPowerLaw",
    "SplicedPowerLaw",
    "KernelSpec",
    "HawkesParams",
    "IntradayProfile",
    "kernel_eval",
    "kernel_cumulative",
    "branching_ratio",
    "mean_intensity",
    "theory_relations",
    "exp_terms",
    "params_to_config",
    "params_from_config",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Event data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EventSeries:
    """Ordered event timestamps on a concatenated trading clock.

    Parameters
    ----------
    timestamps : array of float
        Strictly increasing event times in seconds of concatenated session
        time.
    session_bounds : tuple of (start, end)
        Session intervals on the same clock.  Every event must lie inside
        one of them.
    resolution : float
        Smallest representable timestamp increment in seconds.
    """

    timestamps: np.ndarray
    session_bounds: tuple[tuple[float, float], ...]
    resolution: float = 1e-9

    def __post_init__(self):
        ts = _readonly(np.asarray(self.timestamps, dtype=np.float64))
        object.__setattr__(self, "timestamps", ts)
        bounds = tuple((float(a), float(b)) for a, b in self.session_bounds)
        object.__setattr__(self, "session_bounds", bounds)
        if self.resolution <= 0:
            raise DataError("resolution must be positive")
        if not bounds:
            raise DataError("at least one session interval is required")
        for a, b in bounds:
            if not b > a:
                raise DataError(f"degenerate session interval ({a}, {b})")
        if ts.size:
            if np.any(np.diff(ts) <= 0):
                raise DataError("timestamps must be strictly increasing")
            edges = np.asarray(bounds, dtype=np.float64)
            idx = np.searchsorted(edges[:, 0], ts, side="right") - 1
            if np.any(idx < 0) or np.any(ts > edges[idx, 1]):
                raise DataError("every timestamp must lie inside a session")

    def __len__(self) -> int:
        return int(self.timestamps.size)

    @property
    def n_events(self) -> int:
        return int(self.timestamps.size)

    @property
    def span(self) -> float:
        """End of the last session (total observed concatenated time)."""
        return self.session_bounds[-1][1]

    @property
    def mean_rate(self) -> float:
        total = sum(b - a for a, b in self.session_bounds)
        return self.n_events / total

    def slice(self, start: float, end: float) -> "EventSeries":
        """Events in [start, end), shifted so the window starts at 0."""
        if not end > start:
            raise DataError("slice window must have positive length")
        ts = self.timestamps
        lo, hi = np.searchsorted(ts, [start, end])
        bounds = []
        for a, b in self.session_bounds:
            a2, b2 = max(a, start), min(b, end)
            if b2 > a2:
                bounds.append((a2 - start, b2 - start))
        if not bounds:
            bounds = [(0.0, end - start)]
        return EventSeries(ts[lo:hi] - start, tuple(bounds), self.resolution)


# ---------------------------------------------------------------------------
# Kernel families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentialKernel:
    """phi(tau) = alpha * exp(-beta * tau)."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha < 0:
            raise KernelConstructionError("alpha must be non-negative")
        if self.beta <= 0:
            raise KernelConstructionError("beta must be positive")

    @property
    def n(self) -> float:
        return self.alpha / self.beta


@dataclass(frozen=True)
class IdealPowerLaw:
    """phi(tau) = phi0 * tau0^eps / tau^(1+eps) for tau >= tau0, else 0."""

    phi0: float
    epsilon: float
    tau0: float

    def __post_init__(self):
        if self.phi0 < 0:
            raise KernelConstructionError("phi0 must be non-negative")
        if self.epsilon <= 0:
            raise KernelConstructionError("epsilon must be positive")
        if self.tau0 <= 0:
            raise KernelConstructionError("tau0 must be positive")

    @property
    def n(self) -> float:
        return self.phi0 / self.epsilon


def _validate_nonnegative(kernel, coeffs: np.ndarray, scales: np.ndarray):
    """Check phi >= 0 on a log-spaced grid; the negative smoothing term
    could in principle overshoot for extreme parameter combinations."""
    lo = scales.min() * 1e-2
    hi = scales.max() * 2e1
    grid = np.geomspace(lo, hi, 1000)
    phi = np.exp(-np.outer(grid, 1.0 / scales)) @ coeffs
    floor = -1e-12 * np.abs(coeffs).sum()
    if phi.min() < floor:
        raise KernelConstructionError(
            f"kernel dips negative (min {phi.min():.3e} at "
            f"tau={grid[phi.argmin()]:.3e}); adjust epsilon/m/M"
        )


@dataclass(frozen=True)
class ApproxPowerLaw:
    """Power-law kernel approximated by a sum of exponentials.

    Positive terms at scales xi_i = tau0 * m**i (0 <= i < M) carry
    power-law weights xi_i^-(1+eps); one negative term at xi_-1 = tau0/m
    forces phi(0) = 0.  The normaliser Z makes the kernel integrate to the
    branching ratio n.  Z, S and the scale grid are computed once here and
    cached because the likelihood loop evaluates the kernel millions of
    times.
    """

    n: float
    epsilon: float
    tau0: float
    m: float = 5.0
    M: int = 15
    Z: float = field(init=False, repr=False)
    S: float = field(init=False, repr=False)
    xi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 0:
            raise KernelConstructionError("branching ratio n must be >= 0")
        if self.epsilon <= 0:
            raise KernelConstructionError("epsilon must be positive")
        if self.tau0 <= 0:
            raise KernelConstructionError("tau0 must be positive")
        if self.m <= 1:
            raise KernelConstructionError("m must exceed 1")
        if self.M < 1:
            raise KernelConstructionError("M must be >= 1")
        xi = self.tau0 * self.m ** np.arange(-1, self.M, dtype=np.float64)
        pos = xi[1:]
        S = float(np.sum(pos ** -(1.0 + self.epsilon)))
        Z = float(np.sum(pos ** -self.epsilon) - S * xi[0])
        object.__setattr__(self, "xi", _readonly(xi))
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "Z", Z)
        if self.n > 0:
            coeffs, scales = self._terms()
            _validate_nonnegative(self, coeffs, scales)

    def _terms(self) -> tuple[np.ndarray, np.ndarray]:
        scales = self.xi
        weights = np.empty_like(scales)
        weights[0] = -self.S
        weights[1:] = scales[1:] ** -(1.0 + self.epsilon)
        return (self.n / self.Z) * weights, scales


@dataclass(frozen=True)
class SplicedPowerLaw:
    """Sum-of-exponentials kernel with two tail regimes.

    Per-term weights decay with exponent 1 + eps_short for scales below
    the crossover and 1 + eps_long above it, matched continuously at the
    crossover and renormalised to total mass ``n``.
    """

    n: float
    eps_short: float
    eps_long: float
    crossover: float
    tau0: float
    m: float = 5.0
    M: int = 15
    Z: float = field(init=False, repr=False)
    S: float = field(init=False, repr=False)
    xi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 0:
            raise KernelConstructionError("branching ratio n must be >= 0")
        if self.eps_short <= 0 or self.eps_long <= 0:
            raise KernelConstructionError("tail exponents must be positive")
        if self.eps_short > self.eps_long:
            raise KernelConstructionError("eps_short must not exceed eps_long")
        if self.crossover <= self.tau0:
            raise KernelConstructionError("crossover must exceed tau0")
        if self.tau0 <= 0 or self.m <= 1 or self.M < 1:
            raise KernelConstructionError("invalid tau0/m/M")
        xi = self.tau0 * self.m ** np.arange(-1, self.M, dtype=np.float64)
        pos = xi[1:]
        w = np.where(
            pos < self.crossover,
            pos ** -(1.0 + self.eps_short),
            self.crossover ** (self.eps_long - self.eps_short)
            * pos ** -(1.0 + self.eps_long),
        )
        S = float(w.sum())
        Z = float(np.sum(w * pos) - S * xi[0])
        object.__setattr__(self, "xi", _readonly(xi))
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "_weights", _readonly(w))
        if self.n > 0:
            coeffs, scales = self._terms()
            _validate_nonnegative(self, coeffs, scales)

    def _terms(self) -> tuple[np.ndarray, np.ndarray]:
        scales = self.xi
        weights = np.empty_like(scales)
        weights[0] = -self.S
        weights[1:] = self._weights
        return (self.n / self.Z) * weights, scales


KernelSpec = Union[ExponentialKernel, IdealPowerLaw, ApproxPowerLaw, SplicedPowerLaw]

_SUM_OF_EXP = (ApproxPowerLaw, SplicedPowerLaw)


def exp_terms(kernel: KernelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Decompose a kernel into (coefficients, scales) of exponential terms.

    phi(tau) = sum_k coeffs[k] * exp(-tau / scales[k]).  Raises DomainError
    for kernels without exponential structure (IdealPowerLaw).
    """
    if isinstance(kernel, ExponentialKernel):
        return (
            np.array([kernel.alpha], dtype=np.float64),
            np.array([1.0 / kernel.beta], dtype=np.float64),
        )
    if isinstance(kernel, _SUM_OF_EXP):
        return kernel._terms()
    raise DomainError(
        f"{type(kernel).__name__} has no sum-of-exponentials representation"
    )


# ---------------------------------------------------------------------------
# Kernel operations
# ---------------------------------------------------------------------------

def _check_tau(tau):
    arr = np.asarray(tau, dtype=np.float64)
    if np.any(arr < 0):
        raise DomainError("tau must be non-negative")
    return arr


def kernel_eval(kernel: KernelSpec, tau):
    """Evaluate phi(tau) in 1/s.  Accepts scalars or arrays; tau >= 0."""
    t = _check_tau(tau)
    if isinstance(kernel, ExponentialKernel):
        out = kernel.alpha * np.exp(-kernel.beta * t)
    elif isinstance(kernel, IdealPowerLaw):
        out = np.where(
            t >= kernel.tau0,
            kernel.phi0 * kernel.tau0 ** kernel.epsilon
            / np.maximum(t, kernel.tau0) ** (1.0 + kernel.epsilon),
            0.0,
        )
    else:
        coeffs, scales = exp_terms(kernel)
        out = np.exp(-np.multiply.outer(t, 1.0 / scales)) @ coeffs
        # the negative term cancels the positive ones at the origin by
        # construction; pin the residual rounding so phi(0) is exactly 0
        out = np.where(t == 0.0, 0.0, out)
    return out if isinstance(out, np.ndarray) and out.ndim else float(out)


def kernel_cumulative(kernel: KernelSpec, tau):
    """Phi(tau) = integral of phi over [0, tau]; Phi(inf) equals n."""
    t = _check_tau(tau)
    if isinstance(kernel, ExponentialKernel):
        out = (kernel.alpha / kernel.beta) * -np.expm1(-kernel.beta * t)
    elif isinstance(kernel, IdealPowerLaw):
        ratio = kernel.tau0 / np.maximum(t, kernel.tau0)
        out = np.where(
            t > kernel.tau0,
            (kernel.phi0 / kernel.epsilon) * (1.0 - ratio ** kernel.epsilon),
            0.0,
        )
    else:
        coeffs, scales = exp_terms(kernel)
        out = (-np.expm1(-np.multiply.outer(t, 1.0 / scales))) @ (coeffs * scales)
    return out if isinstance(out, np.ndarray) and out.ndim else float(out)


def branching_ratio(kernel: KernelSpec) -> float:
    """Integral of the kernel: expected direct children per event."""
    if isinstance(kernel, ExponentialKernel):
        return kernel.alpha / kernel.beta
    if isinstance(kernel, IdealPowerLaw):
        return kernel.phi0 / kernel.epsilon
    if isinstance(kernel, _SUM_OF_EXP):
        return kernel.n
    raise DomainError(f"unknown kernel type {type(kernel).__name__}")


# ---------------------------------------------------------------------------
# Process parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HawkesParams:
    """Base intensity plus kernel: theta of the conditional intensity."""

    mu: float
    kernel: KernelSpec

    def __post_init__(self):
        if self.mu < 0:
            raise DomainError("mu must be non-negative")

    @property
    def n(self) -> float:
        return branching_ratio(self.kernel)

    @property
    def is_critical(self) -> bool:
        """True when the branching ratio makes the process non-stationary."""
        return self.n >= 1.0


def mean_intensity(params: HawkesParams) -> float:
    """Stationary average event rate mu / (1 - n); undefined at n >= 1."""
    n = params.n
    if n >= 1.0:
        raise CriticalityError(
            f"average intensity undefined for branching ratio n={n:.4g} >= 1; "
            "treat the process as critical or non-stationary"
        )
    return params.mu / (1.0 - n)


def theory_relations(epsilon: float) -> dict[str, float]:
    """Closed-form exponents implied by a power-law tail index epsilon.

    Returns the autocovariance decay exponent alpha_cov = 1 - 2*eps and
    the Hurst exponent H = 1/2 + eps; both require 0 < eps < 1/2.
    """
    if not 0.0 < epsilon < 0.5:
        raise DomainError("epsilon must lie in the open interval (0, 1/2)")
    return {"alpha_cov": 1.0 - 2.0 * epsilon, "hurst": 0.5 + epsilon}


# ---------------------------------------------------------------------------
# Intraday activity profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntradayProfile:
    """Time-of-day event-rate shape and the detrending weights w = 1/R.

    Weights are normalised to unit mean over the day (to 1e-9); rates are
    stored as 1/w so the two arrays are exactly reciprocal.  The profile
    is periodic over ``day_length`` seconds of concatenated session time,
    aligned so that t = 0 is a session open.
    """

    bin_width: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if self.bin_width <= 0:
            raise ProfileError("bin_width must be positive")
        if w.size == 0:
            raise ProfileError("profile needs at least one bin")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise ProfileError("profile weights must be positive and finite")
        if abs(w.mean() - 1.0) > 1e-9:
            raise ProfileError("profile weights must average to one")
        object.__setattr__(self, "weights", _readonly(w))

    @classmethod
    def from_rates(cls, bin_width: float, rates) -> "IntradayProfile":
        r = np.asarray(rates, dtype=np.float64)
        if np.any(~np.isfinite(r)) or np.any(r <= 0):
            raise ProfileError("profile rates must be positive and finite")
        w = 1.0 / r
        return cls(bin_width, w / w.mean())

    @classmethod
    def flat(cls, bin_width: float = 300.0, n_bins: int = 1) -> "IntradayProfile":
        return cls(bin_width, np.ones(n_bins))

    @property
    def n_bins(self) -> int:
        return int(self.weights.size)

    @property
    def day_length(self) -> float:
        return self.bin_width * self.n_bins

    @property
    def rates(self) -> np.ndarray:
        return 1.0 / self.weights

    def weight_at(self, t, phase: float = 0.0):
        """w at concatenated time(s) t; ``phase`` shifts the day origin."""
        tod = np.mod(np.asarray(t, dtype=np.float64) + phase, self.day_length)
        idx = np.minimum((tod / self.bin_width).astype(np.int64), self.n_bins - 1)
        out = self.weights[idx]
        return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Flat key-value config serialization
# ---------------------------------------------------------------------------

def params_to_config(params: HawkesParams) -> dict[str, str]:
    """Flatten parameters into the text key-value schema."""
    k = params.kernel
    out = {"mu": repr(params.mu)}
    if isinstance(k, ExponentialKernel):
        out["kernel.family"] = "exponential"
        out["kernel.alpha"] = repr(k.alpha)
        out["kernel.beta"] = repr(k.beta)
    elif isinstance(k, IdealPowerLaw):
        out["kernel.family"] = "ideal-powerlaw"
        out["kernel.phi0"] = repr(k.phi0)
        out["kernel.epsilon"] = repr(k.epsilon)
        out["kernel.tau0"] = repr(k.tau0)
    elif isinstance(k, ApproxPowerLaw):
        out["kernel.family"] = "approx-powerlaw"
        out["kernel.n"] = repr(k.n)
        out["kernel.epsilon"] = repr(k.epsilon)
        out["kernel.tau0"] = repr(k.tau0)
        out["kernel.m"] = repr(k.m)
        out["kernel.M"] = repr(k.M)
    elif isinstance(k, SplicedPowerLaw):
        out["kernel.family"] = "spliced-powerlaw"
        out["kernel.n"] = repr(k.n)
        out["kernel.eps_short"] = repr(k.eps_short)
        out["kernel.eps_long"] = repr(k.eps_long)
        out["kernel.crossover"] = repr(k.crossover)
        out["kernel.tau0"] = repr(k.tau0)
        out["kernel.m"] = repr(k.m)
        out["kernel.M"] = repr(k.M)
    else:
        raise DomainError(f"unknown kernel type {type(k).__name__}")
    return out


_FAMILY_KEYS = {
    "exponential": {"kernel.alpha", "kernel.beta"},
    "ideal-powerlaw": {"kernel.phi0", "kernel.epsilon", "kernel.tau0"},
    "approx-powerlaw": {"kernel.n", "kernel.epsilon", "kernel.tau0",
                        "kernel.m", "kernel.M"},
    "spliced-powerlaw": {"kernel.n", "kernel.eps_short", "kernel.eps_long",
                         "kernel.crossover", "kernel.tau0",
                         "kernel.m", "kernel.M"},
}


def params_from_config(cfg: dict[str, str]) -> HawkesParams:
    """Inverse of params_to_config; rejects unknown keys."""
    from .errors import ConfigError

    cfg = dict(cfg)
    try:
        mu = float(cfg.pop("mu"))
        family = cfg.pop("kernel.family")
    except KeyError as exc:
        raise ConfigError(f"missing required key {exc}") from None
    if family not in _FAMILY_KEYS:
        raise ConfigError(f"unknown kernel.family {family!r}")
    expected = _FAMILY_KEYS[family]
    unknown = set(cfg) - expected
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = expected - set(cfg)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")
    g = lambda key: float(cfg[key])
    if family == "exponential":
        kernel = ExponentialKernel(g("kernel.alpha"), g("kernel.beta"))
    elif family == "ideal-powerlaw":
        kernel = IdealPowerLaw(g("kernel.phi0"), g("kernel.epsilon"),
                               g("kernel.tau0"))
    elif family == "approx-powerlaw":
        kernel = ApproxPowerLaw(g("kernel.n"), g("kernel.epsilon"),
                                g("kernel.tau0"), g("kernel.m"),
                                int(g("kernel.M")))
    else:
        kernel = SplicedPowerLaw(g("kernel.n"), g("kernel.eps_short"),
                                 g("kernel.eps_long"), g("kernel.crossover"),
                                 g("kernel.tau0"), g("kernel.m"),
                                 int(g("kernel.M")))
    return HawkesParams(mu=mu, kernel=kernel)
