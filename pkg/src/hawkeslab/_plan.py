"""Checkpoint plans for the intensity sweep.

A plan merges event times with the profile-bin edges inside the
observation window, so the numba sweep is a single linear pass.  Plans
depend only on (times, window, profile, phase) and are reused across the
many likelihood evaluations of a fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _engine
from .core import IntradayProfile


@dataclass(frozen=True)
class SweepPlan:
    dt: np.ndarray
    kind: np.ndarray
    inv_w: np.ndarray
    w_ev: np.ndarray
    end_time: float

    @property
    def n_events(self) -> int:
        return int(self.w_ev.size)


def build_sweep_plan(times: np.ndarray, end_time: float,
                     profile: IntradayProfile | None = None,
                     phase: float = 0.0) -> SweepPlan:
    """Lay out checkpoints over [0, end_time].

    ``phase`` is the time-of-day offset of t = 0 relative to the profile's
    day origin (used when fitting windows that start mid-session).
    """
    times = np.ascontiguousarray(times, dtype=np.float64)
    flat = profile is None or (profile.n_bins == 1)
    if flat:
        w0 = 1.0 if profile is None else float(profile.weights[0])
        pos = np.append(times, end_time)
        kind = np.zeros(pos.size, dtype=np.uint8)
        kind[: times.size] = 1
        dt = np.diff(pos, prepend=0.0)
        inv_w = np.full(pos.size, 1.0 / w0)
        w_ev = np.full(times.size, w0)
        return SweepPlan(dt, kind, inv_w, w_ev, end_time)

    bw = profile.bin_width
    nb = profile.n_bins
    first = (np.floor(phase / bw) + 1.0) * bw - phase
    edges = np.arange(first, end_time, bw)
    edges = edges[edges > 0.0]
    pos = np.concatenate([edges, times])
    kind = np.concatenate(
        [np.zeros(edges.size, dtype=np.uint8), np.ones(times.size, dtype=np.uint8)]
    )
    # stable sort keeps edges ahead of coincident events: an event exactly
    # on a boundary belongs to the new bin
    order = np.argsort(pos, kind="stable")
    pos = np.append(pos[order], end_time)
    kind = np.append(kind[order], np.uint8(0))
    dt = np.diff(pos, prepend=0.0)

    b0 = int(np.floor(phase / bw)) % nb
    edges_before = np.concatenate([[0], np.cumsum(kind[:-1] == 0)])
    bin_idx = (b0 + edges_before) % nb
    w_interval = profile.weights[bin_idx]
    inv_w = 1.0 / w_interval
    w_ev = w_interval[kind == 1]
    return SweepPlan(dt, kind, inv_w, w_ev, end_time)


def run_sweep(plan: SweepPlan, mu: float, coeffs: np.ndarray,
              scales: np.ndarray, a_init: np.ndarray | None = None):
    """Returns (log lambda per event, compensator at events and end, ok)."""
    if a_init is None:
        a_init = np.zeros(coeffs.size, dtype=np.float64)
    return _engine.sweep(
        plan.dt, plan.kind, plan.inv_w, plan.w_ev,
        float(mu), np.ascontiguousarray(coeffs, dtype=np.float64),
        np.ascontiguousarray(scales, dtype=np.float64),
        np.ascontiguousarray(a_init, dtype=np.float64),
    )
