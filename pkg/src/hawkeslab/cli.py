"""Command-line surface: ingestion, reproducible runs, figure data.

Every command writes its artifacts plus a ``manifest.json`` with the
resolved configuration and seed into the output directory, sufficient to
re-run the command bit-identically.  Exit codes: 0 ok, 2 usage, 3 data,
4 numerical/convergence, 5 configuration.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, diagnostics, experiments, io, mle, nonparam
from .core import (
    EventSeries,
    HawkesParams,
    IntradayProfile,
    params_from_config,
    params_to_config,
)
from .errors import (
    ConfigError,
    CriticalityError,
    DataError,
    DomainError,
    ExplosionError,
    HawkesError,
    InversionError,
    KernelConstructionError,
    NumericalError,
    ProfileError,
)
from .simulate import SimulationConfig, poisson_history, quantize_and_randomize, simulate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4
EXIT_CONFIG = 5

_DATA_ERRORS = (DataError,)
_NUMERICAL_ERRORS = (ExplosionError, InversionError, NumericalError)
_CONFIG_ERRORS = (ConfigError, ProfileError, DomainError,
                  KernelConstructionError, CriticalityError)


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------

def ingest_events(path, format: str = "events-v1", seed: int = 0,
                  session: str | None = None, calendar: str | None = None,
                  resolution: float | None = None) -> tuple[EventSeries, dict]:
    """Read an event file into concatenated session time.

    Wall-clock files are filtered to the session window on the declared
    calendar, concatenated, and randomized within the declared resolution.
    Files with explicit ``#bounds`` headers are taken verbatim.  Returns
    the series plus an info dict (dropped counts, session count).
    """
    if format != "events-v1":
        raise ConfigError(f"unknown event file format {format!r}")
    raw, headers = io.read_events_v1(path)
    if raw.size == 0:
        raise DataError(f"{path}: no events")
    res = resolution if resolution is not None else float(
        headers.get("resolution", 1e-3))
    if res <= 0:
        raise ConfigError("resolution must be positive")
    backstep = np.diff(raw)
    bad = np.flatnonzero(backstep < -res)
    if bad.size:
        raise DataError(
            f"{path}: timestamps step backwards beyond the declared "
            f"resolution near line {int(bad[0]) + 2}")

    if headers.get("bounds"):
        series = EventSeries(np.unique(raw), tuple(headers["bounds"]),
                             max(res, 1e-12))
        info = {"n_read": int(raw.size), "n_dropped": int(raw.size - len(series)),
                "n_sessions": len(series.session_bounds)}
        return series, info

    cal = calendar or headers.get("calendar", "weekdays")
    if cal not in ("weekdays", "all"):
        raise ConfigError(f"unknown session calendar {cal!r}")
    sess_lo, sess_hi = io.parse_session_header(
        session or headers.get("session", "09:30-16:15"))
    day_len = sess_hi - sess_lo

    day = np.floor(raw / 86400.0).astype(np.int64)
    tod = raw - day * 86400.0
    keep = (tod >= sess_lo) & (tod < sess_hi)
    if cal == "weekdays":
        # day 0 of the epoch-like clock is taken as a Thursday (Unix epoch)
        keep &= ((day + 4) % 7) < 5
    dropped = int(raw.size - keep.sum())
    if not np.any(keep):
        raise DataError(f"{path}: no events fall inside the session window")
    raw, day, tod = raw[keep], day[keep], tod[keep]

    all_days = np.arange(day.min(), day.max() + 1)
    if cal == "weekdays":
        all_days = all_days[((all_days + 4) % 7) < 5]
    day_index = {d: i for i, d in enumerate(all_days)}
    conc = np.array([day_index[d] for d in day]) * day_len + (tod - sess_lo)
    order = np.argsort(conc, kind="stable")
    conc = conc[order]
    bounds = tuple((i * day_len, (i + 1) * day_len)
                   for i in range(len(all_days)))
    # distinct real-valued stamps within the reporting resolution
    seed_series = EventSeries(np.unique(conc), bounds, max(res, 1e-12))
    series = quantize_and_randomize(seed_series, res, seed)
    info = {"n_read": int(raw.size + dropped), "n_dropped": dropped,
            "n_sessions": len(bounds)}
    return series, info


def _load_profile(path) -> IntradayProfile:
    import csv as _csv

    with open(path) as fh:
        rows = list(_csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty profile file")
    try:
        bw = float(rows[0]["bin_width"])
        weights = np.array([float(r["weight"]) for r in rows])
    except (KeyError, ValueError):
        raise ConfigError(f"{path}: expected bin_width/weight columns") from None
    return IntradayProfile(bw, weights / weights.mean())


def _write_profile(path, profile: IntradayProfile) -> None:
    io.write_csv(path, {
        "bin_start": profile.bin_width * np.arange(profile.n_bins),
        "bin_width": np.full(profile.n_bins, profile.bin_width),
        "rate": profile.rates,
        "weight": profile.weights,
    })


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------

def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return int(args.seed)
    return int(np.random.SeedSequence().entropy % (2 ** 63))


def _manifest(out: Path, command: str, config: dict, outputs: list[str]) -> None:
    io.write_json(out / "manifest.json", {
        "command": command,
        "config": config,
        "outputs": outputs,
        "version": __version__,
    })


def _params_from_args(args) -> HawkesParams:
    if args.config:
        return params_from_config(io.read_config_file(args.config))
    if args.kernel == "approx-powerlaw":
        cfg = {"mu": args.mu, "kernel.family": "approx-powerlaw",
               "kernel.n": args.n, "kernel.epsilon": args.epsilon,
               "kernel.tau0": args.tau0, "kernel.m": args.m,
               "kernel.M": args.terms}
    elif args.kernel == "exponential":
        if args.alpha is None or args.beta is None:
            raise ConfigError("exponential kernel needs --alpha and --beta")
        cfg = {"mu": args.mu, "kernel.family": "exponential",
               "kernel.alpha": args.alpha, "kernel.beta": args.beta}
    else:
        raise ConfigError(f"unsupported kernel family {args.kernel!r}")
    return params_from_config({k: str(v) for k, v in cfg.items()})


def _ingest_from_args(args, seed: int) -> tuple[EventSeries, dict]:
    return ingest_events(args.events, seed=seed,
                         resolution=getattr(args, "resolution", None),
                         calendar=getattr(args, "calendar", None))


def cmd_simulate(args) -> int:
    out = _outdir(args)
    seed = _resolve_seed(args)
    params = _params_from_args(args)
    history = None
    if args.history_rate > 0:
        span = args.history_span or 2.0 * args.horizon
        history = poisson_history(args.history_rate, span, seed + 1)
    profile = _load_profile(args.profile) if args.profile else None
    series = simulate(SimulationConfig(
        params=params, horizon=args.horizon, seed=seed, history=history,
        history_rate=args.history_rate, profile=profile,
        max_events=args.max_events))
    io.write_events_v1(out / "events.txt", series)
    io.write_config_file(out / "params.cfg", params_to_config(params))
    cfg = {"horizon": args.horizon, "seed": seed,
           "history_rate": args.history_rate, "n_events": len(series),
           "params": params_to_config(params)}
    _manifest(out, "simulate", cfg, ["events.txt", "params.cfg"])
    print(f"simulate: {len(series)} events -> {out / 'events.txt'}")
    return EXIT_OK


def _run_fit(args, kind: str) -> int:
    out = _outdir(args)
    seed = _resolve_seed(args)
    series, info = _ingest_from_args(args, seed)
    profile = _load_profile(args.profile) if getattr(args, "profile", None) else None
    if kind == "powerlaw":
        fit = mle.fit_powerlaw(series, profile=profile, seed=seed)
    else:
        fit = mle.fit_exponential(series, profile=profile, seed=seed)
    io.write_json(out / "fit.json", fit.to_record())
    cfg = {"events": str(args.events), "seed": seed, "ingest": info}
    _manifest(out, f"fit-{kind}", cfg, ["fit.json"])
    print(f"fit-{kind}: n={fit.n:.4f} loglik={fit.loglik:.2f} "
          f"converged={fit.converged}")
    return EXIT_OK


def cmd_fit_mle(args) -> int:
    return _run_fit(args, "powerlaw")


def cmd_fit_exp(args) -> int:
    return _run_fit(args, "exponential")


def cmd_estimate_kernel(args) -> int:
    out = _outdir(args)
    seed = _resolve_seed(args)
    series, info = _ingest_from_args(args, seed)
    profile = _load_profile(args.profile) if args.profile else None
    h = args.h if args.h is not None else 10.0 * series.resolution
    cov = nonparam.estimate_autocovariance(series, h=h, window=args.window,
                                           profile=profile)
    est = nonparam.invert_kernel(cov)
    io.write_csv(out / "covariance.csv",
                 {"tau": cov.lag_grid, "nu": cov.values})
    io.write_csv(out / "kernel.csv", {
        "tau": est.lags, "phi": est.phi, "cumulative_phi": est.integral,
        "count_per_bin": est.counts,
    })
    cfg = {"events": str(args.events), "seed": seed, "h": h,
           "window": args.window, "n_windows": cov.n_windows,
           "n_skipped": cov.n_skipped, "mean_rate": cov.mean_rate,
           "ingest": info}
    _manifest(out, "estimate-kernel", cfg, ["covariance.csv", "kernel.csv"])
    print(f"estimate-kernel: {cov.n_windows} windows, "
          f"Phi(max)={est.integral[-1]:.3f}")
    return EXIT_OK


def cmd_residuals(args) -> int:
    out = _outdir(args)
    seed = _resolve_seed(args)
    series, info = _ingest_from_args(args, seed)
    params = _params_from_args(args)
    profile = _load_profile(args.profile) if args.profile else None
    rep = diagnostics.residual_transform(series, params, profile)
    io.write_csv(out / "residuals.csv", {"dt_star": rep.transformed_interarrivals})
    io.write_json(out / "summary.json", {
        "ks_distance": rep.ks_distance, "mean": rep.mean,
        "n": rep.transformed_interarrivals.size,
    })
    cfg = {"events": str(args.events), "seed": seed,
           "params": params_to_config(params), "ingest": info}
    _manifest(out, "residuals", cfg, ["residuals.csv", "summary.json"])
    print(f"residuals: KS={rep.ks_distance:.4f} mean={rep.mean:.4f}")
    return EXIT_OK


def cmd_dfa(args) -> int:
    out = _outdir(args)
    seed = _resolve_seed(args)
    series, info = _ingest_from_args(args, seed)
    grid = None
    if args.lmin and args.lmax:
        grid = np.geomspace(args.lmin, args.lmax, args.lcount)
    rep = diagnostics.dfa(series, bin_width=args.bin, window_lengths=grid)
    io.write_csv(out / "dfa.csv", {"L": rep.window_lengths,
                                   "F": rep.fluctuations})
    io.write_json(out / "summary.json", {
        "hurst_low": rep.hurst_low, "hurst_high": rep.hurst_high,
        "hurst_global": rep.hurst_global, "crossover": rep.crossover,
    })
    cfg = {"events": str(args.events), "seed": seed, "bin": args.bin,
           "ingest": info}
    _manifest(out, "dfa", cfg, ["dfa.csv", "summary.json"])
    print(f"dfa: H_low={rep.hurst_low:.3f} H_high={rep.hurst_high:.3f} "
          f"crossover={rep.crossover:.0f}s")
    return EXIT_OK


def cmd_profile(args) -> int:
    out = _outdir(args)
    seed = _resolve_seed(args)
    series, info = _ingest_from_args(args, seed)
    profile = experiments.build_profile(series, bin_width=args.bin_width)
    _write_profile(out / "profile.csv", profile)
    cfg = {"events": str(args.events), "seed": seed,
           "bin_width": args.bin_width, "ingest": info}
    _manifest(out, "profile", cfg, ["profile.csv"])
    print(f"profile: {profile.n_bins} bins -> {out / 'profile.csv'}")
    return EXIT_OK


def cmd_fs_bias(args) -> int:
    out = _outdir(args)
    seed = _resolve_seed(args)
    schedule = experiments.default_tau0_schedule(
        args.periods, args.tau0_start, args.tau0_end)
    cfg_obj = experiments.BiasStudyConfig(
        tau0_schedule=schedule, ensemble_size=args.ensemble,
        window=args.window, randomisation_grid=args.grid, base_seed=seed)
    rows = experiments.fs_bias_study(cfg_obj)
    io.write_csv(out / "bias.csv", {
        "period": [r.period for r in rows],
        "tau0": [r.tau0 for r in rows],
        "mean_n": [r.mean_n for r in rows],
        "std_n": [r.std_n for r in rows],
        "n_ok": [len(r.n_values) for r in rows],
        "n_failed": [r.n_failed for r in rows],
    })
    cfg = {"seed": seed, "ensemble": args.ensemble, "periods": args.periods,
           "window": args.window, "grid": args.grid}
    _manifest(out, "fs-bias", cfg, ["bias.csv"])
    print(f"fs-bias: {len(rows)} periods -> {out / 'bias.csv'}")
    return EXIT_OK


def cmd_campaign(args) -> int:
    out = _outdir(args)
    seed = _resolve_seed(args)
    series, info = _ingest_from_args(args, seed)
    profile = _load_profile(args.profile) if args.profile else None
    fits = experiments.rolling_fit_campaign(series, args.window,
                                            profile=profile,
                                            threads=args.threads, seed=seed)
    records = []
    for i, fit in enumerate(fits):
        if fit is None:
            records.append({"window_index": i, "status": "failed"})
        else:
            rec = fit.to_record()
            rec["window_index"] = i
            rec["status"] = "ok"
            records.append(rec)
    io.write_json(out / "campaign.json", records)
    cfg = {"events": str(args.events), "seed": seed, "window": args.window,
           "ingest": info, "threads": args.threads}
    _manifest(out, "campaign", cfg, ["campaign.json"])
    n_ok = sum(1 for r in records if r["status"] == "ok")
    print(f"campaign: {n_ok}/{len(records)} windows fit")
    return EXIT_OK


def cmd_longlag(args) -> int:
    out = _outdir(args)
    seed = _resolve_seed(args)
    series, info = _ingest_from_args(args, seed)
    est = nonparam.estimate_kernel_integral_longlag(series, bin_width=args.bin)
    cols = {
        "tau": est.lags, "phi": est.phi, "cumulative_phi": est.integral,
        "one_minus_cumulative": est.one_minus_integral,
        "count_per_bin": est.counts,
    }
    if args.epsilon is not None:
        cols["tau_pow_neg_eps"] = est.lags ** (-args.epsilon)
    io.write_csv(out / "longlag.csv", cols)
    cfg = {"events": str(args.events), "seed": seed, "bin": args.bin,
           "epsilon": args.epsilon, "ingest": info}
    _manifest(out, "longlag", cfg, ["longlag.csv"])
    print(f"longlag: Phi(max)={est.integral[-1]:.3f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_ingest_args(p):
    p.add_argument("--events", required=True, help="events-v1 input file")
    p.add_argument("--resolution", type=float, default=None,
                   help="override the file's declared resolution (s)")
    p.add_argument("--calendar", choices=("weekdays", "all"), default=None)


def _add_params_args(p):
    p.add_argument("--config", default=None,
                   help="flat key=value parameter file (kernel.* keys)")
    p.add_argument("--kernel", default="approx-powerlaw",
                   choices=("approx-powerlaw", "exponential"))
    p.add_argument("--mu", type=float, default=0.02)
    p.add_argument("--n", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.15)
    p.add_argument("--tau0", type=float, default=0.01)
    p.add_argument("--m", type=float, default=5.0)
    p.add_argument("--terms", type=int, default=15, help="number of "
                   "positive exponential terms (M)")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hawkeslab",
        description="Self-exciting point-process toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw one realisation")
    _add_params_args(p)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--history-rate", type=float, default=0.0)
    p.add_argument("--history-span", type=float, default=None)
    p.add_argument("--profile", default=None, help="profile.csv for detrended run")
    p.add_argument("--max-events", type=int, default=100_000_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    for name, fn in (("fit-mle", cmd_fit_mle), ("fit-exp", cmd_fit_exp)):
        p = sub.add_parser(name, help=f"{name} on an event file")
        _add_ingest_args(p)
        p.add_argument("--profile", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", required=True)
        p.set_defaults(func=fn)

    p = sub.add_parser("estimate-kernel", help="non-parametric kernel estimate")
    _add_ingest_args(p)
    p.add_argument("--h", type=float, default=None, help="sampling bin (s)")
    p.add_argument("--window", type=float, default=2700.0)
    p.add_argument("--profile", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate_kernel)

    p = sub.add_parser("residuals", help="time-rescaling goodness of fit")
    _add_ingest_args(p)
    _add_params_args(p)
    p.add_argument("--profile", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_residuals)

    p = sub.add_parser("dfa", help="detrended fluctuation analysis")
    _add_ingest_args(p)
    p.add_argument("--bin", type=float, default=0.1)
    p.add_argument("--lmin", type=float, default=None)
    p.add_argument("--lmax", type=float, default=None)
    p.add_argument("--lcount", type=int, default=24)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dfa)

    p = sub.add_parser("profile", help="build an intraday activity profile")
    _add_ingest_args(p)
    p.add_argument("--bin-width", type=float, default=300.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("fs-bias", help="exponential-fit bias replication")
    p.add_argument("--ensemble", type=int, default=25)
    p.add_argument("--periods", type=int, default=14)
    p.add_argument("--tau0-start", type=float, default=1.0)
    p.add_argument("--tau0-end", type=float, default=1e-3)
    p.add_argument("--window", type=float, default=1800.0)
    p.add_argument("--grid", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fs_bias)

    p = sub.add_parser("campaign", help="rolling window power-law fits")
    _add_ingest_args(p)
    p.add_argument("--window", type=float, required=True)
    p.add_argument("--profile", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("longlag", help="coarse-binned kernel integral")
    _add_ingest_args(p)
    p.add_argument("--bin", type=float, default=300.0)
    p.add_argument("--epsilon", type=float, default=None,
                   help="also emit tau^-epsilon for the inset axis")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_longlag)

    return parser


def run(argv: list[str]) -> int:
    """Parse and execute; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HawkesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
