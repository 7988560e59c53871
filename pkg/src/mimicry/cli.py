"""Command-line entry point.

Exit codes: 0 success, 2 invalid input or failed fit, 3 internal numeric
failure. Every command writes ``metadata.json`` into the output directory,
including on failure; ``mimicry replay <metadata.json>`` re-runs it.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from ._csv import fmt, write_csv
from .estimation import DEFAULT_MIN_DAYS, FitError, chi2_gof, fit_symmetric, kde, positive_fraction
from .model import ModelParams, effective_params, stationary_pmf
from .netsim import SimConfig, TopologyError, build_topology, run_replicas
from .pipeline import (
    IngestError,
    detect_warnings,
    evaluate_events,
    ingest_returns,
    normalized_change,
    permutation_pvalue,
    read_crashes,
    read_fractions,
    read_indicator,
    read_schedule,
    read_windows,
    rolling_indicator,
    synth_market,
    write_returns,
    write_windows,
)
from . import validate as validate_mod

log = logging.getLogger("mimicry")

USER_ERRORS = (FileNotFoundError, IngestError, FitError, TopologyError, ValueError)


class _Run:
    """Collects inputs and outputs of one command for the metadata sidecar."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.out = Path(args.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.inputs = {}
        self.outputs = []

    def input(self, path):
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"input file not found: {path}")
        self.inputs[str(path)] = hashlib.sha256(path.read_bytes()).hexdigest()
        return path

    def path(self, name):
        self.outputs.append(name)
        return self.out / name

    def write_text(self, name, lines):
        with open(self.path(name), "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    def metadata(self, status, error=None):
        params = {k: v for k, v in sorted(vars(self.args).items()) if k not in ("func", "config")}
        meta = {
            "command": self.args.command,
            "version": __version__,
            "argv": self.argv,
            "parameters": params,
            "seed": getattr(self.args, "seed", None),
            "inputs": self.inputs,
            "outputs": self.outputs,
            "status": status,
        }
        if error is not None:
            meta["error"] = error
        with open(self.out / "metadata.json", "w", newline="\n") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


def _load_series(run, path, min_stocks):
    path = run.input(path)
    with path.open() as fh:
        header = fh.readline().strip()
    if header == "date,n_up,n_total":
        return read_fractions(path, min_stocks=min_stocks)
    return positive_fraction(ingest_returns(path), min_stocks=min_stocks)


def _window(args, series):
    start = args.window_start or pd.Timestamp(series.dates[0])
    end = args.window_end or pd.Timestamp(series.dates[-1]) + pd.Timedelta(days=1)
    return pd.Timestamp(start), pd.Timestamp(end)


def cmd_fit(run):
    a = run.args
    series = _load_series(run, a.input, a.min_stocks)
    window = _window(a, series)
    res = fit_symmetric(series, window, n_boot=a.n_boot, block_len=a.block_len, seed=a.seed, min_days=a.min_days)
    write_csv(
        run.path("fit.csv"),
        ["window_start", "window_end", "u_eq_d", "stderr", "n_ref", "n_days", "c2"],
        [(f"{window[0]:%Y-%m-%d}", f"{window[1]:%Y-%m-%d}", res.u_eq_d, res.stderr, res.n_ref, res.n_days, res.c2)],
    )
    gof = chi2_gof(series, window, res.params)
    gof.to_csv(run.path("gof.csv"), res.n_ref)
    kde(series, window, sigma=a.sigma, params=res.params).to_csv(run.path("density.csv"))
    print(f"U = D = {fmt(res.u_eq_d)} +/- {fmt(res.stderr)} (chi2 p = {gof.p_value:.3g})")


def cmd_export_density(run):
    a = run.args
    series = _load_series(run, a.input, a.min_stocks)
    window = _window(a, series)
    params = None
    if a.u is not None:
        n_ref = int(round(float(np.median(series.window(*window).n_day))))
        params = ModelParams(n_ref, a.u, a.d if a.d is not None else a.u)
    kde(series, window, sigma=a.sigma, grid_points=a.grid_points, params=params,
        model_mode=a.model_mode).to_csv(run.path("density.csv"))


def cmd_simulate(run):
    a = run.args
    if a.topology == "edges":
        topo = build_topology("edges", a.n_nodes, path=run.input(a.edges))
    else:
        topo = build_topology(a.topology, a.n_nodes, k=a.k, seed=a.seed)
    cfg = SimConfig(a.burn_in, a.samples, a.thin, a.seed, a.p)
    reps = run_replicas(topo, a.u, a.d, cfg, a.replicas, threads=a.threads)
    dist = reps[0]
    for r in reps[1:]:
        dist = dist.merge(r)
    dist.to_csv(run.path("histogram.csv"))
    u_ef, d_ef = effective_params(a.u, a.d, topo)
    lines = [f"topology={topo.kind} n_nodes={topo.n_nodes} k_av={fmt(topo.k_av)} f={fmt(topo.rescale_factor)}",
             f"samples={dist.n_samples}"]
    if u_ef > 0 and d_ef > 0:
        tv = dist.tv_distance(stationary_pmf(ModelParams(topo.n_nodes, u_ef, d_ef)).probs)
        label = "tv_exact" if topo.kind == "full" else "tv_effective"
        lines.append(f"{label}={fmt(tv)} u_ef={fmt(u_ef)} d_ef={fmt(d_ef)}")
    run.write_text("report.txt", lines)
    print("\n".join(lines))


def cmd_indicator(run):
    a = run.args
    series = _load_series(run, a.input, a.min_stocks)
    ind = rolling_indicator(series, a.step, n_boot=a.n_boot, block_len=a.block_len, seed=a.seed,
                            min_days=a.min_days, threads=a.threads)
    ind.to_csv(run.path("indicator.csv"))
    if ind.gaps:
        write_csv(run.path("indicator_gaps.csv"), ["date", "reason"],
                  [(str(d), why.replace(",", ";").replace("\n", " ")) for d, why in ind.gaps])
    print(f"{len(ind)} indicator points, {len(ind.gaps)} failed fits")


def cmd_detect(run):
    a = run.args
    ind = read_indicator(run.input(a.input))
    signal = normalized_change(ind, order=a.signal_order)
    signal.to_csv(run.path("signal.csv"))
    if a.windows:
        windows = read_windows(run.input(a.windows))
    else:
        windows = detect_warnings(signal, threshold=a.threshold)
    write_windows(windows, run.path("windows.csv"))
    print(f"{len(windows)} warning window(s)")
    if a.crashes:
        crashes = read_crashes(run.input(a.crashes))
        start = pd.Timestamp(a.study_start) if a.study_start else pd.Timestamp(ind.dates[0])
        end = pd.Timestamp(a.study_end) if a.study_end else pd.Timestamp(ind.dates[-1]) + pd.Timedelta(days=1)
        report = evaluate_events(windows, crashes, (start, end))
        lines = [f"study_period={start:%Y-%m-%d}..{end:%Y-%m-%d}"] + report.lines()
        if windows:
            perm = permutation_pvalue(windows, crashes, (start, end), n_trials=a.n_trials, mode=a.mode, seed=a.seed)
            lines.append(f"permutation mode={perm.mode} trials={perm.n_trials} observed_hits={perm.observed_hits} "
                         f"p={fmt(perm.p_value)} wilson95=[{fmt(perm.ci_low)},{fmt(perm.ci_high)}]")
        run.write_text("evaluation.txt", lines)
        print("\n".join(lines))


def cmd_gensynth(run):
    a = run.args
    schedule = read_schedule(run.input(a.schedule))
    returns = synth_market(schedule, a.n_stocks, a.days, a.seed, sweeps_per_day=a.sweeps_per_day)
    write_returns(returns, run.path("returns.csv"))
    print(f"{len(returns)} records")


def cmd_validate(run):
    results = validate_mod.run_checks(seed=run.args.seed)
    lines = [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in results]
    run.write_text("validate.txt", lines)
    print("\n".join(lines))
    if not all(ok for _, ok, _ in results):
        raise ArithmeticError("identity checks failed")


def _common(p, seed=True):
    p.add_argument("--output-dir", default=".", help="directory for output files (default: current)")
    p.add_argument("--config", help="key=value file; flags given on the command line win")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("-v", "--verbose", action="count", default=0)
    if seed:
        p.add_argument("--seed", type=int, default=0)


def _data_flags(p):
    p.add_argument("--input", required=True, help="returns CSV (date,ticker,return) or fractions CSV (date,n_up,n_total)")
    p.add_argument("--min-stocks", type=int, default=140)
    p.add_argument("--min-days", type=int, default=DEFAULT_MIN_DAYS)
    p.add_argument("--n-boot", type=int, default=1000)
    p.add_argument("--block-len", type=int, default=20)


def build_parser():
    parser = argparse.ArgumentParser(prog="mimicry", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit U = D in a window; write fit, chi-square and density CSVs")
    _common(p)
    _data_flags(p)
    p.add_argument("--window-start")
    p.add_argument("--window-end")
    p.add_argument("--sigma", type=float, default=0.06)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("export-density", help="kernel density of daily fractions with optional model overlay")
    _common(p)
    _data_flags(p)
    p.add_argument("--window-start")
    p.add_argument("--window-end")
    p.add_argument("--sigma", type=float, default=0.06)
    p.add_argument("--grid-points", type=int, default=512)
    p.add_argument("-u", type=float, help="overlay the model with this U (and D unless given)")
    p.add_argument("-d", type=float)
    p.add_argument("--model-mode", choices=["smoothed", "raw"], default="smoothed")
    p.set_defaults(func=cmd_export_density)

    p = sub.add_parser("simulate", help="Monte Carlo histogram of the up-count")
    _common(p)
    p.add_argument("--topology", choices=["full", "regular", "edges"], default="full")
    p.add_argument("--n-nodes", type=int)
    p.add_argument("--k", type=int, help="degree for --topology regular")
    p.add_argument("--edges", help="edge-list file for --topology edges")
    p.add_argument("-u", type=int, required=True)
    p.add_argument("-d", type=int, required=True)
    p.add_argument("-p", type=float, default=0.0)
    p.add_argument("--burn-in", type=int, default=1000, help="burn-in sweeps")
    p.add_argument("--samples", type=int, default=100_000, help="samples per replica")
    p.add_argument("--thin", type=int, default=1, help="sweeps between samples")
    p.add_argument("--replicas", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("indicator", help="rolling 12-month U(t)")
    _common(p)
    _data_flags(p)
    p.add_argument("--step", choices=["daily", "weekly", "monthly"], default="daily")
    p.set_defaults(func=cmd_indicator)

    p = sub.add_parser("detect", help="annual-change signal, warning windows and crash evaluation")
    _common(p)
    p.add_argument("--input", required=True, help="indicator CSV")
    p.add_argument("--threshold", type=float, default=2.0)
    p.add_argument("--signal-order", choices=["normalize-first", "average-first"], default="normalize-first")
    p.add_argument("--crashes", help="crash list (date,label)")
    p.add_argument("--windows", help="use these windows (start,end,trigger_date,trigger_value) instead of detecting")
    p.add_argument("--study-start")
    p.add_argument("--study-end")
    p.add_argument("--mode", choices=["shift-windows", "shift-crashes"], default="shift-windows")
    p.add_argument("--n-trials", type=int, default=10**6)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("gen-synth", help="synthetic returns from a U, D schedule")
    _common(p)
    p.add_argument("--schedule", required=True, help="CSV start,end,u,d[,p]")
    p.add_argument("--n-stocks", type=int, required=True)
    p.add_argument("--days", type=int, required=True)
    p.add_argument("--sweeps-per-day", type=int)
    p.set_defaults(func=cmd_gensynth)

    p = sub.add_parser("validate", help="check the exact identities of the model")
    _common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("replay", help="re-run the command recorded in a metadata.json")
    p.add_argument("metadata")
    return parser


def _read_config(path):
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}: line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _parse(parser, argv):
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, raw in _read_config(args.config).items():
            if key not in known:
                raise ValueError(f"{args.config}: unknown key {key!r}")
            conv = known[key].type or str
            defaults[key] = conv(raw)
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _parse(parser, argv)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "replay":
        try:
            meta = json.loads(Path(args.metadata).read_text())
        except (OSError, ValueError) as exc:
            print(f"error: cannot read {args.metadata}: {exc}", file=sys.stderr)
            return 2
        return main(meta["argv"])
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    run = _Run(args, argv)
    try:
        args.func(run)
    except USER_ERRORS as exc:
        run.metadata("error", str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # numeric failure inside a module
        run.metadata("error", f"{type(exc).__name__}: {exc}")
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    run.metadata("ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
