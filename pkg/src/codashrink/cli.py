"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, io
from .codata import CoDataError, Dataset, encode_codata, to_group_structure
from .experiments import ExperimentConfig, bundled_config, run
from .lasso import SolverError, gal_penalties, lasso_select
from .metrics import MetricError, f1_at, roc
from .ridge_eb import NumericalError, ShrinkConfig, fit_codata_alpha, fit_single_penalty
from .sgl import sgl_path_select
from .simgen import SCENARIOS, generate
from .spike_slab import VBError, guided_ss_pipeline

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
log = logging.getLogger("codashrink")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, out_required: bool = True) -> None:
    g = p.add_argument_group("common options")
    g.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    g.add_argument("--out", required=out_required, default=None,
                   help="output directory (created if missing)")
    g.add_argument("--config", default=None,
                   help="JSON file of option defaults; command-line flags override it")
    g.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: $CODASHRINK_JOBS or 1)")
    g.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")


def _data_args(p, codata=False):
    p.add_argument("--x", required=True, help="design matrix CSV (no header, rows = samples)")
    p.add_argument("--y", required=True, help="response CSV (one value per line)")
    if codata:
        p.add_argument("--codata", default="",
                       help="comma-separated co-data CSV files ('<label>,<kind>' header)")


def _shrink_args(p):
    p.add_argument("--shrink", action="store_true",
                   help="targeted shrinkage of group log-penalties (grouped co-data only)")
    p.add_argument("--shrink-scale", type=float, default=1.0,
                   help="scale of the Laplace shrinkage prior (default 1)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="codashrink", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"codashrink {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a seeded simulation bundle")
    p.add_argument("--scenario", required=True, choices=SCENARIOS, help="simulation design")
    p.add_argument("--n", type=int, default=None, help="samples (scenario default)")
    p.add_argument("--p", type=int, default=None, help="features (scenario default)")
    p.add_argument("--G", type=int, default=None, help="groups (grouped scenarios)")
    p.add_argument("--n-signal-groups", type=int, default=None, help="group_sparse only")
    p.add_argument("--noise-sd", type=float, default=None, help="snp only (default 0)")
    _common(p)

    p = sub.add_parser("fit-ridge-eb", help="empirical-Bayes ridge penalties from co-data")
    _data_args(p, codata=True)
    _shrink_args(p)
    p.add_argument("--center", action="store_true", help="centre X and y first")
    _common(p)

    p = sub.add_parser("fit-gal", help="group-adaptive lasso selection")
    _data_args(p)
    p.add_argument("--groups", required=True, help="grouped co-data CSV")
    p.add_argument("--p-sel", type=int, required=True, help="number of features to select")
    _shrink_args(p)
    p.add_argument("--path", action="store_true", help="also write the long-format path")
    _common(p)

    p = sub.add_parser("fit-sgl", help="sparse group-lasso selection")
    _data_args(p)
    p.add_argument("--groups", required=True, help="grouped co-data CSV")
    p.add_argument("--p-sel", type=int, required=True, help="number of features to select")
    p.add_argument("--alpha-mix", type=float, default=0.95,
                   help="lasso share of the penalty (default 0.95)")
    p.add_argument("--path", action="store_true", help="also write the long-format path")
    _common(p)

    p = sub.add_parser("fit-ssvb", help="co-data guided spike-and-slab VB")
    _data_args(p, codata=True)
    p.add_argument("--qbar", type=float, default=0.01, help="mean prior inclusion (0.01)")
    p.add_argument("--tau2", type=float, default=0.25, help="slab variance (0.25)")
    p.add_argument("--sigma2", default="estimate",
                   help="noise variance: a positive number or 'estimate' (default)")
    p.add_argument("--no-center", action="store_true", help="do not centre X and y")
    p.add_argument("--tol", type=float, default=1e-6, help="max |delta incl| to stop")
    p.add_argument("--max-sweeps", type=int, default=1000, help="sweep limit (1000)")
    _common(p)

    p = sub.add_parser("eval", help="score a selection (F1) or a ranking (ROC/AUC)")
    p.add_argument("--truth", required=True,
                   help="true coefficients CSV; non-zero entries are the support")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--selected", help="selected features, 1-based, one per line")
    grp.add_argument("--scores", help="feature scores CSV")
    p.add_argument("--score-column", default=None,
                   help="column name when --scores has a header (e.g. incl)")
    _common(p)

    p = sub.add_parser("reproduce", help="run a bundled simulation experiment")
    p.add_argument("experiment", choices=("fig3", "supplement", "roc"), help="which experiment")
    p.add_argument("--desk", action="store_true", help="reduced desk-scale configuration")
    _common(p, out_required=False)
    return ap


# option defaults from --config ------------------------------------------------

def _apply_config_defaults(ap, argv):
    """Parse ``argv``; a --config JSON supplies defaults (non-reproduce commands)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre.add_argument("command", nargs="?")
    known, _ = pre.parse_known_args(argv)
    if known.config is None or known.command not in COMMANDS or known.command == "reproduce":
        return ap.parse_args(argv)
    try:
        with open(known.config) as fh:
            conf = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read config {known.config}: {e}")
    if not isinstance(conf, dict):
        raise DataError("config must be a JSON object")
    conf = {k.replace("-", "_"): v for k, v in conf.items()}
    sp = ap._subparsers._group_actions[0].choices[known.command]
    dests = {act.dest for act in sp._actions}
    unknown = sorted(set(conf) - dests)
    if unknown:
        raise UsageError(f"unknown config keys: {unknown}")
    sp.set_defaults(**conf)
    # flags supplied by the config no longer have to be on the command line
    for act in sp._actions:
        if act.dest in conf:
            act.required = False
    return ap.parse_args(argv)


# helpers ---------------------------------------------------------------------

def _check_inputs(*paths):
    for pth in paths:
        if pth and not os.path.isfile(pth):
            raise DataError(f"input file not found: {pth}")


def _outdir(path) -> Path:
    try:
        return io.ensure_dir(path)
    except OSError as e:
        raise DataError(f"cannot create output directory {path}: {e.strerror}")


def _codata_paths(arg: str):
    return [s for s in (t.strip() for t in arg.split(",")) if s]


def _load_dataset(args) -> Dataset:
    X = io.read_matrix(args.x)
    y = io.read_vector(args.y)
    return Dataset(X, y)


def _write_coefs(out, beta):
    io.write_rows(out / "coefficients.csv", ((j + 1, b) for j, b in enumerate(beta)),
                  header=("j", "beta"))


def _write_path(out, cp):
    rows = ((t, j + 1, b[j]) for t, b in zip(cp.t_grid, cp.betas) for j in np.flatnonzero(b))
    io.write_rows(out / "path.csv", rows, header=("t", "j", "beta"))


# commands ---------------------------------------------------------------------

def cmd_simulate(args) -> int:
    params = {k: v for k, v in (("n", args.n), ("p", args.p), ("G", args.G),
                                ("n_signal_groups", args.n_signal_groups),
                                ("noise_sd", args.noise_sd)) if v is not None}
    allowed = {"main": {"n", "p", "G"}, "null_groups": {"n", "p", "G"},
               "group_sparse": {"n", "p", "G", "n_signal_groups"},
               "snp": {"n", "p", "noise_sd"}}[args.scenario]
    bad = sorted(set(params) - allowed)
    if bad:
        raise UsageError(f"options {bad} do not apply to scenario {args.scenario}")
    out = _outdir(args.out)
    inst = generate(args.scenario, seed=args.seed or 0, **params)
    io.write_matrix(out / "X.csv", inst.d.X)
    io.write_vector(out / "y.csv", inst.d.y)
    io.write_vector(out / "beta_true.csv", inst.beta_true)
    files = ["X.csv", "y.csv", "beta_true.csv"]
    for src in inst.codata:
        name = "groups.csv" if src.label == "groups" else f"{src.label}.csv"
        io.write_codata(out / name, src)
        files.append(name)
    io.write_json(out / "manifest.json", {
        "scenario": inst.scenario, "seed": inst.seed, "params": inst.params,
        "checksum": inst.checksum(), "files": files, "notes": list(inst.notes),
        "version": __version__})
    print(f"wrote {len(files)} files and manifest.json to {out}")
    return EXIT_OK


def cmd_fit_ridge_eb(args) -> int:
    paths = _codata_paths(args.codata)
    _check_inputs(args.x, args.y, *paths)
    out = _outdir(args.out)
    d = _load_dataset(args)
    if args.center:
        d = d.centered()
    sources = [io.read_codata(pth) for pth in paths]
    single = fit_single_penalty(d)
    if sources:
        Z = encode_codata(sources, d.p)
        shrink = ShrinkConfig(True, scale=args.shrink_scale) if args.shrink else None
        fit = fit_codata_alpha(d, Z, shrink, single=single) if Z.C > 1 else single
    else:
        if args.shrink:
            raise UsageError("--shrink needs grouped co-data")
        fit = single
    io.write_json(out / "penalty_fit.json", fit.to_dict())
    io.write_vector(out / "lambda.csv", 1.0 / fit.v)
    print(f"logml={fit.logml:.6g} sigma2={fit.sigma2:.6g} converged={fit.converged}")
    return EXIT_OK


def _load_groups(path, p):
    src = io.read_codata(path)
    if src.kind != "grouped":
        raise DataError(f"{path}: group file must have kind 'grouped'")
    gs = to_group_structure(src)
    if gs.p != p:
        raise DataError(f"{path}: {gs.p} group labels for {p} features")
    return gs


def cmd_fit_gal(args) -> int:
    _check_inputs(args.x, args.y, args.groups)
    out = _outdir(args.out)
    d = _load_dataset(args)
    groups = _load_groups(args.groups, d.p)
    if not 0 <= args.p_sel <= d.p:
        raise UsageError(f"--p-sel must lie in [0, {d.p}]")
    shrink = ShrinkConfig(True, scale=args.shrink_scale) if args.shrink else None
    gamma, fit = gal_penalties(d, groups, shrink)
    res = lasso_select(d, args.p_sel, gamma)
    io.write_vector(out / "selected.csv", res.selected + 1)
    _write_coefs(out, res.beta)
    io.write_vector(out / "penalties.csv", gamma)
    io.write_json(out / "penalty_fit.json", fit.to_dict())
    if args.path:
        _write_path(out, res.path)
    print(f"selected {res.selected.size} features")
    return EXIT_OK


def cmd_fit_sgl(args) -> int:
    _check_inputs(args.x, args.y, args.groups)
    out = _outdir(args.out)
    d = _load_dataset(args)
    groups = _load_groups(args.groups, d.p)
    if not 0 <= args.p_sel <= d.p:
        raise UsageError(f"--p-sel must lie in [0, {d.p}]")
    if not 0 <= args.alpha_mix <= 1:
        raise UsageError("--alpha-mix must lie in [0, 1]")
    res = sgl_path_select(d, groups, args.p_sel, args.alpha_mix)
    io.write_vector(out / "selected.csv", res.selected + 1)
    _write_coefs(out, res.beta)
    if args.path:
        _write_path(out, res.path)
    print(f"selected {res.selected.size} features")
    return EXIT_OK


def cmd_fit_ssvb(args) -> int:
    paths = _codata_paths(args.codata)
    if args.sigma2 == "estimate":
        sigma2 = "estimate"
    else:
        try:
            sigma2 = float(args.sigma2)
        except ValueError:
            raise UsageError("--sigma2 must be a positive number or 'estimate'")
        if not sigma2 > 0:
            raise UsageError("--sigma2 must be positive")
    if not 0 < args.qbar < 1 or not args.tau2 > 0:
        raise UsageError("need 0 < --qbar < 1 and --tau2 > 0")
    _check_inputs(args.x, args.y, *paths)
    out = _outdir(args.out)
    d = _load_dataset(args)
    sources = [io.read_codata(pth) for pth in paths]
    res = guided_ss_pipeline(d, sources, args.qbar, args.tau2, sigma2,
                             center=not args.no_center, tol=args.tol,
                             max_sweeps=args.max_sweeps)
    post = res.posterior
    io.write_rows(out / "posterior.csv",
                  zip(range(1, d.p + 1), post.incl, post.mu, post.s2),
                  header=("j", "incl", "mu", "s2"))
    io.write_rows(out / "elbo.csv", enumerate(post.elbo_trace, 1), header=("sweep", "elbo"))
    io.write_vector(out / "prior_q.csv", res.q)
    summary = {"sigma2": post.sigma2, "converged": post.converged, "sweeps": post.sweeps,
               "elbo": post.elbo_trace[-1] if post.elbo_trace else None}
    if res.penalty_fit is not None:
        summary["penalty_fit"] = res.penalty_fit.to_dict()
        summary["clipped_q"] = res.transfer.clipped_count
    io.write_json(out / "summary.json", summary)
    print(f"sweeps={post.sweeps} converged={post.converged} sigma2={post.sigma2:.6g}")
    return EXIT_OK


def _read_scores(path, column):
    if column is None:
        return io.read_vector(path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or column not in rows[0]:
        raise DataError(f"{path}:1: no column named {column!r}")
    k = rows[0].index(column)
    vals = []
    for i, r in enumerate(rows[1:], 2):
        try:
            vals.append(float(r[k]))
        except (ValueError, IndexError):
            raise DataError(f"{path}:{i}: bad value in column {column!r}")
    return np.array(vals)


def cmd_eval(args) -> int:
    _check_inputs(args.truth, args.selected, args.scores)
    out = _outdir(args.out)
    beta = io.read_vector(args.truth)
    support = np.flatnonzero(beta)
    p = beta.size
    if args.selected:
        idx = io.read_vector(args.selected)
        if np.any(idx != np.round(idx)) or np.any(idx < 1) or np.any(idx > p):
            raise DataError(f"{args.selected}: indices must be integers in 1..{p}")
        ev = f1_at(idx.astype(np.int64) - 1, support, p)
        res = {"tp": ev.tp, "fp": ev.fp, "fn": ev.fn, "tn": ev.tn,
               "precision": ev.precision, "recall": ev.recall, "f1": ev.f1}
    else:
        s = _read_scores(args.scores, args.score_column)
        if s.size != p:
            raise DataError(f"{args.scores}: {s.size} scores for {p} features")
        cur = roc(s, support)
        res = {"auc": cur.auc, "degenerate": cur.degenerate, "n_points": int(cur.fpr.size)}
        io.write_rows(out / "roc.csv", zip(cur.fpr, cur.tpr), header=("fpr", "tpr"))
    io.write_json(out / "eval.json", res)
    print(json.dumps(res, sort_keys=True))
    return EXIT_OK


def cmd_reproduce(args) -> int:
    if args.config:
        _check_inputs(args.config)
        try:
            cfg = ExperimentConfig.from_json(args.config)
        except json.JSONDecodeError as e:
            raise DataError(f"{args.config}:{e.lineno}: invalid JSON: {e.msg}")
        except (TypeError, ValueError) as e:
            raise UsageError(f"invalid config {args.config}: {e}")
        if cfg.experiment != args.experiment:
            raise UsageError(f"config is for {cfg.experiment!r}, not {args.experiment!r}")
    else:
        cfg = bundled_config(args.experiment, desk=args.desk)
    out = args.out or cfg.output_dir or os.path.join(
        "results", args.experiment + ("_desk" if args.desk else ""))
    _outdir(out)
    cfg = cfg.replace(base_seed=args.seed if args.seed is not None else cfg.base_seed,
                      output_dir=str(out))
    rep = run(cfg, jobs=args.jobs)
    print(f"{args.experiment}: {len(rep.rows)} rows, {rep.n_failed} failed, "
          f"{rep.elapsed:.1f}s, written to {out}")
    return EXIT_NUMERIC if rep.n_failed else EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fit-ridge-eb": cmd_fit_ridge_eb,
            "fit-gal": cmd_fit_gal, "fit-sgl": cmd_fit_sgl, "fit-ssvb": cmd_fit_ssvb,
            "eval": cmd_eval, "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = _apply_config_defaults(ap, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.jobs is not None and args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        return COMMANDS[args.command](args)
    except SystemExit as e:  # argparse: --help, --version or a bad command line
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except UsageError as e:
        print(f"codashrink: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, VBError, SolverError, FloatingPointError,
            np.linalg.LinAlgError) as e:
        print(f"codashrink: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, io.DataFileError, CoDataError, MetricError, ValueError, OSError) as e:
        print(f"codashrink: data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
