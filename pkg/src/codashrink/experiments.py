"""End-to-end simulation experiments with seed management and aggregation.

Three experiments:

* ``fig3``: F1 of group-adaptive lasso and sparse group-lasso against the
  number of groups G;
* ``supplement``: plain lasso, group-adaptive lasso and targeted group-adaptive
  lasso on non-informative and informative groupings, plus optionally the
  group-sparse design;
* ``roc``: spike-and-slab VB with no co-data, each co-data source, and both.

Each repeat uses a seed derived from ``(base_seed, scenario, G, repeat)`` and
runs in a worker pool. A failing method is logged and recorded as a failed
row; the run continues.
"""
from __future__ import annotations

import concurrent.futures as cf
import dataclasses
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, _kernels, io, svg
from .codata import GroupStructure
from .lasso import (WeightedLassoProblem, gal_penalties, path_to_size, select_to_size)
from .metrics import f1_at, roc
from .ridge_eb import ShrinkConfig
from .rng import derive_seed
from .sgl import sgl_path_to_size
from .simgen import gen_group_sparse, gen_main, gen_null_groups, gen_snp, largest_divisible
from .spike_slab import guided_ss_pipeline

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("scenario", "G", "p", "method", "p_sel", "repeat", "seed",
                  "metric", "value", "status")
AGG_COLUMNS = ("scenario", "G", "method", "p_sel", "metric", "n_ok", "n_failed",
               "mean", "sd", "q25", "median", "q75")
ROC_CONFIGS = ("benchmark", "z1", "z2", "both")


@dataclass
class ExperimentConfig:
    experiment: str = "fig3"
    n: int = 200
    p: int = 2000
    G_list: list = field(default_factory=lambda: [3, 6, 9, 15, 24, 39, 60, 99])
    p_sel_list: list = field(default_factory=lambda: [25, 50])
    repeats: int = 25
    alpha_mix: float = 0.95
    shrink_scale: float = 1.0
    null_G_list: list = field(default_factory=lambda: [6, 15, 39, 60])
    informative_G_list: list = field(default_factory=lambda: [6, 15, 39, 60])
    sparse_G_list: list = field(default_factory=list)
    sparse_p: int = 10000
    n_signal_groups: int = 5
    snp_n: int = 500
    snp_p: int = 10000
    snp_noise_sd: float = 0.0
    q_bar: float = 0.01
    tau2: float = 0.25
    grid_size: int = 100
    ratio: float = 1e-3
    base_seed: int = 0
    output_dir: str | None = None

    def __post_init__(self):
        if self.experiment not in ("fig3", "supplement", "roc"):
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        for G in list(self.G_list) + list(self.null_G_list) + list(self.informative_G_list):
            if G < 1 or G > self.p:
                raise ValueError(f"G={G} is outside [1, p]")
        for k in self.p_sel_list:
            if not 0 <= k <= largest_divisible(self.p, max([1] + list(self.G_list))):
                raise ValueError(f"p_sel={k} exceeds p")
        if not 0 < self.q_bar < 1 or self.tau2 <= 0:
            raise ValueError("need 0 < q_bar < 1 and tau2 > 0")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


PAPER_CONFIGS = {
    "fig3": ExperimentConfig("fig3"),
    "supplement": ExperimentConfig("supplement", G_list=[], sparse_G_list=[60, 99]),
    "roc": ExperimentConfig("roc", G_list=[], p_sel_list=[], repeats=1),
}
DESK_CONFIGS = {
    "fig3": ExperimentConfig("fig3", G_list=[3, 6, 99], p_sel_list=[50], repeats=10),
    "supplement": ExperimentConfig("supplement", G_list=[], p_sel_list=[50], repeats=10,
                                   null_G_list=[60], informative_G_list=[6, 15]),
    "roc": ExperimentConfig("roc", G_list=[], p_sel_list=[], repeats=3),
}


def bundled_config(experiment: str, desk: bool = False) -> ExperimentConfig:
    table = DESK_CONFIGS if desk else PAPER_CONFIGS
    if experiment not in table:
        raise ValueError(f"unknown experiment {experiment!r}")
    return table[experiment].replace()


@dataclass
class ExperimentReport:
    experiment: str
    rows: list
    aggregate: list
    seeds: list
    tables: dict = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def n_failed(self) -> int:
        return sum(r["status"] != "ok" for r in self.rows)

    def values(self, **match) -> np.ndarray:
        """Successful metric values of rows matching all ``key=value`` pairs."""
        out = [r["value"] for r in self.rows if r["status"] == "ok"
               and all(r[k] == v for k, v in match.items())]
        return np.array(out, dtype=float)

    def mean(self, **match) -> float:
        v = self.values(**match)
        return float(v.mean()) if v.size else float("nan")


def resolve_jobs(jobs: int | None = None) -> int:
    if jobs is None:
        env = os.environ.get("CODASHRINK_JOBS", "").strip()
        jobs = int(env) if env else 1
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    return jobs


def _row(scenario, G, p, method, p_sel, repeat, seed, metric, value, status="ok"):
    return {"scenario": scenario, "G": G, "p": p, "method": method, "p_sel": p_sel,
            "repeat": repeat, "seed": seed, "metric": metric, "value": value,
            "status": status}


def _failed(err: Exception) -> str:
    msg = " ".join(str(err).split())[:160]
    return f"failed: {type(err).__name__}: {msg}"


def _f1_rows(inst, method, compute, p_sel_list, base):
    """Run ``compute() -> CoefPath`` once and score F1 at every p_sel."""
    try:
        cp = compute()
        out = []
        for k in p_sel_list:
            sel = select_to_size(cp, k)
            out.append(_row(*base[:3], method, k, *base[3:], "f1",
                            f1_at(sel, inst.support, inst.d.p).f1))
        return out
    except Exception as e:  # isolate one method's failure
        log.warning("%s %s G=%s repeat=%s failed: %s", base[0], method, base[1], base[3], e)
        return [_row(*base[:3], method, k, *base[3:], "f1", None, _failed(e))
                for k in p_sel_list]


def _gal_path(cfg, inst, shrink, top):
    gamma, _ = gal_penalties(inst.d, inst.groups, shrink)
    return path_to_size(WeightedLassoProblem(inst.d, gamma), top, cfg.grid_size, cfg.ratio)


def _lasso_path(cfg, inst, top):
    return path_to_size(WeightedLassoProblem(inst.d, np.ones(inst.d.p)), top,
                        cfg.grid_size, cfg.ratio)


def _sgl_path(cfg, inst, top):
    return sgl_path_to_size(inst.d, inst.groups, top, cfg.alpha_mix, cfg.grid_size, cfg.ratio)


def _grouped_task(cfg_dict, scenario, G, repeat, methods):
    cfg = ExperimentConfig.from_dict(cfg_dict)
    seed = derive_seed(cfg.base_seed, scenario, G, repeat)
    if scenario == "main":
        inst = gen_main(cfg.n, largest_divisible(cfg.p, G), G, seed)
    elif scenario == "null_groups":
        inst = gen_null_groups(cfg.n, largest_divisible(cfg.p, G), G, seed)
    elif scenario == "group_sparse":
        inst = gen_group_sparse(cfg.n, largest_divisible(cfg.sparse_p, G), G,
                                cfg.n_signal_groups, seed)
    else:
        raise ValueError(scenario)
    p_sel = list(cfg.p_sel_list)
    top = max(p_sel) if p_sel else 0
    base = (scenario, G, inst.d.p, repeat, seed)
    shrink = ShrinkConfig(enabled=True, scale=cfg.shrink_scale)
    jobs = {
        "gal": lambda: _gal_path(cfg, inst, None, top),
        "gal_targeted": lambda: _gal_path(cfg, inst, shrink, top),
        "lasso": lambda: _lasso_path(cfg, inst, top),
        "sgl": lambda: _sgl_path(cfg, inst, top),
    }
    rows = []
    for m in methods:
        rows.extend(_f1_rows(inst, m, jobs[m], p_sel, base))
    return rows, {"scenario": scenario, "G": G, "repeat": repeat, "seed": seed}


def _quantiles(x):
    q25, q50, q75 = np.quantile(x, [0.25, 0.5, 0.75])
    return float(q25), float(q50), float(q75)


def _roc_task(cfg_dict, repeat):
    cfg = ExperimentConfig.from_dict(cfg_dict)
    seed = derive_seed(cfg.base_seed, "snp", 0, repeat)
    inst = gen_snp(cfg.snp_n, cfg.snp_p, seed, noise_sd=cfg.snp_noise_sd)
    srcs = {"benchmark": [], "z1": inst.codata[:1], "z2": inst.codata[1:],
            "both": inst.codata}
    signal = np.zeros(inst.d.p, dtype=bool)
    signal[inst.support] = True
    rows, qrows, points = [], [], []
    for name in ROC_CONFIGS:
        base = ("snp", 0, inst.d.p, name, None, repeat, seed)
        try:
            res = guided_ss_pipeline(inst.d, srcs[name], cfg.q_bar, cfg.tau2)
            curve = roc(res.posterior.incl, inst.support)
        except Exception as e:
            log.warning("snp %s repeat=%s failed: %s", name, repeat, e)
            rows.append(_row(*base, "auc", None, _failed(e)))
            continue
        rows.append(_row(*base, "auc", curve.auc))
        qs, qn = res.q[signal], res.q[~signal]
        qrows.append({"repeat": repeat, "seed": seed, "config": name,
                      "signal_q25": _quantiles(qs)[0], "signal_median": _quantiles(qs)[1],
                      "signal_q75": _quantiles(qs)[2], "null_q25": _quantiles(qn)[0],
                      "null_median": _quantiles(qn)[1], "null_q75": _quantiles(qn)[2],
                      "vb_converged": int(res.posterior.converged),
                      "vb_sweeps": res.posterior.sweeps})
        points.extend({"repeat": repeat, "config": name, "fpr": a, "tpr": b}
                      for a, b in zip(curve.fpr, curve.tpr))
    return rows, qrows, points, {"scenario": "snp", "G": 0, "repeat": repeat, "seed": seed}


def _run_pool(fn, tasks, jobs):
    if jobs == 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with cf.ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as ex:
        futs = [ex.submit(fn, *t) for t in tasks]
        return [f.result() for f in futs]


def aggregate(rows) -> list:
    keys = []
    groups: dict = {}
    for r in rows:
        k = (r["scenario"], r["G"], r["method"], r["p_sel"], r["metric"])
        if k not in groups:
            groups[k] = []
            keys.append(k)
        groups[k].append(r)
    out = []
    for k in keys:
        ok = np.array([r["value"] for r in groups[k] if r["status"] == "ok"], dtype=float)
        rec = dict(zip(("scenario", "G", "method", "p_sel", "metric"), k))
        rec["n_ok"] = int(ok.size)
        rec["n_failed"] = len(groups[k]) - int(ok.size)
        if ok.size:
            rec["mean"] = float(ok.mean())
            rec["sd"] = float(ok.std(ddof=1)) if ok.size > 1 else 0.0
            rec["q25"], rec["median"], rec["q75"] = _quantiles(ok)
        else:
            rec.update(mean=None, sd=None, q25=None, median=None, q75=None)
        out.append(rec)
    return out


def _grouped_experiment(cfg, plan, jobs) -> ExperimentReport:
    t0 = time.perf_counter()
    d = cfg.to_dict()
    tasks = [(d, scen, G, r, methods) for scen, G_list, methods in plan
             for G in G_list for r in range(cfg.repeats)]
    results = _run_pool(_grouped_task, tasks, jobs)
    rows = [row for rr, _ in results for row in rr]
    seeds = [s for _, s in results]
    return ExperimentReport(cfg.experiment, rows, aggregate(rows), seeds,
                            elapsed=time.perf_counter() - t0)


def run_fig3(cfg: ExperimentConfig, jobs: int | None = None) -> ExperimentReport:
    rep = _grouped_experiment(cfg, [("main", cfg.G_list, ("gal", "sgl"))], resolve_jobs(jobs))
    return _finish(cfg, rep)


def run_supplement(cfg: ExperimentConfig, jobs: int | None = None) -> ExperimentReport:
    methods = ("lasso", "gal", "gal_targeted")
    plan = [("null_groups", cfg.null_G_list, methods),
            ("main", cfg.informative_G_list, methods)]
    if cfg.sparse_G_list:
        plan.append(("group_sparse", cfg.sparse_G_list, ("gal", "sgl")))
    rep = _grouped_experiment(cfg, plan, resolve_jobs(jobs))
    return _finish(cfg, rep)


def run_roc(cfg: ExperimentConfig, jobs: int | None = None) -> ExperimentReport:
    t0 = time.perf_counter()
    d = cfg.to_dict()
    results = _run_pool(_roc_task, [(d, r) for r in range(cfg.repeats)], resolve_jobs(jobs))
    rows = [x for rr, _, _, _ in results for x in rr]
    tables = {"q_summary": [x for _, q, _, _ in results for x in q],
              "roc_points": [x for _, _, pts, _ in results for x in pts]}
    seeds = [s for _, _, _, s in results]
    rep = ExperimentReport("roc", rows, aggregate(rows), seeds, tables,
                           elapsed=time.perf_counter() - t0)
    return _finish(cfg, rep)


RUNNERS = {"fig3": run_fig3, "supplement": run_supplement, "roc": run_roc}


def run(cfg: ExperimentConfig, jobs: int | None = None) -> ExperimentReport:
    return RUNNERS[cfg.experiment](cfg, jobs)


def _finish(cfg, rep):
    if cfg.output_dir:
        write_report(rep, cfg, cfg.output_dir)
    return rep


def _write_dicts(path, dicts, columns):
    io.write_rows(path, ([("" if r[c] is None else r[c]) for c in columns] for r in dicts),
                  header=columns)


def write_report(rep: ExperimentReport, cfg: ExperimentConfig, out) -> Path:
    out = io.ensure_dir(out)
    _write_dicts(out / "report.csv", rep.rows, REPORT_COLUMNS)
    _write_dicts(out / "aggregate.csv", rep.aggregate, AGG_COLUMNS)
    for name, tab in rep.tables.items():
        if tab:
            _write_dicts(out / f"{name}.csv", tab, tuple(tab[0]))
    if rep.experiment == "roc":
        _plot_roc(rep, out / "roc.svg")
    else:
        _plot_f1(rep, out, "fig3" if rep.experiment == "fig3" else "supplement")
    io.write_json(out / "manifest.json", {
        "experiment": rep.experiment, "config": cfg.to_dict(), "version": __version__,
        "kernel_backend": _kernels.backend(), "seeds": rep.seeds,
        "rows": len(rep.rows), "failed_rows": rep.n_failed,
        "elapsed_seconds": round(rep.elapsed, 3)})
    return out


def _plot_f1(rep, out, stem):
    scenarios = sorted({r["scenario"] for r in rep.rows})
    for scen in scenarios:
        series = []
        for m in sorted({r["method"] for r in rep.rows if r["scenario"] == scen}):
            for k in sorted({r["p_sel"] for r in rep.rows if r["scenario"] == scen}):
                ok = [r for r in rep.rows if r["scenario"] == scen and r["method"] == m
                      and r["p_sel"] == k and r["status"] == "ok"]
                if not ok:
                    continue
                Gs = sorted({r["G"] for r in ok})
                means = [np.mean([r["value"] for r in ok if r["G"] == G]) for G in Gs]
                series.append(svg.Series(f"{m} p_sel={k}", np.log(Gs), means, "line"))
                series.append(svg.Series("", np.log([r["G"] for r in ok]),
                                         [r["value"] for r in ok], "points",
                                         svg.PALETTE[(len(series) - 1) % len(svg.PALETTE)]))
        name = f"{stem}.svg" if len(scenarios) == 1 else f"{stem}_{scen}.svg"
        svg.save(out / name, series, title=f"F1 by number of groups ({scen})",
                 xlabel="log G", ylabel="F1")


def _plot_roc(rep, path):
    pts = rep.tables.get("roc_points", [])
    first = min((p["repeat"] for p in pts), default=None)
    series = []
    for name in ROC_CONFIGS:
        cur = [p for p in pts if p["repeat"] == first and p["config"] == name]
        if cur:
            series.append(svg.Series(name, [p["fpr"] for p in cur], [p["tpr"] for p in cur]))
    svg.save(path, series, title="ROC, posterior inclusion probabilities",
             xlabel="1 - specificity", ylabel="sensitivity", xlim=(0, 1), ylim=(0, 1))
