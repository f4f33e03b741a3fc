import numpy as np
import pytest

from codashrink.experiments import (REPORT_COLUMNS, ExperimentConfig, aggregate,
                                    bundled_config, run_fig3, run_roc, run_supplement)


def _small(**kw):
    base = dict(experiment="fig3", n=40, p=120, G_list=[3], p_sel_list=[5], repeats=1)
    base.update(kw)
    return ExperimentConfig(**base)


def test_single_repeat_rows_deterministic():
    a = run_fig3(_small())
    b = run_fig3(_small())
    assert len(a.rows) == 2  # one per method
    assert a.rows == b.rows
    assert {r["method"] for r in a.rows} == {"gal", "sgl"}


def test_report_shape_and_seeds():
    rep = run_fig3(_small(G_list=[3, 6], p_sel_list=[5, 10], repeats=3))
    assert len(rep.rows) == 2 * 2 * 2 * 3
    more = run_fig3(_small(G_list=[3, 6], p_sel_list=[5, 10], repeats=4))
    old = [r for r in more.rows if r["repeat"] < 3]
    assert old == rep.rows  # extra repeats never change earlier ones


def test_paper_scale_shape():
    cfg = bundled_config("fig3")
    assert len(cfg.G_list) == 8 and cfg.repeats == 25 and len(cfg.p_sel_list) == 2


def test_supplement_has_lasso_per_G():
    cfg = _small(experiment="supplement", null_G_list=[3], informative_G_list=[3, 6])
    rep = run_supplement(cfg)
    for scen, G in [("null_groups", 3), ("main", 3), ("main", 6)]:
        assert any(r["scenario"] == scen and r["G"] == G and r["method"] == "lasso"
                   for r in rep.rows)
    assert rep.n_failed == 0


def test_failure_isolation(monkeypatch):
    import codashrink.experiments as ex

    def boom(*a, **k):
        raise FloatingPointError("ill-conditioned draw")
    monkeypatch.setattr(ex, "sgl_path_to_size", boom)
    rep = run_fig3(_small(repeats=2))
    assert rep.n_failed == 2
    assert all(r["status"] == "ok" for r in rep.rows if r["method"] == "gal")
    agg = {a["method"]: a for a in rep.aggregate}
    assert agg["sgl"]["n_failed"] == 2 and agg["sgl"]["mean"] is None


def test_aggregate_stats():
    rows = [dict(scenario="s", G=1, method="m", p_sel=5, metric="f1", value=v, status="ok",
                 p=1, repeat=i, seed=0) for i, v in enumerate([0.1, 0.2, 0.3, 0.4])]
    a = aggregate(rows)[0]
    assert a["mean"] == pytest.approx(0.25)
    assert a["sd"] == pytest.approx(np.std([0.1, 0.2, 0.3, 0.4], ddof=1))
    assert a["median"] == pytest.approx(0.25)


def test_roc_small(tmp_path):
    cfg = ExperimentConfig("roc", G_list=[], p_sel_list=[], repeats=1, snp_n=60, snp_p=400,
                           output_dir=str(tmp_path))
    rep = run_roc(cfg)
    assert [r["method"] for r in rep.rows] == ["benchmark", "z1", "z2", "both"]
    assert (tmp_path / "roc.svg").exists() and (tmp_path / "q_summary.csv").exists()
    header = (tmp_path / "report.csv").read_text().splitlines()[0]
    assert header == ",".join(REPORT_COLUMNS)


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        ExperimentConfig(repeats=0)
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"experiment": "fig3", "nonsense": 1})
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="other")
