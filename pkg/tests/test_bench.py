import csv

import pytest

from bstree.bench import POST, PRE, ExperimentConfig, ExperimentReport, ReportRow, emit_plot_data, run_experiment
from bstree.exceptions import ConfigError, DataError

SMALL = dict(tw=64, nw=200, alphas=(4,), radii=(0.5,), queries=10, seed=1)


def test_bench_csv_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_experiment(ExperimentConfig(**SMALL)).write_csv(a)
    run_experiment(ExperimentConfig(**SMALL)).write_csv(b)
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[2].startswith("# workload: queries=10")
    assert lines[3] == "alpha,radius,phase,precision,recall,index_height,element_count"
    assert len(lines) == 4 + 2


def test_dataset_too_short(tmp_path):
    path = tmp_path / "short.txt"
    path.write_text("\n".join(str(i % 7) for i in range(1000)))
    with pytest.raises(DataError, match="12800"):
        run_experiment(ExperimentConfig(dataset=str(path), **SMALL))


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(radii=(0.5, 0.1))
    with pytest.raises(ConfigError):
        ExperimentConfig(tw=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(hot_fraction=0)


def test_row_count_one_per_alpha_radius_phase():
    cfg = ExperimentConfig(tw=64, nw=150, alphas=(4, 6, 8), queries=4, seed=2)
    report = run_experiment(cfg)
    assert len(report.rows) == 3 * 10 * 2
    keys = {(r.alpha, r.radius, r.phase) for r in report.rows}
    assert len(keys) == 60
    assert all(0 <= r.precision <= 1 and 0 <= r.recall <= 1 for r in report.rows)


def test_precision_and_recall_use_ground_truth():
    cfg = ExperimentConfig(tw=64, nw=100, alphas=(6,), radii=(0.5, 1.0), queries=8, mode="exact", seed=4)
    report = run_experiment(cfg)
    for row in report.rows:
        assert row.precision == 1.0
        assert row.recall == 1.0


def fake_report(n_alpha=3, n_radii=10):
    cfg = ExperimentConfig()
    rows = [
        ReportRow(a, round(0.1 * (i + 1), 1), ph, 0.5, 0.9, 10.0, 2, 100)
        for a in (4, 6, 8)[:n_alpha]
        for ph in (PRE, POST)
        for i in range(n_radii)
    ]
    return ExperimentReport(cfg, rows)


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_emit_plot_data_projection(tmp_path):
    fig1, fig2 = emit_plot_data(fake_report(), tmp_path)
    r1, r2 = read_rows(fig1), read_rows(fig2)
    assert r1[0] == r2[0] == ["alpha", "radius", "phase", "precision", "recall"]
    assert len(r1) - 1 == 20
    assert len(r2) - 1 == 30
    assert {row[2] for row in r2[1:]} == {POST}


def test_emit_plot_data_empty_report(tmp_path):
    fig1, fig2 = emit_plot_data(ExperimentReport(ExperimentConfig()), tmp_path / "plots")
    assert read_rows(fig1) == read_rows(fig2) == [["alpha", "radius", "phase", "precision", "recall"]]


def test_emit_plot_data_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_plot_data(fake_report(), blocker / "sub")
