import numpy as np
import pytest

from imputebench.bench import (
    ExperimentConfig,
    MetricsReport,
    SyntheticSpec,
    emit_report,
    generate_synthetic,
    predict_cv,
    run_imputation_experiment,
    run_post_imputation,
)
from imputebench.imputers import ImputationResult, Imputer, SimpleImputer
from imputebench.registry import register_imputer
from imputebench.tabular import MixedTable

from conftest import make_rng, mixed_schema


def identity_corr(c):
    return np.eye(c)


def test_synthetic_shapes_and_ranges():
    schema = mixed_schema(2, 2)
    spec = SyntheticSpec(
        schema,
        identity_corr(4),
        numeric_ranges={"n0": (10.0, 20.0)},
        prevalence={"c0": 0.1},
    )
    t = generate_synthetic(spec, 500, seed=1)
    assert t.n_rows == 500
    assert t.values[:, 0].min() >= 10.0 and t.values[:, 0].max() <= 20.0
    assert t.values[:, 1].min() >= 0.0 and t.values[:, 1].max() <= 1.0  # default range
    assert set(np.unique(t.values[:, 2])) <= {0.0, 1.0}


def test_synthetic_independence_and_correlation():
    schema = mixed_schema(3, 0)
    t = generate_synthetic(SyntheticSpec(schema, identity_corr(3)), 10000, seed=2)
    corr = np.corrcoef(t.values.T)
    off = corr[~np.eye(3, dtype=bool)]
    assert np.max(np.abs(off)) < 0.05

    strong = np.array([[1.0, 0.95, 0.0], [0.95, 1.0, 0.0], [0.0, 0.0, 1.0]])
    t2 = generate_synthetic(SyntheticSpec(schema, strong), 10000, seed=3)
    got = np.corrcoef(t2.values[:, 0], t2.values[:, 1])[0, 1]
    # rank-preserving copula map keeps strong correlation close to nominal
    assert abs(got - 0.95) < 0.03


def test_synthetic_prevalence_binomial():
    schema = mixed_schema(0, 1)
    spec = SyntheticSpec(schema, identity_corr(1), prevalence={"c0": 0.04})
    t = generate_synthetic(spec, 20000, seed=4)
    p = t.values[:, 0].mean()
    se = np.sqrt(0.04 * 0.96 / 20000)
    assert abs(p - 0.04) < 4 * se


def test_synthetic_bad_correlation():
    schema = mixed_schema(2, 0)
    with pytest.raises(ValueError, match="2x2"):
        generate_synthetic(SyntheticSpec(schema, np.eye(3)), 10, seed=0)
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(ValueError, match="positive"):
        generate_synthetic(SyntheticSpec(schema, bad), 10, seed=0)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(methods=[])
    with pytest.raises(ValueError):
        ExperimentConfig(methods=["simple"], folds=1)
    with pytest.raises(ValueError):
        ExperimentConfig(methods=["simple"], rates=(0.0,))
    cfg = ExperimentConfig(methods=["nope"], repeats=1)
    t = generate_synthetic(SyntheticSpec(mixed_schema(2, 1), identity_corr(3)), 30, seed=5)
    with pytest.raises(ValueError, match="unknown"):
        run_imputation_experiment(t, cfg)


def small_table(n=60, seed=6):
    schema = mixed_schema(2, 1)
    return generate_synthetic(
        SyntheticSpec(schema, identity_corr(3), numeric_ranges={"n0": (0, 100), "n1": (0, 100)}),
        n,
        seed=seed,
    )


def test_run_counts_and_aggregate_arithmetic():
    t = small_table()
    cfg = ExperimentConfig(methods=["simple", "knn"], rates=(0.2, 0.4), folds=3, repeats=2, seed=1)
    report = run_imputation_experiment(t, cfg)
    # folds x repeats runs per (method, rate)
    assert len(report.records) == 2 * 2 * 3 * 2
    agg = report.aggregate()
    assert len(agg) == 4
    for row in agg:
        sel = [
            r
            for r in report.records
            if r.method == row["method"] and r.rate == row["rate"]
        ]
        assert row["n_runs"] == 6
        assert row["rmse_mean"] == pytest.approx(np.mean([r.rmse for r in sel]), abs=1e-12)
        assert row["rmse_std"] == pytest.approx(np.std([r.rmse for r in sel]), abs=1e-12)
        assert row["auroc_mean"] == pytest.approx(np.mean([r.auroc for r in sel]), abs=1e-12)


def test_experiment_determinism_byte_identical(tmp_path):
    t = small_table()
    cfg = ExperimentConfig(methods=["simple"], rates=(0.3,), folds=3, repeats=2, seed=9)
    a = run_imputation_experiment(t, cfg)
    b = run_imputation_experiment(t, cfg)
    assert a.records == b.records
    dir_a, dir_b = tmp_path / "a", tmp_path / "b"
    emit_report(a, dir_a)
    emit_report(b, dir_b)
    for name in ("details.csv", "aggregate.csv", "series_rmse.csv", "series_auroc.csv"):
        assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes()


def test_repeats_redraw_masks_and_folds():
    t = small_table()
    cfg = ExperimentConfig(methods=["simple"], rates=(0.3,), folds=3, repeats=2, seed=2)
    report = run_imputation_experiment(t, cfg)
    r0 = [r.rmse for r in report.records if r.repeat == 0]
    r1 = [r.rmse for r in report.records if r.repeat == 1]
    assert r0 != r1


class RecordingImputer(Imputer):
    """Test double that logs the tables it sees and delegates to Simple."""

    name = "recording"
    fit_tables = []
    impute_tables = []

    def __init__(self, schema, seed=0):
        super().__init__(schema, seed)
        self._inner = SimpleImputer(schema, seed)

    def fit(self, train):
        RecordingImputer.fit_tables.append(train)
        self._inner.fit(train)
        return self

    def impute(self, target) -> ImputationResult:
        RecordingImputer.impute_tables.append(target)
        return self._inner.impute(target)


def test_no_ground_truth_leak_and_per_fold_fitting():
    register_imputer("recording", lambda schema, seed, **kw: RecordingImputer(schema, seed))
    RecordingImputer.fit_tables.clear()
    RecordingImputer.impute_tables.clear()
    t = small_table(n=45)
    cfg = ExperimentConfig(methods=["recording"], rates=(0.3,), folds=3, repeats=1, seed=3)
    run_imputation_experiment(t, cfg)
    assert len(RecordingImputer.fit_tables) == 3  # one fit per fold
    n = t.n_rows
    for train_tbl, test_tbl in zip(
        RecordingImputer.fit_tables, RecordingImputer.impute_tables
    ):
        # fit sees only the corrupted training folds, impute the corrupted rest
        assert train_tbl.n_rows + test_tbl.n_rows == n
        assert np.isnan(train_tbl.values).any()
        assert np.isnan(test_tbl.values).any()
        # corruption rate is exact over the full table
        total_missing = (
            np.isnan(train_tbl.values).sum() + np.isnan(test_tbl.values).sum()
        )
        assert total_missing == round(0.3 * n) * t.n_cols


def test_knn_beats_simple_on_correlated_data():
    schema = mixed_schema(2, 0)
    corr = np.array([[1.0, 0.9], [0.9, 1.0]])
    t = generate_synthetic(
        SyntheticSpec(schema, corr, numeric_ranges={"n0": (0, 1), "n1": (0, 1)}),
        300,
        seed=7,
    )
    cfg = ExperimentConfig(methods=["simple", "knn"], rates=(0.2,), folds=3, repeats=2, seed=4)
    agg = {a["method"]: a for a in run_imputation_experiment(t, cfg).aggregate()}
    assert agg["knn"]["rmse_mean"] < agg["simple"]["rmse_mean"]


def labelled_table(n=120, seed=11):
    schema = mixed_schema(3, 1, label="c0")
    corr = np.full((4, 4), 0.4)
    np.fill_diagonal(corr, 1.0)
    return generate_synthetic(
        SyntheticSpec(
            schema,
            corr,
            numeric_ranges={f"n{i}": (0, 100) for i in range(3)},
            prevalence={"c0": 0.3},
        ),
        n,
        seed=seed,
    )


def test_predict_cv_basics():
    t = labelled_table()
    scores = predict_cv(t, seed=1, folds=3, forest_trees=20)
    assert len(scores) == 3
    assert all(0.0 <= s <= 1.0 for s in scores)
    again = predict_cv(t, seed=1, folds=3, forest_trees=20)
    assert scores == again


def test_predict_cv_requires_label():
    t = small_table()
    with pytest.raises(ValueError, match="label"):
        predict_cv(t, seed=0)


def test_predict_cv_strong_signal_scores_high():
    schema = mixed_schema(2, 1, label="c0")
    rng = make_rng(13)
    x = rng.uniform(0, 1, size=(300, 2))
    label = (x[:, 0] + x[:, 1] > 1.2).astype(float)  # ~minority positive class
    t = MixedTable(schema, np.column_stack([x, label]))
    scores = predict_cv(t, seed=2, folds=3, forest_trees=50)
    assert np.mean(scores) > 0.8


def test_post_imputation_counts_and_label_protected():
    register_imputer("recording", lambda schema, seed, **kw: RecordingImputer(schema, seed))
    RecordingImputer.fit_tables.clear()
    RecordingImputer.impute_tables.clear()
    t = labelled_table()
    cfg = ExperimentConfig(
        methods=["recording"], folds=3, repeats=2, seed=5, forest_trees=10, post_rate=0.2
    )
    report = run_post_imputation(t, cfg)
    assert len(report.f1_records) == 2 * 3  # repeats x folds
    label_j = t.schema.label_index
    for tbl in RecordingImputer.fit_tables:
        assert not np.isnan(tbl.values[:, label_j]).any()
        assert np.isnan(np.delete(tbl.values, label_j, axis=1)).any()


def test_post_imputation_information_loss_oracle():
    """Clean-data CV F1 should not trail far behind imputed-data CV F1."""
    t = labelled_table(n=150, seed=17)
    clean = np.mean(predict_cv(t, seed=3, folds=3, forest_trees=20))
    cfg = ExperimentConfig(
        methods=["simple"], folds=3, repeats=1, seed=6, forest_trees=20, post_rate=0.4
    )
    report = run_post_imputation(t, cfg)
    imputed = np.mean([r.f1 for r in report.f1_records])
    assert imputed <= clean + 0.15


def test_report_json_round_trip(tmp_path):
    t = small_table()
    cfg = ExperimentConfig(methods=["simple"], rates=(0.2,), folds=3, repeats=1, seed=7)
    report = run_imputation_experiment(t, cfg)
    path = tmp_path / "report.json"
    report.to_json(path)
    loaded = MetricsReport.from_json(path)
    assert loaded.records == report.records
    assert loaded.config == report.config


def test_emit_report_files(tmp_path):
    t = labelled_table()
    cfg = ExperimentConfig(
        methods=["simple"], rates=(0.2,), folds=3, repeats=1, seed=8, forest_trees=10
    )
    rep = run_imputation_experiment(t, cfg)
    rep.f1_records = run_post_imputation(t, cfg).f1_records
    written = emit_report(rep, tmp_path / "out")
    names = sorted(p.split("/")[-1] for p in map(str, written))
    assert names == [
        "aggregate.csv",
        "details.csv",
        "f1.csv",
        "f1_details.csv",
        "series_auroc.csv",
        "series_rmse.csv",
    ]
    lines = (tmp_path / "out" / "details.csv").read_text().splitlines()
    assert lines[0] == "method,rate,repeat,fold,rmse,auroc"
    assert len(lines) == 1 + 3  # header + folds x repeats
    series = (tmp_path / "out" / "series_rmse.csv").read_text().splitlines()
    assert series[0] == "rate,simple"
    assert len(series) == 2
