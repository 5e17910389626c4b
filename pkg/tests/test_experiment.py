import numpy as np
import pytest

from shapeprior.apprior import build_prior
from shapeprior.errors import ConfigError, CorrelationUndefined, NoClasses
from shapeprior.experiment import (
    DatasetConfig,
    SweepConfig,
    accuracy,
    balanced_accuracy,
    cell_seed,
    confusion_matrix,
    define_classes,
    generate_dataset,
    pearson_log,
    prepare,
    run_cell,
    saturation_size,
    split,
    stratified_select,
    sweep,
    write_results,
)
from shapeprior.rnamap import Record


def recs(spec):
    """Records with distinct dummy sequences for a {shape: count} spec."""
    out, k = [], 0
    for shape, count in spec.items():
        for _ in range(count):
            out.append(Record(format(k, "b").replace("0", "A").replace("1", "C").rjust(16, "G"), shape))
            k += 1
    return out


@pytest.fixture(scope="module")
def small_data():
    cfg = DatasetConfig(L=20, N=400, test_size=80, min_class_support=5, seed=3)
    return cfg, generate_dataset(cfg)


def test_config_validation():
    with pytest.raises(ConfigError):
        DatasetConfig(N=100, test_size=100)
    with pytest.raises(ConfigError):
        SweepConfig(per_class_sizes=(2, 2))
    with pytest.raises(ConfigError):
        SweepConfig(prior_modes=("uniform",))


def test_generate_deterministic(small_data):
    cfg, data = small_data
    assert generate_dataset(cfg) == data
    assert len(data) == 400 and all(len(r.sequence) == 20 for r in data)


def test_generate_parallel_identical(small_data):
    cfg, data = small_data
    assert generate_dataset(cfg, workers=2) == data


def test_define_classes_threshold():
    cat, kept = define_classes(recs({"[]": 12, "[][]": 9}), 10)
    assert cat.shapes == ("[]",)
    assert cat.p_true.tolist() == [12 / 21]
    assert len(kept) == 12
    assert cat.filtered_count == 9


def test_define_classes_all_kept():
    cat, _ = define_classes(recs({"[][]": 10, "[]": 15}), 10)
    assert cat.shapes == ("[]", "[][]")
    assert cat.p_true.sum() == 1.0


def test_define_classes_none():
    with pytest.raises(NoClasses):
        define_classes(recs({"[]": 3}), 10)


def test_probability_mass_accounting(small_data):
    _, data = small_data
    cat, _ = define_classes(data, 5)
    assert cat.counts.sum() + cat.filtered_count == cat.N
    assert cat.p_true.sum() + cat.filtered_count / cat.N == pytest.approx(1.0, abs=1e-15)


def test_split_drops_unseen_shapes():
    data = recs({"[]": 30, "[][]": 1})
    cat, kept = define_classes(data, 1)
    for seed in range(20):
        pool, test = split(kept, cat, 10, seed)
        assert len(pool) == 21
        pool_shapes = {r.shape for r in pool}
        assert all(r.shape in pool_shapes for r in test)
        assert len(test) == 10 - ("[][]" not in pool_shapes)


def test_stratified_select():
    pool = recs({"[]": 19, "[][]": 40, "[[][]]": 3})
    assert len(stratified_select(pool, 1, 0)) == 3
    picked = stratified_select(pool, 20, 0)
    assert sum(r.shape == "[]" for r in picked) == 19
    assert sum(r.shape == "[][]" for r in picked) == 20
    assert sorted(stratified_select(pool, 1000, 5), key=id) == sorted(pool, key=id)
    assert saturation_size(pool) == 40


def test_stratified_no_duplicates():
    pool = recs({"[]": 50, "[][]": 50})
    for seed in range(10):
        picked = stratified_select(pool, 30, seed)
        assert len({id(r) for r in picked}) == len(picked)


def test_accuracy_examples():
    assert accuracy(["a", "b"], ["a", "b"]) == 1.0
    assert accuracy(["a", "b"], ["b", "a"]) == 0.0
    assert accuracy([1, 2, 3, 4], [1, 2, 3, 0]) == 0.75


def test_balanced_accuracy_examples():
    assert balanced_accuracy(["a", "b"], ["a", "b"]) == 1.0
    assert balanced_accuracy(["a", "b"], ["a", "a"]) == 0.5
    y = ["a"] * 5 + ["b"] * 5 + ["c"] * 5 + ["d"] * 5
    assert balanced_accuracy(y, ["a"] * 20) == 0.25
    # predicted-only labels do not enter the mean
    assert balanced_accuracy(["a", "a"], ["a", "z"]) == 0.5


def test_balanced_accuracy_matches_per_class_recall_formula():
    rng = np.random.default_rng(0)
    for _ in range(20):
        t = rng.integers(0, 5, 60)
        p = rng.integers(0, 5, 60)
        recalls = [np.sum((t == c) & (p == c)) / np.sum(t == c) for c in set(t.tolist())]
        assert balanced_accuracy(t, p) == pytest.approx(np.mean(recalls))


def test_confusion_examples():
    c = confusion_matrix(["a"], ["a"])
    assert c.labels == ["a"] and c.matrix.tolist() == [[1]]
    c = confusion_matrix(["a"], ["b"])
    assert c.labels == ["a", "b"] and c.matrix.tolist() == [[0, 1], [0, 0]]
    c = confusion_matrix(["b", "a", "b"], ["b", "b", "b"])
    assert "z" not in c.labels
    assert c.total == 3


def test_confusion_trace_is_accuracy():
    rng = np.random.default_rng(1)
    t = rng.integers(0, 6, 100).tolist()
    p = rng.integers(0, 6, 100).tolist()
    c = confusion_matrix(t, p)
    assert c.total == 100
    assert np.trace(c.matrix) / c.total == accuracy(t, p)


def test_pearson_examples():
    p = np.array([0.5, 0.2, 0.1, 0.05])
    assert pearson_log(3 * p, p) == pytest.approx(1.0)
    assert pearson_log(p ** -2.0 / 1000, p) == pytest.approx(-1.0)
    with pytest.raises(CorrelationUndefined):
        pearson_log([0.1, 0.1, 0.1], p[:3])
    with pytest.raises(CorrelationUndefined):
        pearson_log([0.1, 0.2], [0.3, 0.4])


def test_empty_training_predicts_top_prior(small_data):
    cfg, data = small_data
    cat, pool, test = prepare(cfg, data)
    report = run_cell([], test, cat, "ap_prior")
    top = cat.shapes[build_prior(cat).top_class]
    assert report.confusion.matrix.sum() == len(test)
    nonzero_cols = np.flatnonzero(report.confusion.matrix.sum(axis=0))
    assert len(nonzero_cols) == 1
    assert report.confusion.labels[nonzero_cols[0]] == top


def test_run_cell_metrics_consistent(small_data):
    cfg, data = small_data
    cat, pool, test = prepare(cfg, data)
    train = stratified_select(pool, 3, 0, shapes=cat.shapes)
    for mode in ("zero", "ap_prior"):
        r = run_cell(train, test, cat, mode, seed=1)
        assert r.confusion.total == len(test)
        assert r.accuracy == np.trace(r.confusion.matrix) / r.confusion.total
        assert 0 <= r.balanced_accuracy <= 1
        assert r.n_train == len(train)
        assert np.isnan(r.pearson_r) == (mode == "zero")


def test_cell_seed_distinct():
    seeds = {cell_seed(0, s, r) for s in (1, 2, 3) for r in range(10)}
    assert len(seeds) == 30
    assert cell_seed(5, 2, 1) == cell_seed(5, 2, 1)


def test_sweep_deterministic_across_workers(small_data, tmp_path):
    cfg, data = small_data
    scfg = SweepConfig(per_class_sizes=(1, 4), repetitions=2)
    a = sweep(cfg, scfg, workers=1, samples=data)
    b = sweep(cfg, scfg, workers=3, samples=data)
    write_results(tmp_path / "a.csv", a.reports)
    write_results(tmp_path / "b.csv", b.reports)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert [(r.per_class, r.prior_mode, r.repetition) for r in a.reports] == [
        (s, m, k) for s in (1, 4) for m in ("zero", "ap_prior") for k in range(2)
    ]
    assert len(a.summary) == 4
