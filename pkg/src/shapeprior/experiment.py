"""Dataset construction, class catalogues, training-size sweeps and metrics."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from threadpoolctl import threadpool_limits

from . import gpcore
from .apprior import PriorConfig, PriorVector, build_prior
from .errors import ConfigError, CorrelationUndefined, NoClasses
from .rnamap import ALPHABET, Record, encode_many, fold_surrogate, ingest_dataset, shape_of

PRIOR_MODES = ("zero", "ap_prior")
DEFAULT_SIZES = (1, 2, 3, 5, 10, 20, 40, 80, 160, 320, 640, 1280, 2560, 5120)
RESULT_HEADER = ("n_train", "prior_mode", "repetition", "accuracy", "balanced_accuracy", "pearson_r", "seed")
SUMMARY_HEADER = (
    "per_class", "prior_mode", "n_train_mean", "accuracy_mean", "balanced_accuracy_mean", "repetitions",
)
CATALOG_HEADER = ("shape", "count", "p_true")


@dataclass(frozen=True)
class DatasetConfig:
    L: int = 100
    N: int = 10000
    test_size: int = 1000
    min_class_support: int = 10
    seed: int = 0
    folder: str = "surrogate"  # or a dataset path to ingest
    min_loop: int = 3

    def __post_init__(self):
        if self.L < 1 or self.N < 1:
            raise ConfigError("L and N must be positive")
        if not 0 < self.test_size < self.N:
            raise ConfigError(f"test_size must lie in (0, N), got {self.test_size}")
        if self.min_class_support < 1:
            raise ConfigError("min_class_support must be >= 1")


@dataclass(frozen=True)
class SweepConfig:
    per_class_sizes: Tuple[int, ...] = DEFAULT_SIZES
    repetitions: int = 10
    prior_modes: Tuple[str, ...] = PRIOR_MODES
    alpha: float = 1.0
    smoothing: bool = True

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.per_class_sizes)
        object.__setattr__(self, "per_class_sizes", sizes)
        object.__setattr__(self, "prior_modes", tuple(self.prior_modes))
        if not sizes or sizes[0] < 1 or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError(f"per_class_sizes must be strictly ascending and >= 1: {sizes}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        bad = set(self.prior_modes) - set(PRIOR_MODES)
        if bad or not self.prior_modes:
            raise ConfigError(f"unknown prior modes {sorted(bad)}")

    def prior_config(self, **kwargs) -> PriorConfig:
        """PriorConfig with this sweep's alpha and smoothing; ``kwargs`` add a, b, m_log2."""
        return PriorConfig(alpha=self.alpha, smoothing=self.smoothing, **kwargs)


@dataclass(frozen=True)
class ClassCatalog:
    shapes: Tuple[str, ...]
    counts: np.ndarray
    N: int

    @property
    def C(self) -> int:
        return len(self.shapes)

    @property
    def p_true(self) -> np.ndarray:
        return self.counts / self.N

    @property
    def filtered_count(self) -> int:
        return int(self.N - self.counts.sum())

    def index(self) -> Dict[str, int]:
        return {s: i for i, s in enumerate(self.shapes)}


@dataclass
class MetricsReport:
    accuracy: float
    balanced_accuracy: float
    confusion: "Confusion"
    pearson_r: float
    n_train: int
    prior_mode: str
    repetition: int
    seed: int
    per_class: int = 0
    gp_summary: dict = field(default_factory=dict)

    def row(self) -> Tuple:
        return (
            self.n_train, self.prior_mode, self.repetition,
            repr(self.accuracy), repr(self.balanced_accuracy), repr(self.pearson_r), self.seed,
        )


# -- data ------------------------------------------------------------------------


def random_sequences(L: int, N: int, seed: int) -> List[str]:
    rng = np.random.default_rng(seed)
    letters = np.array(list(ALPHABET))
    return ["".join(row) for row in letters[rng.integers(0, 4, size=(N, L))]]


def _fold_record(args) -> Record:
    seq, min_loop = args
    structure = fold_surrogate(seq, min_loop)
    return Record(seq, shape_of(structure), structure)


def generate_dataset(cfg: DatasetConfig, workers: int = 1) -> List[Record]:
    """``N`` uniform random sequences folded and abstracted, or an ingested file."""
    if cfg.folder != "surrogate":
        return ingest_dataset(cfg.folder)
    jobs = [(s, cfg.min_loop) for s in random_sequences(cfg.L, cfg.N, cfg.seed)]
    if workers <= 1:
        return [_fold_record(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_fold_record, jobs, chunksize=max(1, len(jobs) // (8 * workers))))


def define_classes(samples: Sequence[Record], min_class_support: int = 10):
    """Keep shapes seen at least ``min_class_support`` times.

    True probabilities use the unfiltered sample count as denominator.
    """
    if not samples:
        raise NoClasses("no samples")
    counts: Dict[str, int] = {}
    for r in samples:
        counts[r.shape] = counts.get(r.shape, 0) + 1
    kept = sorted(s for s, c in counts.items() if c >= min_class_support)
    if not kept:
        raise NoClasses(f"no shape has at least {min_class_support} samples")
    catalog = ClassCatalog(tuple(kept), np.array([counts[s] for s in kept]), len(samples))
    keep = set(kept)
    return catalog, [r for r in samples if r.shape in keep]


def split(samples: Sequence[Record], catalog: ClassCatalog, test_size: int, seed: int):
    """Seeded shuffle; the first ``test_size`` become test candidates.

    Candidates whose shape never occurs in the remaining pool are dropped.
    """
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(samples))
    test_idx, pool_idx = order[:test_size], order[test_size:]
    pool = [samples[i] for i in pool_idx]
    known = {r.shape for r in pool} & set(catalog.shapes)
    test = [samples[i] for i in test_idx if samples[i].shape in known]
    return pool, test


def stratified_select(pool: Sequence[Record], n_per_class: int, seed: int,
                      shapes: Optional[Sequence[str]] = None) -> List[Record]:
    """Up to ``n_per_class`` records per class, drawn without replacement."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    by_shape: Dict[str, List[int]] = {}
    for i, r in enumerate(pool):
        by_shape.setdefault(r.shape, []).append(i)
    rng = np.random.default_rng(seed)
    chosen = []
    for shape in (shapes if shapes is not None else sorted(by_shape)):
        idx = by_shape.get(shape, [])
        if not idx:
            continue
        take = min(n_per_class, len(idx))
        picked = rng.choice(len(idx), size=take, replace=False)
        chosen.extend(idx[k] for k in sorted(picked))
    return [pool[i] for i in chosen]


def saturation_size(pool: Sequence[Record]) -> int:
    """Smallest per-class size at which stratified selection takes the whole pool."""
    counts: Dict[str, int] = {}
    for r in pool:
        counts[r.shape] = counts.get(r.shape, 0) + 1
    return max(counts.values())


# -- metrics -----------------------------------------------------------------------


def accuracy(y_true, y_pred) -> float:
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    if y_true.size == 0:
        raise ValueError("empty label set")
    return float(np.mean(y_true == y_pred))


def balanced_accuracy(y_true, y_pred) -> float:
    """Mean recall over classes present in ``y_true``."""
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    if y_true.size == 0:
        raise ValueError("empty label set")
    recalls = [np.mean(y_pred[y_true == c] == c) for c in np.unique(y_true)]
    return float(np.mean(recalls))


@dataclass
class Confusion:
    labels: List
    matrix: np.ndarray

    @property
    def total(self) -> int:
        return int(self.matrix.sum())

    def write(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["true\\pred", *self.labels])
            for lab, row in zip(self.labels, self.matrix):
                w.writerow([lab, *(int(v) for v in row)])


def confusion_matrix(y_true, y_pred) -> Confusion:
    """Counts over the sorted union of observed labels; rows are true labels."""
    labels = sorted(set(y_true) | set(y_pred))
    pos = {lab: i for i, lab in enumerate(labels)}
    M = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        M[pos[t], pos[p]] += 1
    return Confusion(labels, M)


def pearson_log(p_hat, p_true) -> float:
    """Pearson r between ``log10`` predicted and ``log10`` true probabilities."""
    a = np.log10(np.asarray(getattr(p_hat, "p_hat", p_hat), dtype=float))
    b = np.log10(np.asarray(p_true, dtype=float))
    if a.size != b.size:
        raise ValueError("length mismatch")
    if a.size < 3:
        raise CorrelationUndefined(f"need at least 3 classes, got {a.size}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise CorrelationUndefined("probabilities must be positive")
    a, b = a - a.mean(), b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    if den == 0.0:
        raise CorrelationUndefined("zero variance")
    return float(np.clip((a @ b) / den, -1.0, 1.0))


# -- cells and sweeps ----------------------------------------------------------------


def initial_length_scale(X: np.ndarray, L: int, C: int) -> float:
    """Mean pairwise training distance over ``C``.

    Under two rows, the expected distance between uniform random sequences
    (``sqrt(2 * 0.75 * L)`` in the one-hot space) stands in.
    """
    d = gpcore.mean_pairwise_distance(X) if X.shape[0] >= 2 else float("nan")
    if not d > 0:
        d = math.sqrt(1.5 * L)
    return d / C


def cell_seed(seed: int, size: int, repetition: int) -> int:
    ss = np.random.SeedSequence([seed, size, repetition])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_cell(train: Sequence[Record], test: Sequence[Record], catalog: ClassCatalog, prior_mode: str,
             prior_cfg: PriorConfig = PriorConfig(), seed: int = 0, repetition: int = 0,
             prior: Optional[PriorVector] = None, pearson_r: Optional[float] = None,
             per_class: int = 0, gp_cfg: gpcore.GPConfig = gpcore.GPConfig()) -> MetricsReport:
    C = catalog.C
    if prior_mode == "zero":
        mean = np.zeros(C)
    elif prior_mode == "ap_prior":
        prior = prior if prior is not None else build_prior(catalog, prior_cfg)
        mean = prior.p_hat
    else:
        raise ValueError(f"unknown prior mode {prior_mode!r}")
    if pearson_r is None:
        pearson_r = float("nan")
        if prior_mode == "ap_prior":
            try:
                pearson_r = pearson_log(mean, catalog.p_true)
            except CorrelationUndefined:
                pass

    idx = catalog.index()
    L = len(test[0].sequence) if test else (len(train[0].sequence) if train else 1)
    X = encode_many([r.sequence for r in train]) if train else np.zeros((0, 4 * L))
    Y = gpcore.one_hot([idx[r.shape] for r in train], C)
    model = gpcore.fit(X, Y, mean, initial_length_scale(X, L, C), seed=seed, cfg=gp_cfg)
    Xt = encode_many([r.sequence for r in test])
    pred = model.predict_class(Xt) if len(test) else np.zeros(0, dtype=int)

    y_true = [r.shape for r in test]
    y_pred = [catalog.shapes[k] for k in pred]
    return MetricsReport(
        accuracy=accuracy(y_true, y_pred),
        balanced_accuracy=balanced_accuracy(y_true, y_pred),
        confusion=confusion_matrix(y_true, y_pred),
        pearson_r=pearson_r,
        n_train=len(train),
        prior_mode=prior_mode,
        repetition=repetition,
        seed=seed,
        per_class=per_class,
        gp_summary=model.summary(),
    )


@dataclass
class SweepResult:
    reports: List[MetricsReport]
    catalog: ClassCatalog
    prior: PriorVector
    pearson_r: float
    test_size: int
    pool_size: int
    summary: List[Tuple] = field(default_factory=list)


_CTX = {}


def _init_worker(ctx):
    _CTX.clear()
    _CTX.update(ctx)


def _run_task(task) -> MetricsReport:
    size, rep, mode = task
    c = _CTX
    sub = cell_seed(c["seed"], size, rep)
    train = stratified_select(c["pool"], size, sub, shapes=c["catalog"].shapes)
    with threadpool_limits(limits=1):
        return run_cell(
            train, c["test"], c["catalog"], mode, seed=sub, repetition=rep,
            prior=c["prior"], pearson_r=c["pearson"][mode], per_class=size, gp_cfg=c["gp"],
        )


def prepare(dcfg: DatasetConfig, samples: Optional[Sequence[Record]] = None, workers: int = 1):
    """Dataset, catalogue and train/test split for a sweep."""
    if samples is None:
        samples = generate_dataset(dcfg, workers=workers)
    catalog, kept = define_classes(samples, dcfg.min_class_support)
    pool, test = split(kept, catalog, dcfg.test_size, dcfg.seed)
    return catalog, pool, test


def sweep(dcfg: DatasetConfig, scfg: SweepConfig, workers: int = 1,
          samples: Optional[Sequence[Record]] = None, prior_cfg: Optional[PriorConfig] = None,
          gp_cfg: gpcore.GPConfig = gpcore.GPConfig()) -> SweepResult:
    """Run every (size, repetition, prior mode) cell.

    Both prior modes of a cell share its training set. Results are ordered
    by (size, mode, repetition) whatever the worker count.
    """
    catalog, pool, test = prepare(dcfg, samples, workers)
    prior = build_prior(catalog, prior_cfg if prior_cfg is not None else scfg.prior_config())
    try:
        r = pearson_log(prior.p_hat, catalog.p_true)
    except CorrelationUndefined:
        r = float("nan")
    ctx = {
        "seed": dcfg.seed, "pool": pool, "test": test, "catalog": catalog, "prior": prior,
        "pearson": {"zero": float("nan"), "ap_prior": r}, "gp": gp_cfg,
    }
    tasks = [
        (size, rep, mode)
        for size in scfg.per_class_sizes
        for mode in scfg.prior_modes
        for rep in range(scfg.repetitions)
    ]
    if workers <= 1:
        _init_worker(ctx)
        reports = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(ctx,)) as ex:
            reports = list(ex.map(_run_task, tasks))
    result = SweepResult(reports, catalog, prior, r, len(test), len(pool))
    result.summary = summarize(reports)
    return result


def summarize(reports: Sequence[MetricsReport]) -> List[Tuple]:
    groups: Dict[Tuple[int, str], List[MetricsReport]] = {}
    for rep in reports:
        groups.setdefault((rep.per_class, rep.prior_mode), []).append(rep)
    rows = []
    for (size, mode), items in groups.items():
        rows.append((
            size, mode,
            float(np.mean([r.n_train for r in items])),
            float(np.mean([r.accuracy for r in items])),
            float(np.mean([r.balanced_accuracy for r in items])),
            len(items),
        ))
    return rows


def default_workers() -> int:
    return os.cpu_count() or 1


# -- files ---------------------------------------------------------------------------


def write_catalog(path, catalog: ClassCatalog) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CATALOG_HEADER)
        for s, c, p in zip(catalog.shapes, catalog.counts, catalog.p_true):
            w.writerow([s, int(c), repr(float(p))])


def write_results(path, reports: Sequence[MetricsReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_HEADER)
        for r in reports:
            w.writerow(r.row())


def write_summary(path, rows: Sequence[Tuple]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for size, mode, n, acc, bacc, reps in rows:
            w.writerow([size, mode, repr(n), repr(acc), repr(bacc), reps])
