"""Command-line front end.

    shapeprior [--config PATH] [--seed N] [--out DIR] [--workers N] [--force]
               [--set SECTION.KEY=VALUE ...] COMMAND ...

Commands: generate, fold, prior, sweep, report. On failure a single line
``error: <Category>: <message>`` goes to stderr and the exit status is 2.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from . import gpcore
from .apprior import AUTO, PriorConfig, build_prior, write_prior
from .errors import ConfigError, CorrelationUndefined, ShapePriorError
from .experiment import (
    DatasetConfig,
    SweepConfig,
    define_classes,
    default_workers,
    generate_dataset,
    pearson_log,
    sweep,
    write_catalog,
    write_results,
    write_summary,
)
from .rnamap import fold_surrogate, ingest_dataset, normalize_sequence, shape_of, write_dataset

SECTIONS = {
    "dataset": DatasetConfig,
    "sweep": SweepConfig,
    "prior": None,  # a, b, m_log2; alpha and smoothing live in "sweep"
    "gp": gpcore.GPConfig,
}
PRIOR_KEYS = {"a", "b", "m_log2"}
TOP_KEYS = set(SECTIONS) | {"output", "workers"}


@dataclasses.dataclass
class RunConfig:
    dataset: DatasetConfig
    sweep: SweepConfig
    prior: PriorConfig
    gp: gpcore.GPConfig
    output: str = "out"
    workers: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dataset": dataclasses.asdict(self.dataset),
            "sweep": {**dataclasses.asdict(self.sweep),
                      "per_class_sizes": list(self.sweep.per_class_sizes),
                      "prior_modes": list(self.sweep.prior_modes)},
            "prior": {"a": self.prior.a, "b": self.prior.b, "m_log2": self.prior.m_log2},
            "gp": {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self.gp).items()},
            "output": self.output,
            "workers": self.workers,
        }


def _coerce(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path: Optional[str], overrides: List[str] = (), seed: Optional[int] = None,
                out: Optional[str] = None, workers: Optional[int] = None) -> RunConfig:
    """Read a JSON run config, apply overrides, and validate every section."""
    raw: Dict[str, Any] = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError("config root must be an object")
    raw = {k: (dict(v) if isinstance(v, dict) else v) for k, v in raw.items()}
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, field_name = key.partition(".")
        if not sep or not dot:
            raise ConfigError(f"override must look like section.key=value: {item!r}")
        raw.setdefault(section, {})[field_name] = _coerce(value)
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for name, cls in SECTIONS.items():
        section = raw.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"section {name!r} must be an object")
        allowed = PRIOR_KEYS if cls is None else {f.name for f in dataclasses.fields(cls)}
        bad = set(section) - allowed
        if bad:
            raise ConfigError(f"unknown keys in {name!r}: {sorted(bad)}")
    ds = dict(raw.get("dataset", {}))
    if seed is not None:
        ds["seed"] = seed
    gp = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.get("gp", {}).items()}
    try:
        dcfg = DatasetConfig(**ds)
        scfg = SweepConfig(**raw.get("sweep", {}))
        pcfg = scfg.prior_config(**{"m_log2": AUTO, **raw.get("prior", {})})
        gcfg = gpcore.GPConfig(**gp)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ShapePriorError):
            raise
        raise ConfigError(str(exc)) from None
    n_workers = workers if workers is not None else int(raw.get("workers", 0))
    return RunConfig(dcfg, scfg, pcfg, gcfg, out or raw.get("output", "out"), n_workers or default_workers())


# -- commands ----------------------------------------------------------------------


def cmd_generate(cfg: RunConfig, args) -> int:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    dest = Path(args.dataset) if args.dataset else out / "dataset.csv"
    if dest.exists() and not args.force:
        raise FileExistsError(f"{dest} exists; pass --force to overwrite")
    records = generate_dataset(cfg.dataset, workers=cfg.workers)
    write_dataset(dest, records)
    catalog, _ = define_classes(records, cfg.dataset.min_class_support)
    print(f"N={len(records)} L={cfg.dataset.L} classes={catalog.C} -> {dest}")
    return 0


def _read_sequences(arg: str) -> List[str]:
    p = Path(arg)
    if not p.is_file():
        return [arg]
    seqs = []
    for line in p.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.lower().startswith("sequence"):
            continue
        seqs.append(line.split(",")[0])
    return seqs


def cmd_fold(cfg: RunConfig, args) -> int:
    seqs = [normalize_sequence(raw) for raw in _read_sequences(args.source)]
    w = csv.writer(sys.stdout, delimiter="\t", lineterminator="\n")
    w.writerow(["sequence", "structure", "shape"])
    for seq in seqs:
        structure = fold_surrogate(seq, cfg.dataset.min_loop)
        w.writerow([seq, structure, shape_of(structure)])
    return 0


def cmd_prior(cfg: RunConfig, args) -> int:
    records = ingest_dataset(args.dataset)
    catalog, _ = define_classes(records, cfg.dataset.min_class_support)
    prior = build_prior(catalog, cfg.prior)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    write_prior(out / "prior.csv", prior)
    write_catalog(out / "catalog.csv", catalog)
    try:
        r = f"{pearson_log(prior.p_hat, catalog.p_true):.4f}"
    except CorrelationUndefined as exc:
        r = f"undefined ({exc})"
    print(f"classes={catalog.C} sum_p_hat={prior.sum_total:.6g} pearson_log10={r} -> {out / 'prior.csv'}")
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    out = Path(cfg.output)
    results = out / "results.csv"
    if results.exists() and not args.force:
        raise FileExistsError(f"{results} exists; pass --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    samples = ingest_dataset(args.dataset) if args.dataset else None
    res = sweep(cfg.dataset, cfg.sweep, workers=cfg.workers, samples=samples,
                prior_cfg=cfg.prior, gp_cfg=cfg.gp)

    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")
    write_catalog(out / "catalog.csv", res.catalog)
    write_prior(out / "prior.csv", res.prior)
    write_results(results, res.reports)
    write_summary(out / "summary.csv", res.summary)
    cdir = out / "confusion"
    cdir.mkdir(exist_ok=True)
    with open(out / "models.jsonl", "w", encoding="utf-8") as fh:
        for r in res.reports:
            r.confusion.write(cdir / f"size{r.per_class}_{r.prior_mode}_rep{r.repetition}.csv")
            fh.write(json.dumps({"per_class": r.per_class, "prior_mode": r.prior_mode,
                                 "repetition": r.repetition, **r.gp_summary}) + "\n")

    print(f"classes={res.catalog.C} pool={res.pool_size} test={res.test_size} "
          f"pearson_log10={res.pearson_r:.4f} cells={len(res.reports)}")
    print("per_class\tprior_mode\tn_train\taccuracy\tbalanced_accuracy")
    for size, mode, n, acc, bacc, _ in res.summary:
        print(f"{size}\t{mode}\t{n:.1f}\t{acc:.4f}\t{bacc:.4f}")
    return 0


def cmd_report(cfg: RunConfig, args) -> int:
    results = Path(args.results)
    src = results.parent
    out = Path(args.report_dir) if args.report_dir else src
    out.mkdir(parents=True, exist_ok=True)

    groups: Dict[tuple, List[tuple]] = {}
    with open(results, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (int(row["n_train"]), row["prior_mode"])
            groups.setdefault(key, []).append((float(row["accuracy"]), float(row["balanced_accuracy"])))

    baseline = float("nan")
    catalog_rows = []
    if (src / "catalog.csv").exists():
        with open(src / "catalog.csv", newline="", encoding="utf-8") as fh:
            catalog_rows = list(csv.DictReader(fh))
        baseline = 1.0 / len(catalog_rows) if catalog_rows else float("nan")

    with open(out / "accuracy_vs_size.tsv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["n_train", "prior_mode", "accuracy_mean", "accuracy_std",
                    "balanced_accuracy_mean", "balanced_accuracy_std", "repetitions", "baseline"])
        for (n, mode), vals in sorted(groups.items()):
            a = np.array(vals)
            w.writerow([n, mode, repr(float(a[:, 0].mean())), repr(float(a[:, 0].std())),
                        repr(float(a[:, 1].mean())), repr(float(a[:, 1].std())), len(vals), repr(baseline)])

    written = ["accuracy_vs_size.tsv"]
    if catalog_rows and (src / "prior.csv").exists():
        with open(src / "prior.csv", newline="", encoding="utf-8") as fh:
            p_hat = {r["shape"]: float(r["p_hat"]) for r in csv.DictReader(fh)}
        with open(out / "correlation.tsv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter="\t", lineterminator="\n")
            w.writerow(["shape", "p_true", "p_hat", "log10_p_true", "log10_p_hat"])
            for r in catalog_rows:
                pt, ph = float(r["p_true"]), p_hat[r["shape"]]
                w.writerow([r["shape"], repr(pt), repr(ph), repr(math.log10(pt)), repr(math.log10(ph))])
        written.append("correlation.tsv")
    print(" ".join(str(out / f) for f in written))
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "fold": cmd_fold,
    "prior": cmd_prior,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shapeprior", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="override dataset.seed")
    p.add_argument("--out", help="output directory (overrides config 'output')")
    p.add_argument("--workers", type=int, help="worker processes (default: CPU count)")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one config field (value parsed as JSON when possible)")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample, fold and abstract a dataset")
    g.add_argument("dataset", nargs="?", help="output file (default OUT/dataset.csv)")

    f = sub.add_parser("fold", help="fold sequences with the surrogate folder")
    f.add_argument("source", help="a sequence, or a file with one sequence per line")

    pr = sub.add_parser("prior", help="class catalogue and complexity prior for a dataset")
    pr.add_argument("dataset", help="sequence,structure,shape file")

    s = sub.add_parser("sweep", help="training-size sweep, zero vs complexity prior")
    s.add_argument("--dataset", help="use this dataset file instead of generating one")

    r = sub.add_parser("report", help="plot-ready TSV series from a sweep")
    r.add_argument("results", help="results.csv written by sweep")
    r.add_argument("--report-dir", help="where to write (default: next to results)")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides, args.seed, args.out, args.workers)
        return COMMANDS[args.command](cfg, args)
    except ShapePriorError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
    except FileExistsError as exc:
        print(f"error: OutputExists: {exc}", file=sys.stderr)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: IOError: {exc}", file=sys.stderr)
    except ValueError as exc:
        print(f"error: InvalidInput: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
