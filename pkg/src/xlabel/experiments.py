"""Desk-scale reproductions of the three evaluation protocols on synthetic
data: the incremental-labeling simulation (TotalFlips), stratified k-fold
cross-validation, and label-noise robustness curves. Reports are emitted as
one CSV per run plus a JSON summary; the ``xlabel-exp`` CLI wraps all three
and a synthetic-dataset generator.
"""
from __future__ import annotations

import dataclasses
import enum
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import click
import numpy as np

from xlabel.ebm import TrainConfig, fit
from xlabel.errors import InvalidInput
from xlabel.ncd import (
    CHAIN_ORDER,
    DEFAULT_SCHEMA,
    SynthConfig,
    Task,
    extract_matrix,
    read_csv,
    rule_based_classify,
    synth_generate,
    write_csv,
)

DEFAULT_NOISE_LEVELS = tuple(round(0.05 * k, 2) for k in range(1, 11))


class ModelKind(str, enum.Enum):
    EBM = "EBM"
    RULE_BASED = "RuleBased"
    ALL_NEGATIVE = "AllNegative"


@dataclass(frozen=True)
class MetricSet:
    f1: float
    accuracy: float
    precision: float
    recall: float

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "MetricSet":
        y_true = np.asarray(y_true)
        y_pred = np.asarray(y_pred)
        tp = int(np.sum((y_pred == 1) & (y_true == 1)))
        fp = int(np.sum((y_pred == 1) & (y_true == 0)))
        tn = int(np.sum((y_pred == 0) & (y_true == 0)))
        fn = int(np.sum((y_pred == 0) & (y_true == 1)))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall else 0.0)
        accuracy = (tp + tn) / (tp + fp + tn + fn)
        return cls(f1=f1, accuracy=accuracy, precision=precision, recall=recall)


@dataclass(frozen=True)
class SimConfig:
    initial_fraction: float = 0.05
    batch_size: int = 20
    repetitions: int = 50
    seed: int = 0
    # "random" reveals uniformly-random batches (the reference protocol);
    # "confidence" reveals the least-confident remaining records instead,
    # mirroring what the live sampling policies would surface.
    batch_order: str = "random"

    def __post_init__(self):
        if not 0.0 < self.initial_fraction < 1.0:
            raise InvalidInput(f"initial_fraction must lie in (0, 1), "
                               f"got {self.initial_fraction}")
        if self.batch_size < 1:
            raise InvalidInput(f"batch_size must be >= 1, got {self.batch_size}")
        if self.repetitions < 1:
            raise InvalidInput(f"repetitions must be >= 1, got {self.repetitions}")
        if self.batch_order not in ("random", "confidence"):
            raise InvalidInput(f"batch_order must be 'random' or 'confidence', "
                               f"got {self.batch_order!r}")


@dataclass(frozen=True)
class TaskDataset:
    """A frozen per-task view of a labeled dataset: feature matrix, truth,
    and the rule baseline's (label-independent) predictions."""

    task: Task
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    rule_preds: np.ndarray

    def __post_init__(self):
        if np.any(self.y < 0):
            raise InvalidInput(f"{self.task}: experiments need a fully labeled dataset")


def build_task_dataset(records, labels, task: Task,
                       train_config: TrainConfig = TrainConfig()) -> TaskDataset:
    """Build the frozen feature matrix for one task.

    Upstream prediction features come from chain models trained once on the
    full labeled dataset, mirroring a workflow where upstream tasks were
    labeled first.
    """
    upstream_preds: dict[Task, np.ndarray] = {}
    required = DEFAULT_SCHEMA.required_upstream(task)
    for upstream in (t for t in CHAIN_ORDER if t in required):
        y_up = np.asarray(labels[upstream])
        if np.any(y_up < 0):
            raise InvalidInput(f"{task} needs fully labeled upstream task {upstream}")
        X_up = extract_matrix(records, upstream, upstream_preds)
        model = fit(X_up, y_up, train_config,
                    feature_names=DEFAULT_SCHEMA.features(upstream))
        upstream_preds[upstream] = model.predict_label_many(X_up)
    X = extract_matrix(records, task, upstream_preds)
    return TaskDataset(
        task=task,
        X=X,
        y=np.asarray(labels[task], dtype=np.int8),
        feature_names=DEFAULT_SCHEMA.features(task),
        rule_preds=np.array([rule_based_classify(r, task) for r in records],
                            dtype=np.int8),
    )


def all_negative_baseline(labels) -> int:
    """Label corrections needed when every record is pre-labeled negative:
    exactly the number of positive labels."""
    labels = np.asarray(labels)
    return int(np.sum(labels == 1))


def _derived_config(train_config: TrainConfig, rng: np.random.Generator) -> TrainConfig:
    return replace(train_config, seed=int(rng.integers(2**62)))


def _fit_or_majority(X, y, train_config, rng):
    """Train a model, or fall back to a constant majority-class predictor
    when the revealed labels are single-class. Returns (predict, confidence)
    functions; the fallback is equally (un)confident everywhere."""
    y = np.asarray(y)
    if y.min() == y.max():
        constant = int(y[0])
        return (lambda Q: np.full(Q.shape[0], constant, dtype=np.int8),
                lambda Q: np.full(Q.shape[0], 0.5))
    model = fit(X, y, _derived_config(train_config, rng))

    def conf(Q):
        p = model.predict_proba_many(Q)
        return np.maximum(p, 1.0 - p)

    return model.predict_label_many, conf


@dataclass(frozen=True)
class TotalFlipsReport:
    task: Task
    totals: tuple[int, ...]
    baseline_flips: int
    sim_config: SimConfig

    @property
    def histogram(self) -> dict[int, int]:
        counts = np.bincount(np.asarray(self.totals))
        return {v: int(c) for v, c in enumerate(counts) if c}

    def summary(self) -> dict:
        totals = np.asarray(self.totals)
        return {
            "experiment": "totalflips",
            "task": self.task.value,
            "repetitions": len(self.totals),
            "baseline_flips": self.baseline_flips,
            "median": float(np.median(totals)),
            "mean": float(totals.mean()),
            "min": int(totals.min()),
            "max": int(totals.max()),
            "histogram": {str(k): v for k, v in self.histogram.items()},
            "sim_config": dataclasses.asdict(self.sim_config),
        }


def simulate_totalflips(ds: TaskDataset, sim: SimConfig = SimConfig(),
                        train_config: TrainConfig = TrainConfig()) -> TotalFlipsReport:
    """Simulate incremental labeling and count the corrections a user would
    make to the model's pseudo-labels.

    Per repetition: reveal a random initial fraction, then repeatedly train
    on everything revealed, predict the next random batch, count its wrong
    predictions, and reveal it — until the dataset is exhausted.
    """
    n = len(ds.y)
    if n < 2 or ds.y.min() == ds.y.max():
        raise InvalidInput("simulation needs a fully labeled two-class dataset")
    children = np.random.SeedSequence(sim.seed).spawn(sim.repetitions)
    totals = []
    for child in children:
        rng = np.random.default_rng(child)
        order = rng.permutation(n)
        n_initial = max(1, round(sim.initial_fraction * n))
        revealed = list(order[:n_initial])
        remaining = order[n_initial:]
        flips = 0
        while remaining.size:
            predict, conf = _fit_or_majority(ds.X[revealed], ds.y[revealed],
                                             train_config, rng)
            if sim.batch_order == "confidence":
                # least-confident first, ties in the shuffled order
                ranks = np.lexsort((np.arange(remaining.size),
                                    conf(ds.X[remaining])))
                take = ranks[:sim.batch_size]
            else:
                take = np.arange(min(sim.batch_size, remaining.size))
            batch = remaining[take]
            remaining = np.delete(remaining, take)
            preds = predict(ds.X[batch])
            flips += int(np.sum(preds != ds.y[batch]))
            revealed.extend(batch)
        totals.append(flips)
    return TotalFlipsReport(
        task=ds.task,
        totals=tuple(totals),
        baseline_flips=all_negative_baseline(ds.y),
        sim_config=sim,
    )


@dataclass(frozen=True)
class CVReport:
    task: Task
    model_kind: ModelKind
    folds: tuple[MetricSet | None, ...]  # None = degenerate fold
    seed: int

    @property
    def valid_folds(self) -> list[MetricSet]:
        return [m for m in self.folds if m is not None]

    def mean(self) -> MetricSet:
        folds = self.valid_folds
        return MetricSet(
            f1=float(np.mean([m.f1 for m in folds])),
            accuracy=float(np.mean([m.accuracy for m in folds])),
            precision=float(np.mean([m.precision for m in folds])),
            recall=float(np.mean([m.recall for m in folds])),
        )

    def sd(self) -> MetricSet:
        folds = self.valid_folds
        return MetricSet(
            f1=float(np.std([m.f1 for m in folds])),
            accuracy=float(np.std([m.accuracy for m in folds])),
            precision=float(np.std([m.precision for m in folds])),
            recall=float(np.std([m.recall for m in folds])),
        )

    def summary(self) -> dict:
        return {
            "experiment": "cv",
            "task": self.task.value,
            "model": self.model_kind.value,
            "folds": len(self.folds),
            "degenerate_folds": sum(m is None for m in self.folds),
            "mean": dataclasses.asdict(self.mean()),
            "sd": dataclasses.asdict(self.sd()),
            "seed": self.seed,
        }


def stratified_folds(y, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Split indices into k folds preserving the class ratio."""
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        for f, chunk in enumerate(np.array_split(idx, k)):
            folds[f].extend(int(i) for i in chunk)
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in folds]


def _predict_for_kind(kind: ModelKind, ds: TaskDataset, train_idx, test_idx,
                      train_config, rng):
    """Returns test-fold predictions, or None for a degenerate training split."""
    if kind is ModelKind.ALL_NEGATIVE:
        return np.zeros(len(test_idx), dtype=np.int8)
    if kind is ModelKind.RULE_BASED:
        return ds.rule_preds[test_idx]
    y_train = ds.y[train_idx]
    if y_train.min() == y_train.max():
        return None
    model = fit(ds.X[train_idx], y_train, _derived_config(train_config, rng))
    return model.predict_label_many(ds.X[test_idx])


def kfold_cv(ds: TaskDataset, k: int = 5, model_kind: ModelKind = ModelKind.EBM,
             seed: int = 0, train_config: TrainConfig = TrainConfig()) -> CVReport:
    """Stratified k-fold cross-validation of one classifier kind."""
    if k < 2:
        raise InvalidInput(f"k must be >= 2, got {k}")
    if len(ds.y) < k:
        raise InvalidInput(f"dataset of {len(ds.y)} records cannot make {k} folds")
    rng = np.random.default_rng(seed)
    folds = stratified_folds(ds.y, k, rng)
    all_idx = np.arange(len(ds.y))
    metrics: list[MetricSet | None] = []
    for f, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(all_idx, test_idx)
        preds = _predict_for_kind(model_kind, ds, train_idx, test_idx,
                                  train_config, rng)
        if preds is None:
            warnings.warn(f"fold {f}: single-class training split, excluded from mean")
            metrics.append(None)
            continue
        metrics.append(MetricSet.from_predictions(ds.y[test_idx], preds))
    return CVReport(task=ds.task, model_kind=model_kind,
                    folds=tuple(metrics), seed=seed)


@dataclass(frozen=True)
class NoiseReport:
    task: Task
    model_kind: ModelKind
    levels: tuple[float, ...]
    accuracies: dict[float, tuple[float, ...]] = field(repr=False)
    skipped_levels: tuple[float, ...] = ()

    def mean_accuracy(self, level: float) -> float:
        return float(np.mean(self.accuracies[level]))

    def summary(self) -> dict:
        return {
            "experiment": "noise",
            "task": self.task.value,
            "model": self.model_kind.value,
            "levels": {str(p): self.mean_accuracy(p)
                       for p in self.levels if p in self.accuracies},
            "skipped_levels": [str(p) for p in self.skipped_levels],
            "repeats": {str(p): len(v) for p, v in self.accuracies.items()},
        }


def accuracy_on_flipped(preds, y_true, flipped_idx) -> float:
    """Fraction of flipped records whose prediction matches the TRUE label."""
    preds = np.asarray(preds)
    y_true = np.asarray(y_true)
    flipped_idx = np.asarray(flipped_idx)
    return float(np.mean(preds[flipped_idx] == y_true[flipped_idx]))


def label_noise_eval(ds: TaskDataset, noise_levels=DEFAULT_NOISE_LEVELS,
                     repeats: int = 10, model_kind: ModelKind = ModelKind.EBM,
                     seed: int = 0,
                     train_config: TrainConfig = TrainConfig()) -> NoiseReport:
    """Flip a random share of labels, train on the noisy labels, and measure
    accuracy on the flipped records against their true (pre-flip) labels."""
    n = len(ds.y)
    if np.any(ds.y < 0):
        raise InvalidInput("label-noise evaluation needs a fully labeled dataset")
    root = np.random.SeedSequence(seed)
    accuracies: dict[float, tuple[float, ...]] = {}
    skipped: list[float] = []
    for level, child in zip(noise_levels, root.spawn(len(noise_levels))):
        m = math.floor(level * n)
        if m == 0:
            warnings.warn(f"noise level {level} flips zero records, skipped")
            skipped.append(level)
            continue
        per_level = []
        for rep_child in child.spawn(repeats):
            rng = np.random.default_rng(rep_child)
            flipped = rng.choice(n, size=m, replace=False)
            y_noisy = ds.y.copy()
            y_noisy[flipped] = 1 - y_noisy[flipped]
            if model_kind is ModelKind.ALL_NEGATIVE:
                preds = np.zeros(n, dtype=np.int8)
            elif model_kind is ModelKind.RULE_BASED:
                preds = ds.rule_preds
            else:
                predict, _ = _fit_or_majority(ds.X, y_noisy, train_config, rng)
                preds = predict(ds.X)
            per_level.append(accuracy_on_flipped(preds, ds.y, flipped))
        accuracies[level] = tuple(per_level)
    return NoiseReport(task=ds.task, model_kind=model_kind,
                       levels=tuple(noise_levels), accuracies=accuracies,
                       skipped_levels=tuple(skipped))


# ---------------------------------------------------------------------------
# report files

def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def write_totalflips_report(report: TotalFlipsReport, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / f"totalflips_{report.task.value}.csv"
    lines = ["repetition,total_flips"]
    lines += [f"{i},{t}" for i, t in enumerate(report.totals)]
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    json_path = outdir / f"totalflips_{report.task.value}.json"
    _write_json(json_path, report.summary())
    return [csv_path, json_path]


def write_cv_report(report: CVReport, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = f"cv_{report.task.value}_{report.model_kind.value}"
    lines = ["fold,f1,accuracy,precision,recall,degenerate"]
    for f, m in enumerate(report.folds):
        if m is None:
            lines.append(f"{f},,,,,1")
        else:
            lines.append(f"{f},{m.f1!r},{m.accuracy!r},{m.precision!r},{m.recall!r},0")
    csv_path = outdir / f"{stem}.csv"
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    json_path = outdir / f"{stem}.json"
    _write_json(json_path, report.summary())
    return [csv_path, json_path]


def write_noise_report(report: NoiseReport, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = f"noise_{report.task.value}_{report.model_kind.value}"
    lines = ["level,repeat,accuracy_on_flipped"]
    for level in report.levels:
        for rep, acc in enumerate(report.accuracies.get(level, ())):
            lines.append(f"{level!r},{rep},{acc!r}")
    csv_path = outdir / f"{stem}.csv"
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    json_path = outdir / f"{stem}.json"
    _write_json(json_path, report.summary())
    return [csv_path, json_path]


# ---------------------------------------------------------------------------
# CLI

def _load_dataset(path, task: Task, train_config: TrainConfig) -> TaskDataset:
    with open(path, encoding="utf-8") as fh:
        records, labels = read_csv(fh)
    return build_task_dataset(records, labels, task, train_config)


_task_option = click.option("--task", type=click.Choice([t.value for t in Task]),
                            required=True)
_data_option = click.option("--data", type=click.Path(exists=True, dir_okay=False),
                            required=True, help="Labeled records CSV.")
_seed_option = click.option("--seed", type=int, default=0, show_default=True)
_out_option = click.option("--out", type=click.Path(file_okay=False), required=True)
_model_option = click.option("--model", "model_kind",
                             type=click.Choice([m.value for m in ModelKind]),
                             default=ModelKind.EBM.value, show_default=True)


def _train_options(fn):
    for deco in (
        click.option("--max-bins", type=int, default=TrainConfig.max_bins,
                     show_default=True),
        click.option("--learning-rate", type=float,
                     default=TrainConfig.learning_rate, show_default=True),
        click.option("--rounds", type=int, default=TrainConfig.n_rounds,
                     show_default=True),
        click.option("--patience", type=int,
                     default=TrainConfig.early_stop_patience, show_default=True),
    ):
        fn = deco(fn)
    return fn


def _train_config(max_bins, learning_rate, rounds, patience, seed) -> TrainConfig:
    return TrainConfig(max_bins=max_bins, learning_rate=learning_rate,
                       n_rounds=rounds, early_stop_patience=patience, seed=seed)


@click.group()
def main():
    """Experiment harness over labeled record CSVs."""


@main.command()
@click.option("--n", type=int, default=838, show_default=True)
@_seed_option
@click.option("--lab-dropout", type=float, default=0.25, show_default=True)
@click.option("--flag-noise", type=float, default=0.0, show_default=True)
@click.option("--typo-rate", type=float, default=0.0, show_default=True)
@click.option("--unlabeled", is_flag=True, help="Omit the label columns.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def synth(n, seed, lab_dropout, flag_noise, typo_rate, unlabeled, out):
    """Generate a synthetic record CSV."""
    records, truth = synth_generate(SynthConfig(
        n_records=n, seed=seed, lab_dropout=lab_dropout,
        flag_noise=flag_noise, typo_rate=typo_rate))
    with open(out, "w", encoding="utf-8", newline="") as fh:
        write_csv(records, labels=None if unlabeled else truth, fh=fh)
    counts = {t.value: int(truth[t].sum()) for t in Task}
    click.echo(f"wrote {n} records to {out} (positives: {counts})")


@main.command()
@_data_option
@_task_option
@_seed_option
@_out_option
@click.option("--initial-fraction", type=float, default=SimConfig.initial_fraction,
              show_default=True)
@click.option("--batch-size", type=int, default=SimConfig.batch_size,
              show_default=True)
@click.option("--repetitions", type=int, default=SimConfig.repetitions,
              show_default=True)
@click.option("--batch-order", type=click.Choice(["random", "confidence"]),
              default="random", show_default=True,
              help="Reveal uniformly random batches, or the least-confident "
                   "remaining records.")
@_train_options
def totalflips(data, task, seed, out, initial_fraction, batch_size, repetitions,
               batch_order, max_bins, learning_rate, rounds, patience):
    """Simulate the labeling loop and report correction counts."""
    cfg = _train_config(max_bins, learning_rate, rounds, patience, seed)
    ds = _load_dataset(data, Task(task), cfg)
    report = simulate_totalflips(
        ds, SimConfig(initial_fraction=initial_fraction, batch_size=batch_size,
                      repetitions=repetitions, seed=seed,
                      batch_order=batch_order), cfg)
    paths = write_totalflips_report(report, out)
    s = report.summary()
    click.echo(f"{task}: median TotalFlips {s['median']} vs all-negative "
               f"baseline {s['baseline_flips']} -> {paths[1]}")


@main.command()
@_data_option
@_task_option
@_model_option
@click.option("--folds", type=int, default=5, show_default=True)
@_seed_option
@_out_option
@_train_options
def cv(data, task, model_kind, folds, seed, out,
       max_bins, learning_rate, rounds, patience):
    """Cross-validated F1/accuracy/precision/recall."""
    cfg = _train_config(max_bins, learning_rate, rounds, patience, seed)
    ds = _load_dataset(data, Task(task), cfg)
    report = kfold_cv(ds, k=folds, model_kind=ModelKind(model_kind),
                      seed=seed, train_config=cfg)
    paths = write_cv_report(report, out)
    mean = report.mean()
    click.echo(f"{task}/{model_kind}: mean F1 {mean.f1:.4f}, "
               f"accuracy {mean.accuracy:.4f} -> {paths[1]}")


@main.command()
@_data_option
@_task_option
@_model_option
@click.option("--levels", default=",".join(str(p) for p in DEFAULT_NOISE_LEVELS),
              show_default=True, help="Comma-separated flip fractions.")
@click.option("--repeats", type=int, default=10, show_default=True)
@_seed_option
@_out_option
@_train_options
def noise(data, task, model_kind, levels, repeats, seed, out,
          max_bins, learning_rate, rounds, patience):
    """Label-noise robustness: accuracy on intentionally flipped records."""
    cfg = _train_config(max_bins, learning_rate, rounds, patience, seed)
    ds = _load_dataset(data, Task(task), cfg)
    parsed = tuple(float(p) for p in levels.split(","))
    report = label_noise_eval(ds, noise_levels=parsed, repeats=repeats,
                              model_kind=ModelKind(model_kind), seed=seed,
                              train_config=cfg)
    paths = write_noise_report(report, out)
    shown = {p: round(report.mean_accuracy(p), 4)
             for p in parsed if p in report.accuracies}
    click.echo(f"{task}/{model_kind}: accuracy on flipped {shown} -> {paths[1]}")


if __name__ == "__main__":
    main()
