"""Interactive labeling loop: confidence scoring, uncertainty sampling,
mislabel detection, keep/flip label application, and retraining.

A :class:`LabelStore` partitions records into the labeled and unlabeled
pools. Stores are value objects: label application returns a new store, so
readers holding the old one (including an in-flight retrain) are unaffected.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Literal, Mapping, Sequence

import numpy as np

from xlabel.ebm import EbmModel, TrainConfig, fit
from xlabel.errors import EmptyPool, InvalidInput, ProtocolError

UNLABELED = -1


class Provenance(enum.Enum):
    IMPORTED = "imported"
    HUMAN = "human"


@dataclass(frozen=True)
class Threshold:
    """Select every unlabeled record with confidence strictly below t."""

    threshold: float

    def __post_init__(self):
        if not 0.5 < self.threshold <= 1.0:
            raise InvalidInput(f"threshold must lie in (0.5, 1], got {self.threshold}")


@dataclass(frozen=True)
class NLeast:
    """Select the n unlabeled records with the smallest confidence."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInput(f"n must be positive, got {self.n}")


SamplingMethod = Threshold | NLeast


@dataclass(frozen=True)
class Mismatch:
    index: int
    existing_label: int
    pseudo_label: int
    confidence: float


@dataclass(frozen=True)
class Decision:
    index: int
    action: Literal["keep", "flip", "set"]
    value: int | None = None

    def __post_init__(self):
        if self.action not in ("keep", "flip", "set"):
            raise InvalidInput(f"unknown action {self.action!r}")
        if self.action == "set":
            if self.value not in (0, 1):
                raise InvalidInput("set decision requires a 0/1 value")
        elif self.value is not None:
            raise InvalidInput(f"{self.action} decision takes no value")


@dataclass(frozen=True)
class ConfidenceReport:
    """Model outputs for a slice of records."""

    indices: np.ndarray
    p: np.ndarray
    confidence: np.ndarray
    pseudo_labels: np.ndarray


class LabelStore:
    """Feature matrix plus per-record label state and provenance."""

    def __init__(self, features, record_ids=None, labels=None, provenance=None):
        self.features = np.asarray(features, dtype=np.float64)
        if self.features.ndim != 2:
            raise InvalidInput("features must be a 2-D matrix")
        n = self.features.shape[0]
        if record_ids is None:
            record_ids = tuple(str(i) for i in range(n))
        self.record_ids = tuple(record_ids)
        if len(self.record_ids) != n:
            raise InvalidInput("record_ids arity does not match the features")
        if labels is None:
            self.labels = np.full(n, UNLABELED, dtype=np.int8)
        else:
            self.labels = np.asarray(labels, dtype=np.int8).copy()
            if self.labels.shape != (n,):
                raise InvalidInput("labels arity does not match the features")
            if not np.all(np.isin(self.labels, (UNLABELED, 0, 1))):
                raise InvalidInput("labels must be 0, 1, or UNLABELED")
        self.provenance: list[Provenance | None] = (
            [None] * n if provenance is None else list(provenance))
        if len(self.provenance) != n:
            raise InvalidInput("provenance arity does not match the features")

    def __len__(self):
        return self.features.shape[0]

    def labeled_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labels != UNLABELED)

    def unlabeled_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labels == UNLABELED)

    def copy(self) -> "LabelStore":
        return LabelStore(self.features, self.record_ids, self.labels,
                          list(self.provenance))


def confidence_from_p(p):
    """max{p, 1-p}: 0.5 when the model is least sure, 1 when most sure."""
    return np.maximum(p, 1.0 - p)


def confidence(model: EbmModel, x) -> float:
    p = model.predict_proba(x)
    return float(max(p, 1.0 - p))


def score_records(model: EbmModel, store: LabelStore, indices) -> ConfidenceReport:
    indices = np.asarray(indices, dtype=np.int64)
    p = model.predict_proba_many(store.features[indices])
    return ConfidenceReport(
        indices=indices,
        p=p,
        confidence=confidence_from_p(p),
        pseudo_labels=(p >= 0.5).astype(np.int8),
    )


def rank_by_confidence(indices, conf) -> np.ndarray:
    """Ascending confidence, ties broken by ascending record index."""
    indices = np.asarray(indices)
    conf = np.asarray(conf)
    order = np.lexsort((indices, conf))
    return order


def select_by_method(indices, conf, method: SamplingMethod) -> np.ndarray:
    """Pure selection core shared by sample() and its test oracle."""
    indices = np.asarray(indices, dtype=np.int64)
    conf = np.asarray(conf, dtype=np.float64)
    order = rank_by_confidence(indices, conf)
    ranked = indices[order]
    if isinstance(method, Threshold):
        return ranked[conf[order] < method.threshold]
    return ranked[:method.n]


def sample(store: LabelStore, model: EbmModel, method: SamplingMethod) -> list[int]:
    """Pick unlabeled records for review, least confident first."""
    pool = store.unlabeled_indices()
    if pool.size == 0:
        raise EmptyPool("no unlabeled records to sample")
    report = score_records(model, store, pool)
    return [int(i) for i in select_by_method(pool, report.confidence, method)]


def detect_mismatches(store: LabelStore, model: EbmModel) -> list[Mismatch]:
    """Labeled records whose stored label disagrees with the model.

    Ordered by confidence descending (the most confidently contradicted
    labels are the strongest mislabel candidates), ties by record index.
    """
    labeled = store.labeled_indices()
    if labeled.size == 0:
        return []
    report = score_records(model, store, labeled)
    disagree = report.pseudo_labels != store.labels[labeled]
    order = np.lexsort((labeled[disagree], -report.confidence[disagree]))
    return [
        Mismatch(
            index=int(labeled[disagree][k]),
            existing_label=int(store.labels[labeled[disagree][k]]),
            pseudo_label=int(report.pseudo_labels[disagree][k]),
            confidence=float(report.confidence[disagree][k]),
        )
        for k in order
    ]


def apply_labels(store: LabelStore, decisions: Sequence[Decision],
                 presented: Mapping[int, int] | None = None) -> LabelStore:
    """Apply keep/flip/set decisions; returns a new store.

    keep/flip resolve against ``presented``, the pseudo-labels shown for the
    current batch. Records touched become HUMAN-labeled; everything else is
    untouched.
    """
    presented = presented or {}
    seen = set()
    resolved = []
    for d in decisions:
        if not 0 <= d.index < len(store):
            raise InvalidInput(f"record index {d.index} out of range")
        if d.index in seen:
            raise InvalidInput(f"duplicate decision for record index {d.index}")
        seen.add(d.index)
        if d.action == "set":
            value = d.value
        else:
            if d.index not in presented:
                raise ProtocolError(
                    f"{d.action} for record {d.index} but no pseudo-label was presented")
            pseudo = presented[d.index]
            value = pseudo if d.action == "keep" else 1 - pseudo
        resolved.append((d.index, value))

    out = store.copy()
    for index, value in resolved:
        out.labels[index] = value
        out.provenance[index] = Provenance.HUMAN
    return out


def retrain(store: LabelStore, config: TrainConfig) -> EbmModel:
    """Fit a fresh model on the labeled pool (raises DegenerateLabels if
    it holds a single class)."""
    labeled = store.labeled_indices()
    return fit(store.features[labeled], store.labels[labeled].astype(np.int64),
               config)
