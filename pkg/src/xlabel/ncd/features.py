"""Per-task feature schema, keyword matching with highlight spans, feature
extraction, and chained four-task prediction.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

from xlabel.ebm import EbmModel
from xlabel.errors import ChainOrderError, InvalidInput
from xlabel.ncd.records import LAB_NAMES, RawRecord
from xlabel.ncd.tables import (
    DEFAULT_TABLES,
    ClinicalTables,
    match_any_prefix,
    match_any_substring,
)
from xlabel.ncd.tasks import CHAIN_ORDER, Task

_TASK_FEATURES: dict[Task, tuple[str, ...]] = {
    Task.DM: ("DM_key", "DM_ICD10", "DM_drugs", "Glucose", "HbA1c", "eGFR"),
    Task.HTN: ("HTN_key", "HTN_ICD10", "HTN_drugs", "sbp1", "dbp1"),
    Task.CKD: ("CKD_key", "CKD_ICD10", "CKD_drugs", "DM_pred", "HTN_pred", "eGFR"),
    Task.DLP: ("DLP_key", "DLP_ICD10", "DLP_drugs", "Glucose",
               "DM_pred", "HTN_pred", "CKD_pred", "LDL-c"),
}


class FeatureSchema:
    """Ordered input features per task; downstream tasks additionally read
    the predictions of strictly earlier tasks (``*_pred`` features)."""

    def __init__(self, features: Mapping[Task, tuple[str, ...]]):
        self._features = dict(features)
        for task, names in self._features.items():
            rank = CHAIN_ORDER.index(task)
            for upstream in self.required_upstream(task):
                if CHAIN_ORDER.index(upstream) >= rank:
                    raise InvalidInput(
                        f"{task} feature schema references {upstream} predictions, "
                        "which is not an earlier task")
            for name in names:
                if not (name.endswith(("_key", "_ICD10", "_drugs", "_pred"))
                        or name in LAB_NAMES):
                    raise InvalidInput(f"unknown feature kind {name!r} for {task}")

    def features(self, task: Task) -> tuple[str, ...]:
        return self._features[task]

    def required_upstream(self, task: Task) -> tuple[Task, ...]:
        return tuple(Task(n[:-len("_pred")]) for n in self._features[task]
                     if n.endswith("_pred"))


DEFAULT_SCHEMA = FeatureSchema(_TASK_FEATURES)


@lru_cache(maxsize=256)
def _keyword_pattern(keyword: str) -> re.Pattern:
    return re.compile(re.escape(keyword), re.IGNORECASE)


def keyword_match(note: str, task: Task,
                  tables: ClinicalTables = DEFAULT_TABLES):
    """Scan a note for the task's keywords.

    Returns ``(flag, spans)`` where spans are (start, end) byte offsets into
    the note's UTF-8 encoding, sorted by start. The flag is 1 iff any keyword
    occurs as a case-insensitive substring.
    """
    if not note:
        return 0, []
    char_spans = []
    for keyword in tables.keywords.for_task(task):
        for m in _keyword_pattern(keyword).finditer(note):
            char_spans.append((m.start(), m.end()))
    if not char_spans:
        return 0, []
    char_spans.sort()
    if note.isascii():
        return 1, char_spans
    # byte offset of each character boundary
    offsets = np.cumsum([0] + [len(ch.encode("utf-8")) for ch in note])
    return 1, [(int(offsets[s]), int(offsets[e])) for s, e in char_spans]


def extract_features(record: RawRecord, task: Task,
                     upstream_preds: Mapping[Task, int] | None = None,
                     tables: ClinicalTables = DEFAULT_TABLES,
                     schema: FeatureSchema = DEFAULT_SCHEMA) -> np.ndarray:
    """Build the task's feature vector for one record (NaN = missing)."""
    upstream_preds = upstream_preds or {}
    values = []
    for name in schema.features(task):
        if name.endswith("_key"):
            flag, _ = keyword_match(record.note, task, tables)
            values.append(float(flag))
        elif name.endswith("_ICD10"):
            hit = match_any_prefix(record.icd10_codes,
                                   tables.icd10_prefixes.for_task(task))
            values.append(1.0 if hit else 0.0)
        elif name.endswith("_drugs"):
            hit = match_any_substring(record.drugs, tables.drugs.for_task(task))
            values.append(1.0 if hit else 0.0)
        elif name.endswith("_pred"):
            source = Task(name[:-len("_pred")])
            if source not in upstream_preds:
                raise ChainOrderError(
                    f"{task} features need the {source} prediction; "
                    "evaluate tasks in chain order")
            values.append(float(upstream_preds[source]))
        else:
            values.append(record.lab(name))
    return np.asarray(values, dtype=np.float64)


def extract_matrix(records, task: Task,
                   upstream_preds: Mapping[Task, np.ndarray] | None = None,
                   tables: ClinicalTables = DEFAULT_TABLES,
                   schema: FeatureSchema = DEFAULT_SCHEMA) -> np.ndarray:
    """Stack feature vectors for many records; ``upstream_preds`` maps each
    required upstream task to a per-record prediction array."""
    upstream_preds = upstream_preds or {}
    rows = []
    for i, record in enumerate(records):
        per_record = {t: int(v[i]) for t, v in upstream_preds.items()}
        rows.append(extract_features(record, task, per_record, tables, schema))
    return np.vstack(rows) if rows else np.empty((0, len(schema.features(task))))


@dataclass(frozen=True)
class ChainPrediction:
    pseudo_label: int
    p: float
    heat: list[tuple[str, float]]


@dataclass(frozen=True)
class TaskChain:
    """One trained model per task, evaluated strictly in chain order."""

    models: Mapping[Task, EbmModel]

    def model_for(self, task: Task) -> EbmModel:
        model = self.models.get(task)
        if model is None:
            raise ChainOrderError(f"no trained model for task {task}")
        return model


def chain_predict(chain: TaskChain, record: RawRecord,
                  tables: ClinicalTables = DEFAULT_TABLES,
                  schema: FeatureSchema = DEFAULT_SCHEMA
                  ) -> dict[Task, ChainPrediction]:
    """Evaluate all four tasks in order, feeding each pseudo-label into the
    later tasks' ``*_pred`` features."""
    for task in CHAIN_ORDER:
        chain.model_for(task)  # fail before any work if the chain is incomplete
    preds: dict[Task, int] = {}
    out: dict[Task, ChainPrediction] = {}
    for task in CHAIN_ORDER:
        x = extract_features(record, task, preds, tables, schema)
        model = chain.model_for(task)
        p = model.predict_proba(x)
        label = 1 if p >= 0.5 else 0
        out[task] = ChainPrediction(pseudo_label=label, p=p, heat=model.heat(x))
        preds[task] = label
    return out
