"""Rule-based baseline: standard guideline cut-offs plus the flag features.

Pure function of the record (never trained), so its output is independent of
any labels. Missing lab values never trigger their clause.
"""
from __future__ import annotations

from typing import Mapping

import numpy as np

from xlabel.ncd.features import DEFAULT_SCHEMA, extract_features
from xlabel.ncd.records import RawRecord
from xlabel.ncd.tables import DEFAULT_TABLES, ClinicalTables
from xlabel.ncd.tasks import Task

# Guideline thresholds: HbA1c %, fasting glucose mg/dL, blood pressure mmHg,
# eGFR mL/min/1.73m2, LDL cholesterol mg/dL.
GUIDELINE_THRESHOLDS = {
    "HbA1c": 6.5,
    "Glucose": 126.0,
    "sbp1": 140.0,
    "dbp1": 90.0,
    "eGFR": 60.0,
    "LDL-c": 160.0,
}


def _ge(value: float, threshold: float) -> bool:
    return not np.isnan(value) and value >= threshold


def _lt(value: float, threshold: float) -> bool:
    return not np.isnan(value) and value < threshold


def _any_flag(record: RawRecord, task: Task, tables: ClinicalTables) -> bool:
    names = (f"{task.value}_key", f"{task.value}_ICD10", f"{task.value}_drugs")
    # flags never require upstream predictions, so feed dummies
    dummy = {t: 0 for t in Task}
    x = extract_features(record, task, dummy, tables, DEFAULT_SCHEMA)
    features = DEFAULT_SCHEMA.features(task)
    return any(x[features.index(n)] == 1.0 for n in names)


def rule_based_classify(record: RawRecord, task: Task,
                        upstream: Mapping[Task, int] | None = None,
                        tables: ClinicalTables = DEFAULT_TABLES) -> int:
    """Classify one record for one task; ``upstream`` is accepted for
    interface parity with the chained model but the rules never need it."""
    del upstream
    t = GUIDELINE_THRESHOLDS
    if _any_flag(record, task, tables):
        return 1
    if task is Task.DM:
        return int(_ge(record.lab("HbA1c"), t["HbA1c"])
                   or _ge(record.lab("Glucose"), t["Glucose"]))
    if task is Task.HTN:
        return int(_ge(record.lab("sbp1"), t["sbp1"])
                   or _ge(record.lab("dbp1"), t["dbp1"]))
    if task is Task.CKD:
        return int(_lt(record.lab("eGFR"), t["eGFR"]))
    return int(_ge(record.lab("LDL-c"), t["LDL-c"]))
