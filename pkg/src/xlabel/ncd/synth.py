"""Synthetic check-up record generator.

Stands in for the real (unavailable) dataset: latent per-task disease status
drives note keywords, diagnosis codes, prescriptions and lab values, with
configurable failure modes — lab dropout (minor visits carry no labs),
keyword typos (a keyword corrupted in the note is invisible to matching),
and flag noise (an indicator source misfires: positives lose it, negatives
gain it). Ground truth is returned separately and never encoded in the
record itself.

With all noise at zero the generated features are logically consistent:
every positive record carries all three indicator sources and diseased-range
labs, and every negative record stays strictly inside normal ranges.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from xlabel.errors import InvalidInput
from xlabel.ncd.records import RawRecord
from xlabel.ncd.tables import DEFAULT_TABLES, ClinicalTables
from xlabel.ncd.tasks import CHAIN_ORDER, Task

# Positive counts observed in the reference cohort of 838 records.
DEFAULT_CLASS_RATES: dict[Task, float] = {
    Task.DM: 72 / 838,
    Task.HTN: 139 / 838,
    Task.CKD: 52 / 838,
    Task.DLP: 77 / 838,
}

# lab -> (driving task, (mean, sd, lo, hi) when healthy, same when diseased).
# Clip bounds keep healthy values strictly below and diseased values strictly
# beyond the guideline thresholds used by the rule-based baseline.
_LAB_MODELS = {
    "Glucose": (Task.DM, (97.0, 9.0, 72.0, 118.0), (168.0, 24.0, 128.0, 320.0)),
    "HbA1c": (Task.DM, (5.4, 0.3, 4.6, 6.1), (8.1, 0.9, 6.6, 13.0)),
    "sbp1": (Task.HTN, (119.0, 8.0, 96.0, 136.0), (156.0, 11.0, 142.0, 210.0)),
    "dbp1": (Task.HTN, (74.0, 6.0, 58.0, 87.0), (96.0, 6.0, 91.0, 125.0)),
    "eGFR": (Task.CKD, (96.0, 13.0, 63.0, 130.0), (44.0, 9.0, 10.0, 57.0)),
    "LDL-c": (Task.DLP, (112.0, 18.0, 55.0, 152.0), (186.0, 16.0, 162.0, 255.0)),
}

_ICD_POOLS = {
    Task.DM: ("E11.9", "E10.9", "E11.65", "E13.9"),
    Task.HTN: ("I10", "I11.9", "I15.0"),
    Task.CKD: ("N18.3", "N18.4", "N18.9"),
    Task.DLP: ("E78.5", "E78.0", "E78.2"),
}
_NEUTRAL_CODES = ("Z00.0", "J06.9", "M54.5", "K21.0")

_DRUG_POOLS = {
    Task.DM: ("metformin 500mg", "insulin glargine", "glipizide 5mg", "sitagliptin"),
    Task.HTN: ("amlodipine 5mg", "losartan 50mg", "enalapril", "hydrochlorothiazide"),
    Task.CKD: ("calcitriol", "sodium bicarbonate", "erythropoietin"),
    Task.DLP: ("atorvastatin 20mg", "simvastatin 10mg", "rosuvastatin", "ezetimibe"),
}
_NEUTRAL_DRUGS = ("paracetamol", "cetirizine", "omeprazole", "ibuprofen")

# Filler text is deliberately free of every task keyword (checked in tests).
_NOTE_FILLERS = (
    "annual checkup, no acute complaints",
    "medication refill, stable",
    "knee pain, NSAIDs prescribed",
    "URI symptoms, supportive care",
    "routine follow-up, labs ordered",
    "headache, advised rest and hydration",
)
_KEYWORD_PHRASES = (
    "known case {kw}",
    "f/u {kw}, refill meds",
    "{kw} noted, continue current plan",
)


@dataclass(frozen=True)
class SynthConfig:
    n_records: int = 838
    class_rates: Mapping[Task, float] = field(
        default_factory=lambda: dict(DEFAULT_CLASS_RATES))
    lab_dropout: float = 0.25
    flag_noise: float = 0.0
    typo_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_records < 1:
            raise InvalidInput(f"n_records must be >= 1, got {self.n_records}")
        for name in ("lab_dropout", "flag_noise", "typo_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidInput(f"{name} must lie in [0, 1], got {v}")
        for task in Task:
            rate = self.class_rates.get(task)
            if rate is None or not 0.0 <= rate <= 1.0:
                raise InvalidInput(f"class rate for {task} must lie in [0, 1], got {rate}")


def _corrupt(keyword: str) -> str:
    # bump the final letter: the classic single-character mistype
    return keyword[:-1] + chr(ord(keyword[-1]) + 1)


def _draw_status(config: SynthConfig, rng: np.random.Generator) -> dict[Task, np.ndarray]:
    """Exactly round(rate*n) positives per task; kidney and lipid disease are
    drawn with weights favoring records already positive for DM/HTN."""
    n = config.n_records
    status: dict[Task, np.ndarray] = {}
    for task in (Task.DM, Task.HTN):
        k = round(config.class_rates[task] * n)
        flags = np.zeros(n, dtype=np.int8)
        flags[rng.choice(n, size=k, replace=False)] = 1
        status[task] = flags
    comorbidity = {
        Task.CKD: 1.0 + 2.5 * status[Task.DM] + 1.5 * status[Task.HTN],
        Task.DLP: 1.0 + 2.0 * status[Task.DM] + 1.0 * status[Task.HTN],
    }
    for task in (Task.CKD, Task.DLP):
        k = round(config.class_rates[task] * n)
        flags = np.zeros(n, dtype=np.int8)
        w = comorbidity[task]
        flags[rng.choice(n, size=k, replace=False, p=w / w.sum())] = 1
        status[task] = flags
    return status


def _lab_value(name: str, diseased: bool, rng: np.random.Generator) -> float:
    _, healthy, sick = _LAB_MODELS[name]
    mean, sd, lo, hi = sick if diseased else healthy
    return float(np.clip(rng.normal(mean, sd), lo, hi))


def synth_generate(config: SynthConfig,
                   tables: ClinicalTables = DEFAULT_TABLES):
    """Generate ``(records, truth)`` with truth as Task -> int8 array."""
    rng = np.random.default_rng(config.seed)
    status = _draw_status(config, rng)
    records = []
    for i in range(config.n_records):
        sex = "F" if rng.random() < 0.5 else "M"
        labs = {}
        for name, (task, _, _) in _LAB_MODELS.items():
            if rng.random() >= config.lab_dropout:
                labs[name] = round(_lab_value(name, bool(status[task][i]), rng), 1)

        note_parts = [_NOTE_FILLERS[rng.integers(len(_NOTE_FILLERS))]]
        codes: list[str] = []
        drugs: list[str] = []
        for task in CHAIN_ORDER:
            positive = bool(status[task][i])
            # each indicator source misfires independently at flag_noise
            include_kw = positive != (rng.random() < config.flag_noise)
            include_icd = positive != (rng.random() < config.flag_noise)
            include_drug = positive != (rng.random() < config.flag_noise)
            if include_kw:
                keywords = tables.keywords.for_task(task)
                kw = keywords[rng.integers(len(keywords))]
                if rng.random() < config.typo_rate:
                    kw = _corrupt(kw)
                phrase = _KEYWORD_PHRASES[rng.integers(len(_KEYWORD_PHRASES))]
                note_parts.append(phrase.format(kw=kw))
            if include_icd:
                pool = _ICD_POOLS[task]
                codes.append(pool[rng.integers(len(pool))])
            if include_drug:
                pool = _DRUG_POOLS[task]
                drugs.append(pool[rng.integers(len(pool))])
        if rng.random() < 0.4:
            codes.append(_NEUTRAL_CODES[rng.integers(len(_NEUTRAL_CODES))])
        if rng.random() < 0.4:
            drugs.append(_NEUTRAL_DRUGS[rng.integers(len(_NEUTRAL_DRUGS))])

        height = round(float(rng.normal(158.0 if sex == "F" else 170.0, 7.0)), 1)
        weight = round(float(rng.normal(62.0 if sex == "F" else 72.0, 11.0)), 1)
        records.append(RawRecord(
            id=f"R{i:05d}",
            age=float(rng.integers(25, 89)),
            sex=sex,
            height=height,
            weight=weight,
            labs=labs,
            icd10_codes=tuple(codes),
            drugs=tuple(drugs),
            note="; ".join(note_parts),
        ))
    return records, status
