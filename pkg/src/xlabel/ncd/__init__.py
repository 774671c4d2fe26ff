"""Record schema, per-task feature extraction, chained prediction, the
rule-based baseline, and the synthetic record generator."""
from xlabel.ncd.features import (
    DEFAULT_SCHEMA,
    ChainPrediction,
    FeatureSchema,
    TaskChain,
    chain_predict,
    extract_features,
    extract_matrix,
    keyword_match,
)
from xlabel.ncd.records import CSV_COLUMNS, LAB_NAMES, RawRecord, read_csv, write_csv
from xlabel.ncd.rules import GUIDELINE_THRESHOLDS, rule_based_classify
from xlabel.ncd.synth import DEFAULT_CLASS_RATES, SynthConfig, synth_generate
from xlabel.ncd.tables import DEFAULT_TABLES, ClinicalTables, TaskLists
from xlabel.ncd.tasks import CHAIN_ORDER, Task

__all__ = [
    "CHAIN_ORDER", "CSV_COLUMNS", "ChainPrediction", "ClinicalTables",
    "DEFAULT_CLASS_RATES", "DEFAULT_SCHEMA", "DEFAULT_TABLES",
    "FeatureSchema", "GUIDELINE_THRESHOLDS", "LAB_NAMES", "RawRecord",
    "SynthConfig", "Task", "TaskChain", "TaskLists", "chain_predict",
    "extract_features", "extract_matrix", "keyword_match", "read_csv",
    "rule_based_classify", "synth_generate", "write_csv",
]
