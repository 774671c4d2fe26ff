import io

import numpy as np
import pytest

from xlabel import TrainConfig, fit
from xlabel.errors import ChainOrderError, InvalidInput
from xlabel.ncd import (
    CHAIN_ORDER,
    DEFAULT_SCHEMA,
    DEFAULT_TABLES,
    FeatureSchema,
    RawRecord,
    SynthConfig,
    Task,
    TaskChain,
    chain_predict,
    extract_features,
    extract_matrix,
    keyword_match,
    read_csv,
    rule_based_classify,
    synth_generate,
    write_csv,
)
from xlabel.ncd.synth import _NOTE_FILLERS, _KEYWORD_PHRASES
from xlabel.ncd.tables import parse_task_lists


def record(**kwargs):
    base = dict(id="r1", age=50.0, sex="F", height=160.0, weight=60.0)
    base.update(kwargs)
    return RawRecord(**base)


class TestKeywordMatch:
    def test_t2d_found_with_span(self):
        flag, spans = keyword_match("known case T2D, refill", Task.DM)
        assert flag == 1
        assert spans == [(11, 14)]
        assert "known case T2D, refill"[11:14] == "T2D"

    def test_empty_note(self):
        assert keyword_match("", Task.DM) == (0, [])

    def test_mistyped_keyword_is_missed(self):
        assert keyword_match("DN follow-up", Task.DM) == (0, [])

    def test_case_insensitive(self):
        flag, spans = keyword_match("history of DIABETES", Task.DM)
        assert flag == 1 and len(spans) == 1

    def test_every_span_is_a_keyword(self):
        notes = ["DM and t2d; known diabetes", "HT noted; hypertension f/u",
                 "statin; dyslipidemia", "CKD stage 3"]
        for task in Task:
            keywords = {k.lower() for k in DEFAULT_TABLES.keywords.for_task(task)}
            for note in notes:
                flag, spans = keyword_match(note, task)
                data = note.encode("utf-8")
                for s, e in spans:
                    assert data[s:e].decode("utf-8").lower() in keywords

    def test_byte_offsets_on_non_ascii_note(self):
        note = "café — T2D noted"
        flag, spans = keyword_match(note, Task.DM)
        assert flag == 1
        s, e = spans[0]
        assert note.encode("utf-8")[s:e] == b"T2D"

    def test_spans_per_keyword_do_not_overlap(self):
        note = "DM DM DMDM"
        _, spans = keyword_match(note, Task.DM)
        assert spans == sorted(spans)
        assert len(spans) == 4


class TestExtractFeatures:
    def test_icd_flag_and_missing_labs(self):
        r = record(icd10_codes=("E11.9",))
        x = extract_features(r, Task.DM)
        names = DEFAULT_SCHEMA.features(Task.DM)
        assert x[names.index("DM_ICD10")] == 1.0
        assert np.isnan(x[names.index("Glucose")])
        assert np.isnan(x[names.index("HbA1c")])

    def test_ckd_without_upstream_prediction(self):
        with pytest.raises(ChainOrderError):
            extract_features(record(), Task.CKD)

    def test_schema_closure(self):
        r = record(note="known case DM", icd10_codes=("E11.9",),
                   drugs=("metformin 500mg",), labs={"Glucose": 150.0})
        for task in Task:
            upstream = {t: 0 for t in Task}
            x = extract_features(r, task, upstream)
            assert x.shape == (len(DEFAULT_SCHEMA.features(task)),)

    def test_hand_computed_row(self):
        # independent mapping done by eye against the feature table
        r = record(
            note="f/u T2D, refill meds",
            icd10_codes=("I10", "Z00.0"),
            drugs=("atorvastatin 20mg",),
            labs={"Glucose": 140.0, "eGFR": 55.0, "sbp1": 150.0},
        )
        dm = extract_features(r, Task.DM)
        assert dm.tolist()[:3] == [1.0, 0.0, 0.0]        # key, icd, drugs
        assert dm[3] == 140.0                             # Glucose
        assert np.isnan(dm[4]) and dm[5] == 55.0          # HbA1c missing, eGFR
        htn = extract_features(r, Task.HTN)
        assert htn.tolist()[:3] == [0.0, 1.0, 0.0]
        assert htn[3] == 150.0 and np.isnan(htn[4])
        ckd = extract_features(r, Task.CKD, {Task.DM: 1, Task.HTN: 0})
        assert ckd.tolist() == [0.0, 0.0, 0.0, 1.0, 0.0, 55.0]
        dlp = extract_features(r, Task.DLP, {Task.DM: 1, Task.HTN: 0, Task.CKD: 1})
        names = DEFAULT_SCHEMA.features(Task.DLP)
        assert dlp[names.index("DLP_drugs")] == 1.0
        assert dlp[names.index("CKD_pred")] == 1.0
        assert np.isnan(dlp[names.index("LDL-c")])

    def test_drug_match_is_substring_case_insensitive(self):
        r = record(drugs=("Metformin 850 MG",))
        x = extract_features(r, Task.DM)
        assert x[DEFAULT_SCHEMA.features(Task.DM).index("DM_drugs")] == 1.0


class TestSchema:
    def test_default_feature_sets(self):
        assert DEFAULT_SCHEMA.features(Task.DM) == (
            "DM_key", "DM_ICD10", "DM_drugs", "Glucose", "HbA1c", "eGFR")
        assert DEFAULT_SCHEMA.features(Task.HTN) == (
            "HTN_key", "HTN_ICD10", "HTN_drugs", "sbp1", "dbp1")
        assert DEFAULT_SCHEMA.features(Task.CKD) == (
            "CKD_key", "CKD_ICD10", "CKD_drugs", "DM_pred", "HTN_pred", "eGFR")
        assert DEFAULT_SCHEMA.features(Task.DLP) == (
            "DLP_key", "DLP_ICD10", "DLP_drugs", "Glucose",
            "DM_pred", "HTN_pred", "CKD_pred", "LDL-c")

    def test_upstream_requirements(self):
        assert DEFAULT_SCHEMA.required_upstream(Task.DM) == ()
        assert DEFAULT_SCHEMA.required_upstream(Task.CKD) == (Task.DM, Task.HTN)
        assert DEFAULT_SCHEMA.required_upstream(Task.DLP) == (
            Task.DM, Task.HTN, Task.CKD)

    def test_forward_reference_rejected(self):
        bad = {
            Task.DM: ("DM_key", "CKD_pred"),
            Task.HTN: ("HTN_key",),
            Task.CKD: ("CKD_key",),
            Task.DLP: ("DLP_key",),
        }
        with pytest.raises(InvalidInput):
            FeatureSchema(bad)


def train_chain(records, truth, seed=0):
    models = {}
    preds = {}
    for task in CHAIN_ORDER:
        X = extract_matrix(records, task, preds)
        models[task] = fit(X, truth[task], TrainConfig(seed=seed),
                           feature_names=DEFAULT_SCHEMA.features(task))
        preds[task] = models[task].predict_label_many(X)
    return TaskChain(models=models)


@pytest.fixture(scope="module")
def chain_and_data():
    records, truth = synth_generate(SynthConfig(
        n_records=300, seed=11, lab_dropout=0.1))
    return train_chain(records, truth), records, truth


class TestChainPredict:
    def test_upstream_labels_visible_downstream(self, chain_and_data):
        chain, _, _ = chain_and_data
        r = record(
            note="known case DM; HT noted",
            icd10_codes=("E11.9", "I10"),
            drugs=("metformin 500mg", "amlodipine 5mg"),
            labs={"Glucose": 170.0, "HbA1c": 8.0, "sbp1": 160.0, "dbp1": 95.0},
        )
        out = chain_predict(chain, r)
        assert out[Task.DM].pseudo_label == 1
        assert out[Task.HTN].pseudo_label == 1
        ckd_x = extract_features(r, Task.CKD, {
            Task.DM: out[Task.DM].pseudo_label,
            Task.HTN: out[Task.HTN].pseudo_label,
        })
        names = DEFAULT_SCHEMA.features(Task.CKD)
        assert ckd_x[names.index("DM_pred")] == 1.0
        assert ckd_x[names.index("HTN_pred")] == 1.0

    def test_incomplete_chain_rejected(self, chain_and_data):
        chain, records, _ = chain_and_data
        partial = TaskChain(models={t: m for t, m in chain.models.items()
                                    if t is not Task.HTN})
        with pytest.raises(ChainOrderError):
            chain_predict(partial, records[0])

    def test_matches_stepwise_oracle_on_50_records(self, chain_and_data):
        chain, records, _ = chain_and_data
        for r in records[:50]:
            expected = {}
            preds = {}
            for task in CHAIN_ORDER:
                x = extract_features(r, task, preds)
                model = chain.models[task]
                p = model.predict_proba(x)
                label = 1 if p >= 0.5 else 0
                expected[task] = (label, p)
                preds[task] = label
            out = chain_predict(chain, r)
            for task in CHAIN_ORDER:
                assert out[task].pseudo_label == expected[task][0]
                assert out[task].p == expected[task][1]

    def test_heat_accompanies_every_task(self, chain_and_data):
        chain, records, _ = chain_and_data
        out = chain_predict(chain, records[0])
        for task in CHAIN_ORDER:
            names = [n for n, _ in out[task].heat]
            assert tuple(names) == DEFAULT_SCHEMA.features(task)
            assert all(0.0 < v < 1.0 for _, v in out[task].heat)


class TestRuleBased:
    def test_stage2_blood_pressure_without_flags(self):
        r = record(labs={"sbp1": 153.0, "dbp1": 72.0})
        assert rule_based_classify(r, Task.HTN) == 1

    def test_all_clear_record_is_negative_everywhere(self):
        r = record()
        for task in Task:
            assert rule_based_classify(r, task) == 0

    def test_missing_labs_never_trigger(self):
        r = record(labs={})
        assert rule_based_classify(r, Task.CKD) == 0  # eGFR < 60 clause dormant

    def test_threshold_edges(self):
        assert rule_based_classify(record(labs={"HbA1c": 6.5}), Task.DM) == 1
        assert rule_based_classify(record(labs={"HbA1c": 6.4}), Task.DM) == 0
        assert rule_based_classify(record(labs={"eGFR": 60.0}), Task.CKD) == 0
        assert rule_based_classify(record(labs={"eGFR": 59.9}), Task.CKD) == 1
        assert rule_based_classify(record(labs={"LDL-c": 160.0}), Task.DLP) == 1

    def test_flag_features_trigger(self):
        assert rule_based_classify(record(note="CKD stage 3"), Task.CKD) == 1
        assert rule_based_classify(record(icd10_codes=("N18.4",)), Task.CKD) == 1
        assert rule_based_classify(record(drugs=("erythropoietin",)), Task.CKD) == 1

    def test_label_independent_pure_function(self):
        records, truth = synth_generate(SynthConfig(n_records=60, seed=5))
        before = [rule_based_classify(r, Task.DM) for r in records]
        flipped = {t: 1 - v for t, v in truth.items()}  # labels change, records don't
        after = [rule_based_classify(r, Task.DM) for r in records]
        assert before == after
        del flipped


class TestSynth:
    def test_default_rates_hit_reference_counts(self):
        _, truth = synth_generate(SynthConfig(seed=7))
        expected = {Task.DM: 72, Task.HTN: 139, Task.CKD: 52, Task.DLP: 77}
        for task, want in expected.items():
            assert abs(int(truth[task].sum()) - want) <= 15

    def test_zero_noise_rule_recovery_exact(self):
        cfg = SynthConfig(n_records=400, seed=3, lab_dropout=0.0,
                          typo_rate=0.0, flag_noise=0.0)
        records, truth = synth_generate(cfg)
        for task in Task:
            preds = np.array([rule_based_classify(r, task) for r in records])
            assert np.array_equal(preds, truth[task])

    def test_same_seed_identical_datasets(self):
        a = synth_generate(SynthConfig(n_records=50, seed=9))
        b = synth_generate(SynthConfig(n_records=50, seed=9))
        assert a[0] == b[0]
        for task in Task:
            assert np.array_equal(a[1][task], b[1][task])

    def test_every_positive_has_an_indicator_at_zero_noise(self):
        cfg = SynthConfig(n_records=300, seed=13, lab_dropout=0.0,
                          typo_rate=0.0, flag_noise=0.0)
        records, truth = synth_generate(cfg)
        for task in Task:
            for r, positive in zip(records, truth[task]):
                if positive:
                    x = extract_features(r, task, {t: 0 for t in Task})
                    flags = x[:3]
                    assert flags.max() == 1.0

    def test_invalid_rates_rejected(self):
        with pytest.raises(InvalidInput):
            SynthConfig(lab_dropout=1.5)
        with pytest.raises(InvalidInput):
            SynthConfig(class_rates={Task.DM: 2.0})
        with pytest.raises(InvalidInput):
            SynthConfig(n_records=0)

    def test_note_templates_contain_no_keywords(self):
        all_keywords = [kw for task in Task
                        for kw in DEFAULT_TABLES.keywords.for_task(task)]
        for text in list(_NOTE_FILLERS) + [p.format(kw="") for p in _KEYWORD_PHRASES]:
            for kw in all_keywords:
                assert kw.lower() not in text.lower(), (text, kw)

    def test_typo_rate_suppresses_keyword_flags(self):
        clean = SynthConfig(n_records=400, seed=21, lab_dropout=0.0, typo_rate=0.0)
        typod = SynthConfig(n_records=400, seed=21, lab_dropout=0.0, typo_rate=1.0)
        rc, tc = synth_generate(clean)
        rt, tt = synth_generate(typod)
        def key_count(records, truth):
            return sum(keyword_match(r.note, Task.DM)[0]
                       for r, pos in zip(records, truth[Task.DM]) if pos)
        assert key_count(rt, tt) < key_count(rc, tc)


class TestCsv:
    def test_round_trip(self):
        records, truth = synth_generate(SynthConfig(n_records=40, seed=15))
        text = write_csv(records, labels=truth)
        again, labels = read_csv(text)
        assert again == records
        for task in Task:
            assert np.array_equal(labels[task], truth[task])

    def test_export_is_byte_stable(self):
        records, truth = synth_generate(SynthConfig(n_records=25, seed=16))
        assert write_csv(records, truth) == write_csv(records, truth)

    def test_partial_labels(self):
        records, truth = synth_generate(SynthConfig(n_records=10, seed=17))
        partial = dict(truth)
        col = partial[Task.DM].copy()
        col[:5] = -1
        partial[Task.DM] = col
        _, labels = read_csv(write_csv(records, partial))
        assert (labels[Task.DM] == -1).sum() == 5

    def test_empty_document_rejected(self):
        with pytest.raises(InvalidInput):
            read_csv("")

    def test_missing_column_diagnostics(self):
        with pytest.raises(InvalidInput, match="note"):
            read_csv("id,age,sex\n1,50,F\n")

    def test_bad_label_value_diagnostics(self):
        records, truth = synth_generate(SynthConfig(n_records=2, seed=18))
        text = write_csv(records, truth).replace("\n", "\n", 1)
        bad = text.splitlines()
        cells = bad[1].split(",")
        cells[-4] = "yes"
        bad[1] = ",".join(cells)
        with pytest.raises(InvalidInput, match="row 2"):
            read_csv("\n".join(bad) + "\n")

    def test_duplicate_id_rejected(self):
        records, truth = synth_generate(SynthConfig(n_records=2, seed=19))
        text = write_csv([records[0], records[0]])
        with pytest.raises(InvalidInput, match="duplicate"):
            read_csv(text)

    def test_file_handle_round_trip(self):
        records, truth = synth_generate(SynthConfig(n_records=5, seed=20))
        buf = io.StringIO()
        write_csv(records, truth, fh=buf)
        buf.seek(0)
        again, _ = read_csv(buf)
        assert again == records


class TestTables:
    def test_default_keywords(self):
        assert DEFAULT_TABLES.keywords.for_task(Task.DM) == ("DM", "diabetes", "T1D", "T2D")
        assert DEFAULT_TABLES.keywords.for_task(Task.HTN) == ("HT", "hypertension", "bisoprolol")
        assert DEFAULT_TABLES.keywords.for_task(Task.CKD) == ("CKD",)
        assert DEFAULT_TABLES.keywords.for_task(Task.DLP) == ("DLP", "dyslipid", "statin")

    def test_parse_errors(self):
        with pytest.raises(InvalidInput):
            parse_task_lists("DM metformin\n")
        with pytest.raises(InvalidInput):
            parse_task_lists("XYZ: foo\n")
        with pytest.raises(InvalidInput):
            parse_task_lists("DM:\n")

    def test_comments_and_blanks_ignored(self):
        parsed = parse_task_lists("# header\n\nDM: a, b # trailing\n")
        assert parsed[Task.DM] == ("a", "b")
