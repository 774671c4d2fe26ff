import type { BatchPayload, BatchRecord } from "../src/types.js";

export function record(overrides: Partial<BatchRecord> = {}): BatchRecord {
  return {
    record_id: "R1",
    index: 0,
    fields: { age: 50, sex: "F" },
    icd10_codes: [],
    drugs: [],
    note: "routine follow-up",
    note_segments: [{ text: "routine follow-up", highlight: false }],
    pseudo_label: 0,
    p: 0.2,
    confidence: 0.8,
    heat: { DM_key: 0.4, Glucose: 0.55 },
    features: { DM_key: 0, Glucose: 101.2 },
    is_mismatch: false,
    stored_label: null,
    ...overrides,
  };
}

export function payload(records: BatchRecord[]): BatchPayload {
  return { session_id: "s1", model_version: 3, task: "DM", records };
}

/** The mislabeled-record scenario: stored 0, model suggests 1, and the
 * keyword + diagnosis-code flags are the dominant contributors. */
export function mismatchScenario(): BatchPayload {
  return payload([
    record({
      record_id: "6",
      pseudo_label: 1,
      p: 0.97,
      confidence: 0.97,
      is_mismatch: true,
      stored_label: 0,
      note: "known case DM, refill meds",
      note_segments: [
        { text: "known case ", highlight: false },
        { text: "DM", highlight: true },
        { text: ", refill meds", highlight: false },
      ],
      heat: { DM_key: 0.93, DM_ICD10: 0.91, DM_drugs: 0.62,
              Glucose: 0.55, HbA1c: 0.5, eGFR: 0.49 },
      features: { DM_key: 1, DM_ICD10: 1, DM_drugs: 1,
                  Glucose: 131.0, HbA1c: null, eGFR: 88.0 },
    }),
    record({ record_id: "7", confidence: 0.61 }),
  ]);
}
