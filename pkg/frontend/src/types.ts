/** Wire types mirroring the labeling service JSON. */

export type Label = 0 | 1;

export interface NoteSegment {
  text: string;
  highlight: boolean;
}

export interface BatchRecord {
  record_id: string;
  index: number;
  fields: Record<string, number | string | null>;
  icd10_codes: string[];
  drugs: string[];
  note: string;
  note_segments: NoteSegment[];
  pseudo_label: Label;
  p: number;
  confidence: number;
  heat: Record<string, number>;
  features: Record<string, number | null>;
  is_mismatch: boolean;
  stored_label: number | null;
}

export interface BatchPayload {
  session_id: string;
  model_version: number;
  task: string;
  records: BatchRecord[];
}

export interface SessionStatus {
  session_id: string;
  dataset_id: string;
  task: string;
  status: "TRAINED" | "UNTRAINED";
  model_version: number;
  labeled: number;
  unlabeled: number;
}

export interface DatasetSummary {
  dataset_id: string;
  n_records: number;
  labeled_counts: Record<string, number>;
}

export interface Decision {
  record_id: string;
  action: "keep" | "flip";
}

export interface Submission {
  decisions: Decision[];
  token: string;
}

export interface SubmissionResult {
  kept: number;
  flipped: number;
  set: number;
  model_version: number;
  model_unchanged: boolean;
  model: { rounds_run: number; train_log_loss: number;
           train_accuracy: number; n_records: number } | null;
}
