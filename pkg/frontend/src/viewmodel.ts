/**
 * Pure view-model layer: turns a batch payload into record cards and owns
 * the keep/flip toggle logic. Never computes model quantities — every p,
 * confidence, and heat value is taken verbatim from the service payload.
 */
import { heatColor } from "./colors.js";
import type { BatchPayload, BatchRecord, Label, NoteSegment } from "./types.js";

export interface FeatureCell {
  name: string;
  display: string;
  heat: number;
  color: string;
}

export interface RecordCardView {
  recordId: string;
  pseudoLabel: Label;
  /** Label the card currently shows; initialized to the pseudo-label. */
  currentLabel: Label;
  flipped: boolean;
  cells: FeatureCell[];
  noteSegments: NoteSegment[];
  isMismatch: boolean;
  storedLabel: number | null;
  confidence: number;
  p: number;
}

export class MalformedPayload extends Error {}

function displayValue(value: number | null): string {
  if (value === null) return "—";
  return Number.isInteger(value) ? String(value) : value.toFixed(1);
}

function toCard(record: BatchRecord): RecordCardView {
  if (typeof record.record_id !== "string"
      || (record.pseudo_label !== 0 && record.pseudo_label !== 1)
      || typeof record.heat !== "object" || record.heat === null
      || typeof record.confidence !== "number"
      || !Array.isArray(record.note_segments)) {
    throw new MalformedPayload(`bad record in payload: ${JSON.stringify(record)}`);
  }
  const cells = Object.entries(record.heat).map(([name, heat]) => {
    if (typeof heat !== "number" || heat < 0 || heat > 1) {
      throw new MalformedPayload(`bad heat value for ${name}: ${heat}`);
    }
    return {
      name,
      display: displayValue(record.features?.[name] ?? null),
      heat,
      color: heatColor(heat),
    };
  });
  return {
    recordId: record.record_id,
    pseudoLabel: record.pseudo_label,
    currentLabel: record.pseudo_label,
    flipped: false,
    cells,
    noteSegments: record.note_segments,
    isMismatch: Boolean(record.is_mismatch),
    storedLabel: record.stored_label ?? null,
    confidence: record.confidence,
    p: record.p,
  };
}

/**
 * Build cards in payload order. Throws MalformedPayload on any bad record,
 * so a broken response renders an error banner instead of a partial batch.
 */
export function renderBatch(payload: BatchPayload): RecordCardView[] {
  if (!payload || !Array.isArray(payload.records)) {
    throw new MalformedPayload("payload has no records array");
  }
  return payload.records.map(toCard);
}

/** Toggle a card between keeping and flipping its pseudo-label. */
export function toggleCard(card: RecordCardView): RecordCardView {
  const flipped = !card.flipped;
  return {
    ...card,
    flipped,
    currentLabel: (flipped ? 1 - card.pseudoLabel : card.pseudoLabel) as Label,
  };
}

/** Cells ranked hottest first (used to surface the main contributors). */
export function hottestCells(card: RecordCardView): FeatureCell[] {
  return [...card.cells].sort((a, b) => b.heat - a.heat);
}
