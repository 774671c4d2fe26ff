/** Builders for label submissions: every card gets a decision, keep by
 * default, flip for toggled cards. */
import type { Decision, Submission } from "./types.js";
import type { RecordCardView } from "./viewmodel.js";

export function buildDecisions(cards: RecordCardView[]): Decision[] {
  return cards.map((card) => ({
    record_id: card.recordId,
    action: card.flipped ? "flip" : "keep",
  }));
}

export function newToken(): string {
  return `tok-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 10)}`;
}

export function buildSubmission(cards: RecordCardView[], token: string): Submission {
  return { decisions: buildDecisions(cards), token };
}
