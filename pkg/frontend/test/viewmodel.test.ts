import { describe, expect, it } from "vitest";

import { heatColor } from "../src/colors.js";
import {
  MalformedPayload,
  hottestCells,
  renderBatch,
  toggleCard,
} from "../src/viewmodel.js";
import { mismatchScenario, payload, record } from "./fixtures.js";

describe("renderBatch", () => {
  it("preserves payload order", () => {
    const cards = renderBatch(payload([
      record({ record_id: "b", confidence: 0.9 }),
      record({ record_id: "a", confidence: 0.6 }),
      record({ record_id: "c", confidence: 0.7 }),
    ]));
    expect(cards.map((c) => c.recordId)).toEqual(["b", "a", "c"]);
  });

  it("initializes the toggle state to the pseudo-label", () => {
    const cards = renderBatch(payload([
      record({ pseudo_label: 1 }), record({ pseudo_label: 0 }),
    ]));
    expect(cards[0].currentLabel).toBe(1);
    expect(cards[1].currentLabel).toBe(0);
    expect(cards.every((c) => !c.flipped)).toBe(true);
  });

  it("colors every cell through the documented heat function", () => {
    const [card] = renderBatch(payload([record()]));
    for (const cell of card.cells) {
      expect(cell.color).toBe(heatColor(cell.heat));
    }
  });

  it("takes p/confidence/heat verbatim from the payload", () => {
    const [card] = renderBatch(payload([
      record({ p: 0.123456, confidence: 0.876544 }),
    ]));
    expect(card.p).toBe(0.123456);
    expect(card.confidence).toBe(0.876544);
    expect(card.cells.map((c) => c.heat)).toEqual([0.4, 0.55]);
  });

  it("renders missing feature values as an em dash", () => {
    const [card] = renderBatch(payload([
      record({ heat: { HbA1c: 0.5 }, features: { HbA1c: null } }),
    ]));
    expect(card.cells[0].display).toBe("—");
  });

  it("rejects malformed payloads without partial output", () => {
    expect(() => renderBatch({ records: "nope" } as never)).toThrow(MalformedPayload);
    expect(() => renderBatch(payload([
      record(), record({ heat: { DM_key: 7 } }),
    ]))).toThrow(MalformedPayload);
  });
});

describe("toggleCard", () => {
  it("flips the shown label and back", () => {
    const [card] = renderBatch(payload([record({ pseudo_label: 1 })]));
    const flipped = toggleCard(card);
    expect(flipped.flipped).toBe(true);
    expect(flipped.currentLabel).toBe(0);
    const restored = toggleCard(flipped);
    expect(restored.flipped).toBe(false);
    expect(restored.currentLabel).toBe(1);
  });

  it("does not mutate the input card", () => {
    const [card] = renderBatch(payload([record()]));
    toggleCard(card);
    expect(card.flipped).toBe(false);
  });
});

describe("mislabeled-record scenario", () => {
  it("shows the mismatch badge with the suggested label pre-selected", () => {
    const cards = renderBatch(mismatchScenario());
    const hit = cards[0];
    expect(hit.isMismatch).toBe(true);
    expect(hit.storedLabel).toBe(0);        // rendered struck-through
    expect(hit.currentLabel).toBe(1);       // suggestion pre-selected
    expect(cards[1].isMismatch).toBe(false);
  });

  it("marks the keyword and diagnosis-code flags as the reddest cells", () => {
    const [hit] = renderBatch(mismatchScenario());
    const ranked = hottestCells(hit).map((c) => c.name);
    expect(ranked.slice(0, 2).sort()).toEqual(["DM_ICD10", "DM_key"]);
  });

  it("highlights the matched keyword segment only", () => {
    const [hit] = renderBatch(mismatchScenario());
    const marked = hit.noteSegments.filter((s) => s.highlight).map((s) => s.text);
    expect(marked).toEqual(["DM"]);
    expect(hit.noteSegments.map((s) => s.text).join("")).toBe(hit.noteSegments
      .map((s) => s.text).join(""));
  });
});
