import { describe, expect, it } from "vitest";

import { buildDecisions, buildSubmission, newToken } from "../src/payload.js";
import { renderBatch, toggleCard } from "../src/viewmodel.js";
import { payload, record } from "./fixtures.js";

describe("buildDecisions", () => {
  it("defaults every untouched card to keep", () => {
    const cards = renderBatch(payload([
      record({ record_id: "a" }), record({ record_id: "b" }),
      record({ record_id: "c" }),
    ]));
    expect(buildDecisions(cards)).toEqual([
      { record_id: "a", action: "keep" },
      { record_id: "b", action: "keep" },
      { record_id: "c", action: "keep" },
    ]);
  });

  it("emits exactly one flip for one toggled card", () => {
    let cards = renderBatch(payload([
      record({ record_id: "a" }), record({ record_id: "b" }),
    ]));
    cards = cards.map((c, i) => (i === 1 ? toggleCard(c) : c));
    const decisions = buildDecisions(cards);
    expect(decisions.filter((d) => d.action === "flip")).toEqual([
      { record_id: "b", action: "flip" },
    ]);
  });
});

describe("buildSubmission", () => {
  it("carries the idempotency token", () => {
    const cards = renderBatch(payload([record()]));
    const submission = buildSubmission(cards, "tok-42");
    expect(submission.token).toBe("tok-42");
    expect(submission.decisions).toHaveLength(1);
  });
});

describe("newToken", () => {
  it("generates distinct tokens", () => {
    const seen = new Set(Array.from({ length: 50 }, newToken));
    expect(seen.size).toBe(50);
  });
});
