/** Thin DOM layer: renders RecordCardView values into elements. All state
 * lives in the view-model; this file only draws it. */
import { heatTextColor } from "./colors.js";
import type { RecordCardView } from "./viewmodel.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderCard(card: RecordCardView, index: number,
                           onToggle: (index: number) => void): HTMLElement {
  const root = el("article", "card");
  root.dataset.index = String(index);
  root.tabIndex = 0;

  const head = el("header", "card-head");
  head.append(el("span", "card-id", card.recordId));
  if (card.isMismatch) {
    const badge = el("span", "badge-mismatch", "label mismatch");
    badge.title = "stored label disagrees with the model";
    head.append(badge);
    if (card.storedLabel !== null) {
      head.append(el("s", "stored-label", `stored: ${card.storedLabel}`));
    }
  }
  head.append(el("span", "confidence",
                 `confidence ${card.confidence.toFixed(3)}`));
  root.append(head);

  const strip = el("div", "heat-strip");
  for (const cell of card.cells) {
    const box = el("div", "heat-cell");
    box.style.backgroundColor = cell.color;
    box.style.color = heatTextColor(cell.heat);
    box.title = `${cell.name}: heat ${cell.heat.toFixed(3)}`;
    box.append(el("div", "heat-name", cell.name));
    box.append(el("div", "heat-value", cell.display));
    strip.append(box);
  }
  root.append(strip);

  const note = el("p", "note");
  for (const segment of card.noteSegments) {
    if (segment.highlight) {
      note.append(el("mark", "kw", segment.text));
    } else {
      note.append(document.createTextNode(segment.text));
    }
  }
  root.append(note);

  const controls = el("div", "controls");
  const toggle = el("button", card.flipped ? "toggle flipped" : "toggle",
                    `label: ${card.currentLabel}${card.flipped ? " (flipped)" : ""}`);
  toggle.addEventListener("click", () => onToggle(index));
  controls.append(toggle);
  root.append(controls);
  return root;
}

export function renderBanner(message: string, kind: "error" | "info"): HTMLElement {
  return el("div", `banner banner-${kind}`, message);
}
