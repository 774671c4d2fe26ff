/** Page wiring: upload, session setup, batch loop, keyboard path. */
import { ApiClient } from "./api.js";
import { renderBanner, renderCard } from "./dom.js";
import { buildSubmission, newToken } from "./payload.js";
import { MalformedPayload, RecordCardView, renderBatch, toggleCard } from "./viewmodel.js";

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

let client: ApiClient | null = null;
let sessionId: string | null = null;
let cards: RecordCardView[] = [];
let focused = 0;
let submitting = false;

function setBanner(message: string | null, kind: "error" | "info" = "info") {
  const host = $("banner-host");
  host.replaceChildren();
  if (message) host.append(renderBanner(message, kind));
}

function drawCards() {
  const host = $("cards");
  host.replaceChildren();
  cards.forEach((card, i) => host.append(renderCard(card, i, onToggle)));
  const nodes = host.querySelectorAll<HTMLElement>(".card");
  nodes.forEach((node, i) => node.classList.toggle("focused", i === focused));
  if (nodes[focused]) nodes[focused].scrollIntoView({ block: "nearest" });
  $("submit").toggleAttribute("disabled", cards.length === 0 || submitting);
}

function onToggle(index: number) {
  cards = cards.map((c, i) => (i === index ? toggleCard(c) : c));
  focused = index;
  drawCards();
}

async function loadBatch() {
  if (!client || !sessionId) return;
  setBanner(null);
  try {
    const payload = await client.fetchBatch(sessionId);
    if (payload === null) {
      cards = [];
      drawCards();
      setBanner("Nothing left to review: the pool is exhausted.", "info");
      return;
    }
    cards = renderBatch(payload);
    focused = 0;
    drawCards();
    setBanner(`Model v${payload.model_version}: ${cards.length} records to review.`);
  } catch (err) {
    cards = [];
    drawCards();
    const detail = err instanceof MalformedPayload
      ? `Malformed batch payload: ${err.message}`
      : `Failed to fetch batch: ${(err as Error).message}`;
    setBanner(detail, "error");
  }
}

async function submitDecisions() {
  if (!client || !sessionId || cards.length === 0 || submitting) return;
  submitting = true;
  drawCards();
  setBanner("Submitting labels; retraining…");
  try {
    const result = await client.submitLabels(sessionId, buildSubmission(cards, newToken()));
    const metrics = result.model
      ? ` (training accuracy ${(result.model.train_accuracy * 100).toFixed(1)}%)`
      : "";
    setBanner(`Saved: ${result.kept} kept, ${result.flipped} flipped.` + metrics);
    await loadBatch();
  } catch (err) {
    setBanner(`Submission failed: ${(err as Error).message}. ` +
              "Fetch a fresh batch and retry.", "error");
  } finally {
    submitting = false;
    drawCards();
  }
}

function onKey(event: KeyboardEvent) {
  if (cards.length === 0) return;
  if (event.key === "j" || event.key === "ArrowDown") {
    focused = Math.min(cards.length - 1, focused + 1);
    drawCards();
    event.preventDefault();
  } else if (event.key === "k" || event.key === "ArrowUp") {
    focused = Math.max(0, focused - 1);
    drawCards();
    event.preventDefault();
  } else if (event.key === " " || event.key === "f") {
    onToggle(focused);
    event.preventDefault();
  } else if (event.key === "s" || event.key === "Enter") {
    void submitDecisions();
    event.preventDefault();
  }
}

async function start() {
  const base = ($("server") as HTMLInputElement).value;
  client = new ApiClient(base);
  const file = ($("csv") as HTMLInputElement).files?.[0];
  if (!file) {
    setBanner("Choose a record CSV first.", "error");
    return;
  }
  try {
    const dataset = await client.uploadDataset(await file.text());
    const method = ($("method") as HTMLSelectElement).value as "threshold" | "n_least";
    const parameter = Number(($("param") as HTMLInputElement).value);
    const session = await client.createSession({
      dataset_id: dataset.dataset_id,
      task: ($("task") as HTMLSelectElement).value,
      sampling: method === "threshold"
        ? { method, threshold: parameter }
        : { method, n: parameter },
      detect_mismatches: ($("mismatches") as HTMLInputElement).checked,
    });
    sessionId = session.session_id;
    if (session.status === "UNTRAINED") {
      setBanner("Session is untrained: the dataset has no two-class labels yet.",
                "error");
      return;
    }
    await loadBatch();
  } catch (err) {
    setBanner(`Setup failed: ${(err as Error).message}`, "error");
  }
}

$("start").addEventListener("click", () => void start());
$("submit").addEventListener("click", () => void submitDecisions());
$("refresh").addEventListener("click", () => void loadBatch());
document.addEventListener("keydown", onKey);
