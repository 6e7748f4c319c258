/** DOM wiring for the annotation console.
 *
 * The client holds no state the server cannot restore: everything except
 * the in-progress toggles of the current batch is re-fetched from
 * /api/session, so a reload (or a stale-batch conflict) always converges
 * back to the server's view.
 */

import { ApiClient, StaleBatchError } from "./api.js";
import { highlightEntities } from "./highlight.js";
import {
  BatchViewModel,
  completedCount,
  confirmPair,
  fromSessionView,
  isComplete,
  isPairComplete,
  labelsPayload,
  toggleDecision,
} from "./model.js";
import type { SessionView } from "./types.js";

const api = new ApiClient("");

let view: SessionView | null = null;
let model: BatchViewModel | null = null;
let focusIndex = 0;
let banner: { kind: "error" | "warn" | "info"; text: string; retry: boolean } | null = null;
let submitting = false;

async function refresh(discardLocal: boolean): Promise<void> {
  try {
    const next = await api.getSession();
    view = next;
    if (discardLocal || model === null || model.batchId !== next.batch_id) {
      model = fromSessionView(next);
      focusIndex = 0;
    }
    banner = null;
  } catch (err) {
    // network failure: keep the local model, offer a retry
    banner = { kind: "error", text: `Cannot reach the session server: ${err}`, retry: true };
  }
  render();
}

async function submit(): Promise<void> {
  if (!model || !isComplete(model) || submitting) return;
  submitting = true;
  render();
  try {
    const next = await api.submitLabels(model.batchId, labelsPayload(model));
    view = next;
    model = fromSessionView(next);
    focusIndex = 0;
    banner = { kind: "info", text: "Batch submitted.", retry: false };
  } catch (err) {
    if (err instanceof StaleBatchError) {
      banner = {
        kind: "warn",
        text: "This batch was already submitted elsewhere; reloaded the server state and discarded local toggles.",
        retry: false,
      };
      submitting = false;
      await refresh(true);
      return;
    }
    banner = { kind: "error", text: `Submission failed: ${err}`, retry: true };
  }
  submitting = false;
  render();
}

// -- rendering ---------------------------------------------------------------

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderSentence(sentence: string, head: string, tail: string): HTMLElement {
  const p = el("p", "sentence");
  for (const segment of highlightEntities(sentence, head, tail)) {
    if (segment.kind === "plain") {
      p.append(segment.text);
    } else {
      const mark = el("mark", segment.kind, segment.text);
      p.append(mark);
    }
  }
  return p;
}

function renderMetricsPanel(v: SessionView): HTMLElement {
  const panel = el("section", "panel");
  panel.append(el("h2", undefined, "Expected precision"));
  const table = el("table");
  const header = el("tr");
  header.append(el("th", undefined, "iteration"));
  for (const k of v.ks) header.append(el("th", undefined, `P@${k}`));
  table.append(header);
  const rows = [
    ...v.history.map((h) => ({ label: `#${h.iteration}`, p: h.p_at_k })),
  ];
  if (rows.length === 0) rows.push({ label: "initial", p: v.metrics.p_at_k });
  for (const row of rows) {
    const tr = el("tr");
    tr.append(el("td", undefined, row.label));
    for (const k of v.ks) {
      const value = row.p[String(k)];
      tr.append(el("td", undefined, value === undefined ? "-" : (100 * value).toFixed(1)));
    }
    table.append(tr);
  }
  panel.append(table);
  return panel;
}

function renderCard(m: BatchViewModel, index: number): HTMLElement {
  const card = m.cards[index]!;
  const root = el("article", "card" + (index === focusIndex ? " focused" : ""));
  root.dataset.pairId = card.pairId;

  const title = el("header");
  title.append(el("span", "entity head", card.head));
  title.append(el("span", "arrow", " → "));
  title.append(el("span", "entity tail", card.tail));
  title.append(el("span", "pair-id", card.pairId));
  root.append(title);

  for (const sentence of card.sentences) {
    root.append(renderSentence(sentence, card.head, card.tail));
  }

  const list = el("div", "relations");
  card.decisions.forEach((d, i) => {
    const row = el("div", "relation-row");
    row.append(el("span", "relation-name", `${i + 1}. ${d.relation}`));
    row.append(el("span", "score", `score ${d.score.toFixed(3)}`));
    row.append(el("span", "noisy", `auto ${d.noisyLabel}`));
    const toggle = el(
      "button",
      "toggle " + (d.value === 1 ? "on" : "off") + (d.touched ? " touched" : ""),
      d.value === 1 ? "true" : "false",
    );
    toggle.addEventListener("click", () => {
      if (!model) return;
      model = toggleDecision(model, card.pairId, d.relation);
      focusIndex = index;
      render();
    });
    row.append(toggle);
    list.append(row);
  });
  root.append(list);

  const foot = el("footer");
  const status = isPairComplete(card) ? "decided" : "needs review";
  foot.append(el("span", "status " + (isPairComplete(card) ? "ok" : "pending"), status));
  const confirm = el("button", "confirm", card.confirmed ? "confirmed" : "confirm as shown");
  confirm.disabled = card.confirmed;
  confirm.addEventListener("click", () => {
    if (!model) return;
    model = confirmPair(model, card.pairId);
    focusIndex = index;
    render();
  });
  foot.append(confirm);
  root.append(foot);

  root.addEventListener("click", () => {
    if (focusIndex !== index) {
      focusIndex = index;
      render();
    }
  });
  return root;
}

function renderDone(v: SessionView): HTMLElement {
  const section = el("section", "done");
  section.append(el("h2", undefined, "Session complete"));
  section.append(
    el(
      "p",
      undefined,
      `All ${v.budget_initial} budgeted pairs are vetted over ${v.history.length} batches.`,
    ),
  );
  section.append(renderMetricsPanel(v));
  const link = el("a", undefined, "download full report (JSON)");
  link.setAttribute("href", api.reportUrl("json"));
  section.append(link);
  return section;
}

export function render(): void {
  const root = document.getElementById("app");
  if (!root) return;
  root.replaceChildren();

  if (banner) {
    const bar = el("div", `banner ${banner.kind}`, banner.text);
    if (banner.retry) {
      const retry = el("button", undefined, "retry");
      retry.addEventListener("click", () => void refresh(false));
      bar.append(retry);
    }
    root.append(bar);
  }
  if (!view) {
    root.append(el("p", "loading", "Connecting to the annotation session..."));
    return;
  }

  const head = el("header", "top");
  head.append(el("h1", undefined, "Vetting console"));
  head.append(
    el(
      "span",
      "budget",
      `batch ${view.history.length + (view.done ? 0 : 1)} | budget ${view.budget_remaining}/${view.budget_initial} pairs left`,
    ),
  );
  root.append(head);

  if (view.done || !model || model.cards.length === 0) {
    root.append(renderDone(view));
    return;
  }

  root.append(renderMetricsPanel(view));

  const progress = el(
    "div",
    "progress",
    `${completedCount(model)}/${model.cards.length} pairs decided`,
  );
  root.append(progress);

  const cards = el("main", "cards");
  model.cards.forEach((_, i) => cards.append(renderCard(model!, i)));
  root.append(cards);

  const submitBtn = el("button", "submit", submitting ? "submitting..." : "submit batch");
  submitBtn.disabled = !isComplete(model) || submitting;
  submitBtn.addEventListener("click", () => void submit());
  root.append(submitBtn);

  const hint = el(
    "p",
    "hint",
    "keys: j/k or arrows move, 1-9 flip a relation, c or Enter confirms the pair, s submits",
  );
  root.append(hint);
}

function onKeyDown(event: KeyboardEvent): void {
  const target = event.target as HTMLElement | null;
  if (target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA")) return;
  if (!model || model.cards.length === 0) return;

  const key = event.key;
  if (key === "j" || key === "ArrowDown") {
    focusIndex = Math.min(focusIndex + 1, model.cards.length - 1);
  } else if (key === "k" || key === "ArrowUp") {
    focusIndex = Math.max(focusIndex - 1, 0);
  } else if (key === "c" || key === "Enter") {
    model = confirmPair(model, model.cards[focusIndex]!.pairId);
  } else if (key === "s") {
    void submit();
    return;
  } else if (/^[1-9]$/.test(key)) {
    const card = model.cards[focusIndex]!;
    const decision = card.decisions[Number(key) - 1];
    if (decision) model = toggleDecision(model, card.pairId, decision.relation);
  } else {
    return;
  }
  event.preventDefault();
  render();
  document.querySelector(".card.focused")?.scrollIntoView({ block: "nearest" });
}

export function start(): void {
  window.addEventListener("keydown", onKeyDown);
  void refresh(true);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  start();
}
