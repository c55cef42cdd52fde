/**
 * Browser entry point. One session per tab: the start form creates it,
 * the page then mirrors the server's view of the current item and walks
 * the participant through guesses, examples, stimuli, and the result.
 * Every server exchange goes through the retrying client, and nothing
 * is sent once the session completes.
 */

import { ApiError, StudyClient } from "./client.js";
import { renderExample } from "./render.js";
import { scoreServerReport, summarizeResult } from "./session.js";
import {
  bimodalGuess,
  booleanGuessVector,
  coerceRating,
  GUESS_SLIDER_MAX,
  GUESS_SLIDER_MIN,
  type TriState,
} from "./widgets.js";
import type { ItemView, TaskKind } from "./types.js";

const PROPERTY_LABELS = [
  "size: small",
  "size: medium",
  "size: large",
  "color: red",
  "color: blue",
  "color: green",
  "shape: square",
  "shape: circle",
  "border: solid",
  "border: none",
];

interface PageState {
  client: StudyClient;
  sessionId: string;
  task: TaskKind;
  displayedPerItem: Map<number, number>;
  busy: boolean;
}

let page: PageState | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(text: string) {
  el("status").textContent = text;
}

async function refresh(): Promise<void> {
  if (!page) return;
  let view: ItemView;
  try {
    view = await page.client.getItem(page.sessionId);
  } catch (err) {
    if (err instanceof ApiError && err.code === "wrong_state") {
      await showResult();
      return;
    }
    throw err;
  }
  setStatus(
    `item ${view.item_index + 1} of ${view.n_items}, waiting for ` +
      view.awaiting.replace("_", " "),
  );
  const shownBox = el("shown");
  const seen = page.displayedPerItem.get(view.item_index) ?? 0;
  if (seen === 0) shownBox.innerHTML = "";
  for (let i = seen; i < view.shown_examples.length; i++) {
    const holder = document.createElement("span");
    holder.innerHTML = renderExample(page.task, view.shown_examples[i]!);
    shownBox.appendChild(holder);
  }
  page.displayedPerItem.set(view.item_index, view.shown_examples.length);

  el("guess-panel").hidden = view.awaiting !== "guess";
  el("draw-panel").hidden = view.awaiting !== "next_example";
  el("answer-panel").hidden = view.awaiting !== "response";
  el("bimodal-guess").hidden = page.task !== "bimodal";
  el("boolean-guess").hidden = page.task !== "boolean";
  if (view.awaiting === "response") buildAnswerForm(view);
}

function buildAnswerForm(view: ItemView) {
  if (!page) return;
  const box = el("stimuli");
  box.innerHTML = "";
  (view.stimuli ?? []).forEach((stim, i) => {
    const row = document.createElement("div");
    row.className = "stimulus-row";
    const picture = document.createElement("span");
    picture.innerHTML = renderExample(page!.task, stim);
    row.appendChild(picture);
    if (page!.task === "bimodal") {
      const input = document.createElement("input");
      input.type = "number";
      input.min = "1";
      input.max = "5";
      input.step = "1";
      input.value = "3";
      input.dataset.stimulus = String(i);
      input.title = "rating from 1 (surely not the concept) to 5 (surely is)";
      row.appendChild(input);
    } else {
      const input = document.createElement("input");
      input.type = "checkbox";
      input.dataset.stimulus = String(i);
      input.title = "check when the image fits the concept";
      row.appendChild(input);
    }
    box.appendChild(row);
  });
}

function readGuess(): number[] {
  if (!page) throw new Error("no session");
  if (page.task === "bimodal") {
    const a = Number(el<HTMLInputElement>("slider-a").value);
    const b = Number(el<HTMLInputElement>("slider-b").value);
    return bimodalGuess(a, b);
  }
  const states: TriState[] = PROPERTY_LABELS.map((_, i) => {
    const pick = el<HTMLSelectElement>(`tri-${i}`).value;
    return pick === "yes" || pick === "no" ? pick : "unknown";
  });
  return booleanGuessVector(states);
}

async function onStart(event: Event) {
  event.preventDefault();
  if (page?.busy) return;
  const task = el<HTMLSelectElement>("task").value as TaskKind;
  const condition = el<HTMLSelectElement>("condition").value;
  const mode = el<HTMLSelectElement>("mode").value;
  const seedRaw = el<HTMLInputElement>("seed").value.trim();
  const client = new StudyClient(el<HTMLInputElement>("server").value);
  const created = await client.createSession(
    task,
    condition,
    mode,
    seedRaw === "" ? undefined : Number(seedRaw),
  );
  page = {
    client,
    sessionId: created.session_id,
    task,
    displayedPerItem: new Map(),
    busy: false,
  };
  el("study").hidden = false;
  el("result").hidden = true;
  el("shown").innerHTML = "";
  await refresh();
}

async function guarded(work: () => Promise<void>) {
  if (!page || page.busy) return;
  page.busy = true;
  try {
    await work();
  } catch (err) {
    setStatus(err instanceof Error ? err.message : String(err));
  } finally {
    if (page) page.busy = false;
  }
}

async function onGuess() {
  await guarded(async () => {
    await page!.client.postGuess(page!.sessionId, readGuess());
    await refresh();
  });
}

async function onDraw() {
  await guarded(async () => {
    const view = await page!.client.getItem(page!.sessionId);
    await page!.client.nextExample(page!.sessionId, view.shown_examples.length);
    await refresh();
  });
}

async function onAnswer() {
  await guarded(async () => {
    const view = await page!.client.getItem(page!.sessionId);
    const inputs = Array.from(
      el("stimuli").querySelectorAll<HTMLInputElement>("input"),
    );
    const body =
      page!.task === "bimodal"
        ? { ratings: inputs.map((i) => coerceRating(i.value)) }
        : { classifications: inputs.map((i) => i.checked) };
    const reply = await page!.client.postResponse(
      page!.sessionId,
      view.item_index,
      body,
    );
    el("shown").innerHTML = "";
    if (reply.status === "complete") {
      await showResult();
    } else {
      await refresh();
    }
  });
}

async function showResult() {
  if (!page) return;
  const report = await page.client.getResult(page.sessionId);
  const local = scoreServerReport(report);
  el("study").hidden = true;
  el("result").hidden = false;
  el("result-text").textContent =
    summarizeResult(report) +
    `\nchecked locally: accuracy ${local.accuracy.toFixed(2)}`;
  setStatus("session complete");
  page = null;
}

export function mount() {
  const sliders = el("bimodal-guess");
  sliders.innerHTML = ["a", "b"]
    .map(
      (name) =>
        `<label>mode ${name} ` +
        `<input id="slider-${name}" type="range" min="${GUESS_SLIDER_MIN}" ` +
        `max="${GUESS_SLIDER_MAX}" step="0.5" value="10"></label>`,
    )
    .join(" ");
  const tri = el("boolean-guess");
  tri.innerHTML = PROPERTY_LABELS.map(
    (label, i) =>
      `<label>${label} <select id="tri-${i}">` +
      `<option value="unknown">don't know</option>` +
      `<option value="yes">yes</option>` +
      `<option value="no">no</option>` +
      `</select></label>`,
  ).join(" ");
  el("start-form").addEventListener("submit", (e) => void onStart(e));
  el("guess-button").addEventListener("click", () => void onGuess());
  el("draw-button").addEventListener("click", () => void onDraw());
  el("answer-button").addEventListener("click", () => void onAnswer());
}

if (typeof document !== "undefined" && document.getElementById("start-form")) {
  mount();
}
