/**
 * Session drivers. A driver owns one session from creation to the result
 * screen: it mirrors the server's view of the current item, renders what
 * the participant would see, collects answers through callbacks, and
 * stops issuing requests the moment the session completes.
 *
 * The hidden concept never reaches the rendered output; it exists only
 * inside the server until the result report, and the result summary
 * shown to the participant carries scores alone.
 */

import { StudyClient } from "./client.js";
import { renderExample } from "./render.js";
import { scoreSession, type AnsweredItem } from "./scoring.js";
import { coerceRating } from "./widgets.js";
import type {
  Condition,
  ItemView,
  Mode,
  ResultReport,
  TaskKind,
} from "./types.js";

export interface SessionHooks {
  /** Fired when an item's stimuli are on screen, with their markup. */
  onStimuli?(view: ItemView, rendered: string[]): void;
  /** Fired when an interactive example lands, with its markup. */
  onExample?(itemIndex: number, exampleIndex: number, rendered: string): void;
}

export interface CompletedSession {
  sessionId: string;
  report: ResultReport;
  /** Accuracy recomputed client-side from the revealed labels. */
  localAccuracy: number;
  localScores: number[];
  /** Everything that was drawn, in display order. */
  renderedLog: string[];
}

export interface PassiveOptions {
  task: TaskKind;
  condition: Condition;
  seed?: number;
  /** Ratings (bimodal) or classifications (boolean) for the stimuli. */
  respond(view: ItemView): Array<number | boolean>;
  hooks?: SessionHooks;
}

export interface InteractiveOptions extends PassiveOptions {
  /** Current guess at the hidden concept, asked before every example. */
  guess(view: ItemView): number[];
}

/** Recompute the server's result locally from the revealed labels. */
export function scoreServerReport(report: ResultReport): {
  items: { index: number; score: number }[];
  accuracy: number;
} {
  const answered: AnsweredItem[] = report.items.map((row) => ({
    index: row.index,
    labels: row.labels,
    answer: row.answer,
  }));
  return scoreSession(report.task, answered);
}

/** Result text for the participant: scores only, no concept values. */
export function summarizeResult(report: ResultReport): string {
  const lines = [
    `session ${report.session_id}: ` +
      `${report.n_items} items, accuracy ${report.accuracy.toFixed(2)}`,
  ];
  for (const row of report.items) {
    lines.push(`  item ${row.index + 1}: score ${row.score.toFixed(2)}`);
  }
  return lines.join("\n");
}

function toAnswerBody(
  task: TaskKind,
  answer: Array<number | boolean>,
): { ratings?: number[]; classifications?: boolean[] } {
  if (task === "bimodal") {
    // The rating widget only emits integers on the 1..5 scale; coercing
    // here keeps that true for scripted responders as well.
    return { ratings: answer.map((v) => coerceRating(v)) };
  }
  return { classifications: answer.map((v) => Boolean(v)) };
}

function renderAll(
  task: TaskKind,
  examples: ReadonlyArray<number | number[]>,
): string[] {
  return examples.map((ex) => renderExample(task, ex));
}

async function finishSession(
  client: StudyClient,
  sessionId: string,
  renderedLog: string[],
): Promise<CompletedSession> {
  const report = await client.getResult(sessionId);
  const local = scoreServerReport(report);
  return {
    sessionId,
    report,
    localAccuracy: local.accuracy,
    localScores: local.items.map((r) => r.score),
    renderedLog,
  };
}

/**
 * Run a passive session: every item arrives with its examples and test
 * stimuli already chosen, the participant only answers.
 */
export async function runPassiveSession(
  client: StudyClient,
  options: PassiveOptions,
): Promise<CompletedSession> {
  const created = await client.createSession(
    options.task,
    options.condition,
    "passive",
    options.seed,
  );
  const renderedLog: string[] = [];
  for (;;) {
    const view = await client.getItem(created.session_id);
    const shown = renderAll(options.task, view.shown_examples);
    const stimuli = renderAll(options.task, view.stimuli ?? []);
    renderedLog.push(...shown, ...stimuli);
    options.hooks?.onStimuli?.(view, stimuli);
    const answer = options.respond(view);
    const reply = await client.postResponse(
      created.session_id,
      view.item_index,
      toAnswerBody(options.task, answer),
    );
    if (reply.status === "complete") break;
  }
  return finishSession(client, created.session_id, renderedLog);
}

/**
 * Run an interactive session: each item opens with one example already
 * out, then the participant alternates guessing the concept and drawing
 * the next example until the item's examples are used up, and finally
 * answers the test stimuli.
 */
export async function runInteractiveSession(
  client: StudyClient,
  options: InteractiveOptions,
): Promise<CompletedSession> {
  const created = await client.createSession(
    options.task,
    options.condition,
    "interactive",
    options.seed,
  );
  const renderedLog: string[] = [];
  // How many of each item's examples are already on screen, so a
  // re-fetched view never draws the same example twice.
  const displayed = new Map<number, number>();
  const syncShown = (view: ItemView) => {
    const seen = displayed.get(view.item_index) ?? 0;
    for (let i = seen; i < view.shown_examples.length; i++) {
      const rendered = renderExample(options.task, view.shown_examples[i]!);
      renderedLog.push(rendered);
      options.hooks?.onExample?.(view.item_index, i, rendered);
    }
    displayed.set(view.item_index, view.shown_examples.length);
  };
  for (;;) {
    let view = await client.getItem(created.session_id);
    syncShown(view);
    while (view.awaiting !== "response") {
      if (view.awaiting === "guess") {
        await client.postGuess(created.session_id, options.guess(view));
      } else {
        await client.nextExample(
          created.session_id,
          view.shown_examples.length,
        );
      }
      view = await client.getItem(created.session_id);
      syncShown(view);
    }
    const stimuli = renderAll(options.task, view.stimuli ?? []);
    renderedLog.push(...stimuli);
    options.hooks?.onStimuli?.(view, stimuli);
    const answer = options.respond(view);
    const reply = await client.postResponse(
      created.session_id,
      view.item_index,
      toAnswerBody(options.task, answer),
    );
    if (reply.status === "complete") break;
  }
  return finishSession(client, created.session_id, renderedLog);
}

export type { Mode };
