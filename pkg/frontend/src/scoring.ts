/**
 * Client-side scoring, kept rule-for-rule identical to the service so a
 * finished session can be graded locally and checked against the server
 * report.
 *
 * A line-task item counts as correct only when every high-probability
 * stimulus is rated above the cutoff and every low one at or below it.
 * A shape-task item scores the fraction of its four test images that
 * were classified correctly. Session accuracy is the mean item score.
 */

export const RATING_MIN = 1;
export const RATING_MAX = 5;
export const RATING_CUTOFF = 3;

export function bimodalItemCorrect(
  ratings: readonly number[],
  labels: readonly string[],
): boolean {
  if (ratings.length !== labels.length) {
    throw new Error(
      `ratings and labels differ in length: ${ratings.length} vs ${labels.length}`,
    );
  }
  for (let i = 0; i < ratings.length; i++) {
    const rating = ratings[i]!;
    const label = labels[i]!;
    if (label === "high" && rating <= RATING_CUTOFF) return false;
    if (label === "low" && rating > RATING_CUTOFF) return false;
  }
  return true;
}

export function booleanItemAccuracy(
  classifications: readonly boolean[],
  labels: readonly string[],
): number {
  if (classifications.length !== labels.length) {
    throw new Error(
      `classifications and labels differ in length: ` +
        `${classifications.length} vs ${labels.length}`,
    );
  }
  let hits = 0;
  for (let i = 0; i < classifications.length; i++) {
    if (classifications[i] === (labels[i] === "pos")) hits++;
  }
  return hits / classifications.length;
}

export interface ScoredItem {
  index: number;
  score: number;
}

export interface AnsweredItem {
  index: number;
  labels: readonly string[];
  answer: ReadonlyArray<number | boolean>;
}

/**
 * Score a full session from its answered items. `task` picks the rule;
 * the answer arrays are ratings for "bimodal" and booleans for "boolean".
 */
export function scoreSession(
  task: "bimodal" | "boolean",
  items: readonly AnsweredItem[],
): { items: ScoredItem[]; accuracy: number } {
  const rows: ScoredItem[] = items.map((item) => {
    let score: number;
    if (task === "bimodal") {
      score = bimodalItemCorrect(item.answer as number[], item.labels) ? 1 : 0;
    } else {
      score = booleanItemAccuracy(
        (item.answer as Array<number | boolean>).map(Boolean),
        item.labels,
      );
    }
    return { index: item.index, score };
  });
  const accuracy =
    rows.length === 0
      ? NaN
      : rows.reduce((acc, r) => acc + r.score, 0) / rows.length;
  return { items: rows, accuracy };
}
