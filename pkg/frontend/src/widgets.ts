/**
 * Input widgets as pure state helpers. The page wires them to DOM events;
 * tests drive them directly.
 */

import { RATING_MAX, RATING_MIN } from "./scoring.js";

/**
 * Force a raw widget value into a legal rating. Non-numeric input snaps
 * to the scale midpoint; anything else rounds to the nearest integer and
 * clamps into [1, 5], so the submitted payload is always a valid rating.
 */
export function coerceRating(raw: unknown): number {
  const num = typeof raw === "number" ? raw : Number(raw);
  if (!Number.isFinite(num)) {
    return Math.round((RATING_MIN + RATING_MAX) / 2);
  }
  return Math.min(RATING_MAX, Math.max(RATING_MIN, Math.round(num)));
}

export function isValidRating(value: number): boolean {
  return Number.isInteger(value) && value >= RATING_MIN && value <= RATING_MAX;
}

export const GUESS_SLIDER_MIN = 0;
export const GUESS_SLIDER_MAX = 20;

/**
 * Two-slider guess for line tasks: each slider covers the visible length
 * scale and out-of-range drags clamp to the ends.
 */
export function bimodalGuess(first: number, second: number): [number, number] {
  const clamp = (v: number) => {
    if (!Number.isFinite(v)) {
      throw new Error(`slider value must be finite, got ${v}`);
    }
    return Math.min(GUESS_SLIDER_MAX, Math.max(GUESS_SLIDER_MIN, v));
  };
  return [clamp(first), clamp(second)];
}

export type TriState = "yes" | "no" | "unknown";

export const TRI_STATE_DIM = 10;

/**
 * Shape-task guess: one three-way control per property value. "yes"
 * marks the value as part of the concept; both "no" and "don't know"
 * leave the slot at zero, which is how the teacher reads an
 * unconstrained property.
 */
export function booleanGuessVector(states: readonly TriState[]): number[] {
  if (states.length !== TRI_STATE_DIM) {
    throw new Error(
      `expected ${TRI_STATE_DIM} property controls, got ${states.length}`,
    );
  }
  return states.map((s) => {
    if (s !== "yes" && s !== "no" && s !== "unknown") {
      throw new Error(`unknown tri-state value: ${String(s)}`);
    }
    return s === "yes" ? 1 : 0;
  });
}
