export { StudyClient, ApiError } from "./client.js";
export type { ClientOptions, FetchLike } from "./client.js";
export {
  bimodalItemCorrect,
  booleanItemAccuracy,
  scoreSession,
  RATING_CUTOFF,
  RATING_MAX,
  RATING_MIN,
} from "./scoring.js";
export type { AnsweredItem, ScoredItem } from "./scoring.js";
export {
  linePixelLength,
  parsePropertyVector,
  renderExample,
  renderLine,
  renderShape,
  PX_PER_UNIT,
} from "./render.js";
export {
  bimodalGuess,
  booleanGuessVector,
  coerceRating,
  isValidRating,
  GUESS_SLIDER_MAX,
  GUESS_SLIDER_MIN,
} from "./widgets.js";
export type { TriState } from "./widgets.js";
export {
  runInteractiveSession,
  runPassiveSession,
  scoreServerReport,
  summarizeResult,
} from "./session.js";
export type {
  CompletedSession,
  InteractiveOptions,
  PassiveOptions,
  SessionHooks,
} from "./session.js";
export type * from "./types.js";
