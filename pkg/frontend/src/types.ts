/**
 * Wire types for the study service.
 *
 * A rendered example is a plain number for line tasks (the line length)
 * and a 10-entry 0/1 property vector for shape tasks. The server never
 * sends the hidden concept while a session is running; it appears only
 * in the final result report, and the UI does not display it.
 */

export type TaskKind = "bimodal" | "boolean";
export type Condition = "teacher" | "random";
export type Mode = "passive" | "interactive";

export type RenderedExample = number | number[];

export type Awaiting = "response" | "guess" | "next_example";

export interface CreateSessionReply {
  session_id: string;
  status: string;
  n_items: number;
}

export interface ItemView {
  session_id: string;
  task: TaskKind;
  condition: Condition;
  mode: Mode;
  status: string;
  item_index: number;
  n_items: number;
  shown_examples: RenderedExample[];
  stimuli: RenderedExample[] | null;
  awaiting: Awaiting;
}

export interface ResponseReply {
  status: "active" | "complete";
  answered: number;
}

export interface GuessReply {
  accepted: boolean;
  item: number;
}

export interface NextExampleReply {
  item: number;
  example: RenderedExample;
  k: number;
  awaiting: Awaiting;
}

export interface ResultRow {
  index: number;
  score: number;
  correct?: boolean;
  accuracy?: number;
  concept: number[];
  shown_examples: RenderedExample[];
  stimuli: RenderedExample[];
  labels: string[];
  answer: Array<number | boolean>;
}

export interface ResultReport {
  session_id: string;
  task: TaskKind;
  condition: Condition;
  mode: Mode;
  n_items: number;
  items: ResultRow[];
  accuracy: number;
}

export interface ServiceErrorBody {
  code: string;
  message: string;
}
