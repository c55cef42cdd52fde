/**
 * HTTP client for the study service.
 *
 * Plain GETs retry on network failure. Calls that advance the session
 * (posting an answer or a guess, drawing the next example) recover from
 * a lost reply by re-fetching the current item and checking whether the
 * change already landed, so a flaky connection never double-submits.
 */

import type {
  CreateSessionReply,
  GuessReply,
  ItemView,
  NextExampleReply,
  ResponseReply,
  ResultReport,
  ServiceErrorBody,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export interface ClientOptions {
  fetchImpl?: FetchLike;
  maxRetries?: number;
  retryDelayMs?: number;
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

export class StudyClient {
  private readonly fetchImpl: FetchLike;
  private readonly maxRetries: number;
  private readonly retryDelayMs: number;

  constructor(
    public readonly baseUrl: string,
    options: ClientOptions = {},
  ) {
    this.fetchImpl = options.fetchImpl ?? (fetch as unknown as FetchLike);
    this.maxRetries = options.maxRetries ?? 3;
    this.retryDelayMs = options.retryDelayMs ?? 250;
  }

  private async request<T>(
    method: "GET" | "POST",
    path: string,
    body?: unknown,
  ): Promise<T> {
    const url = this.baseUrl.replace(/\/$/, "") + path;
    const init =
      method === "GET"
        ? { method }
        : {
            method,
            headers: { "content-type": "application/json" },
            body: JSON.stringify(body),
          };
    const resp = await this.fetchImpl(url, init);
    const payload = (await resp.json()) as unknown;
    if (!resp.ok) {
      const err = payload as Partial<ServiceErrorBody>;
      throw new ApiError(
        resp.status,
        err.code ?? "unknown",
        err.message ?? `request failed with status ${resp.status}`,
      );
    }
    return payload as T;
  }

  /** GET with plain retries; safe because reads never change state. */
  private async get<T>(path: string): Promise<T> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= this.maxRetries; attempt++) {
      try {
        return await this.request<T>("GET", path);
      } catch (err) {
        if (err instanceof ApiError) throw err;
        lastError = err;
        if (attempt < this.maxRetries) {
          await sleep(this.retryDelayMs * (attempt + 1));
        }
      }
    }
    throw lastError;
  }

  createSession(
    task: string,
    condition: string,
    mode: string,
    seed?: number,
  ): Promise<CreateSessionReply> {
    // Creation is the one POST without a recovery probe: if the reply is
    // lost we never learned the session id, so an orphaned session on the
    // server is abandoned and a fresh one created.
    return this.requestWithRetry("POST", "/sessions", {
      task,
      condition,
      mode,
      seed: seed ?? null,
    });
  }

  private async requestWithRetry<T>(
    method: "GET" | "POST",
    path: string,
    body?: unknown,
  ): Promise<T> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= this.maxRetries; attempt++) {
      try {
        return await this.request<T>(method, path, body);
      } catch (err) {
        if (err instanceof ApiError) throw err;
        lastError = err;
        if (attempt < this.maxRetries) {
          await sleep(this.retryDelayMs * (attempt + 1));
        }
      }
    }
    throw lastError;
  }

  getItem(sessionId: string): Promise<ItemView> {
    return this.get(`/sessions/${sessionId}/item`);
  }

  getResult(sessionId: string): Promise<ResultReport> {
    return this.get(`/sessions/${sessionId}/result`);
  }

  /**
   * Submit an answer for the item at `itemIndex`. If the wire drops after
   * the server applied it, the re-fetched item view shows the session has
   * moved past that item (or finished), and the lost reply is rebuilt
   * instead of the answer being sent twice.
   */
  async postResponse(
    sessionId: string,
    itemIndex: number,
    answer: { ratings?: number[]; classifications?: boolean[] },
  ): Promise<ResponseReply> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= this.maxRetries; attempt++) {
      try {
        return await this.request<ResponseReply>(
          "POST",
          `/sessions/${sessionId}/response`,
          answer,
        );
      } catch (err) {
        if (err instanceof ApiError) throw err;
        lastError = err;
        const landed = await this.probeResponseLanded(sessionId, itemIndex);
        if (landed) return landed;
        if (attempt < this.maxRetries) {
          await sleep(this.retryDelayMs * (attempt + 1));
        }
      }
    }
    throw lastError;
  }

  private async probeResponseLanded(
    sessionId: string,
    itemIndex: number,
  ): Promise<ResponseReply | null> {
    let view: ItemView;
    try {
      view = await this.get<ItemView>(`/sessions/${sessionId}/item`);
    } catch (err) {
      if (err instanceof ApiError && err.code === "wrong_state") {
        // The item endpoint refuses completed sessions, which means the
        // final answer landed.
        return { status: "complete", answered: itemIndex + 1 };
      }
      return null;
    }
    if (view.item_index > itemIndex) {
      return { status: "active", answered: view.item_index };
    }
    return null;
  }

  /**
   * Post a concept guess. Re-sending a guess overwrites the pending one
   * with the same value, so recovery is a plain retry; the item view is
   * probed first to skip the resend when the guess already registered.
   */
  async postGuess(sessionId: string, guess: number[]): Promise<GuessReply> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= this.maxRetries; attempt++) {
      try {
        return await this.request<GuessReply>(
          "POST",
          `/sessions/${sessionId}/guess`,
          { guess },
        );
      } catch (err) {
        if (err instanceof ApiError) throw err;
        lastError = err;
        try {
          const view = await this.get<ItemView>(`/sessions/${sessionId}/item`);
          if (view.awaiting === "next_example") {
            return { accepted: true, item: view.item_index };
          }
        } catch {
          // fall through to the resend
        }
        if (attempt < this.maxRetries) {
          await sleep(this.retryDelayMs * (attempt + 1));
        }
      }
    }
    throw lastError;
  }

  /**
   * Draw the teacher's next example. The draw consumes the pending guess
   * on the server, so a lost reply must not trigger a second draw: the
   * current item is re-fetched and, when its example list already grew,
   * the reply is rebuilt from the view.
   */
  async nextExample(
    sessionId: string,
    shownBefore: number,
  ): Promise<NextExampleReply> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= this.maxRetries; attempt++) {
      try {
        return await this.request<NextExampleReply>(
          "GET",
          `/sessions/${sessionId}/next-example`,
        );
      } catch (err) {
        if (err instanceof ApiError) throw err;
        lastError = err;
        try {
          const view = await this.get<ItemView>(`/sessions/${sessionId}/item`);
          if (view.shown_examples.length > shownBefore) {
            const example = view.shown_examples[view.shown_examples.length - 1]!;
            return {
              item: view.item_index,
              example,
              k: view.shown_examples.length,
              awaiting: view.awaiting,
            };
          }
        } catch {
          // fall through to the retry
        }
        if (attempt < this.maxRetries) {
          await sleep(this.retryDelayMs * (attempt + 1));
        }
      }
    }
    throw lastError;
  }
}
