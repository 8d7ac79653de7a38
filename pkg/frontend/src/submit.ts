/** Debounced, latest-wins submission with stale-response cancellation.
 *
 * Slider drags call `submit` freely; a 300 ms debounce coalesces them.
 * One request is in flight at a time: newer submissions made meanwhile
 * are queued (latest state wins) and dispatched on completion. Every
 * dispatch bumps a generation counter, and responses from an older
 * generation are dropped, so results can never regress.
 */

import { buildStylizeRequest } from "./requests.js";
import type { ControlState } from "./state.js";
import type { HttpPost, StylizePayload } from "./types.js";

export interface SubmitCallbacks {
  onResult: (png: Uint8Array<ArrayBuffer>) => void;
  /** Service-side validation failure (HTTP 400). */
  onValidation: (message: string) => void;
  /** Network failure; worth a retry banner. */
  onNetworkError: (message: string) => void;
  onInFlight?: (inFlight: boolean) => void;
}

export const DEBOUNCE_MS = 300;

export class StylizeClient {
  private post: HttpPost;
  private callbacks: SubmitCallbacks;
  private debounceMs: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private generation = 0;
  private inFlight = false;
  private pending: StylizePayload | null = null;

  constructor(post: HttpPost, callbacks: SubmitCallbacks, debounceMs = DEBOUNCE_MS) {
    this.post = post;
    this.callbacks = callbacks;
    this.debounceMs = debounceMs;
  }

  /** Debounced entry point; builds the request eagerly so precondition
   * failures surface immediately instead of after the delay. */
  submit(state: ControlState): void {
    let payload: StylizePayload;
    try {
      payload = buildStylizeRequest(state);
    } catch (err) {
      this.callbacks.onValidation(err instanceof Error ? err.message : String(err));
      return;
    }
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.dispatch(payload);
    }, this.debounceMs);
  }

  private dispatch(payload: StylizePayload): void {
    if (this.inFlight) {
      this.pending = payload;
      return;
    }
    this.inFlight = true;
    this.callbacks.onInFlight?.(true);
    const generation = ++this.generation;
    this.post(payload).then(
      (response) => this.settle(generation, () => {
        if (response.status === 200) {
          this.callbacks.onResult(response.body);
        } else {
          let message = `service returned ${response.status}`;
          try {
            message = JSON.parse(new TextDecoder().decode(response.body)).error ?? message;
          } catch {
            // non-JSON error body; keep the status message
          }
          this.callbacks.onValidation(message);
        }
      }),
      (err) => this.settle(generation, () => {
        this.callbacks.onNetworkError(err instanceof Error ? err.message : String(err));
      }),
    );
  }

  private settle(generation: number, deliver: () => void): void {
    this.inFlight = false;
    this.callbacks.onInFlight?.(false);
    const superseded = this.pending !== null || generation !== this.generation;
    if (!superseded) deliver();
    if (this.pending !== null) {
      const next = this.pending;
      this.pending = null;
      this.dispatch(next);
    }
  }
}
