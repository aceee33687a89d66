// Debounced evaluate loop: every edit schedules a request 150 ms out,
// collapsing bursts (curve-handle drags) into one round trip. At most one
// request is in flight; if an edit lands while one is pending, the stale
// response is discarded and the latest document is sent instead.

export const DEBOUNCE_MS = 150;

export interface TimerHost {
  setTimeout: (cb: () => void, ms: number) => number;
  clearTimeout: (id: number) => void;
}

export class EvaluateController<T> {
  private timer: number | null = null;
  private inFlight = false;
  private dirtyWhileInFlight = false;
  private generation = 0;

  constructor(
    private send: () => Promise<T>,
    private apply: (result: T) => void,
    private onError: (err: unknown) => void = () => {},
    private host: TimerHost = {
      setTimeout: (cb, ms) => setTimeout(cb, ms) as unknown as number,
      clearTimeout: (id) => clearTimeout(id),
    },
  ) {}

  /** Call on every edit; the request fires after the debounce window. */
  edit(): void {
    if (this.timer !== null) this.host.clearTimeout(this.timer);
    this.timer = this.host.setTimeout(() => {
      this.timer = null;
      this.fire();
    }, DEBOUNCE_MS);
  }

  /** Bypass the debounce (initial load, dataset switch). */
  flush(): void {
    if (this.timer !== null) {
      this.host.clearTimeout(this.timer);
      this.timer = null;
    }
    this.fire();
  }

  get busy(): boolean {
    return this.inFlight || this.timer !== null;
  }

  private fire(): void {
    if (this.inFlight) {
      this.dirtyWhileInFlight = true;
      return;
    }
    const gen = ++this.generation;
    this.inFlight = true;
    this.send().then(
      (result) => this.settle(gen, () => this.apply(result)),
      (err) => this.settle(gen, () => this.onError(err)),
    );
  }

  private settle(gen: number, deliver: () => void): void {
    this.inFlight = false;
    if (gen !== this.generation) return; // superseded, drop it
    if (this.dirtyWhileInFlight) {
      // the document changed under this response: its colors are stale
      this.dirtyWhileInFlight = false;
      this.fire();
      return;
    }
    deliver();
  }
}
