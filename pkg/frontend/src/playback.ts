// Loop clock and frame cache. The displayed frame is floor(t * n_frames);
// a freshly evaluated frame set swaps in only when t wraps past 1, so the
// animation never pops mid-loop.

import type { EvaluateResponse } from "./api";

export class PlaybackState {
  t = 0;
  playing = true;
  loopDurationS = 2;
  frameSet: EvaluateResponse | null = null;
  stale = false;

  private pending: EvaluateResponse | null = null;

  /** Advance the clock; applies any pending frame set at the wrap. */
  tick(elapsedS: number): void {
    if (!this.playing) return;
    const advanced = this.t + elapsedS / this.loopDurationS;
    if (advanced >= 1 && this.pending) {
      this.frameSet = this.pending;
      this.pending = null;
    }
    this.t = advanced % 1;
  }

  /** Scrub bar: jump straight to a phase (and usually pause first). */
  seek(t: number): void {
    this.t = ((t % 1) + 1) % 1;
    if (this.pending) {
      this.frameSet = this.pending;
      this.pending = null;
    }
  }

  frameIndex(): number {
    if (!this.frameSet) return 0;
    return Math.min(
      Math.floor(this.t * this.frameSet.n_frames),
      this.frameSet.n_frames - 1,
    );
  }

  currentFrame() {
    return this.frameSet ? this.frameSet.frames[this.frameIndex()] : null;
  }

  /** New evaluate response arrived; hold it until the next loop boundary. */
  offer(frameSet: EvaluateResponse): void {
    if (this.frameSet === null) {
      this.frameSet = frameSet; // nothing on screen yet, show it now
    } else {
      this.pending = frameSet;
    }
    this.stale = false;
  }

  markStale(): void {
    this.stale = true;
  }
}
