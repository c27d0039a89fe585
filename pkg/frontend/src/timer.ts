/** Wall-clock timer for a review panel. Counts only while the window is
 * focused: annotation metrics assume the moderator was actually looking
 * at the panel, so blur pauses and focus resumes. */

export class ReviewTimer {
  private running = false;
  private startedAt = 0;
  private accumulatedMs = 0;

  constructor(private readonly now: () => number = () => Date.now()) {}

  start(): void {
    this.accumulatedMs = 0;
    this.startedAt = this.now();
    this.running = true;
  }

  pause(): void {
    if (!this.running) {
      return;
    }
    this.accumulatedMs += this.now() - this.startedAt;
    this.running = false;
  }

  resume(): void {
    if (this.running) {
      return;
    }
    this.startedAt = this.now();
    this.running = true;
  }

  /** Elapsed focused time in seconds; safe to call while running. */
  seconds(): number {
    let total = this.accumulatedMs;
    if (this.running) {
      total += this.now() - this.startedAt;
    }
    return total / 1000;
  }

  /** Pause on blur, resume on focus. Returns a detach function. */
  watch(win: Pick<Window, "addEventListener" | "removeEventListener">): () => void {
    const onBlur = () => this.pause();
    const onFocus = () => this.resume();
    win.addEventListener("blur", onBlur);
    win.addEventListener("focus", onFocus);
    return () => {
      win.removeEventListener("blur", onBlur);
      win.removeEventListener("focus", onFocus);
    };
  }
}
