/**
 * Frame player: shows each preloaded frame for exactly the duration the
 * manifest dictates (the service doubles source frame durations for
 * half-rate playback). Rendering goes through a sink so the scheduler is
 * testable without a DOM.
 */

export interface FrameSink {
  show(frameIndex: number): void;
  clear(): void;
}

export interface Scheduler {
  now(): number;
  setTimeout(fn: () => void, ms: number): number;
  clearTimeout(id: number): void;
}

export const realScheduler: Scheduler = {
  now: () => performance.now(),
  setTimeout: (fn, ms) => setTimeout(fn, ms) as unknown as number,
  clearTimeout: (id) => clearTimeout(id),
};

export class FramePlayer {
  private timer: number | null = null;
  private frameIndex = 0;
  private startedAt = 0;

  constructor(
    private frameCount: number,
    private frameDurationMs: number,
    private sink: FrameSink,
    private scheduler: Scheduler,
    private onEnded: (at: number) => void,
  ) {}

  start(): void {
    this.startedAt = this.scheduler.now();
    this.frameIndex = 0;
    this.sink.show(0);
    this.scheduleNext();
  }

  /** Drift-free scheduling: each frame is timed against the start point. */
  private scheduleNext(): void {
    const nextIndex = this.frameIndex + 1;
    const due = this.startedAt + nextIndex * this.frameDurationMs;
    const delay = Math.max(0, due - this.scheduler.now());
    this.timer = this.scheduler.setTimeout(() => {
      if (nextIndex >= this.frameCount) {
        this.timer = null;
        this.onEnded(this.startedAt + this.frameCount * this.frameDurationMs);
        return;
      }
      this.frameIndex = nextIndex;
      this.sink.show(nextIndex);
      this.scheduleNext();
    }, delay);
  }

  stop(): void {
    if (this.timer !== null) {
      this.scheduler.clearTimeout(this.timer);
      this.timer = null;
    }
  }
}
