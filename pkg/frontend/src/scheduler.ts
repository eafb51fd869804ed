import { LOOP_STEPS, STEPS_PER_BEAT } from "./types.js";

export type StepCallback = (step: number, time: number) => void;

export interface SchedulerClock {
  /** Current audio-clock time in seconds. */
  now(): number;
  setInterval(handler: () => void, ms: number): number;
  clearInterval(id: number): void;
}

const realClock = (context: AudioContext): SchedulerClock => ({
  now: () => context.currentTime,
  setInterval: (handler, ms) => window.setInterval(handler, ms),
  clearInterval: (id) => window.clearInterval(id),
});

/**
 * Lookahead loop scheduler: a coarse timer wakes every 25 ms and schedules
 * all steps falling in the next 150 ms against the audio clock, so playback
 * stays steady while the UI thread is busy.  Steps run 0..191 and wrap at
 * the loop boundary.
 */
export class LoopScheduler {
  private intervalId: number | null = null;
  private nextStepTime = 0;
  private step = 0;
  private secondsPerStep = 0;

  private readonly scheduleAhead = 0.15; // seconds
  private readonly tickMs = 25;

  constructor(private readonly clock: SchedulerClock) {}

  static forContext(context: AudioContext): LoopScheduler {
    return new LoopScheduler(realClock(context));
  }

  get currentStep(): number {
    return this.step;
  }

  get running(): boolean {
    return this.intervalId !== null;
  }

  start(bpm: number, onStep: StepCallback): void {
    this.stop();
    this.step = 0;
    this.secondsPerStep = 60 / (bpm * STEPS_PER_BEAT);
    this.nextStepTime = this.clock.now() + 0.05;
    this.intervalId = this.clock.setInterval(() => {
      const horizon = this.clock.now() + this.scheduleAhead;
      while (this.nextStepTime < horizon) {
        onStep(this.step, this.nextStepTime);
        this.nextStepTime += this.secondsPerStep;
        this.step = (this.step + 1) % LOOP_STEPS;
      }
    }, this.tickMs);
  }

  stop(): void {
    if (this.intervalId !== null) {
      this.clock.clearInterval(this.intervalId);
      this.intervalId = null;
    }
  }
}
