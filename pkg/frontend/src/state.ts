import type { SurveyApi } from "./api.js";
import {
  BARS,
  STEPS_PER_BAR,
  copyGrid,
  emptyGrid,
  type Grid,
  type GrooveResponse,
  type Rating,
  type StyleName,
  type VoiceLetter,
} from "./types.js";

export interface ControllerHooks {
  /** Fired after any state change so the view can re-render. */
  onChange?: () => void;
  /** Out-of-range edits and similar user-visible warnings. */
  onWarning?: (message: string) => void;
  /** Playback control, wired to the audio scheduler. */
  onLoopStart?: (style: StyleName) => void;
  onLoopStop?: () => void;
}

/**
 * All sequencer state and the survey interaction rules, free of DOM
 * concerns.  The invariants the view relies on:
 *
 * - generated lanes are cleared whenever the kick lane or style changes
 *   after a generation, and the held groove id is dropped with them;
 * - rating is possible only while an unrated groove id is held and no
 *   rating request is in flight, so a groove can never be rated twice;
 * - one generation request is in flight at a time.
 */
export class SequencerController {
  kickLane: Grid = emptyGrid();
  generatedLanes: Record<VoiceLetter, Grid> | null = null;
  style: StyleName = "pop";
  grooveId: string | null = null;
  hasRated = false;
  generating = false;
  submittingRating = false;
  errorBanner: string | null = null;
  playing = false;

  constructor(
    private readonly api: SurveyApi,
    private readonly hooks: ControllerHooks = {},
  ) {}

  private changed(): void {
    this.hooks.onChange?.();
  }

  /** Drop any generated material; edits after generation invalidate it. */
  private invalidateGroove(): void {
    if (this.generatedLanes !== null || this.grooveId !== null) {
      this.generatedLanes = null;
      this.grooveId = null;
      this.hasRated = false;
      this.stopPlayback();
    }
  }

  get canGenerate(): boolean {
    return !this.generating;
  }

  get canRate(): boolean {
    return this.grooveId !== null && !this.hasRated && !this.submittingRating;
  }

  editKickStep(bar: number, step: number): void {
    if (bar < 0 || bar >= BARS || step < 0 || step >= STEPS_PER_BAR) {
      this.hooks.onWarning?.(`step out of range: bar ${bar}, step ${step}`);
      return;
    }
    this.kickLane[bar][step] = !this.kickLane[bar][step];
    this.invalidateGroove();
    this.changed();
  }

  selectStyle(style: StyleName): void {
    if (style === this.style) return;
    this.style = style;
    this.invalidateGroove();
    this.changed();
  }

  /** The exact grid sent to the service: a defensive copy of the lane. */
  serializeKickGrid(): Grid {
    return copyGrid(this.kickLane);
  }

  async generateGroove(): Promise<void> {
    if (!this.canGenerate) return;
    this.generating = true;
    this.errorBanner = null;
    this.changed();
    let response: GrooveResponse;
    try {
      response = await this.api.createGroove(this.style, this.serializeKickGrid());
    } catch (error) {
      this.generating = false;
      this.errorBanner = `generation failed, try again: ${String(
        (error as Error).message ?? error,
      )}`;
      this.changed();
      return;
    }
    this.generating = false;
    this.generatedLanes = response.steps;
    this.grooveId = response.id;
    this.hasRated = false;
    this.startPlayback();
    this.changed();
  }

  async submitRating(rating: Rating): Promise<void> {
    if (!this.canRate || this.grooveId === null) return;
    this.submittingRating = true;
    const grooveId = this.grooveId;
    this.changed();
    try {
      await this.api.submitRating(grooveId, rating);
      this.hasRated = true;
    } catch (error) {
      // a conflict means the service already holds a rating; treat as done
      const status = (error as { status?: number }).status;
      if (status === 409) {
        this.hasRated = true;
      } else {
        this.errorBanner = `rating failed: ${String((error as Error).message)}`;
      }
    } finally {
      this.submittingRating = false;
      this.changed();
    }
  }

  startPlayback(): void {
    this.playing = true;
    this.hooks.onLoopStart?.(this.style);
  }

  stopPlayback(): void {
    if (this.playing) {
      this.playing = false;
      this.hooks.onLoopStop?.();
    }
  }
}
