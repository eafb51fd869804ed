import type { SequencerController } from "./state.js";
import {
  BARS,
  KIT_VOICES,
  STEPS_PER_BAR,
  STEPS_PER_BEAT,
  type Rating,
  type StyleInfo,
  type StyleName,
} from "./types.js";

const VOICE_NAMES: Record<string, string> = {
  C: "cymbal",
  H: "hi-hat",
  S: "snare",
  T: "high tom",
  t: "tom",
  F: "floor tom",
  K: "kick",
};

const RATINGS: Rating[] = ["poor", "average", "good"];

/**
 * DOM layer over the controller: renders the lane grids, style menu,
 * generate button, rating buttons, and the moving step indicator.  All
 * behaviour lives in the controller; this class only reflects it.
 */
export class SequencerView {
  private cells = new Map<string, HTMLElement>();
  private ratingButtons: HTMLButtonElement[] = [];
  private generateButton!: HTMLButtonElement;
  private styleSelect!: HTMLSelectElement;
  private banner!: HTMLElement;
  private statusLine!: HTMLElement;
  private indicatorStep: number | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly controller: SequencerController,
    private readonly styles: StyleInfo[],
  ) {
    this.build();
    this.render();
  }

  private build(): void {
    this.root.innerHTML = "";

    const controls = el("div", "controls");
    this.styleSelect = document.createElement("select");
    for (const style of this.styles) {
      const option = document.createElement("option");
      option.value = style.name;
      option.textContent = `${style.name} (${style.tempo_bpm} bpm)`;
      this.styleSelect.appendChild(option);
    }
    this.styleSelect.addEventListener("change", () => {
      this.controller.selectStyle(this.styleSelect.value as StyleName);
    });
    controls.appendChild(this.styleSelect);

    this.generateButton = document.createElement("button");
    this.generateButton.className = "generate";
    this.generateButton.textContent = "Generate Groove";
    this.generateButton.addEventListener("click", () => {
      void this.controller.generateGroove();
    });
    controls.appendChild(this.generateButton);

    for (const rating of RATINGS) {
      const button = document.createElement("button");
      button.className = `rate rate-${rating}`;
      button.textContent = rating;
      button.addEventListener("click", () => {
        void this.controller.submitRating(rating);
      });
      this.ratingButtons.push(button);
      controls.appendChild(button);
    }
    this.root.appendChild(controls);

    this.banner = el("div", "banner");
    this.root.appendChild(this.banner);

    const grid = el("div", "lanes");
    this.buildLane(grid, "K", true);
    for (const voice of KIT_VOICES) {
      this.buildLane(grid, voice, false);
    }
    this.root.appendChild(grid);

    this.statusLine = el("div", "status");
    this.root.appendChild(this.statusLine);
  }

  private buildLane(parent: HTMLElement, voice: string, editable: boolean): void {
    const lane = el("div", editable ? "lane lane-editable" : "lane");
    const label = el("span", "lane-label");
    label.textContent = VOICE_NAMES[voice];
    lane.appendChild(label);
    for (let bar = 0; bar < BARS; bar++) {
      for (let step = 0; step < STEPS_PER_BAR; step++) {
        const cell = el("span", "cell");
        if (step === 0) cell.classList.add("bar-start");
        else if (step % STEPS_PER_BEAT === 0) cell.classList.add("beat-start");
        cell.dataset.voice = voice;
        cell.dataset.bar = String(bar);
        cell.dataset.step = String(step);
        if (editable) {
          cell.addEventListener("click", () => {
            this.controller.editKickStep(bar, step);
          });
        }
        this.cells.set(`${voice}:${bar}:${step}`, cell);
        lane.appendChild(cell);
      }
    }
    parent.appendChild(lane);
  }

  render(): void {
    const c = this.controller;
    for (let bar = 0; bar < BARS; bar++) {
      for (let step = 0; step < STEPS_PER_BAR; step++) {
        this.cells
          .get(`K:${bar}:${step}`)!
          .classList.toggle("on", c.kickLane[bar][step]);
        for (const voice of KIT_VOICES) {
          const on = c.generatedLanes?.[voice]?.[bar]?.[step] ?? false;
          this.cells.get(`${voice}:${bar}:${step}`)!.classList.toggle("on", on);
        }
      }
    }
    this.generateButton.disabled = !c.canGenerate;
    for (const button of this.ratingButtons) {
      button.disabled = !c.canRate;
    }
    this.banner.textContent = c.errorBanner ?? "";
    this.banner.classList.toggle("visible", c.errorBanner !== null);
    this.statusLine.textContent = c.hasRated
      ? "thanks! tweak the kick line and generate another groove"
      : c.grooveId
        ? "how does it sound?"
        : "draw a kick pattern and hit Generate Groove";
  }

  showWarning(message: string): void {
    this.banner.textContent = message;
    this.banner.classList.add("visible");
  }

  /** Highlight the playing column; step is 0..191 across the 4 bars. */
  setStepIndicator(step: number | null): void {
    if (this.indicatorStep !== null) {
      this.toggleColumn(this.indicatorStep, false);
    }
    this.indicatorStep = step;
    if (step !== null) {
      this.toggleColumn(step, true);
    }
  }

  private toggleColumn(loopStep: number, on: boolean): void {
    const bar = Math.floor(loopStep / STEPS_PER_BAR) % BARS;
    const step = loopStep % STEPS_PER_BAR;
    for (const voice of ["K", ...KIT_VOICES]) {
      this.cells.get(`${voice}:${bar}:${step}`)?.classList.toggle("playing", on);
    }
  }
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}

