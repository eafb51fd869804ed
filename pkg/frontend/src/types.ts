export type StyleName = "pop" | "rock" | "funk" | "afrocuban";

export type Rating = "poor" | "average" | "good";

/** Kit voices in display order; the kick lane is the editable seventh. */
export const KIT_VOICES = ["C", "H", "S", "T", "t", "F"] as const;
export type VoiceLetter = (typeof KIT_VOICES)[number];

export const BARS = 4;
export const STEPS_PER_BAR = 48;
export const STEPS_PER_BEAT = 12;
export const LOOP_STEPS = BARS * STEPS_PER_BAR; // 192

export type Grid = boolean[][]; // BARS x STEPS_PER_BAR

export interface StyleInfo {
  name: StyleName;
  tempo_bpm: number;
}

export interface GrooveResponse {
  id: string;
  style: StyleName;
  output_phrase: string;
  steps: Record<VoiceLetter, Grid>;
}

export function emptyGrid(): Grid {
  return Array.from({ length: BARS }, () =>
    Array.from({ length: STEPS_PER_BAR }, () => false),
  );
}

export function copyGrid(grid: Grid): Grid {
  return grid.map((bar) => bar.slice());
}
