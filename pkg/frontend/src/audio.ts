import type { VoiceLetter } from "./types.js";

/**
 * Synthesized one-shot drum voices so the page needs no sample assets.
 * Each hit is a short envelope on noise or a pitched oscillator, mixed
 * client-side straight into the audio context destination.
 */
export class DrumSynth {
  private noiseBuffer: AudioBuffer;

  constructor(private readonly context: AudioContext) {
    const length = Math.floor(context.sampleRate * 0.3);
    this.noiseBuffer = context.createBuffer(1, length, context.sampleRate);
    const data = this.noiseBuffer.getChannelData(0);
    for (let i = 0; i < length; i++) {
      data[i] = Math.random() * 2 - 1;
    }
  }

  trigger(voice: VoiceLetter | "K", time: number): void {
    switch (voice) {
      case "K":
        this.pitched(time, 110, 0.5, 0.25, "sine", 0.9);
        break;
      case "S":
        this.noise(time, 0.18, 1800, 0.5);
        this.pitched(time, 190, 0.9, 0.08, "triangle", 0.3);
        break;
      case "H":
        this.noise(time, 0.05, 8000, 0.25);
        break;
      case "C":
        this.noise(time, 0.9, 5500, 0.3);
        break;
      case "T":
        this.pitched(time, 220, 0.65, 0.3, "sine", 0.5);
        break;
      case "t":
        this.pitched(time, 165, 0.65, 0.3, "sine", 0.5);
        break;
      case "F":
        this.pitched(time, 120, 0.7, 0.35, "sine", 0.55);
        break;
    }
  }

  private noise(time: number, duration: number, highpassHz: number, gainLevel: number): void {
    const source = this.context.createBufferSource();
    source.buffer = this.noiseBuffer;
    const filter = this.context.createBiquadFilter();
    filter.type = "highpass";
    filter.frequency.value = highpassHz;
    const gain = this.context.createGain();
    gain.gain.setValueAtTime(gainLevel, time);
    gain.gain.exponentialRampToValueAtTime(0.001, time + duration);
    source.connect(filter).connect(gain).connect(this.context.destination);
    source.start(time);
    source.stop(time + duration);
  }

  private pitched(
    time: number,
    startHz: number,
    drop: number,
    duration: number,
    type: OscillatorType,
    gainLevel: number,
  ): void {
    const osc = this.context.createOscillator();
    osc.type = type;
    osc.frequency.setValueAtTime(startHz, time);
    osc.frequency.exponentialRampToValueAtTime(startHz * (1 - drop), time + duration);
    const gain = this.context.createGain();
    gain.gain.setValueAtTime(gainLevel, time);
    gain.gain.exponentialRampToValueAtTime(0.001, time + duration);
    osc.connect(gain).connect(this.context.destination);
    osc.start(time);
    osc.stop(time + duration);
  }
}
