import { SurveyApi } from "./api.js";
import { DrumSynth } from "./audio.js";
import { LoopScheduler } from "./scheduler.js";
import { SequencerController } from "./state.js";
import { SequencerView } from "./ui.js";
import { KIT_VOICES, STEPS_PER_BAR, type StyleName } from "./types.js";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");

  const api = new SurveyApi("");
  const styles = await api.styles();
  const tempi = new Map(styles.map((s) => [s.name, s.tempo_bpm]));

  // the audio context must be created after a user gesture; everything is
  // lazily set up on the first generate
  let context: AudioContext | null = null;
  let synth: DrumSynth | null = null;
  let scheduler: LoopScheduler | null = null;

  const controller = new SequencerController(api, {
    onChange: () => view.render(),
    onWarning: (message) => view.showWarning(message),
    onLoopStart: (style: StyleName) => {
      context ??= new AudioContext();
      synth ??= new DrumSynth(context);
      scheduler ??= LoopScheduler.forContext(context);
      void context.resume();
      scheduler.start(tempi.get(style) ?? 110, (step, time) => {
        const bar = Math.floor(step / STEPS_PER_BAR);
        const barStep = step % STEPS_PER_BAR;
        if (controller.kickLane[bar][barStep]) synth!.trigger("K", time);
        for (const voice of KIT_VOICES) {
          if (controller.generatedLanes?.[voice]?.[bar]?.[barStep]) {
            synth!.trigger(voice, time);
          }
        }
        view.setStepIndicator(step);
      });
    },
    onLoopStop: () => {
      scheduler?.stop();
      view.setStepIndicator(null);
    },
  });

  const view = new SequencerView(root, controller, styles);
}

void boot();
