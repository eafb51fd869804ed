"""Operator CLI: corpus synthesis, training, generation, reports, serving.

Every subcommand prints its effective configuration to stderr as a single
JSON line, and all randomness flows from explicit --seed flags, so any run
can be reproduced from its log.  Exit codes: 0 success, 2 usage error,
3 missing file, 4 malformed data, 5 model/checkpoint error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .corpus import (
    CorpusError,
    GrammarError,
    corpus_stats,
    load_corpus,
    save_corpus,
    synthesize_corpus,
    synthesize_mixed_corpus,
)
from .model import (
    ModelConfig,
    TrainingError,
    init_model,
    make_training_pairs,
    perplexity,
    train,
)
from .sampling import SamplingMethod, generate, mean_selected_probability
from .survey import (
    LogReplayError,
    aggregate_by_method,
    aggregate_by_probability_bracket,
    aggregate_by_style,
    replay_log,
)
from .tokens import (
    ParseError,
    Phrase,
    parse_bar_line,
    parse_phrase,
    parse_style,
    render_phrase,
    source_vocabulary,
    target_vocabulary,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_DATA = 4
EXIT_MODEL = 5

# (hidden size, layer count, learning rate, clip norm) presets; "full"
# mirrors the deployed topology, "reduced" trains in minutes on a laptop
# CPU with damped steps that avoid the per-sentence SGD oscillation
PRESETS = {"full": (128, 3, 0.55, 5.0), "reduced": (32, 1, 0.2, 1.0)}


def _effective_config(args: argparse.Namespace) -> None:
    shown = {k: v for k, v in vars(args).items() if k != "func" and v is not None}
    print("effective-config: " + json.dumps(shown, default=str), file=sys.stderr)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kick2kit",
        description="Kick-drum to full-kit groove translation toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("corpus-synth", help="write a synthetic corpus file")
    synth.add_argument("--style", required=True,
                       choices=["pop", "rock", "funk", "afrocuban", "all"])
    synth.add_argument("--phrases", type=int, required=True,
                       help="phrase count (per style when --style all)")
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=cmd_corpus_synth)

    stats = sub.add_parser("corpus-stats", help="report corpus statistics")
    stats.add_argument("--corpus", required=True)
    stats.add_argument("--json", action="store_true")
    stats.set_defaults(func=cmd_corpus_stats)

    tr = sub.add_parser("train", help="train a model and write a checkpoint")
    tr.add_argument("--corpus", required=True)
    tr.add_argument("--out", required=True)
    tr.add_argument("--epochs", type=int, required=True)
    tr.add_argument("--preset", choices=sorted(PRESETS))
    tr.add_argument("--hidden", type=int, default=128)
    tr.add_argument("--layers", type=int, default=3)
    tr.add_argument("--lr", type=float, default=None,
                    help="default 0.55, or the preset's rate")
    tr.add_argument("--clip", type=float, default=None,
                    help="default 5.0, or the preset's clip norm")
    tr.add_argument("--holdout", type=float, default=0.1)
    tr.add_argument("--seed", type=int, default=0)
    tr.set_defaults(func=cmd_train)

    ppl = sub.add_parser("perplexity", help="evaluate a checkpoint on a corpus")
    ppl.add_argument("--model", required=True)
    ppl.add_argument("--corpus", required=True)
    ppl.add_argument("--json", action="store_true")
    ppl.set_defaults(func=cmd_perplexity)

    gen = sub.add_parser("generate", help="translate a kick phrase to a kit part")
    gen.add_argument("--model", required=True)
    gen.add_argument("--method", type=int, choices=[1, 2, 3], default=1)
    gen.add_argument("--seed", type=int, default=0)
    source = gen.add_mutually_exclusive_group(required=True)
    source.add_argument("--kick", help="file containing the kick phrase line")
    source.add_argument("--kick-line", help="kick phrase inline (49 or 196 words)")
    gen.add_argument("--json", action="store_true")
    gen.set_defaults(func=cmd_generate)

    rep = sub.add_parser("report", help="render aggregates from a survey log")
    rep.add_argument("--log", required=True)
    rep.add_argument("--json", action="store_true")
    rep.set_defaults(func=cmd_report)

    srv = sub.add_parser("serve", help="run the survey service")
    srv.add_argument("--config", help="JSON config file")
    srv.add_argument("--host")
    srv.add_argument("--port", type=int)
    srv.add_argument("--model", help="checkpoint path")
    srv.add_argument("--log", help="survey log path")
    srv.add_argument("--seed", type=int)
    srv.add_argument("--static", help="directory of frontend assets to serve")
    srv.set_defaults(func=cmd_serve)

    return parser


# --- subcommands -----------------------------------------------------------


def cmd_corpus_synth(args) -> int:
    if args.style == "all":
        corpus = synthesize_mixed_corpus(args.phrases, args.seed)
    else:
        corpus = synthesize_corpus(parse_style(args.style), args.phrases, args.seed)
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} phrases to {args.out}")
    return EXIT_OK


def cmd_corpus_stats(args) -> int:
    stats = corpus_stats(load_corpus(args.corpus))
    if args.json:
        print(json.dumps(stats.as_dict(), indent=2))
        return EXIT_OK
    print(f"{'style':<12}{'phrases':>8}{'bars':>8}{'kick density':>14}")
    for style in sorted(stats.phrase_counts):
        print(
            f"{style:<12}{stats.phrase_counts[style]:>8}"
            f"{stats.bar_counts[style]:>8}{stats.kick_density[style]:>14.3f}"
        )
    print(f"distinct target tokens: {stats.distinct_target_tokens}")
    return EXIT_OK


def _model_config(args) -> ModelConfig:
    hidden, layers, lr, clip = args.hidden, args.layers, 0.55, 5.0
    if args.preset:
        hidden, layers, lr, clip = PRESETS[args.preset]
    if args.lr is not None:
        lr = args.lr
    if args.clip is not None:
        clip = args.clip
    return ModelConfig(
        source_vocab_size=len(source_vocabulary()),
        target_vocab_size=len(target_vocabulary()),
        hidden_size=hidden,
        layer_count=layers,
        learning_rate=lr,
        gradient_clip_norm=clip,
    )


def cmd_train(args) -> int:
    corpus = load_corpus(args.corpus)
    config = _model_config(args)
    params = init_model(config, args.seed)

    def report(stats):
        holdout = (
            f"{stats.holdout_perplexity:.4f}"
            if stats.holdout_perplexity is not None
            else "n/a"
        )
        print(
            f"epoch {stats.epoch:>3}  train ppl {stats.train_perplexity:.4f}  "
            f"holdout ppl {holdout}",
            flush=True,
        )

    trained, history = train(
        params, corpus, config, args.epochs, args.holdout, args.seed,
        progress=report,
    )
    save_checkpoint(trained, source_vocabulary(), target_vocabulary(), args.out)
    history_path = Path(args.out).with_suffix(".history.json")
    history_path.write_text(
        json.dumps(
            [
                {
                    "epoch": e.epoch,
                    "train_perplexity": e.train_perplexity,
                    "holdout_perplexity": e.holdout_perplexity,
                }
                for e in history
            ],
            indent=2,
        )
    )
    print(f"wrote checkpoint {args.out} and history {history_path}")
    return EXIT_OK


def cmd_perplexity(args) -> int:
    bundle = load_checkpoint(args.model)
    corpus = load_corpus(args.corpus)
    pairs = make_training_pairs(corpus.phrases)
    value = perplexity(bundle.params, pairs)
    if args.json:
        print(json.dumps({"perplexity": value, "phrases": len(corpus)}))
    else:
        print(f"perplexity over {len(corpus)} phrases: {value:.4f}")
    return EXIT_OK


def _read_kick_phrase(args) -> Phrase:
    if args.kick is not None:
        text = Path(args.kick).read_text(encoding="utf-8")
        lines = [
            ln.strip() for ln in text.splitlines()
            if ln.strip() and not ln.lstrip().startswith("#")
        ]
        if len(lines) != 1:
            raise ParseError(f"kick file must hold one phrase line, got {len(lines)}")
        line = lines[0]
    else:
        line = args.kick_line
    words = line.split()
    if len(words) == 49:  # single bar: tile it across the 4-bar sentence
        style, bar = parse_bar_line(line)
        return Phrase(style, (bar,) * 4)
    return parse_phrase(line)


def cmd_generate(args) -> int:
    bundle = load_checkpoint(args.model)
    kick = _read_kick_phrase(args)
    result = generate(bundle, kick, SamplingMethod(args.method), args.seed)
    if args.json:
        print(json.dumps(result.log_record()))
    else:
        print(render_phrase(result.phrase))
        print(
            f"mean selected probability: {mean_selected_probability(result):.4f}",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_report(args) -> int:
    records = list(replay_log(args.log).values())
    methods = aggregate_by_method(records)
    brackets = aggregate_by_probability_bracket(records)
    styles = aggregate_by_style(records)
    if args.json:
        print(
            json.dumps(
                {
                    "methods": {
                        m: {"raw": a.raw, "normalised": a.normalised}
                        for m, a in methods.items()
                    },
                    "brackets": brackets,
                    "styles": styles,
                },
                indent=2,
            )
        )
        return EXIT_OK

    def fmt(x):
        return "-" if x is None else f"{x:.2f}"

    print("ratings by sampling method (raw | normalised)")
    print(f"{'method':<8}{'good':>6}{'avg':>6}{'poor':>6}   "
          f"{'good':>6}{'avg':>6}{'poor':>6}")
    for m, a in sorted(methods.items()):
        print(
            f"{m:<8}{a.raw['good']:>6}{a.raw['average']:>6}{a.raw['poor']:>6}   "
            f"{fmt(a.normalised['good']):>6}{fmt(a.normalised['average']):>6}"
            f"{fmt(a.normalised['poor']):>6}"
        )
    print("\nmean rating by mean selected probability")
    for label, value in brackets.items():
        print(f"{label:<10}{fmt(value):>6}")
    print("\nratings by style")
    print(f"{'style':<12}{'good':>6}{'avg':>6}{'poor':>6}{'poor share':>12}")
    for style, data in styles.items():
        counts = data["counts"]
        print(
            f"{style:<12}{counts['good']:>6}{counts['average']:>6}"
            f"{counts['poor']:>6}{fmt(data['poor_share']):>12}"
        )
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import load_service_config, run_service

    config = load_service_config(args.config)
    overrides = {
        "host": args.host,
        "port": args.port,
        "checkpoint_path": args.model,
        "log_path": args.log,
        "seed": args.seed,
        "static_dir": args.static,
    }
    import dataclasses

    config = dataclasses.replace(
        config, **{k: v for k, v in overrides.items() if v is not None}
    )
    run_service(config)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    _effective_config(args)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except (CorpusError, GrammarError, ParseError, LogReplayError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (CheckpointError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
