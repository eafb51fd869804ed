"""Kick-drum to full-kit groove translation toolkit.

Subpackages cover the pipeline end to end: the drum word syntax and
vocabularies (tokens), corpus loading and synthetic style grammars
(corpus), the LSTM encoder-decoder and its training loop (model), binary
checkpoints (checkpoint), the three sampling strategies with
mean-probability self-rating (sampling), the survey store and aggregation
arithmetic (survey), the HTTP service (service), and the operator CLI
(cli).
"""

__version__ = "0.1.0"

from .tokens import (  # noqa: F401
    Bar,
    DrumVoice,
    Phrase,
    StyleTag,
    SubdivisionToken,
    Vocabulary,
    extract_kick,
    parse_phrase,
    render_phrase,
    source_vocabulary,
    strip_kick,
    target_vocabulary,
)
from .corpus import (  # noqa: F401
    Corpus,
    StyleGrammar,
    corpus_stats,
    load_corpus,
    save_corpus,
    style_grammar,
    synthesize_corpus,
    synthesize_mixed_corpus,
)
from .model import (  # noqa: F401
    HiddenState,
    ModelConfig,
    ModelParams,
    decode_step,
    encode,
    init_model,
    loss_and_gradients,
    make_training_pairs,
    perplexity,
    train,
)
from .checkpoint import (  # noqa: F401
    CheckpointError,
    ModelBundle,
    load_checkpoint,
    save_checkpoint,
)
from .sampling import (  # noqa: F401
    GenerationResult,
    SamplingMethod,
    generate,
    greedy_select,
    mean_selected_probability,
    probability_bracket,
    roulette_select,
    topk_roulette_select,
)
from .survey import (  # noqa: F401
    GrooveRecord,
    SurveyStore,
    aggregate_by_method,
    aggregate_by_probability_bracket,
    aggregate_by_style,
    replay_log,
)
