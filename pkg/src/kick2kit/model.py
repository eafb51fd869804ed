"""Stacked-LSTM encoder-decoder trained by backpropagation through time.

The encoder consumes the reversed one-hot kick sentence from an all-zero
initial state; its final per-layer (h, c) state seeds the decoder, which is
teacher-forced during training and free-running at generation time.  All
math is float64 numpy so analytic gradients can be validated against
central finite differences.

Cell equations per layer (gate order i, f, g, o within the stacked 4H
dimension):

    z = W x + U h_prev + b
    i = sigmoid(z_i)   f = sigmoid(z_f)   g = tanh(z_g)   o = sigmoid(z_o)
    c = f * c_prev + i * g
    h = o * tanh(c)

Layer 0 consumes the one-hot token, so W x is a column pick; upper layers
consume the lower layer's h.  The output projection maps the top decoder h
to target-vocabulary logits; training loss is summed cross-entropy over the
target tokens.  Optimization is plain per-sentence SGD (learning rate 0.55
by default) with global-norm gradient clipping.
"""

from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass

import numpy as np

from .corpus import Corpus
from .tokens import (
    Phrase,
    Vocabulary,
    encode_for_model,
    extract_kick,
    one_hot_to_indices,
    phrase_words,
    source_vocabulary,
    strip_kick,
    target_vocabulary,
    words_to_indices,
)


class TrainingError(RuntimeError):
    """Non-finite loss or an otherwise unusable training state."""


@dataclass(frozen=True)
class ModelConfig:
    source_vocab_size: int
    target_vocab_size: int
    hidden_size: int = 128
    layer_count: int = 3
    learning_rate: float = 0.55
    gradient_clip_norm: float = 5.0
    max_sequence_length: int = 256

    def __post_init__(self) -> None:
        for name in (
            "source_vocab_size",
            "target_vocab_size",
            "hidden_size",
            "layer_count",
            "max_sequence_length",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.gradient_clip_norm <= 0:
            raise ValueError("gradient_clip_norm must be > 0")

    def encoder_input_size(self, layer: int) -> int:
        return self.source_vocab_size if layer == 0 else self.hidden_size

    def decoder_input_size(self, layer: int) -> int:
        return self.target_vocab_size if layer == 0 else self.hidden_size

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class LstmLayer:
    w: np.ndarray  # (4H, input_size)
    u: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)


@dataclass
class ModelParams:
    config: ModelConfig
    encoder: list[LstmLayer]
    decoder: list[LstmLayer]
    proj_w: np.ndarray  # (target_vocab_size, H)
    proj_b: np.ndarray  # (target_vocab_size,)


def iter_param_arrays(params: ModelParams):
    """Yield (name, array) in the declared order used by checkpoints,
    clipping, and updates: encoder layers, decoder layers, projection."""
    for side_name, side in (("encoder", params.encoder), ("decoder", params.decoder)):
        for idx, layer in enumerate(side):
            yield f"{side_name}.{idx}.w", layer.w
            yield f"{side_name}.{idx}.u", layer.u
            yield f"{side_name}.{idx}.b", layer.b
    yield "proj_w", params.proj_w
    yield "proj_b", params.proj_b


def expected_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    four_h = 4 * config.hidden_size
    for side, input_size in (
        ("encoder", config.encoder_input_size),
        ("decoder", config.decoder_input_size),
    ):
        for layer in range(config.layer_count):
            shapes[f"{side}.{layer}.w"] = (four_h, input_size(layer))
            shapes[f"{side}.{layer}.u"] = (four_h, config.hidden_size)
            shapes[f"{side}.{layer}.b"] = (four_h,)
    shapes["proj_w"] = (config.target_vocab_size, config.hidden_size)
    shapes["proj_b"] = (config.target_vocab_size,)
    return shapes


INIT_SCALE = 0.08


def init_model(config: ModelConfig, seed: int) -> ModelParams:
    """Uniform [-0.08, 0.08] weights, zero biases; deterministic per seed."""
    rng = np.random.Generator(np.random.PCG64(seed))

    def make(side_input_size):
        layers = []
        for layer in range(config.layer_count):
            four_h = 4 * config.hidden_size
            w = rng.uniform(-INIT_SCALE, INIT_SCALE, (four_h, side_input_size(layer)))
            u = rng.uniform(-INIT_SCALE, INIT_SCALE, (four_h, config.hidden_size))
            b = np.zeros(four_h)
            layers.append(LstmLayer(w, u, b))
        return layers

    encoder = make(config.encoder_input_size)
    decoder = make(config.decoder_input_size)
    proj_w = rng.uniform(
        -INIT_SCALE, INIT_SCALE, (config.target_vocab_size, config.hidden_size)
    )
    proj_b = np.zeros(config.target_vocab_size)
    return ModelParams(config, encoder, decoder, proj_w, proj_b)


def zero_grads(config: ModelConfig) -> ModelParams:
    zeros = {
        name: np.zeros(shape) for name, shape in expected_shapes(config).items()
    }

    def side(name):
        return [
            LstmLayer(
                zeros[f"{name}.{layer}.w"],
                zeros[f"{name}.{layer}.u"],
                zeros[f"{name}.{layer}.b"],
            )
            for layer in range(config.layer_count)
        ]

    return ModelParams(config, side("encoder"), side("decoder"), zeros["proj_w"], zeros["proj_b"])


@dataclass(frozen=True)
class HiddenState:
    """Per-layer recurrent state; h and c are (layer_count, hidden_size)."""

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, config: ModelConfig) -> "HiddenState":
        shape = (config.layer_count, config.hidden_size)
        return cls(np.zeros(shape), np.zeros(shape))


# --- cell primitives -------------------------------------------------------


def _sigmoid(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def _lstm_step(layer: LstmLayer, x, h_prev, c_prev, hidden: int):
    """One cell step.  x is a token index (layer 0) or a dense vector."""
    if isinstance(x, (int, np.integer)):
        z = layer.w[:, x] + layer.u @ h_prev + layer.b
    else:
        z = layer.w @ x + layer.u @ h_prev + layer.b
    i = _sigmoid(z[:hidden])
    f = _sigmoid(z[hidden : 2 * hidden])
    g = np.tanh(z[2 * hidden : 3 * hidden])
    o = _sigmoid(z[3 * hidden :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    cache = (x, h_prev, c_prev, i, f, g, o, tc)
    return h, c, cache


def _lstm_step_backward(layer, grads_layer, cache, dh, dc_in, hidden, need_dx):
    """Backward through one cell step; accumulates into grads_layer."""
    x, h_prev, c_prev, i, f, g, o, tc = cache
    do = dh * tc
    dc = dh * o * (1.0 - tc * tc) + dc_in
    di = dc * g
    dg = dc * i
    df = dc * c_prev
    dc_prev = dc * f
    dz = np.empty(4 * hidden)
    dz[:hidden] = di * i * (1.0 - i)
    dz[hidden : 2 * hidden] = df * f * (1.0 - f)
    dz[2 * hidden : 3 * hidden] = dg * (1.0 - g * g)
    dz[3 * hidden :] = do * o * (1.0 - o)
    grads_layer.b += dz
    grads_layer.u += np.outer(dz, h_prev)
    if isinstance(x, (int, np.integer)):
        grads_layer.w[:, x] += dz
        dx = None
    else:
        grads_layer.w += np.outer(dz, x)
        dx = layer.w.T @ dz if need_dx else None
    dh_prev = layer.u.T @ dz
    return dh_prev, dc_prev, dx


def _run_stack(layers, hidden, inputs, h_init, c_init):
    """Run a layer stack over a token-index sequence.

    Returns final per-layer states, the top-layer h at every step, and the
    caches needed for BPTT.
    """
    levels = len(layers)
    h = [h_init[l].copy() for l in range(levels)]
    c = [c_init[l].copy() for l in range(levels)]
    caches = []
    top = []
    for x in inputs:
        step_caches = []
        inp = x
        for l, layer in enumerate(layers):
            h[l], c[l], cache = _lstm_step(layer, inp, h[l], c[l], hidden)
            step_caches.append(cache)
            inp = h[l]
        caches.append(step_caches)
        top.append(h[-1])
    return h, c, top, caches


def _backward_stack(layers, grad_layers, hidden, caches, dtop, dh_final, dc_final):
    """BPTT through a stack.  dtop[t] is the extra gradient into the top
    layer's h at step t (may be None); dh_final/dc_final flow in from
    whatever consumed the final state.  Returns gradients w.r.t. the
    initial state."""
    levels = len(layers)
    dh_time = [dh_final[l].copy() for l in range(levels)]
    dc_time = [dc_final[l].copy() for l in range(levels)]
    for t in range(len(caches) - 1, -1, -1):
        d_above = None
        for l in range(levels - 1, -1, -1):
            dh = dh_time[l]
            if l == levels - 1 and dtop is not None and dtop[t] is not None:
                dh = dh + dtop[t]
            if d_above is not None:
                dh = dh + d_above
            dh_prev, dc_prev, dx = _lstm_step_backward(
                layers[l], grad_layers[l], caches[t][l], dh, dc_time[l], hidden, l > 0
            )
            dh_time[l] = dh_prev
            dc_time[l] = dc_prev
            d_above = dx
    return dh_time, dc_time


def _log_softmax_parts(logits: np.ndarray):
    m = logits.max()
    shifted = logits - m
    exp = np.exp(shifted)
    total = exp.sum()
    probs = exp / total
    log_norm = m + math.log(total)
    return probs, log_norm


def softmax(logits: np.ndarray) -> np.ndarray:
    probs, _ = _log_softmax_parts(logits)
    return probs


def _safe_exp(value: float) -> float:
    # math.exp raises past ~709.78; an astronomically bad model simply has
    # infinite perplexity
    try:
        return math.exp(value)
    except OverflowError:
        return math.inf


# --- public forward operations ----------------------------------------------


def encode(params: ModelParams, inputs: np.ndarray) -> HiddenState:
    """Consume a reversed one-hot sequence from an all-zero state and
    return the final per-layer encoder state."""
    config = params.config
    indices = one_hot_to_indices(inputs, config.source_vocab_size)
    if len(indices) > config.max_sequence_length:
        raise ValueError(
            f"sequence length {len(indices)} exceeds max {config.max_sequence_length}"
        )
    state = HiddenState.zeros(config)
    h, c, _, _ = _run_stack(
        params.encoder, config.hidden_size, indices, state.h, state.c
    )
    return HiddenState(np.array(h), np.array(c))


def decode_step(
    params: ModelParams, state: HiddenState, previous_token: int
) -> tuple[np.ndarray, HiddenState]:
    """Advance the decoder one step; returns (distribution, new state)
    without mutating the input state."""
    config = params.config
    if not 0 <= previous_token < config.target_vocab_size:
        raise ValueError(
            f"token index {previous_token} out of range 0..{config.target_vocab_size - 1}"
        )
    h, c, top, _ = _run_stack(
        params.decoder, config.hidden_size, [int(previous_token)], state.h, state.c
    )
    logits = params.proj_w @ top[-1] + params.proj_b
    return softmax(logits), HiddenState(np.array(h), np.array(c))


# --- loss, gradients, perplexity ---------------------------------------------


def _sequence_forward(params, src_idx, tgt_idx, start_index, collect):
    """Teacher-forced forward pass over one pair.

    Returns (loss, per-step log-prob of the true token, forward caches).
    """
    config = params.config
    hidden = config.hidden_size
    zeros = HiddenState.zeros(config)
    enc_h, enc_c, _, enc_caches = _run_stack(
        params.encoder, hidden, src_idx, zeros.h, zeros.c
    )
    dec_inputs = [int(start_index)] + [int(t) for t in tgt_idx[:-1]]
    dec_h, dec_c, top, dec_caches = _run_stack(
        params.decoder, hidden, dec_inputs, enc_h, enc_c
    )
    loss = 0.0
    logps = np.empty(len(tgt_idx))
    probs_per_step = [] if collect else None
    for t, target in enumerate(tgt_idx):
        logits = params.proj_w @ top[t] + params.proj_b
        probs, log_norm = _log_softmax_parts(logits)
        logps[t] = logits[target] - log_norm
        loss -= logps[t]
        if collect:
            probs_per_step.append(probs)
    return loss, logps, (enc_caches, dec_caches, top, probs_per_step)


def loss_and_gradients(
    params: ModelParams,
    inputs: np.ndarray,
    target: np.ndarray,
    start_index: int = 0,
) -> tuple[float, ModelParams]:
    """Summed cross-entropy over the target tokens plus full BPTT gradients.

    `inputs` is the reversed one-hot encoder sequence; `target` is the
    decoder's expected token-index sequence (the decoder is teacher-forced
    from `start_index`).  Gradient arrays mirror the parameter layout.
    """
    src_idx = one_hot_to_indices(inputs, params.config.source_vocab_size)
    return _loss_and_gradients_indexed(params, src_idx, target, start_index)


def gradient_global_norm(grads: ModelParams) -> float:
    total = 0.0
    for _, arr in iter_param_arrays(grads):
        total += float(np.sum(arr * arr))
    return math.sqrt(total)


def clip_gradients(grads: ModelParams, max_norm: float) -> float:
    """Scale gradients in place to global norm <= max_norm; returns the
    pre-clip norm."""
    norm = gradient_global_norm(grads)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for _, arr in iter_param_arrays(grads):
            arr *= scale
    return norm


def sgd_step(params: ModelParams, grads: ModelParams, learning_rate: float) -> None:
    for (_, arr), (_, g) in zip(iter_param_arrays(params), iter_param_arrays(grads)):
        arr -= learning_rate * g


# --- dataset plumbing ---------------------------------------------------------


def make_training_pair(
    phrase: Phrase,
    source_vocab: Vocabulary | None = None,
    target_vocab: Vocabulary | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """(reversed one-hot kick sentence, kit token indices ending in </s>)."""
    source_vocab = source_vocab or source_vocabulary()
    target_vocab = target_vocab or target_vocabulary()
    src = encode_for_model(extract_kick(phrase), source_vocab)
    tgt_words = phrase_words(strip_kick(phrase))
    tgt = np.concatenate(
        [
            words_to_indices(tgt_words, target_vocab),
            [target_vocab.eos_index],
        ]
    ).astype(np.int64)
    return src, tgt


def make_training_pairs(phrases) -> list[tuple[np.ndarray, np.ndarray]]:
    src_vocab, tgt_vocab = source_vocabulary(), target_vocabulary()
    return [make_training_pair(p, src_vocab, tgt_vocab) for p in phrases]


def perplexity(
    params: ModelParams,
    dataset: list[tuple[np.ndarray, np.ndarray]],
    start_index: int = 0,
) -> float:
    """exp of the mean teacher-forced negative log-likelihood per token."""
    if not dataset:
        raise ValueError("perplexity requires a non-empty dataset")
    total_nll = 0.0
    total_tokens = 0
    for inputs, target in dataset:
        target = np.asarray(target, dtype=np.int64)
        if target.size == 0:
            continue
        src_idx = one_hot_to_indices(inputs, params.config.source_vocab_size)
        _, logps, _ = _sequence_forward(
            params, src_idx, target, start_index, collect=False
        )
        total_nll -= float(logps.sum())
        total_tokens += target.size
    if total_tokens == 0:
        raise ValueError("perplexity requires at least one target token")
    return _safe_exp(total_nll / total_tokens)


def perplexity_from_log_probs(logps) -> float:
    """exp(mean negative log-probability); the arithmetic behind perplexity."""
    logps = np.asarray(logps, dtype=np.float64)
    if logps.size == 0:
        raise ValueError("empty log-probability list")
    return _safe_exp(float(-logps.mean()))


# --- training -------------------------------------------------------------------


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_perplexity: float
    holdout_perplexity: float | None


def _epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, epoch))))


def train(
    params: ModelParams,
    corpus: Corpus,
    config: ModelConfig,
    epochs: int,
    holdout_fraction: float,
    seed: int,
    progress=None,
) -> tuple[ModelParams, list[EpochStats]]:
    """Plain per-sentence SGD with teacher forcing and global-norm clipping.

    Deterministic given (params, corpus, seed): the holdout split and every
    epoch's visit order derive from the seed.  The input params are left
    untouched; the trained copy is returned with per-epoch perplexity stats
    (holdout is None when the fraction rounds down to zero phrases).
    """
    if len(corpus) == 0:
        raise TrainingError("cannot train on an empty corpus")
    if not 0.0 <= holdout_fraction < 1.0:
        raise ValueError("holdout_fraction must be in [0, 1)")
    params = copy.deepcopy(params)
    pairs = make_training_pairs(corpus.phrases)
    start_index = target_vocabulary().bos_index

    split_rng = _epoch_rng(seed, 0)
    order = split_rng.permutation(len(pairs))
    holdout_count = int(len(pairs) * holdout_fraction)
    holdout = [pairs[i] for i in order[:holdout_count]]
    training = [pairs[i] for i in order[holdout_count:]]
    if not training:
        raise TrainingError("holdout fraction leaves no training phrases")

    # cache index form of the sources once; loss_and_gradients revalidates
    # one-hot inputs, which is wasted work inside the hot loop
    train_idx = [
        (one_hot_to_indices(src, config.source_vocab_size), tgt)
        for src, tgt in training
    ]

    history: list[EpochStats] = []
    for epoch in range(epochs):
        rng = _epoch_rng(seed, epoch + 1)
        visit = rng.permutation(len(train_idx))
        epoch_nll = 0.0
        epoch_tokens = 0
        for step, pair_index in enumerate(visit):
            src_idx, tgt = train_idx[pair_index]
            loss, grads = _loss_and_gradients_indexed(
                params, src_idx, tgt, start_index
            )
            if not math.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch} step {step}"
                )
            clip_gradients(grads, config.gradient_clip_norm)
            sgd_step(params, grads, config.learning_rate)
            epoch_nll += loss
            epoch_tokens += len(tgt)
        train_ppl = _safe_exp(epoch_nll / epoch_tokens)
        holdout_ppl = (
            perplexity(params, holdout, start_index) if holdout else None
        )
        stats = EpochStats(epoch, train_ppl, holdout_ppl)
        history.append(stats)
        if progress is not None:
            progress(stats)
    return params, history


def _loss_and_gradients_indexed(params, src_idx, target, start_index):
    """loss_and_gradients with the source already collapsed to indices."""
    config = params.config
    grads = zero_grads(config)
    target = np.asarray(target, dtype=np.int64)
    if target.size == 0:
        return 0.0, grads
    loss, _, (enc_caches, dec_caches, top, probs) = _sequence_forward(
        params, src_idx, target, start_index, collect=True
    )
    hidden = config.hidden_size
    dtop = []
    for t, tgt in enumerate(target):
        dlogits = probs[t].copy()
        dlogits[tgt] -= 1.0
        grads.proj_w += np.outer(dlogits, top[t])
        grads.proj_b += dlogits
        dtop.append(params.proj_w.T @ dlogits)
    zero_state = HiddenState.zeros(config)
    dh0, dc0 = _backward_stack(
        params.decoder, grads.decoder, hidden, dec_caches, dtop,
        zero_state.h, zero_state.c,
    )
    _backward_stack(
        params.encoder, grads.encoder, hidden, enc_caches, None, dh0, dc0
    )
    return float(loss), grads
