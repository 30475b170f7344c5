"""Region captioner plus an attention encoder-decoder over fused captions.

Stage one captions each region with a feature-conditioned LSTM.  Stage two
fuses the best captions into one input sequence, encodes it with a
bidirectional LSTM, and decodes a paragraph with an attention-equipped
LSTM: at every step the decoder state is aligned against all encoder
states (dot product or learned bilinear), the softmax of those scores
weights the encoder states into a context vector, and the next-token
logits read the concatenated state and context.  Decoder input feeding
concatenates the previous token's embedding with the previous context.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import textprep
from .neural import (
    LstmParams,
    OptimizerState,
    Tensor,
    adam_step,
    add,
    bilstm_encode,
    clip_global_norm,
    concat,
    lstm_step,
    matmul,
    mul,
    row,
    softmax,
    softmax_cross_entropy,
    stable_sigmoid,
    stable_softmax,
    stack,
    tanh,
    uniform_init,
    zero_grads,
    zero_state,
)
from .textprep import BOS, EOS, PAD

ALIGN_MODES = ("dot", "general")


@dataclass
class TbdgConfig:
    """Sequence lengths, layer widths, and the alignment flavor."""

    input_len: int = 80
    output_len: int = 80
    embed_dim: int = 150
    decoder_hidden: int = 256
    encoder_hidden: int = 128
    align_mode: str = "dot"

    def __post_init__(self):
        if min(self.input_len, self.output_len, self.embed_dim,
               self.decoder_hidden, self.encoder_hidden) < 1:
            raise ValueError("all config dimensions must be positive")
        if self.align_mode not in ALIGN_MODES:
            raise ValueError(f"align_mode must be one of {ALIGN_MODES}")
        if self.align_mode == "dot" and self.decoder_hidden != 2 * self.encoder_hidden:
            raise ValueError(
                "dot alignment needs decoder_hidden == 2*encoder_hidden "
                f"(got {self.decoder_hidden} vs 2*{self.encoder_hidden})"
            )


# ---------------------------------------------------------------------------
# region captioner


@dataclass
class CaptionerParams:
    """Feature-conditioned single-layer LSTM captioner."""

    vocab_size: int
    feature_dim: int
    embed_dim: int
    hidden_dim: int
    max_len: int
    init_h_w: Tensor
    init_h_b: Tensor
    init_c_w: Tensor
    init_c_b: Tensor
    lstm: LstmParams
    embed: Tensor
    out_w: Tensor
    out_b: Tensor

    @classmethod
    def init(
        cls,
        rng: np.random.Generator,
        vocab_size: int,
        feature_dim: int,
        embed_dim: int,
        hidden_dim: int,
        max_len: int = 20,
    ) -> "CaptionerParams":
        if vocab_size <= EOS:
            raise ValueError("vocab_size must cover the special ids")
        if max_len < 1:
            raise ValueError("max_len must be positive")

        def zeros(n):
            return Tensor(np.zeros(n, dtype=np.float32), requires_grad=True)

        return cls(
            vocab_size=vocab_size,
            feature_dim=feature_dim,
            embed_dim=embed_dim,
            hidden_dim=hidden_dim,
            max_len=max_len,
            init_h_w=uniform_init(rng, (hidden_dim, feature_dim), feature_dim),
            init_h_b=zeros(hidden_dim),
            init_c_w=uniform_init(rng, (hidden_dim, feature_dim), feature_dim),
            init_c_b=zeros(hidden_dim),
            lstm=LstmParams.init(rng, embed_dim, hidden_dim),
            embed=uniform_init(rng, (vocab_size, embed_dim), embed_dim),
            out_w=uniform_init(rng, (vocab_size, hidden_dim), hidden_dim),
            out_b=zeros(vocab_size),
        )

    def named_parameters(self) -> dict[str, Tensor]:
        out = {
            "init_h.W": self.init_h_w,
            "init_h.b": self.init_h_b,
            "init_c.W": self.init_c_w,
            "init_c.b": self.init_c_b,
        }
        out.update(self.lstm.named_parameters("lstm."))
        out.update({"embed.matrix": self.embed, "out.W": self.out_w, "out.b": self.out_b})
        return out

    @classmethod
    def from_named(cls, arrays: dict[str, np.ndarray], max_len: int = 20) -> "CaptionerParams":
        def t(name):
            return Tensor(np.asarray(arrays[name], dtype=np.float32), requires_grad=True)

        hidden_dim, feature_dim = arrays["init_h.W"].shape
        vocab_size, embed_dim = arrays["embed.matrix"].shape
        return cls(
            vocab_size=vocab_size,
            feature_dim=feature_dim,
            embed_dim=embed_dim,
            hidden_dim=hidden_dim,
            max_len=max_len,
            init_h_w=t("init_h.W"),
            init_h_b=t("init_h.b"),
            init_c_w=t("init_c.W"),
            init_c_b=t("init_c.b"),
            lstm=LstmParams(embed_dim, hidden_dim, t("lstm.W"), t("lstm.U"), t("lstm.b")),
            embed=t("embed.matrix"),
            out_w=t("out.W"),
            out_b=t("out.b"),
        )


def _feature_vector(feature) -> np.ndarray:
    vector = getattr(feature, "vector", feature)
    return np.asarray(vector, dtype=np.float32)


def _captioner_start(params: CaptionerParams, feature: Tensor) -> tuple[Tensor, Tensor]:
    h0 = tanh(add(matmul(params.init_h_w, feature), params.init_h_b))
    c0 = tanh(add(matmul(params.init_c_w, feature), params.init_c_b))
    return h0, c0


def captioner_loss(params: CaptionerParams, feature, caption: Sequence[int]) -> Tensor:
    """Teacher-forced cross-entropy summed over the caption plus EOS."""
    if len(caption) > params.max_len:
        raise ValueError(f"caption of {len(caption)} tokens exceeds max_len {params.max_len}")
    for token in caption:
        if not 0 <= token < params.vocab_size:
            raise ValueError(f"token id {token} outside vocabulary")
    feature_t = feature if isinstance(feature, Tensor) else Tensor(_feature_vector(feature))
    h, c = _captioner_start(params, feature_t)
    loss = None
    prev_tokens = [BOS] + list(caption)
    targets = list(caption) + [EOS]
    for prev, target in zip(prev_tokens, targets):
        h, c = lstm_step(params.lstm, row(params.embed, prev), h, c)
        logits = add(matmul(params.out_w, h), params.out_b)
        term = softmax_cross_entropy(logits, target)
        loss = term if loss is None else add(loss, term)
    return loss


def captioner_train(
    pairs: Sequence[tuple],
    vocab_size: int,
    epochs: int,
    seed: int,
    embed_dim: int = 32,
    hidden_dim: int = 64,
    max_len: int = 20,
    learning_rate: float = 1e-3,
    clip_norm: float = 5.0,
) -> tuple[CaptionerParams, list[float]]:
    """Adam over shuffled (feature, caption) pairs; deterministic given seed."""
    if not pairs:
        raise ValueError("captioner_train: no pairs")
    prepared = [(_feature_vector(f), list(c)) for f, c in pairs]
    feature_dim = prepared[0][0].shape[0]
    for vector, caption in prepared:
        if vector.shape != (feature_dim,):
            raise ValueError("all features must share one dimension")
        if len(caption) > max_len:
            raise ValueError(f"caption of {len(caption)} tokens exceeds max_len {max_len}")
    rng = np.random.default_rng(seed)
    params = CaptionerParams.init(rng, vocab_size, feature_dim, embed_dim, hidden_dim, max_len)
    named = params.named_parameters()
    state = OptimizerState(learning_rate=learning_rate)
    history: list[float] = []
    for epoch in range(epochs):
        order = rng.permutation(len(prepared))
        total = 0.0
        for position, index in enumerate(order):
            vector, caption = prepared[index]
            zero_grads(named)
            loss = captioner_loss(params, vector, caption)
            value = float(loss.data)
            if not np.isfinite(value):
                raise RuntimeError(f"non-finite loss at epoch {epoch}, pair {position}")
            loss.backward()
            clip_global_norm(named, clip_norm)
            adam_step(state, named)
            total += value
        history.append(total / len(prepared))
    return params, history


def _np_lstm_step(p: LstmParams, x, h, c):
    gates = p.W.data @ x + p.U.data @ h + p.b.data
    hd = p.hidden_dim
    i = stable_sigmoid(gates[0 * hd : 1 * hd])
    f = stable_sigmoid(gates[1 * hd : 2 * hd])
    g = np.tanh(gates[2 * hd : 3 * hd])
    o = stable_sigmoid(gates[3 * hd : 4 * hd])
    c_new = f * c + i * g
    return o * np.tanh(c_new), c_new


def captioner_generate(params: CaptionerParams, feature) -> tuple[list[int], float]:
    """Greedy caption plus its mean per-step log-probability.

    The mean runs over every decode step including the one that emits
    EOS, so the score is length-normalized and always <= 0.
    """
    vector = _feature_vector(feature)
    h = np.tanh(params.init_h_w.data @ vector + params.init_h_b.data)
    c = np.tanh(params.init_c_w.data @ vector + params.init_c_b.data)
    tokens: list[int] = []
    log_sum = 0.0
    steps = 0
    prev = BOS
    for _ in range(params.max_len + 1):
        h, c = _np_lstm_step(params.lstm, params.embed.data[prev], h, c)
        probs = stable_softmax(params.out_w.data @ h + params.out_b.data)
        nxt = int(np.argmax(probs))
        log_sum += float(np.log(max(float(probs[nxt]), 1e-12)))
        steps += 1
        if nxt == EOS:
            break
        tokens.append(nxt)
        prev = nxt
        if len(tokens) == params.max_len:
            break
    return tokens, log_sum / steps


# ---------------------------------------------------------------------------
# attention


def attention_step(h_t: Tensor, encoder_states: Sequence[Tensor], align_mode: str = "dot", wa: Tensor | None = None):
    """Scores -> softmax weights -> context vector over encoder states."""
    if align_mode not in ALIGN_MODES:
        raise ValueError(f"align_mode must be one of {ALIGN_MODES}")
    if len(encoder_states) == 0:
        raise ValueError("attention over an empty encoder sequence")
    hs = stack(list(encoder_states))
    enc_dim = hs.data.shape[1]
    dec_dim = h_t.data.shape[0]
    if align_mode == "dot":
        if dec_dim != enc_dim:
            raise ValueError(
                f"dot alignment needs matching dims, got decoder {dec_dim} vs encoder {enc_dim}"
            )
        scores = matmul(hs, h_t)
    else:
        if wa is None:
            raise ValueError("general alignment needs the bilinear matrix")
        if wa.data.shape != (dec_dim, enc_dim):
            raise ValueError(
                f"bilinear matrix shape {wa.data.shape} does not map decoder {dec_dim} "
                f"to encoder {enc_dim}"
            )
        scores = matmul(hs, matmul(h_t, wa))
    alpha = softmax(scores)
    context = matmul(alpha, hs)
    return alpha, context


# ---------------------------------------------------------------------------
# encoder-decoder parameters


@dataclass
class TbdgParams:
    """Shared embedding, Bi-LSTM encoder, attention LSTM decoder."""

    vocab_size: int
    cfg: TbdgConfig
    embed: Tensor
    enc_fwd: LstmParams
    enc_bwd: LstmParams
    dec: LstmParams
    out_w: Tensor
    out_b: Tensor
    wa: Tensor | None = None

    @classmethod
    def init(cls, rng: np.random.Generator, cfg: TbdgConfig, vocab_size: int) -> "TbdgParams":
        if vocab_size <= EOS:
            raise ValueError("vocab_size must cover the special ids")
        enc_out = 2 * cfg.encoder_hidden
        dec_in = cfg.embed_dim + enc_out
        read_dim = cfg.decoder_hidden + enc_out
        wa = None
        if cfg.align_mode == "general":
            wa = uniform_init(rng, (cfg.decoder_hidden, enc_out), cfg.decoder_hidden)
        return cls(
            vocab_size=vocab_size,
            cfg=cfg,
            embed=uniform_init(rng, (vocab_size, cfg.embed_dim), cfg.embed_dim),
            enc_fwd=LstmParams.init(rng, cfg.embed_dim, cfg.encoder_hidden),
            enc_bwd=LstmParams.init(rng, cfg.embed_dim, cfg.encoder_hidden),
            dec=LstmParams.init(rng, dec_in, cfg.decoder_hidden),
            out_w=uniform_init(rng, (vocab_size, read_dim), read_dim),
            out_b=Tensor(np.zeros(vocab_size, dtype=np.float32), requires_grad=True),
            wa=wa,
        )

    def named_parameters(self) -> dict[str, Tensor]:
        out = {"embed.matrix": self.embed}
        out.update(self.enc_fwd.named_parameters("enc_fwd."))
        out.update(self.enc_bwd.named_parameters("enc_bwd."))
        out.update(self.dec.named_parameters("dec."))
        out.update({"out.W": self.out_w, "out.b": self.out_b})
        if self.wa is not None:
            out["align.W"] = self.wa
        return out

    @classmethod
    def from_named(cls, arrays: dict[str, np.ndarray], cfg: TbdgConfig) -> "TbdgParams":
        def t(name):
            return Tensor(np.asarray(arrays[name], dtype=np.float32), requires_grad=True)

        vocab_size, embed_dim = arrays["embed.matrix"].shape
        enc_h = arrays["enc_fwd.U"].shape[1]
        dec_h = arrays["dec.U"].shape[1]
        dec_in = arrays["dec.W"].shape[1]
        wa = t("align.W") if "align.W" in arrays else None
        return cls(
            vocab_size=vocab_size,
            cfg=cfg,
            embed=t("embed.matrix"),
            enc_fwd=LstmParams(embed_dim, enc_h, t("enc_fwd.W"), t("enc_fwd.U"), t("enc_fwd.b")),
            enc_bwd=LstmParams(embed_dim, enc_h, t("enc_bwd.W"), t("enc_bwd.U"), t("enc_bwd.b")),
            dec=LstmParams(dec_in, dec_h, t("dec.W"), t("dec.U"), t("dec.b")),
            out_w=t("out.W"),
            out_b=t("out.b"),
            wa=wa,
        )


# ---------------------------------------------------------------------------
# loss and training


def _content_ids(ids, limit: int, what: str) -> list[int]:
    if isinstance(ids, textprep.TokenSequence):
        ids = ids.ids
    ids = list(ids)
    if len(ids) > limit:
        raise ValueError(f"{what} has {len(ids)} ids, limit is {limit}")
    while ids and ids[-1] == PAD:
        ids.pop()
    if not ids:
        raise ValueError(f"{what} has no non-pad content")
    return ids


def _encode_source(params: TbdgParams, src: Sequence[int]) -> list[Tensor]:
    xs = [row(params.embed, token) for token in src]
    return bilstm_encode(params.enc_fwd, params.enc_bwd, xs)


def tbdg_loss(params: TbdgParams, cfg: TbdgConfig, src_ids, tgt_ids) -> tuple[Tensor, int]:
    """Mean per-token cross-entropy (PAD stripped, EOS step included)."""
    src = _content_ids(src_ids, cfg.input_len, "source sequence")
    tgt = _content_ids(tgt_ids, cfg.output_len, "target sequence")
    for token in src + tgt:
        if not 0 <= token < params.vocab_size:
            raise ValueError(f"token id {token} outside vocabulary")
    encoder_states = _encode_source(params, src)
    enc_out = 2 * cfg.encoder_hidden

    h, c = zero_state(params.dec)
    context = Tensor(np.zeros(enc_out, dtype=params.embed.data.dtype))
    loss = None
    steps = 0
    prev_tokens = [BOS] + tgt
    targets = tgt + [EOS]
    for prev, target in zip(prev_tokens, targets):
        x = concat([row(params.embed, prev), context])
        h, c = lstm_step(params.dec, x, h, c)
        _, context = attention_step(h, encoder_states, cfg.align_mode, params.wa)
        logits = add(matmul(params.out_w, concat([h, context])), params.out_b)
        term = softmax_cross_entropy(logits, target)
        loss = term if loss is None else add(loss, term)
        steps += 1
    inv = Tensor(np.asarray(1.0 / steps, dtype=loss.data.dtype))
    return mul(loss, inv), steps


def tbdg_train(
    corpus: Sequence[tuple],
    cfg: TbdgConfig,
    vocab_size: int,
    epochs: int,
    seed: int,
    learning_rate: float = 1e-3,
    clip_norm: float = 5.0,
) -> tuple[TbdgParams, list[float]]:
    """Adam over shuffled (source, target) pairs; deterministic given seed."""
    if not corpus:
        raise ValueError("tbdg_train: empty corpus")
    prepared = []
    for src, tgt in corpus:
        prepared.append(
            (
                _content_ids(src, cfg.input_len, "source sequence"),
                _content_ids(tgt, cfg.output_len, "target sequence"),
            )
        )
    rng = np.random.default_rng(seed)
    params = TbdgParams.init(rng, cfg, vocab_size)
    named = params.named_parameters()
    state = OptimizerState(learning_rate=learning_rate)
    history: list[float] = []
    for epoch in range(epochs):
        order = rng.permutation(len(prepared))
        total = 0.0
        for position, index in enumerate(order):
            src, tgt = prepared[index]
            zero_grads(named)
            loss, _ = tbdg_loss(params, cfg, src, tgt)
            value = float(loss.data)
            if not np.isfinite(value):
                raise RuntimeError(f"non-finite loss at epoch {epoch}, pair {position}")
            loss.backward()
            clip_global_norm(named, clip_norm)
            adam_step(state, named)
            total += value
        history.append(total / len(prepared))
    return params, history


# ---------------------------------------------------------------------------
# generation (plain numpy)


def _np_encode_source(params: TbdgParams, src: list[int]) -> np.ndarray:
    embed = params.embed.data
    xs = [embed[token] for token in src]
    n = len(xs)
    fwd = []
    h = np.zeros(params.enc_fwd.hidden_dim, dtype=embed.dtype)
    c = np.zeros_like(h)
    for x in xs:
        h, c = _np_lstm_step(params.enc_fwd, x, h, c)
        fwd.append(h)
    bwd = [None] * n
    h = np.zeros(params.enc_bwd.hidden_dim, dtype=embed.dtype)
    c = np.zeros_like(h)
    for t in range(n - 1, -1, -1):
        h, c = _np_lstm_step(params.enc_bwd, xs[t], h, c)
        bwd[t] = h
    return np.stack([np.concatenate([fwd[t], bwd[t]]) for t in range(n)])


def np_attention_step(h_t: np.ndarray, hs: np.ndarray, align_mode: str, wa: np.ndarray | None):
    if align_mode == "dot":
        scores = hs @ h_t
    else:
        scores = hs @ (h_t @ wa)
    alpha = stable_softmax(scores)
    return alpha, alpha @ hs


def tbdg_generate(params: TbdgParams, cfg: TbdgConfig, fused_caption_ids) -> tuple[list[int], np.ndarray]:
    """Greedy decode; returns tokens and one attention row per decode step
    (the final EOS-emitting step included)."""
    src = _content_ids(fused_caption_ids, cfg.input_len, "source sequence")
    hs = _np_encode_source(params, src)
    enc_out = 2 * cfg.encoder_hidden
    wa = params.wa.data if params.wa is not None else None

    h = np.zeros(params.dec.hidden_dim, dtype=hs.dtype)
    c = np.zeros_like(h)
    context = np.zeros(enc_out, dtype=hs.dtype)
    tokens: list[int] = []
    rows = []
    prev = BOS
    for _ in range(cfg.output_len):
        x = np.concatenate([params.embed.data[prev], context])
        h, c = _np_lstm_step(params.dec, x, h, c)
        alpha, context = np_attention_step(h, hs, cfg.align_mode, wa)
        rows.append(alpha)
        logits = params.out_w.data @ np.concatenate([h, context]) + params.out_b.data
        nxt = int(np.argmax(logits))
        if nxt == EOS:
            break
        tokens.append(nxt)
        prev = nxt
    attention = np.stack(rows) if rows else np.zeros((0, len(src)), dtype=hs.dtype)
    return tokens, attention


# ---------------------------------------------------------------------------
# end-to-end pipeline


def tbdg_pipeline(
    record,
    captioner: CaptionerParams,
    params: TbdgParams,
    cfg: TbdgConfig,
    vocab: textprep.Vocabulary,
    features=None,
    top_k: int = 5,
    return_details: bool = False,
):
    """Region features -> top-k captions -> fusion -> attention decoder ->
    detokenized paragraph."""
    import warnings

    if features is None:
        if not record.regions:
            raise ValueError(f"record {record.record_id!r} has no regions to caption")
        from .dsic import extract_region_features

        try:
            features = extract_region_features(
                record, [r.bbox for r in record.regions], captioner.feature_dim
            )
        except ValueError as exc:
            raise ValueError(f"feature stage: {exc}") from exc
    elif len(features) == 0:
        raise ValueError(f"record {record.record_id!r} has no regions to caption")

    try:
        captions = [captioner_generate(captioner, f) for f in features]
    except Exception as exc:
        raise RuntimeError(f"caption stage: {exc}") from exc

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fused = textprep.fuse_captions(captions, k=top_k)
    if not fused:
        raise ValueError(f"fusion stage: record {record.record_id!r} fused to an empty sequence")
    src = fused[: cfg.input_len]

    try:
        tokens, attention = tbdg_generate(params, cfg, src)
    except ValueError as exc:
        raise ValueError(f"decode stage: {exc}") from exc

    paragraph = textprep.detokenize(textprep.decode_ids(tokens, vocab))
    if not return_details:
        return paragraph
    return {
        "paragraph": paragraph,
        "captions": [
            textprep.detokenize(textprep.decode_ids(c, vocab)) for c, _score in captions
        ],
        "attention_shape": [int(attention.shape[0]), int(attention.shape[1])],
    }
