"""Region features, max-pooling, and a hierarchical sentence/word decoder.

The model reads a bag of region feature vectors, pools them into a single
vector with a learned projection and an element-wise maximum, then decodes
a paragraph hierarchically: a sentence LSTM emits one state per sentence
plus a continue/stop decision, a two-layer FC turns each state into a
topic vector, and a two-layer word LSTM spells out each sentence from its
topic.  Training is teacher-forced; generation is greedy and mirrors the
training graph with plain numpy.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import textprep
from .detect_eval import BBox
from .neural import (
    LstmParams,
    OptimizerState,
    Tensor,
    adam_step,
    add,
    clip_global_norm,
    concat,
    lstm_step,
    matmul,
    maximum,
    relu,
    row,
    softmax_cross_entropy,
    stable_sigmoid,
    stable_softmax,
    uniform_init,
    zero_grads,
    zero_state,
)
from .textprep import BOS, EOS

STOP, CONTINUE = 0, 1

_CROP_SIZE = 32
_FEATURE_SEED = 40961
_projection_cache: dict[int, np.ndarray] = {}


@dataclass
class RegionFeature:
    """A feature vector plus the box it was extracted from."""

    vector: np.ndarray
    bbox: BBox


def select_top_boxes(boxes: Sequence[BBox], k: int = 5) -> list[BBox]:
    """Largest-area boxes first; ties keep input order."""
    if k <= 0:
        raise ValueError("select_top_boxes: k must be positive")
    ranked = sorted(range(len(boxes)), key=lambda i: (-boxes[i].area, i))
    return [boxes[i] for i in ranked[:k]]


def _fixed_projection(d: int) -> np.ndarray:
    if d not in _projection_cache:
        rng = np.random.default_rng(_FEATURE_SEED + d)
        flat = _CROP_SIZE * _CROP_SIZE
        _projection_cache[d] = (
            rng.standard_normal((d, flat)) / np.sqrt(flat)
        ).astype(np.float32)
    return _projection_cache[d]


def extract_region_features(record, boxes: Sequence[BBox], d: int) -> list[RegionFeature]:
    """Grayscale crop -> 32x32 bilinear resample -> fixed seeded projection.

    The record must carry an image; without one, load features from a
    features file instead.  Boxes are clamped to the image bounds.
    """
    from PIL import Image

    if record.image_path is None:
        raise ValueError(
            f"record {record.record_id!r} has no image; "
            "supply precomputed vectors via --features-file"
        )
    try:
        image = Image.open(record.image_path).convert("L")
    except FileNotFoundError as exc:
        raise ValueError(
            f"record {record.record_id!r}: image {record.image_path} not found; "
            "supply precomputed vectors via --features-file"
        ) from exc
    width, height = image.size
    projection = _fixed_projection(d)
    out = []
    for box in boxes:
        x0 = min(max(int(box.x), 0), width - 1)
        y0 = min(max(int(box.y), 0), height - 1)
        x1 = min(max(int(box.x + box.width), x0 + 1), width)
        y1 = min(max(int(box.y + box.height), y0 + 1), height)
        crop = image.crop((x0, y0, x1, y1)).resize(
            (_CROP_SIZE, _CROP_SIZE), Image.BILINEAR
        )
        flat = np.asarray(crop, dtype=np.float32).reshape(-1) / 255.0
        out.append(RegionFeature(vector=projection @ flat, bbox=box))
    return out


# ---------------------------------------------------------------------------
# features file


def save_features_file(path, features: dict[str, np.ndarray]):
    """Per record: one id line, then one space-separated row per region."""
    lines = []
    for record_id, matrix in features.items():
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] == 0:
            raise ValueError(f"features for {record_id!r} must be a non-empty 2-d array")
        if _parses_as_floats(record_id.split()):
            raise ValueError(f"record id {record_id!r} would be read back as a number row")
        lines.append(record_id)
        for rowv in matrix:
            lines.append(" ".join(repr(float(v)) for v in rowv))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parses_as_floats(tokens: list[str]) -> bool:
    if not tokens:
        return False
    try:
        for tok in tokens:
            float(tok)
    except ValueError:
        return False
    return True


def load_features_file(path) -> dict[str, np.ndarray]:
    path = Path(path)
    out: dict[str, list[list[float]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if _parses_as_floats(tokens):
            if current is None:
                raise ValueError(f"{path}:{lineno}: number row before any record id")
            out[current].append([float(t) for t in tokens])
        else:
            if len(tokens) != 1:
                raise ValueError(f"{path}:{lineno}: record id must be a single token")
            current = tokens[0]
            if current in out:
                raise ValueError(f"{path}:{lineno}: duplicate record id {current!r}")
            out[current] = []
    result = {}
    for record_id, rows in out.items():
        if not rows:
            raise ValueError(f"{path}: record {record_id!r} has no feature rows")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise ValueError(f"{path}: record {record_id!r} has ragged rows {sorted(widths)}")
        result[record_id] = np.asarray(rows, dtype=np.float32)
    return result


# ---------------------------------------------------------------------------
# pooling


@dataclass
class PoolingParams:
    """Projection applied to every region before the element-wise maximum."""

    matrix: Tensor
    bias: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, feature_dim: int, pooled_dim: int) -> "PoolingParams":
        matrix = uniform_init(rng, (pooled_dim, feature_dim), feature_dim)
        bias = Tensor(np.zeros(pooled_dim, dtype=matrix.data.dtype), requires_grad=True)
        return cls(matrix=matrix, bias=bias)

    def named_parameters(self, prefix: str = "pool.") -> dict[str, Tensor]:
        return {prefix + "matrix": self.matrix, prefix + "bias": self.bias}


def _as_vector_tensor(region) -> Tensor:
    if isinstance(region, Tensor):
        return region
    if isinstance(region, RegionFeature):
        return Tensor(region.vector)
    return Tensor(np.asarray(region))


def pool_regions(params: PoolingParams, regions: Sequence) -> Tensor:
    """P = elementwise max over projected regions; ties route gradient to
    the earliest region."""
    if len(regions) == 0:
        raise ValueError("pool_regions: need at least one region")
    pooled = None
    for region in regions:
        projected = add(matmul(params.matrix, _as_vector_tensor(region)), params.bias)
        pooled = projected if pooled is None else maximum(pooled, projected)
    return pooled


# ---------------------------------------------------------------------------
# configuration and parameters


@dataclass
class HierarchicalConfig:
    """Decoder bounds, continue threshold, loss weights, layer widths."""

    sent_max: int = 5
    word_max: int = 60
    th: float = 0.5
    beta_sent: float = 5.0
    beta_word: float = 1.0
    sentence_hidden: int = 512
    word_hidden: int = 512
    fc_width: int = 1024

    def __post_init__(self):
        if self.sent_max < 1 or self.word_max < 1:
            raise ValueError("sent_max and word_max must be >= 1")
        if not 0.0 < self.th < 1.0:
            raise ValueError("th must lie strictly between 0 and 1")
        if self.beta_sent < 0 or self.beta_word < 0:
            raise ValueError("loss weights must be non-negative")
        if min(self.sentence_hidden, self.word_hidden, self.fc_width) < 1:
            raise ValueError("layer widths must be positive")


@dataclass
class DsicParams:
    """All trainable pieces of the hierarchical decoder."""

    vocab_size: int
    feature_dim: int
    pooled_dim: int
    embed_dim: int
    pool: PoolingParams
    sent: LstmParams
    cont_w: Tensor
    cont_b: Tensor
    fc1_w: Tensor
    fc1_b: Tensor
    fc2_w: Tensor
    fc2_b: Tensor
    word1: LstmParams
    word2: LstmParams
    embed: Tensor
    out_w: Tensor
    out_b: Tensor

    @classmethod
    def init(
        cls,
        rng: np.random.Generator,
        cfg: HierarchicalConfig,
        vocab_size: int,
        feature_dim: int,
        pooled_dim: int,
        embed_dim: int,
    ) -> "DsicParams":
        if vocab_size <= EOS:
            raise ValueError("vocab_size must cover the special ids")
        sh, wh, fw = cfg.sentence_hidden, cfg.word_hidden, cfg.fc_width

        def zeros(n):
            return Tensor(np.zeros(n, dtype=np.float32), requires_grad=True)

        return cls(
            vocab_size=vocab_size,
            feature_dim=feature_dim,
            pooled_dim=pooled_dim,
            embed_dim=embed_dim,
            pool=PoolingParams.init(rng, feature_dim, pooled_dim),
            sent=LstmParams.init(rng, pooled_dim, sh),
            cont_w=uniform_init(rng, (2, sh), sh),
            cont_b=zeros(2),
            fc1_w=uniform_init(rng, (fw, sh), sh),
            fc1_b=zeros(fw),
            fc2_w=uniform_init(rng, (fw, fw), fw),
            fc2_b=zeros(fw),
            word1=LstmParams.init(rng, fw + embed_dim, wh),
            word2=LstmParams.init(rng, wh, wh),
            embed=uniform_init(rng, (vocab_size, embed_dim), embed_dim),
            out_w=uniform_init(rng, (vocab_size, wh), wh),
            out_b=zeros(vocab_size),
        )

    def named_parameters(self) -> dict[str, Tensor]:
        out = {}
        out.update(self.pool.named_parameters("pool."))
        out.update(self.sent.named_parameters("sent."))
        out.update(
            {
                "cont.W": self.cont_w,
                "cont.b": self.cont_b,
                "fc1.W": self.fc1_w,
                "fc1.b": self.fc1_b,
                "fc2.W": self.fc2_w,
                "fc2.b": self.fc2_b,
            }
        )
        out.update(self.word1.named_parameters("word1."))
        out.update(self.word2.named_parameters("word2."))
        out.update({"embed.matrix": self.embed, "out.W": self.out_w, "out.b": self.out_b})
        return out

    @classmethod
    def from_named(cls, arrays: dict[str, np.ndarray]) -> "DsicParams":
        def t(name):
            return Tensor(np.asarray(arrays[name], dtype=np.float32), requires_grad=True)

        pool = PoolingParams(matrix=t("pool.matrix"), bias=t("pool.bias"))
        pooled_dim, feature_dim = pool.matrix.data.shape
        sh = arrays["sent.U"].shape[1]
        wh = arrays["word2.U"].shape[1]
        vocab_size, embed_dim = arrays["embed.matrix"].shape
        return cls(
            vocab_size=vocab_size,
            feature_dim=feature_dim,
            pooled_dim=pooled_dim,
            embed_dim=embed_dim,
            pool=pool,
            sent=LstmParams(pooled_dim, sh, t("sent.W"), t("sent.U"), t("sent.b")),
            cont_w=t("cont.W"),
            cont_b=t("cont.b"),
            fc1_w=t("fc1.W"),
            fc1_b=t("fc1.b"),
            fc2_w=t("fc2.W"),
            fc2_b=t("fc2.b"),
            word1=LstmParams(
                arrays["word1.W"].shape[1], wh, t("word1.W"), t("word1.U"), t("word1.b")
            ),
            word2=LstmParams(wh, wh, t("word2.W"), t("word2.U"), t("word2.b")),
            embed=t("embed.matrix"),
            out_w=t("out.W"),
            out_b=t("out.b"),
        )


# ---------------------------------------------------------------------------
# targets


def segment_paragraph(text: str, vocab: textprep.Vocabulary, cfg: HierarchicalConfig) -> list[list[int]]:
    """Paragraph -> at most sent_max sentences of at most word_max-1 ids.

    The word cap leaves room for the EOS target appended during training.
    """
    sentences = []
    for sent, _term in textprep.split_sentences(text):
        ids = [vocab.id_of(tok) for tok in textprep.tokenize(sent)]
        if ids:
            sentences.append(ids[: cfg.word_max - 1])
        if len(sentences) == cfg.sent_max:
            break
    return sentences


def _validate_targets(cfg: HierarchicalConfig, sentences: Sequence[Sequence[int]], vocab_size: int):
    if not sentences:
        raise ValueError("target paragraph has no sentences")
    if len(sentences) > cfg.sent_max:
        raise ValueError(f"{len(sentences)} sentences exceed sent_max {cfg.sent_max}")
    for index, sentence in enumerate(sentences):
        if len(sentence) > cfg.word_max:
            raise ValueError(
                f"sentence {index} has {len(sentence)} tokens, word_max is {cfg.word_max}"
            )
        for token in sentence:
            if not 0 <= token < vocab_size:
                raise ValueError(f"sentence {index}: token id {token} outside vocabulary")


def _topic_vector(params: DsicParams, h: Tensor) -> Tensor:
    inner = relu(add(matmul(params.fc1_w, h), params.fc1_b))
    return add(matmul(params.fc2_w, inner), params.fc2_b)


def dsic_loss(
    params: DsicParams,
    cfg: HierarchicalConfig,
    pooled: Tensor,
    sentences: Sequence[Sequence[int]],
) -> Tensor:
    """Weighted sum: beta_sent * continue/stop CE + beta_word * word CE.

    The sentence head sees one extra step after the last sentence whose
    target is STOP (skipped if sent_max is already reached); word terms
    are teacher-forced with BOS fed in and EOS appended to the targets.
    """
    _validate_targets(cfg, sentences, params.vocab_size)
    if not isinstance(pooled, Tensor):
        pooled = Tensor(np.asarray(pooled))

    n_sentences = len(sentences)
    steps = min(n_sentences + 1, cfg.sent_max)
    loss_sent = None
    loss_word = None
    h, c = zero_state(params.sent)
    for i in range(steps):
        h, c = lstm_step(params.sent, pooled, h, c)
        logits = add(matmul(params.cont_w, h), params.cont_b)
        target = CONTINUE if i < n_sentences else STOP
        term = softmax_cross_entropy(logits, target)
        loss_sent = term if loss_sent is None else add(loss_sent, term)

        if i >= n_sentences:
            continue
        topic = _topic_vector(params, h)
        inputs = [BOS] + list(sentences[i])
        targets = list(sentences[i]) + [EOS]
        h1, c1 = zero_state(params.word1)
        h2, c2 = zero_state(params.word2)
        for prev, tgt in zip(inputs, targets):
            x = concat([topic, row(params.embed, prev)])
            h1, c1 = lstm_step(params.word1, x, h1, c1)
            h2, c2 = lstm_step(params.word2, h1, h2, c2)
            word_logits = add(matmul(params.out_w, h2), params.out_b)
            term = softmax_cross_entropy(word_logits, tgt)
            loss_word = term if loss_word is None else add(loss_word, term)

    beta_sent = Tensor(np.asarray(cfg.beta_sent, dtype=loss_sent.data.dtype))
    total = beta_sent * loss_sent
    if loss_word is not None:
        beta_word = Tensor(np.asarray(cfg.beta_word, dtype=loss_word.data.dtype))
        total = add(total, beta_word * loss_word)
    return total


# ---------------------------------------------------------------------------
# training


def _features_matrix(features) -> np.ndarray:
    if isinstance(features, np.ndarray):
        matrix = features
    else:
        rows = [
            f.vector if isinstance(f, RegionFeature) else np.asarray(f) for f in features
        ]
        matrix = np.stack(rows)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise ValueError("region features must form a non-empty (n, d) matrix")
    return matrix.astype(np.float32)


def dsic_train(
    corpus: Sequence[tuple],
    cfg: HierarchicalConfig,
    vocab_size: int,
    epochs: int,
    seed: int,
    pooled_dim: int | None = None,
    embed_dim: int = 150,
    learning_rate: float = 1e-3,
    clip_norm: float = 5.0,
) -> tuple[DsicParams, list[float]]:
    """Adam over shuffled single-record batches; deterministic given seed."""
    if not corpus:
        raise ValueError("dsic_train: empty corpus")
    prepared = []
    for features, sentences in corpus:
        matrix = _features_matrix(features)
        _validate_targets(cfg, sentences, vocab_size)
        prepared.append((matrix, [list(s) for s in sentences]))
    feature_dim = prepared[0][0].shape[1]
    for matrix, _ in prepared:
        if matrix.shape[1] != feature_dim:
            raise ValueError("all records must share one feature dimension")
    if pooled_dim is None:
        pooled_dim = cfg.fc_width

    rng = np.random.default_rng(seed)
    params = DsicParams.init(rng, cfg, vocab_size, feature_dim, pooled_dim, embed_dim)
    named = params.named_parameters()
    state = OptimizerState(learning_rate=learning_rate)
    history: list[float] = []
    for epoch in range(epochs):
        order = rng.permutation(len(prepared))
        total = 0.0
        for position, index in enumerate(order):
            matrix, sentences = prepared[index]
            zero_grads(named)
            pooled = pool_regions(params.pool, list(matrix))
            loss = dsic_loss(params, cfg, pooled, sentences)
            value = float(loss.data)
            if not np.isfinite(value):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, batch {position} (record {index})"
                )
            loss.backward()
            clip_global_norm(named, clip_norm)
            adam_step(state, named)
            total += value
        history.append(total / len(prepared))
    return params, history


# ---------------------------------------------------------------------------
# generation (plain numpy, mirrors the training graph)


def _np_lstm_step(p: LstmParams, x, h, c):
    gates = p.W.data @ x + p.U.data @ h + p.b.data
    hd = p.hidden_dim
    i = stable_sigmoid(gates[0 * hd : 1 * hd])
    f = stable_sigmoid(gates[1 * hd : 2 * hd])
    g = np.tanh(gates[2 * hd : 3 * hd])
    o = stable_sigmoid(gates[3 * hd : 4 * hd])
    c_new = f * c + i * g
    h_new = o * np.tanh(c_new)
    return h_new, c_new


def np_pool_regions(params: PoolingParams, matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float32)
    projected = matrix @ params.matrix.data.T + params.bias.data
    return projected.max(axis=0)


def _np_topic(params: DsicParams, h: np.ndarray) -> np.ndarray:
    inner = np.maximum(params.fc1_w.data @ h + params.fc1_b.data, 0.0)
    return params.fc2_w.data @ inner + params.fc2_b.data


def dsic_generate(params: DsicParams, cfg: HierarchicalConfig, pooled: np.ndarray) -> list[list[int]]:
    """Greedy decode: continue gate per sentence, argmax per word.

    A sentence is emitted only while the continue probability clears the
    threshold; words stop at EOS.  Bounds sent_max/word_max always hold.
    """
    pooled = np.asarray(pooled, dtype=np.float32)
    dtype = params.sent.W.data.dtype
    h = np.zeros(params.sent.hidden_dim, dtype=dtype)
    c = np.zeros_like(h)
    sentences: list[list[int]] = []
    for _ in range(cfg.sent_max):
        h, c = _np_lstm_step(params.sent, pooled, h, c)
        probs = stable_softmax(params.cont_w.data @ h + params.cont_b.data)
        if float(probs[CONTINUE]) < cfg.th:
            break
        topic = _np_topic(params, h)
        tokens: list[int] = []
        prev = BOS
        h1 = np.zeros(params.word1.hidden_dim, dtype=dtype)
        c1 = np.zeros_like(h1)
        h2 = np.zeros(params.word2.hidden_dim, dtype=dtype)
        c2 = np.zeros_like(h2)
        for _ in range(cfg.word_max):
            x = np.concatenate([topic, params.embed.data[prev]])
            h1, c1 = _np_lstm_step(params.word1, x, h1, c1)
            h2, c2 = _np_lstm_step(params.word2, h1, h2, c2)
            logits = params.out_w.data @ h2 + params.out_b.data
            nxt = int(np.argmax(logits))
            if nxt == EOS:
                break
            tokens.append(nxt)
            prev = nxt
        sentences.append(tokens)
    return sentences


def expected_sentence_count(continue_probs: Sequence[float], th: float = 0.5, sent_max: int = 5) -> int:
    """Leading run of probabilities >= th, capped at sent_max."""
    count = 0
    for p in continue_probs:
        if p < th or count == sent_max:
            break
        count += 1
    return min(count, sent_max)


def sentences_to_text(sentences: Sequence[Sequence[int]], vocab: textprep.Vocabulary) -> str:
    """Token-id sentences -> presentation text with terminators."""
    tokens: list[str] = []
    for sentence in sentences:
        tokens.extend(textprep.decode_ids(sentence, vocab))
        tokens.append(".")
    return textprep.detokenize(tokens)
