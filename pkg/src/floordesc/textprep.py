"""Text preparation: tokenization, vocabulary, encoding, keyword filtering,
caption fusion, and skip-gram embeddings.

Tokenization is PTB-flavored: lowercase, punctuation dropped, contractions
split onto their own tokens ("don't" -> "do", "n't").  Vocabulary ids are
frequency-ranked with four reserved specials in front.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

PAD, UNK, BOS, EOS = 0, 1, 2, 3
SPECIALS = ("<pad>", "<unk>", "<bos>", "<eos>")

_CONTRACTION = re.compile(r"(n't|'s|'re|'ve|'ll|'d|'m)\b")
_TOKEN = re.compile(r"n't|'(?:s|re|ve|ll|d|m)|[a-z0-9]+")
_SENT_SPLIT = re.compile(r"([.!?])")


def tokenize(text: str) -> list[str]:
    """Lowercased PTB-style tokens; punctuation dropped, contractions split."""
    text = text.lower()
    text = _CONTRACTION.sub(r" \1", text)
    return _TOKEN.findall(text)


@dataclass
class Vocabulary:
    """Token ids, frequency-ranked after the four reserved specials."""

    token_to_id: dict[str, int]
    id_to_token: list[str]
    min_count: int = 1

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, UNK)

    def token_of(self, idx: int) -> str:
        return self.id_to_token[idx]


def build_vocab(corpus: Iterable[Sequence[str]], min_count: int = 1) -> Vocabulary:
    """Frequency-ranked vocabulary over token lists.

    Tokens below min_count are dropped; ordering is frequency descending
    with lexicographic ascending as the tie-break.  An empty corpus is an
    error.
    """
    freq: dict[str, int] = {}
    seen_any = False
    for tokens in corpus:
        seen_any = True
        for tok in tokens:
            freq[tok] = freq.get(tok, 0) + 1
    if not seen_any:
        raise ValueError("build_vocab: empty corpus")
    kept = sorted(
        (tok for tok, n in freq.items() if n >= min_count),
        key=lambda tok: (-freq[tok], tok),
    )
    id_to_token = list(SPECIALS) + kept
    token_to_id = {tok: i for i, tok in enumerate(id_to_token)}
    return Vocabulary(token_to_id=token_to_id, id_to_token=id_to_token, min_count=min_count)


@dataclass
class TokenSequence:
    """Fixed-length id sequence; length always equals len(ids)."""

    ids: list[int]

    @property
    def length(self) -> int:
        return len(self.ids)

    def content_length(self, pad_id: int = PAD) -> int:
        n = len(self.ids)
        while n > 0 and self.ids[n - 1] == pad_id:
            n -= 1
        return n


def encode(tokens: Sequence[str], vocab: Vocabulary, fixed_len: int, add_bos_eos: bool = False) -> TokenSequence:
    """Map tokens to ids, truncate or PAD to fixed_len.

    With add_bos_eos the sequence starts with BOS and carries EOS at the
    last non-pad position; content is truncated to leave room for both.
    """
    if fixed_len <= 0:
        raise ValueError("encode: fixed_len must be positive")
    if add_bos_eos and fixed_len < 2:
        raise ValueError("encode: fixed_len too small for BOS/EOS")
    ids = [vocab.id_of(t) for t in tokens]
    if add_bos_eos:
        ids = [BOS] + ids[: fixed_len - 2] + [EOS]
    else:
        ids = ids[:fixed_len]
    ids = ids + [PAD] * (fixed_len - len(ids))
    return TokenSequence(ids=ids)


def decode_ids(ids: Sequence[int], vocab: Vocabulary, strip_specials: bool = True) -> list[str]:
    out = []
    for i in ids:
        if strip_specials and i in (PAD, BOS, EOS):
            continue
        out.append(vocab.token_of(i))
    return out


def split_sentences(text: str) -> list[tuple[str, str]]:
    """(sentence, terminator) pairs; the final fragment may lack a terminator."""
    parts = _SENT_SPLIT.split(text)
    out = []
    for i in range(0, len(parts) - 1, 2):
        sent = parts[i].strip()
        term = parts[i + 1]
        if sent:
            out.append((sent, term))
    if len(parts) % 2 == 1 and parts[-1].strip():
        out.append((parts[-1].strip(), ""))
    return out


@dataclass
class KeywordSet:
    room_keywords: list[str]
    object_keywords: list[str]

    @property
    def all_keywords(self) -> list[str]:
        return self.room_keywords + self.object_keywords


DEFAULT_KEYWORDS = KeywordSet(
    room_keywords=["bedroom", "bathroom", "kitchen", "porch", "garage", "hall", "living"],
    object_keywords=["stairs", "bathtub", "kitchen bar", "closet", "sink"],
)


def load_keywords(path) -> KeywordSet:
    """Read a keyword file with [rooms] and [objects] sections, one per line."""
    rooms: list[str] = []
    objects: list[str] = []
    target = None
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "[rooms]":
            target = rooms
        elif line == "[objects]":
            target = objects
        elif target is None:
            raise ValueError(f"{path}:{lineno}: keyword outside a section: {line!r}")
        else:
            target.append(line.lower())
    return KeywordSet(room_keywords=rooms, object_keywords=objects)


def _keyword_pattern(keywords: Sequence[str]) -> re.Pattern | None:
    if not keywords:
        return None
    parts = sorted((re.escape(k.lower()).replace(r"\ ", r"\s+") for k in keywords), key=len, reverse=True)
    return re.compile(r"(?<![a-z0-9])(?:" + "|".join(parts) + r")(?![a-z0-9])")


def keyword_filter(paragraph: str, keywords: Sequence[str]) -> str:
    """Keep only sentences containing at least one keyword.

    Matching is case-insensitive and on token boundaries; sentence
    terminators are preserved.  Idempotent: filtering the output again
    returns it unchanged.
    """
    pattern = _keyword_pattern(keywords)
    if pattern is None:
        return ""
    kept = []
    for sent, term in split_sentences(paragraph):
        if pattern.search(sent.lower()):
            kept.append(sent + term)
    return " ".join(kept)


def fuse_captions(captions: Sequence[tuple[Sequence[str], float]], k: int = 5) -> list[str]:
    """Concatenate the top-k captions by score (ties keep input order)."""
    if k <= 0:
        raise ValueError("fuse_captions: k must be positive")
    ranked = sorted(range(len(captions)), key=lambda i: (-captions[i][1], i))
    if len(captions) < k:
        warnings.warn(
            f"fuse_captions: only {len(captions)} captions available, wanted {k}",
            stacklevel=2,
        )
    fused: list[str] = []
    for i in ranked[:k]:
        fused.extend(captions[i][0])
    return fused


def detokenize(tokens: Sequence[str]) -> str:
    """Presentation-only join: sentence-initial capitals, glued contractions."""
    out: list[str] = []
    start = True
    for tok in tokens:
        if tok in {".", "!", "?"}:
            if out:
                out[-1] = out[-1] + tok
            start = True
            continue
        word = tok
        if start:
            word = word[:1].upper() + word[1:]
            start = False
        if tok.startswith("'") or tok == "n't":
            if out:
                out[-1] = out[-1] + tok
                continue
        out.append(word)
    text = " ".join(out)
    if text and not text.endswith((".", "!", "?")):
        text += "."
    return text


# ---------------------------------------------------------------------------
# vocabulary and embedding files


def save_vocab(path, vocab: Vocabulary):
    """One token per line in id order; the first four lines are the specials."""
    Path(path).write_text("\n".join(vocab.id_to_token) + "\n", encoding="utf-8")


def load_vocab(path) -> Vocabulary:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if len(lines) < 4 or tuple(lines[:4]) != SPECIALS:
        raise ValueError(f"vocabulary file {path} lacks the 4-line specials header")
    token_to_id = {tok: i for i, tok in enumerate(lines)}
    if len(token_to_id) != len(lines):
        raise ValueError(f"vocabulary file {path} has duplicate tokens")
    return Vocabulary(token_to_id=token_to_id, id_to_token=list(lines))


@dataclass
class EmbeddingTable:
    """Per-token embedding rows, one per vocabulary id."""

    matrix: np.ndarray
    embed_dim: int
    epoch_losses: list[float] = field(default_factory=list)


def save_embeddings(path, table: EmbeddingTable, seed: int = 0):
    path = Path(path)
    blob_path = path.with_name(path.name + ".blob")
    rows, dim = table.matrix.shape
    path.write_text(
        "format = floordesc-embeddings-v1\n"
        f"vocab_size = {rows}\n"
        f"embed_dim = {dim}\n"
        f"seed = {seed}\n",
        encoding="utf-8",
    )
    blob_path.write_bytes(table.matrix.astype("<f4").tobytes(order="C"))


def load_embeddings(path) -> tuple[EmbeddingTable, int]:
    path = Path(path)
    meta: dict[str, str] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if "=" in line:
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    if meta.get("format") != "floordesc-embeddings-v1":
        raise ValueError(f"not an embedding manifest: {path}")
    rows = int(meta["vocab_size"])
    dim = int(meta["embed_dim"])
    blob = path.with_name(path.name + ".blob").read_bytes()
    expect = rows * dim * 4
    if len(blob) != expect:
        raise ValueError(f"embedding blob has {len(blob)} bytes, expected {expect}")
    matrix = np.frombuffer(blob, dtype="<f4").reshape(rows, dim).astype(np.float32)
    return EmbeddingTable(matrix=matrix, embed_dim=dim), int(meta.get("seed", 0))


# ---------------------------------------------------------------------------
# skip-gram with negative sampling


def train_skipgram(
    corpus: Sequence[Sequence[int]],
    vocab_size: int,
    embed_dim: int,
    window: int = 2,
    negatives: int = 5,
    epochs: int = 5,
    seed: int = 0,
    learning_rate: float = 0.025,
) -> EmbeddingTable:
    """Skip-gram embeddings trained with negative sampling.

    Negatives are drawn from the unigram distribution raised to 3/4.
    Deterministic for a given seed; epochs=0 returns the seeded
    initialization.  The per-epoch mean objective is kept on the returned
    table for inspection.
    """
    if vocab_size <= negatives:
        raise ValueError(
            f"vocab_size {vocab_size} must exceed negatives {negatives}"
        )
    rng = np.random.default_rng(seed)
    w_in = ((rng.random((vocab_size, embed_dim)) - 0.5) / embed_dim).astype(np.float32)
    w_out = np.zeros((vocab_size, embed_dim), dtype=np.float32)

    counts = np.zeros(vocab_size, dtype=np.float64)
    pairs: list[tuple[int, int]] = []
    for seq in corpus:
        for i, center in enumerate(seq):
            if not 0 <= center < vocab_size:
                raise ValueError(f"token id {center} out of range for vocab {vocab_size}")
            counts[center] += 1
            lo = max(0, i - window)
            hi = min(len(seq), i + window + 1)
            for j in range(lo, hi):
                if j != i:
                    pairs.append((center, seq[j]))
    if not pairs:
        raise ValueError("train_skipgram: corpus yields no training pairs")

    weights = counts**0.75
    total = weights.sum()
    if total == 0:
        raise ValueError("train_skipgram: no token occurrences")
    probs = weights / total

    table = EmbeddingTable(matrix=w_in, embed_dim=embed_dim)
    for _ in range(epochs):
        order = rng.permutation(len(pairs))
        epoch_loss = 0.0
        for idx in order:
            center, context = pairs[idx]
            v = w_in[center]
            u = w_out[context]
            pos_score = float(np.dot(v, u))
            pos_sig = 1.0 / (1.0 + np.exp(-pos_score)) if pos_score > -30 else np.exp(pos_score)
            epoch_loss += -np.log(max(pos_sig, 1e-12))
            grad_v = (pos_sig - 1.0) * u
            w_out[context] = u - learning_rate * (pos_sig - 1.0) * v

            negs = rng.choice(vocab_size, size=negatives, p=probs)
            for neg in negs:
                if neg == context:
                    continue
                un = w_out[neg]
                neg_score = float(np.dot(v, un))
                neg_sig = 1.0 / (1.0 + np.exp(-neg_score)) if neg_score > -30 else np.exp(neg_score)
                epoch_loss += -np.log(max(1.0 - neg_sig, 1e-12))
                grad_v = grad_v + neg_sig * un
                w_out[neg] = un - learning_rate * neg_sig * v
            w_in[center] = v - learning_rate * grad_v
        table.epoch_losses.append(epoch_loss / len(pairs))
    return table


def sequence_length_report(sequences: Sequence[Sequence[int]]) -> dict:
    """Min/max/mean content lengths; the fixed encoding length stays the
    transform, this is reporting only."""
    lengths = [len(s) for s in sequences]
    if not lengths:
        return {"count": 0, "min": 0, "max": 0, "mean": 0.0}
    return {
        "count": len(lengths),
        "min": int(min(lengths)),
        "max": int(max(lengths)),
        "mean": float(sum(lengths) / len(lengths)),
    }
