"""Text-overlap metrics: BLEU, ROUGE-n, ROUGE-L, METEOR.

All arithmetic is plain Python floats (double precision).  No smoothing
anywhere: a zero modified precision zeroes BLEU, and degenerate inputs
score 0 with a flag instead of raising.

Definitions implemented here:

* BLEU: clipped modified n-gram precisions, geometric mean under weights
  that sum to one, brevity penalty 1 if c > r else exp(1 - r/c), with r
  the reference length closest to c (ties prefer the shorter).
* ROUGE-n: sum of clipped candidate/reference n-gram co-occurrences over
  the total reference n-gram count (recall-oriented).
* ROUGE-L: LCS-based precision/recall/F1.
* METEOR: exact unigram matching; among alignments with the maximum
  number of matches, the chunk count is the minimum number of runs that
  are contiguous and order-preserving in both strings; the fragmentation
  penalty is 0.5 * chunks / matched.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .textprep import tokenize


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    """Multiset of n-grams as tuples; n larger than the input means empty."""
    if n <= 0:
        raise ValueError("ngram_counts: n must be positive")
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


# ---------------------------------------------------------------------------
# BLEU


@dataclass
class BleuResult:
    bleu: float
    precisions: list[float]
    brevity_penalty: float
    candidate_length: int
    reference_length: int
    weights: list[float]
    flags: list[str] = field(default_factory=list)


def _closest_ref_length(c: int, references: Sequence[Sequence[str]]) -> int:
    lengths = sorted(len(r) for r in references)
    return min(lengths, key=lambda r: (abs(r - c), r))


def _check_weights(weights: Sequence[float] | None, max_n: int) -> list[float]:
    if weights is None:
        return [1.0 / max_n] * max_n
    weights = list(weights)
    if len(weights) != max_n:
        raise ValueError(f"bleu: {len(weights)} weights for max_n={max_n}")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError(f"bleu: weights sum to {sum(weights)!r}, not 1")
    return weights


def _clipped_counts(candidate: Sequence[str], references: Sequence[Sequence[str]], n: int):
    cand = ngram_counts(candidate, n)
    if not cand:
        return 0, 0
    best: Counter = Counter()
    for ref in references:
        for gram, count in ngram_counts(ref, n).items():
            if count > best[gram]:
                best[gram] = count
    clipped = sum(min(count, best[gram]) for gram, count in cand.items())
    total = sum(cand.values())
    return clipped, total


def _combine(numerators, denominators, c, r, weights) -> tuple[float, list[float], float, list[str]]:
    flags: list[str] = []
    precisions = []
    for n, (num, den) in enumerate(zip(numerators, denominators), start=1):
        if den == 0:
            precisions.append(0.0)
            flags.append(f"no {n}-grams in candidate")
        else:
            precisions.append(num / den)
    if c == 0:
        return 0.0, precisions, 0.0, ["empty candidate"]
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    if any(p == 0.0 for p in precisions):
        if not flags:
            flags.append("zero precision at some order")
        return 0.0, precisions, bp, flags
    log_mean = sum(w * math.log(p) for w, p in zip(weights, precisions))
    return bp * math.exp(log_mean), precisions, bp, flags


def bleu(
    candidate: Sequence[str],
    references: Sequence[Sequence[str]],
    max_n: int = 4,
    weights: Sequence[float] | None = None,
) -> BleuResult:
    """Sentence-level BLEU; any zero precision gives score 0 (no smoothing)."""
    if not references:
        raise ValueError("bleu: at least one reference required")
    weights = _check_weights(weights, max_n)
    c = len(candidate)
    if c == 0:
        return BleuResult(
            bleu=0.0,
            precisions=[0.0] * max_n,
            brevity_penalty=0.0,
            candidate_length=0,
            reference_length=_closest_ref_length(0, references),
            weights=weights,
            flags=["empty candidate"],
        )
    r = _closest_ref_length(c, references)
    nums, dens = [], []
    for n in range(1, max_n + 1):
        num, den = _clipped_counts(candidate, references, n)
        nums.append(num)
        dens.append(den)
    score, precisions, bp, flags = _combine(nums, dens, c, r, weights)
    return BleuResult(
        bleu=score,
        precisions=precisions,
        brevity_penalty=bp,
        candidate_length=c,
        reference_length=r,
        weights=weights,
        flags=flags,
    )


def corpus_bleu(
    pairs: Sequence[tuple[Sequence[str], Sequence[Sequence[str]]]],
    max_n: int = 4,
    weights: Sequence[float] | None = None,
) -> BleuResult:
    """Corpus-level BLEU: numerators, denominators and lengths pooled
    over all pairs before combining."""
    if not pairs:
        raise ValueError("corpus_bleu: no pairs")
    weights = _check_weights(weights, max_n)
    nums = [0] * max_n
    dens = [0] * max_n
    c_total = 0
    r_total = 0
    for candidate, references in pairs:
        if not references:
            raise ValueError("corpus_bleu: pair without references")
        c_total += len(candidate)
        r_total += _closest_ref_length(len(candidate), references)
        for n in range(1, max_n + 1):
            num, den = _clipped_counts(candidate, references, n)
            nums[n - 1] += num
            dens[n - 1] += den
    score, precisions, bp, flags = _combine(nums, dens, c_total, r_total, weights)
    return BleuResult(
        bleu=score,
        precisions=precisions,
        brevity_penalty=bp,
        candidate_length=c_total,
        reference_length=r_total,
        weights=weights,
        flags=flags,
    )


# ---------------------------------------------------------------------------
# ROUGE


def rouge_n(candidate: Sequence[str], references: Sequence[Sequence[str]], n: int) -> float:
    """Clipped n-gram co-occurrence over total reference n-grams."""
    total = 0
    matched = 0
    cand = ngram_counts(candidate, n)
    for ref in references:
        ref_counts = ngram_counts(ref, n)
        total += sum(ref_counts.values())
        for gram, count in ref_counts.items():
            matched += min(count, cand[gram])
    if total == 0:
        return 0.0
    return matched / total


class RougeL:
    """Precision/recall/F1 triple from the longest common subsequence."""

    __slots__ = ("precision", "recall", "f1")

    def __init__(self, precision: float, recall: float, f1: float):
        self.precision = precision
        self.recall = recall
        self.f1 = f1

    def __iter__(self):
        return iter((self.precision, self.recall, self.f1))

    def __repr__(self):
        return f"RougeL(precision={self.precision}, recall={self.recall}, f1={self.f1})"


def lcs_length(a: Sequence, b: Sequence) -> int:
    """Classic O(len(a)*len(b)) longest-common-subsequence length."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[len(b)]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeL:
    if not candidate or not reference:
        return RougeL(0.0, 0.0, 0.0)
    lcs = lcs_length(candidate, reference)
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    if precision + recall == 0.0:
        return RougeL(precision, recall, 0.0)
    f1 = 2.0 * precision * recall / (precision + recall)
    return RougeL(precision, recall, f1)


# ---------------------------------------------------------------------------
# METEOR


@dataclass
class MeteorResult:
    score: float
    matched: int
    chunks: int
    precision: float
    recall: float
    flags: list[str] = field(default_factory=list)
    exact_chunks: bool = True


_CHUNK_SEARCH_BUDGET = 250_000


class _Budget(Exception):
    pass


def _min_chunks_exact(candidate: Sequence[str], reference: Sequence[str], need: Counter, budget: int) -> int:
    """Minimum chunk count over all maximum alignments.

    Branch and bound over candidate positions left to right; each matched
    position claims a distinct reference occurrence of the same word.  A
    chunk ends whenever the next matched position does not map to the
    next reference position.  Exponential in the worst case, so callers
    guard with a node budget.
    """
    n = len(candidate)
    remaining_need = dict(need)
    total_need = sum(need.values())
    # suffix occurrence counts decide whether a position may be skipped
    cand_suffix: list[Counter] = [Counter() for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        cand_suffix[i] = cand_suffix[i + 1].copy()
        cand_suffix[i][candidate[i]] += 1

    positions_by_word: dict[str, list[int]] = {}
    for j, w in enumerate(reference):
        positions_by_word.setdefault(w, []).append(j)

    best = [total_need + 1]
    nodes = [0]
    used = [False] * len(reference)

    def dfs(i: int, left: int, prev_ref: int, chunks: int):
        nodes[0] += 1
        if nodes[0] > budget:
            raise _Budget()
        if left == 0:
            if chunks < best[0]:
                best[0] = chunks
            return
        # lower bound: an open run might absorb all remaining matches,
        # a broken one costs at least one more chunk
        if chunks + (0 if prev_ref >= 0 else 1) >= best[0]:
            return
        if i >= n:
            return
        w = candidate[i]
        quota = remaining_need.get(w, 0)
        if quota > 0:
            cont = prev_ref + 1 if prev_ref >= 0 else -1
            ordered = positions_by_word.get(w, [])
            if 0 <= cont < len(reference) and reference[cont] == w:
                ordered = [cont] + [j for j in ordered if j != cont]
            for j in ordered:
                if used[j]:
                    continue
                used[j] = True
                remaining_need[w] = quota - 1
                dfs(i + 1, left - 1, j, chunks + (0 if j == cont else 1))
                remaining_need[w] = quota
                used[j] = False
        if cand_suffix[i + 1][w] >= quota:
            # enough later occurrences remain, so i may stay unmatched,
            # which breaks any open run
            dfs(i + 1, left, -2, chunks)

    dfs(0, total_need, -2, 0)
    return best[0]


def _min_chunks_greedy(candidate: Sequence[str], reference: Sequence[str], need: Counter) -> int:
    """Fallback for long inputs: left-to-right alignment preferring run
    continuation, then the earliest free reference occurrence."""
    remaining = dict(need)
    used = [False] * len(reference)
    positions_by_word: dict[str, list[int]] = {}
    for j, w in enumerate(reference):
        positions_by_word.setdefault(w, []).append(j)
    chunks = 0
    prev_ref = -2
    for w in candidate:
        quota = remaining.get(w, 0)
        if quota <= 0:
            prev_ref = -2
            continue
        choice = None
        cont = prev_ref + 1 if prev_ref >= 0 else -1
        if 0 <= cont < len(reference) and reference[cont] == w and not used[cont]:
            choice = cont
        else:
            for j in positions_by_word.get(w, []):
                if not used[j]:
                    choice = j
                    break
        if choice is None:
            prev_ref = -2
            continue
        used[choice] = True
        remaining[w] = quota - 1
        chunks += 0 if choice == cont else 1
        prev_ref = choice
    return max(chunks, 1)


def meteor(candidate: Sequence[str], reference: Sequence[str]) -> MeteorResult:
    """Exact-match METEOR with the harmonic mean weighted toward recall."""
    cand_counts = Counter(candidate)
    ref_counts = Counter(reference)
    need = Counter()
    for w, c in cand_counts.items():
        m = min(c, ref_counts[w])
        if m:
            need[w] = m
    matched = sum(need.values())
    if matched == 0 or not candidate or not reference:
        return MeteorResult(
            score=0.0, matched=0, chunks=0, precision=0.0, recall=0.0,
            flags=["no unigram matches"],
        )
    exact = True
    try:
        chunks = _min_chunks_exact(candidate, reference, need, _CHUNK_SEARCH_BUDGET)
    except _Budget:
        chunks = _min_chunks_greedy(candidate, reference, need)
        exact = False
    precision = matched / len(candidate)
    recall = matched / len(reference)
    f_mean = 10.0 * precision * recall / (recall + 9.0 * precision)
    penalty = 0.5 * (chunks / matched)
    return MeteorResult(
        score=f_mean * (1.0 - penalty),
        matched=matched,
        chunks=chunks,
        precision=precision,
        recall=recall,
        flags=[] if exact else ["chunk search budget exceeded; greedy chunks"],
        exact_chunks=exact,
    )


# ---------------------------------------------------------------------------
# corpus evaluation


@dataclass
class MetricReport:
    per_record: list[dict]
    means: dict
    corpus_level: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "means": self.means,
                "corpus_level": self.corpus_level,
                "per_record": self.per_record,
            },
            indent=2,
            sort_keys=True,
        )


def evaluate_pair(candidate_text: str, reference_text: str) -> dict:
    cand = tokenize(candidate_text)
    ref = tokenize(reference_text)
    out: dict = {}
    for n in range(1, 5):
        res = bleu(cand, [ref], max_n=n)
        out[f"bleu_{n}"] = res.bleu
    out["rouge_1"] = rouge_n(cand, [ref], 1)
    out["rouge_2"] = rouge_n(cand, [ref], 2)
    rl = rouge_l(cand, ref)
    out["rouge_l_precision"] = rl.precision
    out["rouge_l_recall"] = rl.recall
    out["rouge_l_f1"] = rl.f1
    met = meteor(cand, ref)
    out["meteor"] = met.score
    flags = []
    if not cand:
        flags.append("empty candidate")
    if not ref:
        flags.append("empty reference")
    flags.extend(met.flags)
    if flags:
        out["flags"] = flags
    return out


def evaluate_corpus(pairs: Sequence[tuple[str, str, str]]) -> MetricReport:
    """Score (id, candidate, reference) triples.

    Texts are tokenized with the package tokenizer.  Sentence-level
    scores are averaged arithmetically; corpus-level BLEU pools counts
    before combining.
    """
    if not pairs:
        raise ValueError("evaluate_corpus: no pairs")
    per_record = []
    token_pairs = []
    for record_id, cand_text, ref_text in pairs:
        scores = evaluate_pair(cand_text, ref_text)
        scores["id"] = record_id
        per_record.append(scores)
        token_pairs.append((tokenize(cand_text), [tokenize(ref_text)]))

    keys = [
        "bleu_1", "bleu_2", "bleu_3", "bleu_4",
        "rouge_1", "rouge_2",
        "rouge_l_precision", "rouge_l_recall", "rouge_l_f1",
        "meteor",
    ]
    means = {k: sum(r[k] for r in per_record) / len(per_record) for k in keys}
    corpus_level = {}
    for n in range(1, 5):
        res = corpus_bleu(token_pairs, max_n=n)
        corpus_level[f"bleu_{n}"] = res.bleu
    return MetricReport(per_record=per_record, means=means, corpus_level=corpus_level)
