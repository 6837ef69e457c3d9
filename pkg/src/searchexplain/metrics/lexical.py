"""ROUGE-1 and BLEU over pre-tokenized sequences (single reference)."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class ScoreTriple:
    precision: float
    recall: float
    f: float


def f_measure(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def unigram_overlap(candidate: Sequence[str], reference: Sequence[str]) -> int:
    return sum((Counter(candidate) & Counter(reference)).values())


def rouge1(candidate: Sequence[str], reference: Sequence[str]) -> ScoreTriple:
    overlap = unigram_overlap(candidate, reference)
    p = overlap / len(candidate) if candidate else 0.0
    r = overlap / len(reference) if reference else 0.0
    return ScoreTriple(p, r, f_measure(p, r))


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def clipped_precision(candidate: Sequence[str], reference: Sequence[str], n: int) -> float:
    cand = ngrams(candidate, n)
    total = sum(cand.values())
    if total == 0:
        return 0.0
    ref = ngrams(reference, n)
    return sum(min(c, ref[g]) for g, c in cand.items()) / total


def brevity_penalty(c: int, r: int) -> float:
    if c == 0:
        return 0.0
    return min(1.0, math.exp(1 - r / c))


def bleu(candidate: Sequence[str], reference: Sequence[str], max_n: int = 4) -> float:
    """Unsmoothed sentence BLEU with uniform weights.

    Any zero n-gram precision (including n longer than the candidate) makes
    the score 0.
    """
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    precisions = [clipped_precision(candidate, reference, n) for n in range(1, max_n + 1)]
    if min(precisions) == 0:
        return 0.0
    log_mean = math.fsum(math.log(p) for p in precisions) / max_n
    return brevity_penalty(len(candidate), len(reference)) * math.exp(log_mean)
