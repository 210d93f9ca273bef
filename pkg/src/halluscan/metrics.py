"""Lexical and statistical primitives.

Pure functions over immutable inputs: tokenization, top-n-gram profiles,
sentence-level BLEU on the 0-100 scale, Pearson correlation, and
nearest-rank empirical quantiles. Everything here is deterministic and
safe to call from any number of workers.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

Tokens = Tuple[str, ...]


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _split_whitespace_punct(text: str) -> Tokens:
    """Split on Unicode whitespace, then peel leading/trailing punctuation
    off each chunk into standalone tokens."""
    out: list[str] = []
    for chunk in text.split():
        head: list[str] = []
        while chunk and _is_punct(chunk[0]):
            head.append(chunk[0])
            chunk = chunk[1:]
        tail: list[str] = []
        while chunk and _is_punct(chunk[-1]):
            tail.append(chunk[-1])
            chunk = chunk[:-1]
        out.extend(head)
        if chunk:
            out.append(chunk)
        out.extend(reversed(tail))
    return tuple(out)


@dataclass(frozen=True)
class Tokenizer:
    """A named, deterministic text -> token-sequence contract.

    The name is recorded in reports so downstream numbers can be traced to
    the tokenization they were computed under.
    """

    name: str
    fn: Callable[[str], Tokens]

    def __call__(self, text: str) -> Tokens:
        return self.fn(text)


DEFAULT_TOKENIZER = Tokenizer("whitespace+punct", _split_whitespace_punct)


def tokenize(text: str, tokenizer: Tokenizer = DEFAULT_TOKENIZER) -> Tokens:
    """Tokenize text; empty input yields an empty sequence."""
    return tokenizer(text)


@dataclass(frozen=True)
class NgramProfile:
    """The most repeated contiguous n-gram of a token sequence.

    top_count counts possibly overlapping occurrences; it is 0 exactly when
    the sequence holds fewer than n tokens.
    """

    n: int
    top_gram: Optional[Tokens]
    top_count: int


def top_ngram(tokens: Sequence[str], n: int) -> NgramProfile:
    """Profile the maximal-count contiguous n-gram (ties: first occurring)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if len(tokens) < n:
        return NgramProfile(n=n, top_gram=None, top_count=0)
    counts = Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    gram, count = counts.most_common(1)[0]
    return NgramProfile(n=n, top_gram=gram, top_count=count)


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def spbleu(hyp: Sequence[str], ref: Sequence[str]) -> float:
    """Sentence-level BLEU-4 on the 0-100 scale.

    Clipped n-gram precisions per order; only orders with a positive
    hypothesis denominator enter the geometric mean (effective order);
    a zero-match order with a positive denominator is exponentially
    smoothed (a multiplier starting at 1 doubles per such order and the
    order's precision becomes 100 / (multiplier * denominator)); brevity
    penalty exp(1 - |ref|/|hyp|) applies when the hypothesis is shorter
    than the reference.

    An empty hypothesis scores 0; an empty reference is an error.
    """
    if not ref:
        raise ValueError("reference must be non-empty")
    if not hyp:
        return 0.0
    log_sum = 0.0
    orders = 0
    smooth = 1.0
    for n in range(1, 5):
        total = len(hyp) - n + 1
        if total < 1:
            break
        hyp_counts = _ngram_counts(hyp, n)
        ref_counts = _ngram_counts(ref, n)
        correct = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
        if correct == 0:
            smooth *= 2.0
            precision = 100.0 / (smooth * total)
        else:
            precision = 100.0 * correct / total
        log_sum += math.log(precision)
        orders += 1
    score = math.exp(log_sum / orders)
    if len(hyp) < len(ref):
        score *= math.exp(1.0 - len(ref) / len(hyp))
    return score


def pearson(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    """Sample Pearson correlation, or None when either series has zero
    variance (the correlation is undefined there, and an undefined value
    must stay distinguishable from any numeric r)."""
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise ValueError("need at least 2 points")
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        return None
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def quantile(values: Sequence[float], q: float) -> float:
    """Nearest-rank (lower) empirical quantile.

    Sort ascending and return the element at rank ceil(q*N), clamped to the
    valid range, so the result is always an observed value. The rank is
    computed with a tiny relative epsilon so that q values written as
    decimals (0.10, 0.90, ...) hit their exact mathematical rank instead of
    drifting one element up on float noise.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("values must be non-empty")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must be in [0, 1], got {q}")
    rank = q * arr.size
    k = math.ceil(rank - 1e-9 * max(1.0, rank))
    idx = min(max(k - 1, 0), arr.size - 1)
    return float(np.sort(arr)[idx])
