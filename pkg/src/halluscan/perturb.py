"""Deterministic source-side perturbation operators.

Three minimal perturbations: character misspelling (keyboard-adjacent
substitution), frequent-token insertion at the start of the sentence, and
random title-casing of words. Each operator is a pure function of
(text, spec) with an explicit seed, and corpus-level perturbation derives a
per-record seed from (global seed, parent id) so shards can be processed in
any order and still merge byte-identical.
"""

from __future__ import annotations

import hashlib
import random
import re
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .corpus import PERTURBATION_KINDS, PerturbationLineage, ScoreMap, TranslationRecord
from .metrics import DEFAULT_TOKENIZER, Tokenizer

# Keyboard-adjacent substitution alphabet for ASCII letters.
_QWERTY_NEIGHBORS = {
    "q": "wa", "w": "qes", "e": "wrd", "r": "etf", "t": "ryg", "y": "tuh",
    "u": "yij", "i": "uok", "o": "ipl", "p": "ol",
    "a": "qsz", "s": "awdxz", "d": "sefcx", "f": "drgvc", "g": "fthbv",
    "h": "gyjnb", "j": "hukmn", "k": "jilm", "l": "kop",
    "z": "asx", "x": "zsdc", "c": "xdfv", "v": "cfgb", "b": "vghn",
    "n": "bhjm", "m": "njk",
}

_WORD_SPLIT = re.compile(r"(\s+)")


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str
    misspell_prob: float = 0.01
    capitalize_prob: float = 0.1
    insert_pool_size: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise ValueError(f"unknown perturbation kind: {self.kind!r}")
        for name in ("misspell_prob", "capitalize_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.insert_pool_size < 1:
            raise ValueError(f"insert_pool_size must be >= 1, got {self.insert_pool_size}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True)
class FrequencyPool:
    """The k most frequent tokens-or-punctuation of a test set, sorted by
    descending count with lexicographic tie-break."""

    entries: Tuple[Tuple[str, int], ...]

    @property
    def tokens(self) -> Tuple[str, ...]:
        return tuple(tok for tok, _ in self.entries)


def derive_seed(global_seed: int, parent_id: str) -> int:
    """Stable per-record seed: hash of (global seed, parent id), identical
    across processes and platforms."""
    digest = hashlib.blake2b(
        global_seed.to_bytes(8, "big") + parent_id.encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def build_frequency_pool(
    records: Sequence[TranslationRecord],
    tokenizer: Tokenizer = DEFAULT_TOKENIZER,
    k: int = 50,
) -> FrequencyPool:
    """Count tokens over all source texts and keep the top k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not records:
        raise ValueError("cannot build a frequency pool from an empty corpus")
    counts: Counter = Counter()
    for rec in records:
        counts.update(tokenizer(rec.source_text))
    if k > len(counts):
        warnings.warn(
            f"pool size {k} exceeds vocabulary size {len(counts)}; using full vocabulary",
            stacklevel=2,
        )
        k = len(counts)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return FrequencyPool(entries=tuple(ranked[:k]))


def _substitute_char(ch: str, rng: random.Random) -> str:
    neighbors = _QWERTY_NEIGHBORS.get(ch.lower())
    if neighbors is not None:
        sub = rng.choice(neighbors)
        return sub.upper() if ch.isupper() else sub
    # Non-ASCII letter: substitute uniformly within a nearby code-point
    # window (Unicode blocks are contiguous, so this stays same-script).
    code = ord(ch)
    window = [
        chr(c)
        for c in range(max(0, code - 15), min(0x10FFFF, code + 15) + 1)
        if c != code and chr(c).isalpha()
    ]
    same_case = [c for c in window if c.isupper() == ch.isupper()]
    pool = same_case or window
    if not pool:
        return ch
    return rng.choice(pool)


def perturb_misspell(text: str, spec: PerturbationSpec) -> str:
    """Replace each alphabetic character independently with probability
    misspell_prob; substitution only, so character length is preserved."""
    rng = random.Random(spec.seed)
    out = []
    for ch in text:
        if ch.isalpha() and rng.random() < spec.misspell_prob:
            out.append(_substitute_char(ch, rng))
        else:
            out.append(ch)
    return "".join(out)


def perturb_insert(text: str, pool: FrequencyPool, spec: PerturbationSpec) -> str:
    """Prepend one token drawn uniformly from the pool, joined by a space."""
    if not pool.tokens:
        raise ValueError("frequency pool is empty")
    rng = random.Random(spec.seed)
    token = pool.tokens[rng.randrange(len(pool.tokens))]
    return f"{token} {text}" if text else token


def _title_case(word: str) -> str:
    for i, ch in enumerate(word):
        if ch.isalpha():
            return word[:i] + ch.upper() + word[i + 1 :].lower()
    return word


def perturb_capitalize(text: str, spec: PerturbationSpec) -> Tuple[str, bool]:
    """Title-case each word independently with probability capitalize_prob,
    guaranteeing at least one actual change.

    Only words whose rendering actually changes count; if the pass changes
    nothing, one uniformly chosen eligible word is forced. Returns
    (perturbed text, changed flag); the flag is False only when no word is
    eligible, in which case the input comes back unchanged.
    """
    rng = random.Random(spec.seed)
    parts = _WORD_SPLIT.split(text)
    eligible: list[int] = []
    changed = 0
    for i, word in enumerate(parts):
        if not word or word.isspace():
            continue
        titled = _title_case(word)
        if titled != word:
            eligible.append(i)
        if rng.random() < spec.capitalize_prob and titled != word:
            parts[i] = titled
            changed += 1
    if changed == 0:
        if not eligible:
            return text, False
        j = eligible[rng.randrange(len(eligible))]
        parts[j] = _title_case(parts[j])
    return "".join(parts), True


def perturb_corpus(
    records: Sequence[TranslationRecord],
    spec: PerturbationSpec,
    pool: Optional[FrequencyPool] = None,
) -> list[TranslationRecord]:
    """Produce one perturbed record per input record.

    Each output gets a fresh id, a lineage pointing at its parent, a
    per-record seed derived from (spec.seed, parent id), the perturbed
    source, and cleared translation/reference/scores (the perturbed corpus
    is meant to be re-translated).
    """
    if spec.kind == "insert" and pool is None:
        raise ValueError("insert perturbation needs a frequency pool")
    out = []
    for rec in records:
        if rec.perturbation is not None:
            raise ValueError(f"record {rec.id!r} is already perturbed")
        seed = derive_seed(spec.seed, rec.id)
        per_record = PerturbationSpec(
            kind=spec.kind,
            misspell_prob=spec.misspell_prob,
            capitalize_prob=spec.capitalize_prob,
            insert_pool_size=spec.insert_pool_size,
            seed=seed,
        )
        if spec.kind == "misspell":
            source = perturb_misspell(rec.source_text, per_record)
        elif spec.kind == "insert":
            source = perturb_insert(rec.source_text, pool, per_record)
        else:
            source, _ = perturb_capitalize(rec.source_text, per_record)
        out.append(
            TranslationRecord(
                id=f"{rec.id}#pert",
                lp=rec.lp,
                model_id=rec.model_id,
                source_text=source,
                translation_text="",
                reference_text=None,
                scores=ScoreMap(),
                perturbation=PerturbationLineage(parent_id=rec.id, kind=spec.kind, seed=seed),
            )
        )
    return out
