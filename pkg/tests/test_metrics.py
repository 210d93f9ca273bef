"""Lexical/statistical primitive tests against independent oracles.

The sentence-BLEU oracle below implements the scoring formula directly
(plain dicts and an explicit product) and stays independent of the
implementation it checks; the frozen constants in this file were computed
with it before the implementation was written.
"""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halluscan import metrics
from halluscan.metrics import (
    DEFAULT_TOKENIZER,
    pearson,
    quantile,
    spbleu,
    tokenize,
    top_ngram,
)


def bleu_oracle(hyp, ref):
    """Direct-formula sentence BLEU: clipped precisions for orders 1-4,
    effective order, exponential smoothing, brevity penalty."""
    if not ref:
        raise ValueError("empty reference")
    if not hyp:
        return 0.0
    precisions = []
    smooth = 1.0
    for n in range(1, 5):
        total = len(hyp) - n + 1
        if total < 1:
            continue
        hyp_grams = {}
        for i in range(total):
            g = tuple(hyp[i : i + n])
            hyp_grams[g] = hyp_grams.get(g, 0) + 1
        ref_grams = {}
        for i in range(len(ref) - n + 1):
            g = tuple(ref[i : i + n])
            ref_grams[g] = ref_grams.get(g, 0) + 1
        correct = 0
        for g, c in hyp_grams.items():
            correct += min(c, ref_grams.get(g, 0))
        if correct == 0:
            smooth *= 2.0
            precisions.append(100.0 / (smooth * total))
        else:
            precisions.append(100.0 * correct / total)
    product = 1.0
    for p in precisions:
        product *= p
    score = product ** (1.0 / len(precisions))
    if len(hyp) < len(ref):
        score *= math.exp(1.0 - len(ref) / len(hyp))
    return score


class TestTokenize:
    def test_punctuation_split(self):
        assert tokenize("Hello, world!") == ("Hello", ",", "world", "!")

    def test_empty(self):
        assert tokenize("") == ()

    def test_deterministic_on_long_input(self):
        text = " ".join(f"tok{i}," for i in range(2000))
        assert tokenize(text) == tokenize(text)

    def test_quoted(self):
        assert tokenize('"Hi!" she said.') == ('"', "Hi", "!", '"', "she", "said", ".")

    def test_no_empty_tokens(self):
        for text in ("...", "a...b", " - - ", "¿que¿", "wow!!!"):
            assert all(tok for tok in tokenize(text))


class TestTopNgram:
    def test_shorter_than_n(self):
        profile = top_ngram(["a", "b", "c"], 4)
        assert profile.top_count == 0 and profile.top_gram is None

    def test_overlapping_occurrences(self):
        tokens = ["the", "cat", "sat", "on", "the", "cat", "sat", "on", "the"]
        profile = top_ngram(tokens, 4)
        assert profile.top_count == 2
        assert profile.top_gram == ("the", "cat", "sat", "on")

    def test_distinct_tokens(self):
        assert top_ngram(["a", "b", "c", "d"], 4).top_count == 1

    def test_bad_n(self):
        with pytest.raises(ValueError):
            top_ngram(["a"], 0)

    @given(
        st.lists(st.sampled_from("abcde"), max_size=50),
        st.integers(min_value=1, max_value=5),
    )
    @settings(max_examples=200)
    def test_matches_brute_force(self, tokens, n):
        brute = {}
        for i in range(len(tokens) - n + 1):
            g = tuple(tokens[i : i + n])
            brute[g] = brute.get(g, 0) + 1
        expected = max(brute.values()) if brute else 0
        assert top_ngram(tokens, n).top_count == expected


# (hyp, ref) pairs covering: smoothing at each order, brevity penalty,
# effective order below 4, clipping, identity, and total mismatches.
BLEU_SUITE = [
    (list("abcd"), list("abce")),
    (list("abcd"), list("abcd")),
    (["the", "cat"], ["the", "cat", "sat"]),
    (["x", "y", "z", "w", "q"], list("abcd")),
    (["a", "a", "a", "a"], ["a", "a"]),
    (["a", "b"], ["b", "a"]),
    (["a"], ["a"]),
    (["a"], ["b"]),
    (["a", "b", "c"], ["a", "b", "c"]),
    (["a", "b", "c"], ["a", "c", "b"]),
    (list("abcdefgh"), list("abcdxfgh")),
    (list("abcdefgh"), list("hgfedcba")),
    (["a", "b", "a", "b", "a"], ["a", "b"]),
    (["a", "b"], ["a", "b", "a", "b", "a"]),
    (list("abc"), list("abcdefghij")),
    (list("abcdefghij"), list("abc")),
    (["x", "b", "c", "d"], list("abcd")),
    (["a", "x", "c", "d"], list("abcd")),
    (["a", "b", "x", "d"], list("abcd")),
    (["a", "b", "c", "x"], list("abcd")),
    (["the"] * 10, ["the", "end"]),
    (["v", "w", "x", "y", "z"], ["v", "q", "x", "q", "z"]),
]


class TestSpbleu:
    def test_frozen_oracle_constants(self):
        # values computed by bleu_oracle before the implementation existed
        assert spbleu(list("abcd"), list("abce")) == pytest.approx(
            59.460355750136046, abs=1e-4
        )
        assert spbleu(["the", "cat"], ["the", "cat", "sat"]) == pytest.approx(
            60.653065971263366, abs=1e-4
        )
        assert spbleu(["x", "y", "z", "w", "q"], list("abcd")) == pytest.approx(
            5.341087579952926, abs=1e-4
        )
        assert spbleu(["a", "a", "a", "a"], ["a", "a"]) == pytest.approx(
            31.947155212313625, abs=1e-4
        )
        assert spbleu(["a", "b"], ["b", "a"]) == pytest.approx(70.71067811865478, abs=1e-4)

    def test_oracle_suite(self):
        assert len(BLEU_SUITE) >= 20
        for hyp, ref in BLEU_SUITE:
            assert spbleu(hyp, ref) == pytest.approx(bleu_oracle(hyp, ref), abs=1e-4), (
                hyp,
                ref,
            )

    def test_identity_is_100(self):
        rng = random.Random(7)
        for _ in range(100):
            x = [rng.choice("abcdefg") for _ in range(rng.randint(4, 30))]
            assert spbleu(x, x) == pytest.approx(100.0, abs=1e-9)

    def test_empty_hypothesis(self):
        assert spbleu([], ["a"]) == 0.0

    def test_empty_reference_is_error(self):
        with pytest.raises(ValueError):
            spbleu(["a"], [])

    def test_permutation_sensitive(self):
        rng = random.Random(11)
        for _ in range(25):
            x = [rng.choice("abcdef") for _ in range(rng.randint(4, 10))]
            if len(set(x)) < 2:
                continue
            ref = list(x)
            perms = [list(reversed(x))] + [
                rng.sample(x, len(x)) for _ in range(10)
            ]
            scores = [spbleu(p, ref) for p in perms if p != x]
            assert scores and min(scores) < spbleu(x, ref)

    def test_random_pairs_match_oracle(self):
        rng = random.Random(3)
        for _ in range(200):
            hyp = [rng.choice("abcd") for _ in range(rng.randint(0, 12))]
            ref = [rng.choice("abcd") for _ in range(rng.randint(1, 12))]
            assert spbleu(hyp, ref) == pytest.approx(bleu_oracle(hyp, ref), abs=1e-4)


class TestPearson:
    def test_perfect_correlation(self):
        assert pearson([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0, abs=1e-9)

    def test_perfect_anticorrelation(self):
        assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-9)

    def test_frozen_closed_form(self):
        # hand oracle: cov 5.5, sigma_x^2 5, sigma_y^2 8.75
        expected = 5.5 / math.sqrt(5.0 * 8.75)
        assert expected == pytest.approx(0.8315218406202998, abs=1e-12)
        assert pearson([1, 2, 3, 4], [1, 3, 2, 5]) == pytest.approx(expected, abs=1e-9)

    def test_zero_variance_is_undefined_signal(self):
        assert pearson([1.0, 1.0, 1.0], [1, 2, 3]) is None
        assert pearson([1, 2, 3], [0.0, 0.0, 0.0]) is None

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            pearson([1, 2], [1, 2, 3])

    def test_too_short(self):
        with pytest.raises(ValueError):
            pearson([1], [1])

    @given(
        st.lists(st.integers(min_value=-1000, max_value=1000), min_size=2, max_size=40),
        st.integers(min_value=-20, max_value=20).filter(lambda a: a != 0),
        st.integers(min_value=-100, max_value=100),
    )
    @settings(max_examples=150)
    def test_affine_transform(self, xs, a, b):
        if len(set(xs)) < 2:
            return
        ys = [a * x + b for x in xs]
        r = pearson(xs, ys)
        assert r == pytest.approx(1.0 if a > 0 else -1.0, abs=1e-9)


class TestQuantile:
    def test_singleton(self):
        for q in (0.0, 0.3, 1.0):
            assert quantile([5.0], q) == 5.0

    def test_decile_of_1_to_100(self):
        values = list(range(1, 101))
        assert quantile(values, 0.10) == 10.0

    def test_max(self):
        assert quantile([3, 1, 2], 1.0) == 3.0

    def test_min(self):
        assert quantile([3, 1, 2], 0.0) == 1.0

    def test_empty_is_error(self):
        with pytest.raises(ValueError):
            quantile([], 0.5)

    def test_q_out_of_range(self):
        for q in (-0.1, 1.1):
            with pytest.raises(ValueError):
                quantile([1.0], q)

    def test_sort_oracle_spot_checks(self):
        rng = random.Random(5)
        for _ in range(300):
            values = [rng.uniform(-10, 10) for _ in range(rng.randint(1, 60))]
            q = rng.random()
            ordered = sorted(values)
            k = math.ceil(q * len(values) - 1e-9 * max(1.0, q * len(values)))
            expected = ordered[min(max(k - 1, 0), len(values) - 1)]
            assert quantile(values, q) == expected

    @given(
        st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=50),
        st.floats(0, 1),
    )
    @settings(max_examples=200)
    def test_returns_member(self, values, q):
        assert quantile(values, q) in values

    @given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=50))
    @settings(max_examples=100)
    def test_monotone_in_q(self, values):
        qs = [i / 20 for i in range(21)]
        results = [quantile(values, q) for q in qs]
        assert results == sorted(results)


class TestTokenizerContract:
    def test_named(self):
        assert DEFAULT_TOKENIZER.name == "whitespace+punct"

    def test_pluggable(self):
        upper = metrics.Tokenizer("upper", lambda s: tuple(s.upper().split()))
        assert tokenize("a b", upper) == ("A", "B")
