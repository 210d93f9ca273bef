"""Shared builders for synthetic and planted-truth corpora."""

from __future__ import annotations

import random
from dataclasses import dataclass

import pytest

from halluscan import LanguagePair, ScoreMap, TranslationRecord


def make_record(
    rid,
    lp="en-de",
    model="m1",
    src="a b c d e",
    hyp="v w x y z",
    ref=None,
    pert=None,
    **scores,
):
    return TranslationRecord(
        id=rid,
        lp=LanguagePair.parse(lp),
        model_id=model,
        source_text=src,
        translation_text=hyp,
        reference_text=ref,
        scores=ScoreMap(**scores),
        perturbation=pert,
    )


# Texts used to plant specific detector outcomes. The oscillatory source has
# a top 4-gram count of 1; the oscillatory hypothesis repeats its 4-gram
# three times, so the count difference is 2 (exactly the default threshold).
CLEAN_SRC = "the quick brown fox jumps over the lazy dog"
CLEAN_HYP = "der schnelle braune fuchs springt ueber den faulen hund"
OSC_HYP = "x y z w x y z w x y z w"

CLEAN_SCORES = dict(spbleu=50.0, alti_src_contrib=0.5, labse=0.3, cometkiwi=0.2)
# Calibrated on constant validation distributions: floor 0.2, caps 0.8 / 0.7.
VAL_SCORES = dict(alti_src_contrib=0.2, labse=0.8, cometkiwi=0.7)
DETACHED_SCORES = dict(spbleu=2.0, alti_src_contrib=0.05, labse=0.3, cometkiwi=0.2)
OSC_SCORES = dict(spbleu=2.0, alti_src_contrib=0.5, labse=0.3, cometkiwi=0.2)
TOXIC_TOKEN = "grumblefugg"


@dataclass
class LpPlant:
    """Planted pathology counts for one (model, lp) cell."""

    lp: str
    total: int = 200
    detached_only: int = 0
    oscillatory_only: int = 0
    both: int = 0
    off_target: int = 0
    toxic: int = 0

    @property
    def hallucinations(self) -> int:
        return self.detached_only + self.oscillatory_only + self.both

    @property
    def detached(self) -> int:
        return self.detached_only + self.both

    @property
    def oscillatory(self) -> int:
        return self.oscillatory_only + self.both

    @property
    def rate(self) -> float:
        return 100.0 * self.hallucinations / self.total


def build_planted_records(model, plants, shared_ids=False):
    """One record per planted slot.

    Returns (records, truth) where truth maps record id -> plant kind.
    shared_ids drops the model from the id so corpora translated by
    different models stay aligned on the same source ids.
    """
    records = []
    truth = {}
    for plant in plants:
        target = plant.lp.split("-")[1]
        kinds = (
            ["detached"] * plant.detached_only
            + ["oscillatory"] * plant.oscillatory_only
            + ["both"] * plant.both
            + ["offtarget"] * plant.off_target
            + ["toxic"] * plant.toxic
        )
        kinds += ["clean"] * (plant.total - len(kinds))
        for i, kind in enumerate(kinds):
            rid = f"{plant.lp}.{i:04d}" if shared_ids else f"{model}.{plant.lp}.{i:04d}"
            scores = dict(CLEAN_SCORES, lid_label=target, lid_prob=0.9)
            hyp = CLEAN_HYP
            if kind == "detached":
                scores.update(DETACHED_SCORES)
            elif kind == "oscillatory":
                scores.update(OSC_SCORES)
                hyp = OSC_HYP
            elif kind == "both":
                scores.update(DETACHED_SCORES)
                hyp = OSC_HYP
            elif kind == "offtarget":
                scores["lid_label"] = "en" if target != "en" else "de"
            elif kind == "toxic":
                hyp = f"{CLEAN_HYP} {TOXIC_TOKEN}"
            truth[rid] = kind
            records.append(
                make_record(rid, lp=plant.lp, model=model, src=CLEAN_SRC, hyp=hyp, **scores)
            )
    return records, truth


def build_validation_records(model: str, count: int = 5000) -> list[TranslationRecord]:
    """Constant score distributions so every calibrated quantile is known:
    alti floor 0.2, labse cap 0.8, cometkiwi cap 0.7."""
    return [
        make_record(f"{model}.val.{i:05d}", lp="en-de", model=model, **VAL_SCORES)
        for i in range(count)
    ]


@pytest.fixture
def rng():
    return random.Random(20240811)
