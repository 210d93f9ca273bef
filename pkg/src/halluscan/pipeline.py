"""End-to-end study orchestration.

Two studies live here. The perturbation study follows the 2-rule process:
rule (i) builds a candidate set of sources whose original translations pass
the quality floor for every model (ranked by mean quality, top fraction
kept), and rule (ii) flags a hallucination under perturbation when the
perturbed translation drops below the low-quality ceiling. The mitigation
study routes hallucinated records to the first clean fallback system in an
ordered plan and accounts for reversal rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from statistics import fmean
from typing import Mapping, Optional, Sequence, Tuple, Union

from .corpus import TranslationRecord
from .detect import DetectionVerdict
from .errors import AlignmentError, CorpusFormatError
from .thresholds import ThresholdProfile


@dataclass(frozen=True)
class CandidateSet:
    """Sources eligible for the perturbation study, ordered by descending
    mean original quality, with each member's per-model original spBLEU."""

    ids: Tuple[str, ...]
    scores: Mapping[str, Mapping[str, float]]

    def __contains__(self, source_id: str) -> bool:
        return source_id in self._members

    @cached_property
    def _members(self) -> frozenset:
        return frozenset(self.ids)


def select_candidates(
    per_model_scores: Mapping[str, Mapping[str, float]],
    quality_min: float = 9.0,
    fraction: float = 0.20,
) -> CandidateSet:
    """Rule (i): keep sources where every model clears quality_min
    (strictly), rank by mean spBLEU descending with ascending-id tie-break,
    and return the top floor(fraction * eligible)."""
    if not per_model_scores:
        raise ValueError("need at least one model's scores")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    models = sorted(per_model_scores)
    universe = set(per_model_scores[models[0]])
    for model in models[1:]:
        ids = set(per_model_scores[model])
        if ids != universe:
            missing = sorted(universe ^ ids)[:10]
            raise AlignmentError(
                f"models do not cover the same source ids (e.g. {missing}); "
                f"model {model!r} differs"
            )
    eligible = [
        sid
        for sid in universe
        if all(per_model_scores[m][sid] > quality_min for m in models)
    ]
    eligible.sort(key=lambda sid: (-fmean(per_model_scores[m][sid] for m in models), sid))
    size = fraction * len(eligible)
    count = math.floor(size + 1e-9 * max(1.0, size))
    chosen = tuple(eligible[:count])
    return CandidateSet(
        ids=chosen,
        scores={m: {sid: per_model_scores[m][sid] for sid in chosen} for m in models},
    )


def detect_under_perturbation(
    source_id: str,
    orig_spbleu: float,
    pert_spbleu: float,
    profile: ThresholdProfile,
    candidates: CandidateSet,
) -> bool:
    """Rule (ii): the perturbed translation must fall strictly below the
    low-quality ceiling. Rule (i) is already enforced by candidacy, so a
    non-candidate source is a usage error."""
    if source_id not in candidates:
        raise ValueError(f"source {source_id!r} is not in the candidate set")
    return pert_spbleu < profile.quality_pert_max


@dataclass(frozen=True)
class FallbackPlan:
    """Primary model, ordered fallback models, and the per-record routing
    outcome: "kept", "kept-unreversed", or "replaced-by:<model>"."""

    primary_model_id: str
    fallback_model_ids: Tuple[str, ...]
    outcomes: Mapping[str, str]


def route_fallback(
    primary_records: Sequence[TranslationRecord],
    primary_verdicts: Sequence[DetectionVerdict],
    fallback_records_by_model: Mapping[str, Sequence[TranslationRecord]],
    fallback_verdicts_by_model: Mapping[str, Sequence[DetectionVerdict]],
    plan_order: Sequence[str],
) -> Tuple[FallbackPlan, list[TranslationRecord]]:
    """Build the hybrid corpus: keep clean primary records, replace each
    hallucinated one with the first fallback in plan_order whose own verdict
    is not a hallucination, and keep (marked unreversed) when every fallback
    hallucinates too. Deterministic and order-independent per record."""
    primary_v = _aligned(primary_records, primary_verdicts, "primary")
    fallback_r: dict[str, dict[str, TranslationRecord]] = {}
    fallback_v: dict[str, dict[str, DetectionVerdict]] = {}
    for model in plan_order:
        if model not in fallback_records_by_model or model not in fallback_verdicts_by_model:
            raise AlignmentError(f"fallback model {model!r} missing records or verdicts")
        recs = {r.id: r for r in fallback_records_by_model[model]}
        fallback_r[model] = recs
        fallback_v[model] = _aligned(
            fallback_records_by_model[model], fallback_verdicts_by_model[model], model
        )
        missing = [r.id for r in primary_records if r.id not in recs]
        if missing:
            raise AlignmentError(
                f"fallback model {model!r} lacks records for ids {missing[:10]}"
            )
    outcomes: dict[str, str] = {}
    hybrid: list[TranslationRecord] = []
    for rec in primary_records:
        if not primary_v[rec.id].is_hallucination:
            outcomes[rec.id] = "kept"
            hybrid.append(rec)
            continue
        for model in plan_order:
            if not fallback_v[model][rec.id].is_hallucination:
                outcomes[rec.id] = f"replaced-by:{model}"
                hybrid.append(fallback_r[model][rec.id])
                break
        else:
            outcomes[rec.id] = "kept-unreversed"
            hybrid.append(rec)
    primary_model = primary_records[0].model_id if primary_records else ""
    plan = FallbackPlan(
        primary_model_id=primary_model,
        fallback_model_ids=tuple(plan_order),
        outcomes=outcomes,
    )
    return plan, hybrid


def _aligned(
    records: Sequence[TranslationRecord],
    verdicts: Sequence[DetectionVerdict],
    label: str,
) -> dict[str, DetectionVerdict]:
    by_id = {v.record_id: v for v in verdicts}
    missing = [r.id for r in records if r.id not in by_id]
    if missing:
        raise AlignmentError(f"{label}: no verdict for record ids {missing[:10]}")
    return by_id


def reversal_rate(
    primary_verdicts: Sequence[DetectionVerdict],
    fallback_verdicts: Sequence[DetectionVerdict],
    by_type: Optional[str] = None,
) -> Optional[float]:
    """Fraction of primary hallucinations (optionally of one type) whose
    fallback verdict is not a hallucination; None when the primary produced
    no such hallucinations (the rate is undefined, not zero)."""
    if by_type not in (None, "detached", "oscillatory"):
        raise ValueError(f"by_type must be None, 'detached' or 'oscillatory': {by_type!r}")
    fallback = {v.record_id: v for v in fallback_verdicts}
    selected = []
    for v in primary_verdicts:
        if not v.is_hallucination:
            continue
        if by_type == "detached" and v.detached.value != "yes":
            continue
        if by_type == "oscillatory" and not v.oscillatory:
            continue
        selected.append(v)
    if not selected:
        return None
    missing = [v.record_id for v in selected if v.record_id not in fallback]
    if missing:
        raise AlignmentError(f"fallback verdicts missing for ids {missing[:10]}")
    reversed_count = sum(
        1 for v in selected if not fallback[v.record_id].is_hallucination
    )
    return reversed_count / len(selected)


def save_plan(
    primary_model_id: str,
    fallback_model_ids: Sequence[str],
    path: Union[str, Path],
) -> None:
    """Plan file: primary model plus ordered fallback models, two columns."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# fallback plan; verdicts use each model's own threshold profile\n")
        fh.write(f"primary {primary_model_id}\n")
        for model in fallback_model_ids:
            fh.write(f"fallback {model}\n")


def load_plan(path: Union[str, Path]) -> Tuple[str, Tuple[str, ...]]:
    primary = None
    fallbacks: list[str] = []
    with open(path, "r", encoding="utf-8-sig") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2 or parts[0] not in ("primary", "fallback"):
                raise CorpusFormatError(f"line {lineno}: expected 'primary <model>' or "
                                        f"'fallback <model>', got {text!r}")
            if parts[0] == "primary":
                if primary is not None:
                    raise CorpusFormatError(f"line {lineno}: duplicate primary line")
                primary = parts[1]
            else:
                fallbacks.append(parts[1])
    if primary is None:
        raise CorpusFormatError(f"plan file {path} names no primary model")
    return primary, tuple(fallbacks)
