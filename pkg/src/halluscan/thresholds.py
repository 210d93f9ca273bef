"""Per-model detection threshold profiles and their calibration.

A profile holds the calibrated detached-detection thresholds (ALTI-style
source-contribution floor plus LaBSE / CometKiwi exclusion caps, all taken
as nearest-rank quantiles of validation-score distributions) together with
the fixed quality thresholds used by the perturbation study.
"""

from __future__ import annotations

import configparser
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .corpus import TranslationRecord
from .errors import DataError
from .metrics import quantile

# Below this many validation records the floor quantile (default 0.02%)
# selects from too thin a tail to be meaningful.
MIN_RECOMMENDED_RECORDS = 5000


@dataclass(frozen=True)
class Provenance:
    corpus_id: str
    record_count: int


@dataclass(frozen=True)
class ThresholdProfile:
    model_id: str
    alti_floor: float
    labse_cap: float
    cometkiwi_cap: float
    quality_min: float = 9.0
    quality_pert_max: float = 3.0
    candidate_fraction: float = 0.20
    provenance: Optional[Provenance] = None

    def __post_init__(self):
        if not 0.0 <= self.alti_floor <= 1.0:
            raise ValueError(f"alti_floor must be in [0, 1], got {self.alti_floor}")
        if not 0.0 < self.candidate_fraction <= 1.0:
            raise ValueError(
                f"candidate_fraction must be in (0, 1], got {self.candidate_fraction}"
            )


def calibrate(
    validation_records: Sequence[TranslationRecord],
    model_id: str,
    corpus_id: str = "",
    floor_quantile: float = 0.0002,
    cap_quantile: float = 0.90,
    quality_min: float = 9.0,
    quality_pert_max: float = 3.0,
    candidate_fraction: float = 0.20,
) -> ThresholdProfile:
    """Derive a ThresholdProfile from validation-corpus score distributions.

    The floor is the lowest-0.02% nearest-rank quantile of the model's
    source-contribution scores; the caps are the top-10% quantiles of the
    LaBSE and CometKiwi distributions. A cap whose scores are absent
    becomes +inf (the exclusion then never fires) with a warning.
    """
    recs = [r for r in validation_records if r.model_id == model_id]
    if not recs:
        raise DataError(f"no validation records for model {model_id!r}")
    alti = [r.scores.alti_src_contrib for r in recs if r.scores.alti_src_contrib is not None]
    if not alti:
        raise DataError(f"validation records for model {model_id!r} carry no alti_src_contrib")
    if len(recs) < MIN_RECOMMENDED_RECORDS:
        warnings.warn(
            f"only {len(recs)} validation records for {model_id!r}; "
            f"the {floor_quantile:.4%} floor quantile is unreliable below "
            f"{MIN_RECOMMENDED_RECORDS}",
            stacklevel=2,
        )
    caps = {}
    for name in ("labse", "cometkiwi"):
        vals = [getattr(r.scores, name) for r in recs if getattr(r.scores, name) is not None]
        if vals:
            caps[name] = quantile(vals, cap_quantile)
        else:
            caps[name] = math.inf
            warnings.warn(
                f"no {name} scores for model {model_id!r}; cap set to +inf", stacklevel=2
            )
    return ThresholdProfile(
        model_id=model_id,
        alti_floor=quantile(alti, floor_quantile),
        labse_cap=caps["labse"],
        cometkiwi_cap=caps["cometkiwi"],
        quality_min=quality_min,
        quality_pert_max=quality_pert_max,
        candidate_fraction=candidate_fraction,
        provenance=Provenance(corpus_id=corpus_id, record_count=len(recs)),
    )


def save_profiles(
    profiles: Mapping[str, ThresholdProfile], path: Union[str, Path]
) -> None:
    """Write profiles keyed by model_id as key-value sections; +inf is
    encoded as the literal string "inf". Deterministic byte-for-byte."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    for model_id in sorted(profiles):
        p = profiles[model_id]
        section = {
            "alti_floor": repr(p.alti_floor),
            "labse_cap": repr(p.labse_cap),
            "cometkiwi_cap": repr(p.cometkiwi_cap),
            "quality_min": repr(p.quality_min),
            "quality_pert_max": repr(p.quality_pert_max),
            "candidate_fraction": repr(p.candidate_fraction),
        }
        if p.provenance is not None:
            section["provenance_corpus"] = p.provenance.corpus_id
            section["provenance_records"] = str(p.provenance.record_count)
        parser[model_id] = section
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)


def load_profiles(path: Union[str, Path]) -> dict[str, ThresholdProfile]:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    with open(path, "r", encoding="utf-8-sig") as fh:
        parser.read_file(fh)
    profiles = {}
    for model_id in parser.sections():
        sec = parser[model_id]
        provenance = None
        if "provenance_corpus" in sec or "provenance_records" in sec:
            provenance = Provenance(
                corpus_id=sec.get("provenance_corpus", ""),
                record_count=int(sec.get("provenance_records", "0")),
            )
        try:
            profiles[model_id] = ThresholdProfile(
                model_id=model_id,
                alti_floor=float(sec["alti_floor"]),
                labse_cap=float(sec["labse_cap"]),
                cometkiwi_cap=float(sec["cometkiwi_cap"]),
                quality_min=float(sec["quality_min"]),
                quality_pert_max=float(sec["quality_pert_max"]),
                candidate_fraction=float(sec["candidate_fraction"]),
                provenance=provenance,
            )
        except (KeyError, ValueError) as exc:
            raise DataError(f"profile {model_id!r} in {path}: {exc}") from exc
    return profiles


def load_profile(path: Union[str, Path], model_id: str) -> ThresholdProfile:
    profiles = load_profiles(path)
    if model_id not in profiles:
        raise DataError(f"profile file {path} has no model {model_id!r}")
    return profiles[model_id]
