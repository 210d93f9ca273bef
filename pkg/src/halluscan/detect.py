"""Per-record hallucination detectors.

Two main detectors: a top-n-gram repetition check for oscillatory
hallucinations (the translation's most repeated n-gram beats the source's
by at least t, gated on low quality) and a threshold check on
source-contribution scores for detached hallucinations (score under the
calibrated floor, with high LaBSE / CometKiwi similarity excluding the
candidate). Off-target and toxicity flags ride along. A record counts as a
natural hallucination when it is detached OR oscillatory: the two flags can
fire together but the union is counted once.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple, Union

from .corpus import TranslationRecord, Wordlist
from .errors import CorpusFormatError, DataError
from .metrics import DEFAULT_TOKENIZER, Tokenizer, top_ngram
from .thresholds import ThresholdProfile


class TriState(str, Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class TngParams:
    """Top-n-gram detector parameters: n-gram order, minimum repetition-count
    difference, and the quality gate that excludes reasonable translations
    (None disables the gate)."""

    n: int = 4
    t: int = 2
    quality_gate: Optional[float] = 9.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.t < 1:
            raise ValueError(f"t must be >= 1, got {self.t}")


@dataclass(frozen=True)
class DetectionVerdict:
    record_id: str
    detached: TriState
    oscillatory: bool
    off_target: TriState
    toxic: bool
    toxic_matches: Tuple[str, ...] = ()
    evidence: Mapping[str, object] = field(default_factory=dict)
    under_perturbation: Optional[bool] = None

    @property
    def is_hallucination(self) -> bool:
        return self.detached is TriState.YES or self.oscillatory

    @property
    def is_evaluable(self) -> bool:
        """False when a missing score kept the detached check from deciding
        and no other flag settles the verdict."""
        return self.oscillatory or self.detached is not TriState.UNKNOWN


def detect_oscillatory(
    src_tokens: Sequence[str],
    hyp_tokens: Sequence[str],
    params: TngParams = TngParams(),
    spbleu_score: Optional[float] = None,
) -> Tuple[bool, dict]:
    """Flag when the translation's top n-gram count exceeds the source's by
    at least t, unless the translation meets the quality gate.

    All tokens count uniformly, punctuation included; the evidence notes
    this policy.
    """
    hyp_profile = top_ngram(hyp_tokens, params.n)
    src_profile = top_ngram(src_tokens, params.n)
    diff = hyp_profile.top_count - src_profile.top_count
    gated = (
        params.quality_gate is not None
        and spbleu_score is not None
        and spbleu_score > params.quality_gate
    )
    flagged = not gated and diff >= params.t
    evidence = {
        "tng_hyp_top_count": hyp_profile.top_count,
        "tng_src_top_count": src_profile.top_count,
        "tng_diff": diff,
        "tng_n": params.n,
        "tng_t": params.t,
        "tng_spbleu": spbleu_score,
        "tng_token_policy": "all-tokens",
    }
    return flagged, evidence


def detect_detached(
    record: TranslationRecord, profile: ThresholdProfile
) -> Tuple[TriState, dict]:
    """Tri-state detached verdict from the calibrated profile.

    Yes requires the source-contribution score under the floor AND neither
    similarity score above its cap. A missing similarity score skips only
    that exclusion and is listed under "detached_unexcluded" so audits can
    see the check ran without it; a missing source-contribution score makes
    the verdict unknown.
    """
    s = record.scores
    if s.alti_src_contrib is None:
        return TriState.UNKNOWN, {"detached_alti": None}
    evidence: dict = {
        "detached_alti": s.alti_src_contrib,
        "detached_alti_floor": profile.alti_floor,
    }
    verdict = s.alti_src_contrib < profile.alti_floor
    unexcluded = []
    for name, cap in (("labse", profile.labse_cap), ("cometkiwi", profile.cometkiwi_cap)):
        value = getattr(s, name)
        if value is None:
            unexcluded.append(name)
            continue
        evidence[f"detached_{name}"] = value
        evidence[f"detached_{name}_cap"] = cap
        verdict = verdict and value <= cap
    if unexcluded:
        evidence["detached_unexcluded"] = unexcluded
    return (TriState.YES if verdict else TriState.NO), evidence


def detect_off_target(record: TranslationRecord) -> Tuple[TriState, dict]:
    """Yes when the identified language differs from the requested target;
    unknown when no language id is attached. The id confidence is carried
    as evidence only."""
    label = record.scores.lid_label
    if label is None:
        return TriState.UNKNOWN, {"lid_label": None}
    evidence = {
        "lid_label": label,
        "lid_expected": record.lp.target_lang,
        "lid_prob": record.scores.lid_prob,
    }
    verdict = TriState.YES if label != record.lp.target_lang else TriState.NO
    return verdict, evidence


def _strip_edge_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def detect_toxic(
    translation_text: str, wordlist: Wordlist, segmented: Optional[bool] = None
) -> Tuple[str, ...]:
    """Return every distinct wordlist entry found in the text, sorted.

    Segmented scripts match case-folded whole tokens after stripping edge
    punctuation (multi-word entries match as contiguous token windows);
    unsegmented scripts match case-folded substrings.
    """
    if segmented is None:
        segmented = wordlist.match_mode == "token"
    if not wordlist.entries:
        return ()
    folded = translation_text.casefold()
    if not segmented:
        return tuple(sorted(e for e in wordlist.entries if e in folded))
    tokens = [_strip_edge_punct(tok) for tok in folded.split()]
    tokens = [tok for tok in tokens if tok]
    token_set = set(tokens)
    matches = set()
    for entry in wordlist.entries:
        if " " in entry:
            phrase = [_strip_edge_punct(tok) for tok in entry.split()]
            width = len(phrase)
            if any(tokens[i : i + width] == phrase for i in range(len(tokens) - width + 1)):
                matches.add(entry)
        elif entry in token_set:
            matches.add(entry)
    return tuple(sorted(matches))


TokenSidecar = Mapping[Tuple[str, str], Sequence[str]]


def run_detectors(
    records: Sequence[TranslationRecord],
    profiles: Mapping[str, ThresholdProfile],
    params: TngParams = TngParams(),
    wordlists: Optional[Mapping[str, Wordlist]] = None,
    tokenizer: Tokenizer = DEFAULT_TOKENIZER,
    sidecar: Optional[TokenSidecar] = None,
) -> list[DetectionVerdict]:
    """Produce one verdict per record, in input order.

    profiles maps model_id -> ThresholdProfile and must cover every model
    in the corpus; wordlists maps target language -> Wordlist (a missing
    language simply yields no toxicity matches). A pre-tokenized sidecar,
    keyed by (record id, "src"|"hyp"), overrides the tokenizer per record.
    """
    wordlists = wordlists or {}
    verdicts = []
    for rec in records:
        if rec.model_id not in profiles:
            raise DataError(f"no threshold profile for model {rec.model_id!r}")
        profile = profiles[rec.model_id]
        src_tokens = _tokens_for(rec, "src", tokenizer, sidecar)
        hyp_tokens = _tokens_for(rec, "hyp", tokenizer, sidecar)
        oscillatory, evidence = detect_oscillatory(
            src_tokens, hyp_tokens, params, rec.scores.spbleu
        )
        detached, detached_ev = detect_detached(rec, profile)
        off_target, off_ev = detect_off_target(rec)
        evidence.update(detached_ev)
        evidence.update(off_ev)
        wordlist = wordlists.get(rec.lp.target_lang)
        matches = detect_toxic(rec.translation_text, wordlist) if wordlist else ()
        verdicts.append(
            DetectionVerdict(
                record_id=rec.id,
                detached=detached,
                oscillatory=oscillatory,
                off_target=off_target,
                toxic=bool(matches),
                toxic_matches=matches,
                evidence=evidence,
            )
        )
    return verdicts


def _tokens_for(
    rec: TranslationRecord,
    side: str,
    tokenizer: Tokenizer,
    sidecar: Optional[TokenSidecar],
) -> Sequence[str]:
    if sidecar is not None:
        tokens = sidecar.get((rec.id, side))
        if tokens is not None:
            return tokens
    text = rec.source_text if side == "src" else rec.translation_text
    return tokenizer(text)


def load_token_sidecar(path: Union[str, Path]) -> dict[Tuple[str, str], Tuple[str, ...]]:
    """Load pre-tokenized rows {id, side: src|hyp|ref, tokens: [...]}, keyed
    by (id, side)."""
    out: dict[Tuple[str, str], Tuple[str, ...]] = {}
    with open(path, "r", encoding="utf-8-sig") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: malformed JSON: {exc.msg}") from exc
            try:
                rid, side, tokens = obj["id"], obj["side"], obj["tokens"]
            except (KeyError, TypeError) as exc:
                raise CorpusFormatError(f"line {lineno}: need id, side, tokens") from exc
            if side not in ("src", "hyp", "ref"):
                raise CorpusFormatError(f"line {lineno}: bad side {side!r}")
            out[(rid, side)] = tuple(tokens)
    return out


# --- verdict file interchange (JSONL, stable field names) ---


def _verdict_to_dict(v: DetectionVerdict) -> dict:
    out = {
        "record_id": v.record_id,
        "detached": v.detached.value,
        "oscillatory": v.oscillatory,
        "off_target": v.off_target.value,
        "toxic": v.toxic,
        "toxic_matches": list(v.toxic_matches),
        "evidence": dict(v.evidence),
    }
    if v.under_perturbation is not None:
        out["under_perturbation"] = v.under_perturbation
    return out


def write_verdicts(verdicts: Sequence[DetectionVerdict], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in verdicts:
            fh.write(json.dumps(_verdict_to_dict(v), ensure_ascii=False))
            fh.write("\n")


def load_verdicts(path: Union[str, Path]) -> list[DetectionVerdict]:
    out = []
    with open(path, "r", encoding="utf-8-sig") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: malformed JSON: {exc.msg}") from exc
            try:
                out.append(
                    DetectionVerdict(
                        record_id=obj["record_id"],
                        detached=TriState(obj["detached"]),
                        oscillatory=bool(obj["oscillatory"]),
                        off_target=TriState(obj["off_target"]),
                        toxic=bool(obj["toxic"]),
                        toxic_matches=tuple(obj.get("toxic_matches", ())),
                        evidence=obj.get("evidence", {}),
                        under_perturbation=obj.get("under_perturbation"),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise CorpusFormatError(f"line {lineno}: {exc}") from exc
    return out
