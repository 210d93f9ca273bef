"""Translation-record data model and file ingestion.

Covers the four input formats: corpus JSONL (one record per line), score
JSONL (rows keyed by record id), toxicity wordlists (one entry per line),
and the two-column resource-level map. Loading is single-pass and every
returned object is immutable, so loaded data can be shared freely across
workers.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Tuple, Union

from .errors import CorpusFormatError, DataError

PERTURBATION_KINDS = ("misspell", "insert", "capitalize")

# Canonical serialization order for score keys.
SCORE_FIELDS = (
    "spbleu",
    "comet22",
    "cometkiwi",
    "labse",
    "alti_src_contrib",
    "lid_label",
    "lid_prob",
)

_SCORE_RANGES = {
    "spbleu": (0.0, 100.0),
    "labse": (-1.0, 1.0),
    "alti_src_contrib": (0.0, 1.0),
    "lid_prob": (0.0, 1.0),
}


@dataclass(frozen=True)
class LanguagePair:
    """An ordered (source, target) translation direction."""

    source_lang: str
    target_lang: str

    def __post_init__(self):
        for code in (self.source_lang, self.target_lang):
            if not code or not code.isascii() or not code.islower() or not code.isalpha():
                raise ValueError(f"language code must be non-empty lowercase ASCII: {code!r}")
        if self.source_lang == self.target_lang:
            raise ValueError(f"source and target language must differ: {self.source_lang!r}")

    @property
    def code(self) -> str:
        return f"{self.source_lang}-{self.target_lang}"

    @classmethod
    def parse(cls, code: str) -> "LanguagePair":
        parts = code.split("-")
        if len(parts) != 2:
            raise ValueError(f"language pair must look like 'en-de', got {code!r}")
        return cls(parts[0], parts[1])

    def __str__(self) -> str:
        return self.code


class ResourceLevel(Enum):
    LOW = "low"
    MID = "mid"
    HIGH = "high"


_LEVEL_ORDER = {ResourceLevel.LOW: 0, ResourceLevel.MID: 1, ResourceLevel.HIGH: 2}
_LEVEL_TOKENS = {
    "low": ResourceLevel.LOW,
    "mid": ResourceLevel.MID,
    "medium": ResourceLevel.MID,
    "high": ResourceLevel.HIGH,
}


def _check_number(field: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CorpusFormatError(f"score {field!r} must be a number, got {type(value).__name__}")
    value = float(value)
    bounds = _SCORE_RANGES.get(field)
    if bounds is not None and not bounds[0] <= value <= bounds[1]:
        raise CorpusFormatError(
            f"score {field!r} out of range [{bounds[0]}, {bounds[1]}]: {value}"
        )
    return value


@dataclass(frozen=True)
class ScoreMap:
    """Named optional scalar scores attached to a record.

    Absent scores stay None so that "missing" is never conflated with a
    legitimate zero.
    """

    spbleu: Optional[float] = None
    comet22: Optional[float] = None
    cometkiwi: Optional[float] = None
    labse: Optional[float] = None
    alti_src_contrib: Optional[float] = None
    lid_label: Optional[str] = None
    lid_prob: Optional[float] = None

    def __post_init__(self):
        for field in SCORE_FIELDS:
            value = getattr(self, field)
            if value is None:
                continue
            if field == "lid_label":
                if not isinstance(value, str) or not value:
                    raise CorpusFormatError("score 'lid_label' must be a non-empty string")
            else:
                object.__setattr__(self, field, _check_number(field, value))

    @classmethod
    def from_dict(cls, data: Mapping) -> "ScoreMap":
        unknown = set(data) - set(SCORE_FIELDS)
        if unknown:
            raise CorpusFormatError(f"unknown score field(s): {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in SCORE_FIELDS if getattr(self, f) is not None}

    def merged(self, new: Mapping) -> "ScoreMap":
        """New values win on key collision."""
        merged = self.to_dict()
        merged.update(new)
        return ScoreMap.from_dict(merged)


@dataclass(frozen=True)
class PerturbationLineage:
    """Links a perturbed record back to its unperturbed parent."""

    parent_id: str
    kind: str
    seed: int

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise ValueError(f"unknown perturbation kind: {self.kind!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True)
class TranslationRecord:
    """One (source, translation) pair with its identity and scores.

    translation_text may legitimately be empty: real systems emit empty
    output and the detectors must see it.
    """

    id: str
    lp: LanguagePair
    model_id: str
    source_text: str
    translation_text: str
    reference_text: Optional[str] = None
    scores: ScoreMap = ScoreMap()
    perturbation: Optional[PerturbationLineage] = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValueError(f"record id must be a non-empty string, got {self.id!r}")
        for field in ("model_id", "source_text", "translation_text"):
            if not isinstance(getattr(self, field), str):
                raise ValueError(f"record {self.id!r}: {field} must be a string")
        if not self.source_text:
            raise ValueError(f"record {self.id!r}: source_text must be non-empty")

    def with_scores(self, scores: ScoreMap) -> "TranslationRecord":
        return replace(self, scores=scores)


_RECORD_FIELDS = {
    "id",
    "lp",
    "model_id",
    "source_text",
    "translation_text",
    "reference_text",
    "scores",
    "perturbation",
    # written by the fallback router to name the producing model; ignored here
    "produced_by",
}


def _record_from_dict(obj: Mapping, lineno: int) -> TranslationRecord:
    if not isinstance(obj, dict):
        raise CorpusFormatError(f"line {lineno}: expected a JSON object")
    unknown = set(obj) - _RECORD_FIELDS
    if unknown:
        raise CorpusFormatError(f"line {lineno}: unknown field(s): {sorted(unknown)}")
    try:
        lp = LanguagePair.parse(obj["lp"]) if isinstance(obj.get("lp"), str) else None
        if lp is None:
            raise ValueError("field 'lp' must be a string like 'en-de'")
        scores = ScoreMap.from_dict(obj.get("scores") or {})
        pert = None
        if obj.get("perturbation") is not None:
            pert = PerturbationLineage(**obj["perturbation"])
        return TranslationRecord(
            id=obj["id"],
            lp=lp,
            model_id=obj["model_id"],
            source_text=obj["source_text"],
            translation_text=obj.get("translation_text", ""),
            reference_text=obj.get("reference_text"),
            scores=scores,
            perturbation=pert,
        )
    except KeyError as exc:
        raise CorpusFormatError(f"line {lineno}: missing field {exc.args[0]!r}") from exc
    except CorpusFormatError as exc:
        raise CorpusFormatError(f"line {lineno}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise CorpusFormatError(f"line {lineno}: {exc}") from exc


def _record_to_dict(rec: TranslationRecord) -> dict:
    out: dict = {
        "id": rec.id,
        "lp": rec.lp.code,
        "model_id": rec.model_id,
        "source_text": rec.source_text,
        "translation_text": rec.translation_text,
    }
    if rec.reference_text is not None:
        out["reference_text"] = rec.reference_text
    scores = rec.scores.to_dict()
    if scores:
        out["scores"] = scores
    if rec.perturbation is not None:
        out["perturbation"] = {
            "parent_id": rec.perturbation.parent_id,
            "kind": rec.perturbation.kind,
            "seed": rec.perturbation.seed,
        }
    return out


def load_corpus(path: Union[str, Path]) -> list[TranslationRecord]:
    """Load a JSONL corpus, validating every record.

    Order is preserved; duplicate ids, malformed lines and out-of-range
    scores are hard errors carrying the offending line number.
    """
    records: list[TranslationRecord] = []
    seen: dict[str, int] = {}
    with open(path, "r", encoding="utf-8-sig") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: malformed JSON: {exc.msg}") from exc
            rec = _record_from_dict(obj, lineno)
            if rec.id in seen:
                raise CorpusFormatError(
                    f"line {lineno}: duplicate id {rec.id!r} (first seen on line {seen[rec.id]})"
                )
            seen[rec.id] = lineno
            records.append(rec)
    return records


def write_corpus(records: Iterable[TranslationRecord], path: Union[str, Path]) -> None:
    """Write records as JSONL with a canonical field order (optional fields
    omitted when absent), so identical inputs produce identical bytes."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(_record_to_dict(rec), ensure_ascii=False))
            fh.write("\n")


def merge_scores(
    records: Sequence[TranslationRecord], score_file: Union[str, Path]
) -> list[TranslationRecord]:
    """Merge a score JSONL file into records by id.

    New values overwrite existing ones on key collision (last write wins,
    also across rows within the file). Rows whose id matches no record are
    counted and reported as a single warning, never an error.
    """
    rows: dict[str, dict] = {}
    unmatched = 0
    by_id = {rec.id: rec for rec in records}
    with open(score_file, "r", encoding="utf-8-sig") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: malformed JSON: {exc.msg}") from exc
            if not isinstance(obj, dict) or not isinstance(obj.get("id"), str):
                raise CorpusFormatError(f"line {lineno}: score row needs a string 'id'")
            rid = obj.pop("id")
            if rid not in by_id:
                unmatched += 1
                continue
            try:
                row = rows.setdefault(rid, {})
                row.update(obj)
                ScoreMap.from_dict(row)  # validate early, naming the line
            except CorpusFormatError as exc:
                raise CorpusFormatError(f"line {lineno}: {exc}") from exc
    if unmatched:
        warnings.warn(f"{unmatched} score row(s) matched no record id", stacklevel=2)
    out = []
    for rec in records:
        new = rows.get(rec.id)
        out.append(rec if new is None else rec.with_scores(rec.scores.merged(new)))
    return out


@dataclass(frozen=True)
class Wordlist:
    """A per-language toxicity wordlist.

    match_mode "token" matches case-folded whole tokens (after stripping
    edge punctuation); "substring" matches case-folded substrings, for
    scripts without whitespace segmentation.
    """

    entries: frozenset[str]
    match_mode: str = "token"

    def __post_init__(self):
        if self.match_mode not in ("token", "substring"):
            raise ValueError(f"match_mode must be 'token' or 'substring': {self.match_mode!r}")


def load_wordlist(path: Union[str, Path], match_mode: Optional[str] = None) -> Wordlist:
    """Load one entry per line; entries are case-folded and de-duplicated,
    empty lines ignored, a leading BOM stripped.

    The match mode defaults to token matching; a sidecar file
    ``<path>.meta.json`` with {"match": "substring"} switches to substring
    matching for unsegmented scripts.
    """
    entries = set()
    with open(path, "r", encoding="utf-8-sig") as fh:
        for line in fh:
            entry = line.strip()
            if entry:
                entries.add(entry.casefold())
    if match_mode is None:
        sidecar = Path(str(path) + ".meta.json")
        match_mode = "token"
        if sidecar.exists():
            meta = json.loads(sidecar.read_text(encoding="utf-8-sig"))
            match_mode = meta.get("match", "token")
    return Wordlist(entries=frozenset(entries), match_mode=match_mode)


class ResourceMap:
    """Language -> resource level map with optional per-LP overrides.

    An LP's level is the minimum of its two languages' levels unless an
    explicit LP row overrides it.
    """

    def __init__(
        self,
        languages: Mapping[str, ResourceLevel],
        overrides: Mapping[Tuple[str, str], ResourceLevel] = {},
    ):
        self._languages = dict(languages)
        self._overrides = dict(overrides)

    def level_for_language(self, code: str) -> ResourceLevel:
        try:
            return self._languages[code]
        except KeyError:
            raise DataError(f"language {code!r} missing from resource map") from None

    def level_for(self, lp: LanguagePair) -> ResourceLevel:
        override = self._overrides.get((lp.source_lang, lp.target_lang))
        if override is not None:
            return override
        a = self.level_for_language(lp.source_lang)
        b = self.level_for_language(lp.target_lang)
        return min(a, b, key=_LEVEL_ORDER.get)


def load_resource_map(path: Union[str, Path]) -> ResourceMap:
    """Parse the two-column map: "<language-or-lp> <level>" per line,
    '#' comments ignored. Level tokens: low, mid (or medium), high."""
    languages: dict[str, ResourceLevel] = {}
    overrides: dict[Tuple[str, str], ResourceLevel] = {}
    with open(path, "r", encoding="utf-8-sig") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise CorpusFormatError(f"line {lineno}: expected two columns, got {text!r}")
            code, token = parts
            level = _LEVEL_TOKENS.get(token.lower())
            if level is None:
                raise CorpusFormatError(f"line {lineno}: unknown resource level {token!r}")
            if "-" in code:
                lp = LanguagePair.parse(code)
                overrides[(lp.source_lang, lp.target_lang)] = level
            else:
                languages[code] = level
    return ResourceMap(languages, overrides)
