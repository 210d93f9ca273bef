"""Score requests, batch scoring, and the score-file interchange.

The adapter reads translation corpora in the core toolkit's JSONL layout
and writes its score-file layout: one JSON object per line holding "id"
plus any of the score keys below. It deliberately has no dependency on the
core package; the file formats are the contract.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple, Union

from .scorers import SCORER_NAMES, ScorerError, load_scorer, mock_scorer, scorer_version

# Canonical key order of the score-file interchange.
SCORE_KEYS = (
    "spbleu",
    "comet22",
    "cometkiwi",
    "labse",
    "alti_src_contrib",
    "lid_label",
    "lid_prob",
)


@dataclass(frozen=True)
class RequestItem:
    id: str
    source_text: str
    translation_text: str
    lp: str
    reference_text: Optional[str] = None


@dataclass(frozen=True)
class ScoreRequest:
    """A batch of records plus scorer selection and execution hints."""

    items: Tuple[RequestItem, ...]
    scorers: Tuple[str, ...]
    batch_size: int = 32
    device: str = "cpu"
    mock: bool = False
    seed: int = 0

    def __post_init__(self):
        seen = set()
        for item in self.items:
            if item.id in seen:
                raise ValueError(f"duplicate id in request: {item.id!r}")
            seen.add(item.id)
        unknown = set(self.scorers) - set(SCORER_NAMES)
        if unknown:
            raise ValueError(f"unknown scorer(s): {sorted(unknown)}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


def read_corpus(path: Union[str, Path]) -> Tuple[RequestItem, ...]:
    """Read request items from a corpus JSONL file (core layout)."""
    items = []
    with open(path, "r", encoding="utf-8-sig") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: malformed JSON: {exc.msg}") from exc
            try:
                items.append(
                    RequestItem(
                        id=obj["id"],
                        source_text=obj["source_text"],
                        translation_text=obj.get("translation_text", ""),
                        lp=obj["lp"],
                        reference_text=obj.get("reference_text"),
                    )
                )
            except KeyError as exc:
                raise ValueError(f"line {lineno}: missing field {exc.args[0]!r}") from exc
    return tuple(items)


def score_batch(request: ScoreRequest) -> dict[str, dict]:
    """Score every item, returning one row per id (input order preserved).

    Rows contain only keys produced by the requested scorers. In mock mode
    the values are seeded pseudo-scores, deterministic and within each key's
    range. A scorer that fails to load is an error naming it; a scorer that
    fails on one record leaves that key out of the row with a warning.
    """
    if request.mock:
        scorer_fns = {name: mock_scorer(name, request.seed) for name in request.scorers}
    else:
        scorer_fns = {name: load_scorer(name, request.device) for name in request.scorers}
    rows: dict[str, dict] = {item.id: {} for item in request.items}
    for name in request.scorers:
        fn = scorer_fns[name]
        for item in request.items:
            try:
                rows[item.id].update(fn(item))
            except ScorerError:
                raise
            except Exception as exc:
                warnings.warn(
                    f"scorer {name!r} failed on record {item.id!r}: {exc}", stacklevel=2
                )
    return rows


def emit_scores(rows: Mapping[str, dict], path: Union[str, Path]) -> None:
    """Write rows in the score-file interchange: one line per id with keys
    in canonical order."""
    with open(path, "w", encoding="utf-8") as fh:
        for rid, row in rows.items():
            out = {"id": rid}
            for key in SCORE_KEYS:
                if key in row:
                    out[key] = row[key]
            fh.write(json.dumps(out, ensure_ascii=False))
            fh.write("\n")


def write_manifest(request: ScoreRequest, path: Union[str, Path]) -> Path:
    """Sidecar manifest naming the scorer versions behind the emitted file."""
    manifest = {
        "mock": request.mock,
        "seed": request.seed,
        "scorers": {
            name: ("mock" if request.mock else scorer_version(name))
            for name in request.scorers
        },
    }
    out = Path(str(path) + ".manifest.json")
    out.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out
