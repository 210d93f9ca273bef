"""mtscorer: score adapter emitting the halluscan score-file interchange."""

from .adapter import (
    SCORE_KEYS,
    RequestItem,
    ScoreRequest,
    emit_scores,
    read_corpus,
    score_batch,
    write_manifest,
)
from .scorers import SCORER_NAMES, ScorerError

__version__ = "0.1.0"
