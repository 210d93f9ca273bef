"""halluscan: corpus-scale detection, characterization and mitigation of
hallucinated machine translations.

The package splits into small, pure layers: a translation-record data model
with JSONL interchange (corpus), lexical/statistical primitives (metrics),
deterministic source perturbations (perturb), per-record detectors
(detect), quantile threshold calibration (thresholds), study orchestration
(pipeline), and report aggregation (report). The ``halluscan`` CLI wires
them into reproducible runs.
"""

from .corpus import (
    LanguagePair,
    PerturbationLineage,
    ResourceLevel,
    ResourceMap,
    ScoreMap,
    TranslationRecord,
    Wordlist,
    load_corpus,
    load_resource_map,
    load_wordlist,
    merge_scores,
    write_corpus,
)
from .detect import (
    DetectionVerdict,
    TngParams,
    TriState,
    detect_detached,
    detect_off_target,
    detect_oscillatory,
    detect_toxic,
    load_verdicts,
    run_detectors,
    write_verdicts,
)
from .errors import AlignmentError, ConfigError, CorpusFormatError, DataError
from .metrics import (
    DEFAULT_TOKENIZER,
    NgramProfile,
    Tokenizer,
    pearson,
    quantile,
    spbleu,
    tokenize,
    top_ngram,
)
from .perturb import (
    FrequencyPool,
    PerturbationSpec,
    build_frequency_pool,
    derive_seed,
    perturb_capitalize,
    perturb_corpus,
    perturb_insert,
    perturb_misspell,
)
from .pipeline import (
    CandidateSet,
    FallbackPlan,
    detect_under_perturbation,
    load_plan,
    reversal_rate,
    route_fallback,
    save_plan,
    select_candidates,
)
from .report import (
    CorpusReport,
    LpStats,
    ResourceLevelSummary,
    aggregate,
    correlation_report,
    direction_split,
    export_heatmap,
    rates_grid,
    type_composition,
    write_lp_stats,
)
from .thresholds import Provenance, ThresholdProfile, calibrate, load_profiles, save_profiles

__version__ = "0.1.0"
