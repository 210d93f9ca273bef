"""End-to-end natural-hallucination flow on a small synthetic corpus:
calibrate thresholds, run the detectors, route hallucinations to a fallback
system, and aggregate the report tables.

Run with: python3 demos/03_detect_fallback_report.py
"""

import tempfile
from pathlib import Path

from halluscan import (
    LanguagePair,
    ResourceLevel,
    ScoreMap,
    TranslationRecord,
    Wordlist,
    aggregate,
    calibrate,
    direction_split,
    export_heatmap,
    rates_grid,
    reversal_rate,
    route_fallback,
    run_detectors,
    type_composition,
)
from halluscan.corpus import ResourceMap


def record(rid, model, lp, hyp, **scores):
    return TranslationRecord(
        id=rid,
        lp=LanguagePair.parse(lp),
        model_id=model,
        source_text="the committee approved the annual budget yesterday",
        translation_text=hyp,
        scores=ScoreMap(**scores),
    )


FLUENT = "der ausschuss hat den jahreshaushalt gestern genehmigt"
LOOP = "und dann und dann und dann und dann und dann und dann"

# Calibration data: the model is expected to perform well here, so the
# lowest 0.02% of its source-contribution scores becomes the detached
# floor, and the top 10% of similarity scores become exclusion caps.
validation = [
    record(f"v{i}", "m-big", "en-de", FLUENT,
           alti_src_contrib=0.3 + 0.4 * (i / 4999), labse=i / 4999 * 0.9,
           cometkiwi=i / 4999 * 0.8)
    for i in range(5000)
]
profile = calibrate(validation, "m-big", corpus_id="demo-validation")
print("calibrated profile:", profile.alti_floor, profile.labse_cap, profile.cometkiwi_cap)

# Evaluation corpus: mostly clean, one detached and one oscillatory plant.
corpus = [
    record("e0", "m-big", "en-de", FLUENT, spbleu=40.0, alti_src_contrib=0.6,
           labse=0.4, cometkiwi=0.3, lid_label="de"),
    record("e1", "m-big", "en-de", "vollkommen fremder inhalt ohne bezug",
           spbleu=1.5, alti_src_contrib=0.05, labse=0.2, cometkiwi=0.1,
           lid_label="de"),
    record("e2", "m-big", "en-de", LOOP, spbleu=2.0, alti_src_contrib=0.5,
           labse=0.3, cometkiwi=0.2, lid_label="de"),
    record("e3", "m-big", "en-ta", FLUENT, spbleu=30.0, alti_src_contrib=0.55,
           labse=0.4, cometkiwi=0.3, lid_label="en"),
]
verdicts = run_detectors(corpus, {"m-big": profile},
                         wordlists={"de": Wordlist(entries=frozenset({"fremder"}))})
for v in verdicts:
    print(v.record_id, "hallucination:", v.is_hallucination,
          "| detached:", v.detached.value, "| oscillatory:", v.oscillatory,
          "| off-target:", v.off_target.value, "| toxic:", v.toxic_matches)

# Fallback routing: hallucinated records are replaced by the first fallback
# system whose own verdict is clean; reversal rates account the outcome.
fallback_corpus = [
    record(r.id, "m-diverse", r.lp.code, FLUENT, spbleu=35.0,
           alti_src_contrib=0.6, labse=0.4, cometkiwi=0.3)
    for r in corpus
]
fallback_verdicts = run_detectors(fallback_corpus, {"m-diverse": profile})
plan, hybrid = route_fallback(corpus, verdicts, {"m-diverse": fallback_corpus},
                              {"m-diverse": fallback_verdicts}, ["m-diverse"])
print("\nrouting outcomes:", plan.outcomes)
print("reversal rate:", reversal_rate(verdicts, fallback_verdicts))

# Reporting: per-LP rates, resource-level summaries, heatmap grids.
resource_map = ResourceMap({"en": ResourceLevel.HIGH, "de": ResourceLevel.HIGH,
                            "ta": ResourceLevel.LOW})
report = aggregate(verdicts, corpus, resource_map)
for lp, stats in report.lp_stats["m-big"].items():
    print(f"{lp}: {stats.hallucinations}/{stats.evaluated} = {stats.rate:.1f}%")
print("direction split:", direction_split(report.lp_stats))
print("oscillatory share:", type_composition(verdicts, corpus))

out = Path(tempfile.mkdtemp(prefix="halluscan-demo-"))
grid, companion = export_heatmap(*rates_grid(report), out / "rates.csv")
print("\nheatmap grid written to", grid)
print(grid.read_text())
