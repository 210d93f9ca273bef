"""Build minimally perturbed sources and run the 2-rule detection of
hallucinations under perturbation.

Run with: python3 demos/02_perturbation_study.py
"""

from halluscan import (
    LanguagePair,
    PerturbationSpec,
    ScoreMap,
    ThresholdProfile,
    TranslationRecord,
    build_frequency_pool,
    detect_under_perturbation,
    perturb_corpus,
    select_candidates,
)

records = [
    TranslationRecord(
        id=f"s{i}",
        lp=LanguagePair("en", "de"),
        model_id="demo-model",
        source_text=f"this is source sentence number {i} about the weather",
        translation_text="",
    )
    for i in range(10)
]

# Three perturbation kinds, all deterministic under a seed. Insertion puts
# one of the most frequent test-set tokens at the start of the sentence.
pool = build_frequency_pool(records, k=5)
print("frequency pool:", pool.entries)

for kind in ("misspell", "insert", "capitalize"):
    spec = PerturbationSpec(kind=kind, seed=20240811)
    perturbed = perturb_corpus(records, spec, pool)
    print(f"\n{kind}:")
    print("  before:", records[0].source_text)
    print("  after: ", perturbed[0].source_text)
    print("  lineage:", perturbed[0].perturbation)

# Detection is a 2-rule process. Rule (i): keep sources whose original
# translations clear spBLEU > 9 for every model, rank by mean quality, and
# take the top 20% as candidates. Rule (ii): a candidate hallucinates under
# perturbation when its perturbed translation scores spBLEU < 3.
orig_scores = {
    "demo-model": {f"s{i}": 10.0 + 3 * i for i in range(10)},
    "other-model": {f"s{i}": 12.0 + 2 * i for i in range(10)},
}
candidates = select_candidates(orig_scores, quality_min=9.0, fraction=0.2)
print("\ncandidates (top 20% by mean quality):", candidates.ids)

profile = ThresholdProfile(
    model_id="demo-model", alti_floor=0.1, labse_cap=1.0, cometkiwi_cap=1.0
)
for source_id, pert_score in ((candidates.ids[0], 1.4), (candidates.ids[1], 8.0)):
    hit = detect_under_perturbation(
        source_id, orig_scores["demo-model"][source_id], pert_score, profile, candidates
    )
    print(f"  {source_id}: perturbed spBLEU {pert_score} -> hallucination: {hit}")
