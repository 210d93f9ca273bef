"""Command-line entry point.

Subcommands: perturb, calibrate, detect, fallback, report. Runs are driven
by a JSON config file (``--config``, or the HALLUSCAN_CONFIG environment
variable) with ``--out``, ``--seed`` and ``--jobs`` overrides; the effective
config is echoed into every output directory as the reproducibility record.

Exit codes are stable: 0 success, 1 usage/config error, 2 data error.
Errors print a single machine-parseable line to stderr.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import detect as detect_mod
from . import pipeline as pipeline_mod
from . import report as report_mod
from . import thresholds as thresholds_mod
from .corpus import (
    ResourceMap,
    TranslationRecord,
    Wordlist,
    load_corpus,
    load_resource_map,
    load_wordlist,
    merge_scores,
    write_corpus,
)
from .errors import ConfigError, DataError
from .metrics import DEFAULT_TOKENIZER
from .perturb import PerturbationSpec, build_frequency_pool, perturb_corpus

CONFIG_ENV_VAR = "HALLUSCAN_CONFIG"

_CONFIG_KEYS = {
    "corpus",
    "scores",
    "profiles",
    "wordlists",
    "resource_map",
    "out",
    "seed",
    "jobs",
    "models",
    "perturbation",
    "tng",
    "thresholds",
    "validation_corpus",
    "study",
    "plan",
    "fallback",
    "verdicts",
    "report_flag",
}


@dataclass
class RunConfig:
    corpus: Optional[str] = None
    scores: list = field(default_factory=list)
    profiles: Optional[str] = None
    wordlists: dict = field(default_factory=dict)
    resource_map: Optional[str] = None
    out: Optional[str] = None
    seed: int = 0
    jobs: int = 0  # 0 -> available cores
    models: list = field(default_factory=list)
    perturbation: dict = field(default_factory=dict)
    tng: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    validation_corpus: Optional[str] = None
    study: Optional[dict] = None
    plan: Optional[str] = None
    fallback: Optional[dict] = None
    verdicts: Optional[str] = None
    report_flag: str = "natural"

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8-sig") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            key: getattr(self, key)
            for key in sorted(_CONFIG_KEYS)
            if getattr(self, key) not in (None, [], {},)
            or key in ("seed", "jobs", "report_flag")
        }


def _echo_config(config: RunConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "run_config.json", "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def _require(config: RunConfig, *keys: str) -> None:
    for key in keys:
        if getattr(config, key) in (None, [], {}):
            raise ConfigError(f"config key {key!r} is required for this command")


def _resolve_path(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{what} path does not exist: {path}")
    return p


def _load_scored_corpus(config: RunConfig, corpus_path: str) -> list[TranslationRecord]:
    records = load_corpus(_resolve_path(corpus_path, "corpus"))
    for score_path in config.scores:
        records = merge_scores(records, _resolve_path(score_path, "score file"))
    return records


def _load_wordlists(config: RunConfig) -> dict[str, Wordlist]:
    return {
        lang: load_wordlist(_resolve_path(path, f"wordlist[{lang}]"))
        for lang, path in sorted(config.wordlists.items())
    }


def _tng_params(config: RunConfig) -> detect_mod.TngParams:
    return detect_mod.TngParams(**config.tng)


def _jobs(config: RunConfig) -> int:
    if config.jobs and config.jobs > 0:
        return config.jobs
    return os.cpu_count() or 1


# --- subcommands ---


def cmd_perturb(config: RunConfig) -> None:
    _require(config, "corpus", "out", "perturbation")
    out_dir = Path(config.out)
    records = load_corpus(_resolve_path(config.corpus, "corpus"))
    spec = PerturbationSpec(seed=config.seed, **config.perturbation)
    pool = None
    if spec.kind == "insert":
        pool = build_frequency_pool(records, DEFAULT_TOKENIZER, spec.insert_pool_size)
    perturbed = perturb_corpus(records, spec, pool)
    _echo_config(config, out_dir)
    write_corpus(perturbed, out_dir / "perturbed.jsonl")
    print(f"wrote {len(perturbed)} perturbed records to {out_dir / 'perturbed.jsonl'}")


def cmd_calibrate(config: RunConfig) -> None:
    _require(config, "validation_corpus", "out")
    out_dir = Path(config.out)
    records = _load_scored_corpus(config, config.validation_corpus)
    models = config.models or sorted({r.model_id for r in records})
    opts = dict(config.thresholds)
    profiles = {
        model: thresholds_mod.calibrate(
            records, model, corpus_id=str(config.validation_corpus), **opts
        )
        for model in models
    }
    _echo_config(config, out_dir)
    thresholds_mod.save_profiles(profiles, out_dir / "profiles.ini")
    print(f"calibrated {len(profiles)} profile(s) to {out_dir / 'profiles.ini'}")


def _detect_shard(args) -> list:
    records, profiles, params, wordlists = args
    return detect_mod.run_detectors(records, profiles, params, wordlists)


def _run_detectors_parallel(
    records: Sequence[TranslationRecord],
    profiles,
    params,
    wordlists,
    jobs: int,
) -> list[detect_mod.DetectionVerdict]:
    if jobs <= 1 or len(records) < 4000:
        return detect_mod.run_detectors(records, profiles, params, wordlists)
    chunk = (len(records) + jobs - 1) // jobs
    shards = [records[i : i + chunk] for i in range(0, len(records), chunk)]
    with multiprocessing.Pool(processes=len(shards)) as pool:
        parts = pool.map(
            _detect_shard, [(shard, profiles, params, wordlists) for shard in shards]
        )
    return [v for part in parts for v in part]


def cmd_detect(config: RunConfig) -> None:
    if config.study is not None:
        _detect_under_perturbation_study(config)
        return
    _require(config, "corpus", "profiles", "out")
    out_dir = Path(config.out)
    records = _load_scored_corpus(config, config.corpus)
    profiles = thresholds_mod.load_profiles(_resolve_path(config.profiles, "profiles"))
    verdicts = _run_detectors_parallel(
        records, profiles, _tng_params(config), _load_wordlists(config), _jobs(config)
    )
    _echo_config(config, out_dir)
    detect_mod.write_verdicts(verdicts, out_dir / "verdicts.jsonl")
    flagged = sum(1 for v in verdicts if v.is_hallucination)
    print(f"wrote {len(verdicts)} verdicts ({flagged} hallucinations) to "
          f"{out_dir / 'verdicts.jsonl'}")


def _detect_under_perturbation_study(config: RunConfig) -> None:
    """Perturbation study: candidate selection over the original corpora
    (rule i) and the low-quality ceiling on perturbed translations (rule ii).

    Emits one verdict per original record. Only the under_perturbation field
    is meaningful here; the natural-hallucination detectors do not run, so
    detached/off_target stay unknown.
    """
    _require(config, "out")
    study = config.study
    for key in ("original", "perturbed"):
        if not isinstance(study.get(key), dict) or not study[key]:
            raise ConfigError(f"study config needs a non-empty {key!r} model->path map")
    if set(study["original"]) != set(study["perturbed"]):
        raise ConfigError("study original/perturbed must cover the same models")
    out_dir = Path(config.out)
    opts = dict(config.thresholds)
    quality_min = opts.get("quality_min", 9.0)
    quality_pert_max = opts.get("quality_pert_max", 3.0)
    fraction = opts.get("candidate_fraction", 0.20)

    originals: dict[str, list[TranslationRecord]] = {}
    perturbed: dict[str, list[TranslationRecord]] = {}
    per_model_scores: dict[str, dict[str, float]] = {}
    pert_by_parent: dict[str, dict[str, TranslationRecord]] = {}
    for model in sorted(study["original"]):
        originals[model] = _load_scored_corpus(config, study["original"][model])
        perturbed[model] = _load_scored_corpus(config, study["perturbed"][model])
        scores = {}
        for rec in originals[model]:
            if rec.scores.spbleu is None:
                raise DataError(f"original record {rec.id!r} ({model}) has no spbleu score")
            scores[rec.id] = rec.scores.spbleu
        per_model_scores[model] = scores
        parents = {}
        for rec in perturbed[model]:
            if rec.perturbation is None:
                raise DataError(f"perturbed record {rec.id!r} ({model}) has no lineage")
            if rec.scores.spbleu is None:
                raise DataError(f"perturbed record {rec.id!r} ({model}) has no spbleu score")
            parents[rec.perturbation.parent_id] = rec
        pert_by_parent[model] = parents

    candidates = pipeline_mod.select_candidates(per_model_scores, quality_min, fraction)
    profile_defaults = thresholds_mod.ThresholdProfile(
        model_id="<study>",
        alti_floor=0.0,
        labse_cap=float("inf"),
        cometkiwi_cap=float("inf"),
        quality_min=quality_min,
        quality_pert_max=quality_pert_max,
        candidate_fraction=fraction,
    )
    # original corpora share source ids across models, so verdicts go into
    # one file per model
    _echo_config(config, out_dir)
    total = flagged = 0
    for model in sorted(originals):
        verdicts = []
        for rec in originals[model]:
            outcome = None
            evidence: dict = {"study": "under_perturbation", "model_id": model}
            if rec.id in candidates:
                pert_rec = pert_by_parent[model].get(rec.id)
                if pert_rec is None:
                    raise DataError(
                        f"no perturbed record for candidate {rec.id!r} under model {model!r}"
                    )
                outcome = pipeline_mod.detect_under_perturbation(
                    rec.id,
                    rec.scores.spbleu,
                    pert_rec.scores.spbleu,
                    profile_defaults,
                    candidates,
                )
                evidence.update(
                    {
                        "orig_spbleu": rec.scores.spbleu,
                        "pert_spbleu": pert_rec.scores.spbleu,
                        "quality_pert_max": quality_pert_max,
                    }
                )
            verdicts.append(
                detect_mod.DetectionVerdict(
                    record_id=rec.id,
                    detached=detect_mod.TriState.UNKNOWN,
                    oscillatory=False,
                    off_target=detect_mod.TriState.UNKNOWN,
                    toxic=False,
                    evidence=evidence,
                    under_perturbation=outcome,
                )
            )
        detect_mod.write_verdicts(verdicts, out_dir / f"verdicts_{model}.jsonl")
        total += len(verdicts)
        flagged += sum(1 for v in verdicts if v.under_perturbation)
    print(
        f"wrote {total} study verdicts ({len(candidates.ids)} candidates per model, "
        f"{flagged} hallucinations under perturbation) to {out_dir}"
    )


def cmd_fallback(config: RunConfig) -> None:
    _require(config, "plan", "fallback", "out")
    fb = config.fallback
    for key in ("primary_corpus", "primary_verdicts", "corpora", "verdicts"):
        if key not in fb:
            raise ConfigError(f"fallback config needs key {key!r}")
    out_dir = Path(config.out)
    primary_model, plan_order = pipeline_mod.load_plan(_resolve_path(config.plan, "plan"))
    primary_records = load_corpus(_resolve_path(fb["primary_corpus"], "primary corpus"))
    primary_verdicts = detect_mod.load_verdicts(
        _resolve_path(fb["primary_verdicts"], "primary verdicts")
    )
    fallback_records = {
        model: load_corpus(_resolve_path(path, f"fallback corpus[{model}]"))
        for model, path in fb["corpora"].items()
    }
    fallback_verdicts = {
        model: detect_mod.load_verdicts(_resolve_path(path, f"fallback verdicts[{model}]"))
        for model, path in fb["verdicts"].items()
    }
    plan, hybrid = pipeline_mod.route_fallback(
        primary_records, primary_verdicts, fallback_records, fallback_verdicts, plan_order
    )
    _echo_config(config, out_dir)
    _write_hybrid(hybrid, plan, out_dir / "hybrid.jsonl")
    with open(out_dir / "routing.tsv", "w", encoding="utf-8") as fh:
        fh.write("# record_id\toutcome\n")
        for rec in primary_records:
            fh.write(f"{rec.id}\t{plan.outcomes[rec.id]}\n")
    with open(out_dir / "reversal.tsv", "w", encoding="utf-8") as fh:
        fh.write("# fallback_model\ttype\treversal_rate\n")
        for model in plan_order:
            for kind in (None, "oscillatory", "detached"):
                rate = pipeline_mod.reversal_rate(
                    primary_verdicts, fallback_verdicts[model], by_type=kind
                )
                label = kind or "all"
                value = "n/a" if rate is None else repr(rate)
                fh.write(f"{model}\t{label}\t{value}\n")
    replaced = sum(1 for o in plan.outcomes.values() if o.startswith("replaced-by:"))
    print(f"hybrid corpus for primary {primary_model!r}: {replaced} replaced, "
          f"wrote {out_dir / 'hybrid.jsonl'}")


def _write_hybrid(hybrid, plan, path: Path) -> None:
    # standard corpus schema plus the producing model per record
    from .corpus import _record_to_dict

    with open(path, "w", encoding="utf-8") as fh:
        for rec in hybrid:
            obj = _record_to_dict(rec)
            obj["produced_by"] = rec.model_id
            fh.write(json.dumps(obj, ensure_ascii=False))
            fh.write("\n")


def cmd_report(config: RunConfig) -> None:
    _require(config, "corpus", "verdicts", "resource_map", "out")
    out_dir = Path(config.out)
    records = _load_scored_corpus(config, config.corpus)
    verdicts = detect_mod.load_verdicts(_resolve_path(config.verdicts, "verdicts"))
    resource_map = load_resource_map(_resolve_path(config.resource_map, "resource map"))
    corpus_report = report_mod.aggregate(verdicts, records, resource_map, flag=config.report_flag)
    _echo_config(config, out_dir)
    report_mod.write_lp_stats(corpus_report, out_dir / "lp_stats.tsv")
    report_mod.write_level_summaries(corpus_report, out_dir / "level_summary.tsv")
    values, has_any = report_mod.rates_grid(corpus_report)
    report_mod.export_heatmap(values, has_any, out_dir / "rates_heatmap.csv")
    composition = report_mod.type_composition(verdicts, records)
    report_mod.export_heatmap(composition, has_any, out_dir / "composition_heatmap.csv")
    try:
        split = report_mod.direction_split(corpus_report.lp_stats)
        report_mod.write_direction_split(split, out_dir / "direction_split.tsv")
    except DataError as exc:
        print(f"note: direction split skipped ({exc})", file=sys.stderr)
    print(f"wrote report tables to {out_dir}")


# --- argument parsing and dispatch ---


class _Parser(argparse.ArgumentParser):
    # usage problems are exit code 1 (argparse defaults to 2, which this
    # CLI reserves for data errors)
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="halluscan",
        description="Detect, characterize and mitigate hallucinated machine translations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, descr in (
        ("perturb", "generate a perturbed source corpus"),
        ("calibrate", "derive per-model threshold profiles from validation scores"),
        ("detect", "run hallucination detectors (or the perturbation study)"),
        ("fallback", "route hallucinations to fallback systems and account reversals"),
        ("report", "aggregate verdicts into tables and heatmap grids"),
    ):
        cmd = sub.add_parser(name, help=descr)
        cmd.add_argument("--config", default=os.environ.get(CONFIG_ENV_VAR),
                         help=f"run config JSON (default: ${CONFIG_ENV_VAR})")
        cmd.add_argument("--out", help="output directory override")
        cmd.add_argument("--seed", type=int, help="seed override")
        cmd.add_argument("--jobs", type=int, help="worker parallelism bound")
    return parser


_COMMANDS = {
    "perturb": cmd_perturb,
    "calibrate": cmd_calibrate,
    "detect": cmd_detect,
    "fallback": cmd_fallback,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if not args.config:
            raise ConfigError(f"no config given (use --config or ${CONFIG_ENV_VAR})")
        config = RunConfig.load(args.config)
        if args.out is not None:
            config.out = args.out
        if args.seed is not None:
            config.seed = args.seed
        if args.jobs is not None:
            config.jobs = args.jobs
        _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TypeError as exc:
        # bad keys inside config sub-objects (spec/params constructors)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
