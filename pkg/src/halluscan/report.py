"""Aggregation of verdicts into report artifacts.

Per-LP rate tables, resource-level summaries (mean/median rate and the
fraction of LPs with at least one hallucination), oscillatory-share
composition grids, into/out-of-English direction splits, plot-ready heatmap
grids, and Pearson correlation tables. Aggregation is a commutative merge
over verdict partitions: permuting the inputs never changes a byte of the
output files.

Records with an unknown verdict (the detached check could not decide and no
other flag fired) are excluded from rate denominators and surfaced in their
own column, so missing scores cannot silently deflate rates.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean
from typing import Mapping, Optional, Sequence, Tuple, Union

from .corpus import LanguagePair, ResourceLevel, ResourceMap, TranslationRecord
from .detect import DetectionVerdict
from .errors import AlignmentError, DataError
from .metrics import pearson, quantile


@dataclass(frozen=True)
class LpStats:
    """Counts and rate for one model on one language pair. detached and
    oscillatory overlap is allowed; hallucinations counts their union."""

    lp: LanguagePair
    evaluated: int
    hallucinations: int
    detached: int
    oscillatory: int
    off_target: int
    toxic: int
    unknown: int

    @property
    def rate(self) -> float:
        if self.evaluated == 0:
            return 0.0
        return 100.0 * self.hallucinations / self.evaluated


@dataclass(frozen=True)
class ResourceLevelSummary:
    level: ResourceLevel
    lp_with_hallucinations: int
    lp_total: int
    mean_rate: float
    median_rate: float


@dataclass(frozen=True)
class CorpusReport:
    """Per-model LP statistics plus per-model resource-level summaries."""

    lp_stats: Mapping[str, Mapping[LanguagePair, LpStats]]
    level_summaries: Mapping[str, Mapping[ResourceLevel, ResourceLevelSummary]]


def aggregate(
    verdicts: Sequence[DetectionVerdict],
    records: Sequence[TranslationRecord],
    resource_map: ResourceMap,
    flag: str = "natural",
) -> CorpusReport:
    """Aggregate verdicts into per-LP and per-resource-level statistics.

    flag "natural" counts the detached/oscillatory union; flag
    "under_perturbation" counts the perturbation-study outcome instead, with
    non-candidates (outcome None) in the unknown column.
    """
    if flag not in ("natural", "under_perturbation"):
        raise ValueError(f"flag must be 'natural' or 'under_perturbation': {flag!r}")
    by_id = {v.record_id: v for v in verdicts}
    missing = [r.id for r in records if r.id not in by_id]
    if missing:
        raise AlignmentError(f"no verdict for record ids {missing[:10]}")

    counts: dict[str, dict[LanguagePair, dict[str, int]]] = {}
    for rec in records:
        v = by_id[rec.id]
        cell = counts.setdefault(rec.model_id, {}).setdefault(
            rec.lp,
            dict.fromkeys(
                ("evaluated", "hall", "detached", "oscillatory", "off", "toxic", "unknown"), 0
            ),
        )
        if flag == "natural":
            evaluable = v.is_evaluable
            hallucinated = v.is_hallucination
        else:
            evaluable = v.under_perturbation is not None
            hallucinated = bool(v.under_perturbation)
        if not evaluable:
            cell["unknown"] += 1
            continue
        cell["evaluated"] += 1
        cell["hall"] += hallucinated
        cell["detached"] += v.detached.value == "yes"
        cell["oscillatory"] += v.oscillatory
        cell["off"] += v.off_target.value == "yes"
        cell["toxic"] += v.toxic

    lp_stats: dict[str, dict[LanguagePair, LpStats]] = {}
    level_summaries: dict[str, dict[ResourceLevel, ResourceLevelSummary]] = {}
    for model, cells in counts.items():
        stats = {
            lp: LpStats(
                lp=lp,
                evaluated=c["evaluated"],
                hallucinations=c["hall"],
                detached=c["detached"],
                oscillatory=c["oscillatory"],
                off_target=c["off"],
                toxic=c["toxic"],
                unknown=c["unknown"],
            )
            for lp, c in cells.items()
        }
        lp_stats[model] = stats
        by_level: dict[ResourceLevel, list[LpStats]] = {}
        for lp, stat in stats.items():
            by_level.setdefault(resource_map.level_for(lp), []).append(stat)
        level_summaries[model] = {
            level: ResourceLevelSummary(
                level=level,
                lp_with_hallucinations=sum(1 for s in group if s.hallucinations >= 1),
                lp_total=len(group),
                mean_rate=fmean(s.rate for s in group),
                median_rate=quantile([s.rate for s in group], 0.5),
            )
            for level, group in by_level.items()
        }
    return CorpusReport(lp_stats=lp_stats, level_summaries=level_summaries)


def type_composition(
    verdicts: Sequence[DetectionVerdict],
    records: Sequence[TranslationRecord],
) -> dict[str, dict[LanguagePair, Optional[float]]]:
    """Percentage of hallucinations that are oscillatory, per model and LP;
    a cell with no hallucinations is None (absent, distinct from 0%)."""
    by_id = {v.record_id: v for v in verdicts}
    missing = [r.id for r in records if r.id not in by_id]
    if missing:
        raise AlignmentError(f"no verdict for record ids {missing[:10]}")
    tallies: dict[str, dict[LanguagePair, list[int]]] = {}
    for rec in records:
        v = by_id[rec.id]
        cell = tallies.setdefault(rec.model_id, {}).setdefault(rec.lp, [0, 0])
        if v.is_hallucination:
            cell[0] += 1
            cell[1] += v.oscillatory
    return {
        model: {
            lp: (100.0 * osc / hall if hall else None) for lp, (hall, osc) in cells.items()
        }
        for model, cells in tallies.items()
    }


def direction_split(
    lp_stats: Mapping[str, Mapping[LanguagePair, LpStats]],
) -> dict[str, dict[str, Optional[float]]]:
    """Mean LP rate per model split into out-of-English and into-English
    buckets. Any LP not involving English is an error."""
    out: dict[str, dict[str, Optional[float]]] = {}
    for model, stats in lp_stats.items():
        buckets: dict[str, list[float]] = {"out_of_english": [], "into_english": []}
        for lp, stat in stats.items():
            if lp.source_lang == "en":
                buckets["out_of_english"].append(stat.rate)
            elif lp.target_lang == "en":
                buckets["into_english"].append(stat.rate)
            else:
                raise DataError(f"language pair {lp.code!r} is not English-centric")
        out[model] = {
            direction: (fmean(rates) if rates else None)
            for direction, rates in buckets.items()
        }
    return out


def correlation_report(
    pairs_by_model: Mapping[str, Sequence[Tuple[float, float]]],
) -> dict[str, Optional[float]]:
    """Pearson r per model over pooled (x, y) pairs; zero-variance series
    propagate the undefined signal as None."""
    out = {}
    for model, pairs in pairs_by_model.items():
        xs = [p[0] for p in pairs]
        ys = [p[1] for p in pairs]
        out[model] = pearson(xs, ys)
    return out


# --- file writers: TSV tables and CSV heatmap grids ---


def _fmt(value) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_lp_stats(report: CorpusReport, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(
            "# model\tlp\tevaluated\thallucinations\tdetached\toscillatory"
            "\toff_target\ttoxic\tunknown\trate_pct\n"
        )
        for model in sorted(report.lp_stats):
            stats = report.lp_stats[model]
            for lp in sorted(stats, key=lambda x: x.code):
                s = stats[lp]
                row = (
                    model, lp.code, s.evaluated, s.hallucinations, s.detached,
                    s.oscillatory, s.off_target, s.toxic, s.unknown, s.rate,
                )
                fh.write("\t".join(_fmt(v) for v in row) + "\n")


def write_level_summaries(report: CorpusReport, path: Union[str, Path]) -> None:
    order = {ResourceLevel.LOW: 0, ResourceLevel.MID: 1, ResourceLevel.HIGH: 2}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(
            "# model\tlevel\tlp_with_hallucinations\tlp_total\tmean_rate_pct"
            "\tmedian_rate_pct\n"
        )
        for model in sorted(report.level_summaries):
            summaries = report.level_summaries[model]
            for level in sorted(summaries, key=order.get):
                s = summaries[level]
                row = (
                    model, level.value, s.lp_with_hallucinations, s.lp_total,
                    s.mean_rate, s.median_rate,
                )
                fh.write("\t".join(_fmt(v) for v in row) + "\n")


def write_direction_split(
    split: Mapping[str, Mapping[str, Optional[float]]], path: Union[str, Path]
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# model\tdirection\tmean_rate_pct\n")
        for model in sorted(split):
            for direction in ("out_of_english", "into_english"):
                fh.write(f"{model}\t{direction}\t{_fmt(split[model][direction])}\n")


def write_correlations(
    correlations: Mapping[str, Optional[float]], kind: str, path: Union[str, Path]
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# model\tkind\tpearson_r\n")
        for model in sorted(correlations):
            fh.write(f"{model}\t{kind}\t{_fmt(correlations[model])}\n")


def rates_grid(
    report: CorpusReport,
) -> Tuple[dict[str, dict[LanguagePair, Optional[float]]], dict[str, dict[LanguagePair, bool]]]:
    """Heatmap inputs from a report: per-cell rate and the has-any flag
    (at least one hallucination in that model-LP cell)."""
    values: dict[str, dict[LanguagePair, Optional[float]]] = {}
    has_any: dict[str, dict[LanguagePair, bool]] = {}
    for model, stats in report.lp_stats.items():
        values[model] = {lp: s.rate for lp, s in stats.items()}
        has_any[model] = {lp: s.hallucinations >= 1 for lp, s in stats.items()}
    return values, has_any


def export_heatmap(
    values: Mapping[str, Mapping[LanguagePair, Optional[float]]],
    has_any: Mapping[str, Mapping[LanguagePair, bool]],
    path: Union[str, Path],
) -> Tuple[Path, Path]:
    """Write the rectangular grid (rows = LPs, columns = models) and its
    has-any companion. Cells absent from a model, or explicitly None, stay
    empty rather than becoming 0."""
    path = Path(path)
    companion = path.with_name(path.stem + "_hasany" + path.suffix)
    models = sorted(values)
    lps = sorted({lp for cells in values.values() for lp in cells}, key=lambda x: x.code)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lp"] + models)
        for lp in lps:
            row = [lp.code]
            for model in models:
                value = values[model].get(lp)
                row.append("" if value is None else repr(float(value)))
            writer.writerow(row)
    with open(companion, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lp"] + models)
        for lp in lps:
            row = [lp.code]
            for model in models:
                if lp not in values[model] or values[model][lp] is None:
                    row.append("")
                else:
                    row.append("true" if has_any[model].get(lp, False) else "false")
            writer.writerow(row)
    return path, companion
