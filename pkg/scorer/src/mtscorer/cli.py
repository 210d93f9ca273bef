"""Command-line entry point for the score adapter.

Reads a corpus JSONL file, runs the requested scorers (or their seeded
mocks), and writes the score-file interchange plus a version manifest.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .adapter import ScoreRequest, emit_scores, read_corpus, score_batch, write_manifest
from .scorers import SCORER_NAMES, ScorerError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtscorer",
        description="Compute (or mock) neural translation scores as a score JSONL file.",
    )
    parser.add_argument("--corpus", required=True, help="input corpus JSONL")
    parser.add_argument("--out", required=True, help="output score JSONL")
    parser.add_argument(
        "--scorers",
        default="labse,lid",
        help=f"comma-separated subset of {','.join(SCORER_NAMES)}",
    )
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--mock", action="store_true",
                        help="emit seeded pseudo-scores; no models needed")
    parser.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        items = read_corpus(args.corpus)
        request = ScoreRequest(
            items=items,
            scorers=tuple(s.strip() for s in args.scorers.split(",") if s.strip()),
            batch_size=args.batch_size,
            device=args.device,
            mock=args.mock,
            seed=args.seed,
        )
        rows = score_batch(request)
        emit_scores(rows, args.out)
        write_manifest(request, args.out)
    except ScorerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"scored {len(rows)} record(s) -> {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
