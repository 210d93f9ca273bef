"""Scorer implementations: seeded mocks plus optionally-installed real
scorers (LaBSE similarity, fasttext language id, COMET variants).

Real scorers load lazily and fail with an error naming the scorer when
their library or model is unavailable. The source-contribution scorer needs
glass-box access to a translation model's internals, which this adapter
does not ship; outside mock mode it is reported unavailable rather than
fabricated.
"""

from __future__ import annotations

import hashlib
import os

SCORER_NAMES = ("comet22", "cometkiwi", "labse", "lid", "alti")


class ScorerError(Exception):
    """A scorer could not be loaded or is unavailable."""


def _unit(seed: int, rid: str, key: str) -> float:
    """Deterministic pseudo-uniform in [0, 1) from (seed, record, key)."""
    digest = hashlib.blake2b(
        f"{seed}:{rid}:{key}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") / 2**64


def mock_scorer(name: str, seed: int):
    """Seeded pseudo-scorer: deterministic, no model downloads, values
    within each key's declared range."""

    def score(item) -> dict:
        if name == "comet22":
            return {"comet22": 40.0 + 55.0 * _unit(seed, item.id, "comet22")}
        if name == "cometkiwi":
            return {"cometkiwi": 0.2 + 0.7 * _unit(seed, item.id, "cometkiwi")}
        if name == "labse":
            return {"labse": 0.1 + 0.85 * _unit(seed, item.id, "labse")}
        if name == "alti":
            return {"alti_src_contrib": _unit(seed, item.id, "alti")}
        target = item.lp.split("-")[1]
        off = "en" if target != "en" else "de"
        label = target if _unit(seed, item.id, "lid-flip") < 0.9 else off
        return {"lid_label": label, "lid_prob": 0.5 + 0.5 * _unit(seed, item.id, "lid-p")}

    return score


def load_scorer(name: str, device: str = "cpu"):
    if name == "labse":
        return _load_labse(device)
    if name == "lid":
        return _load_lid()
    if name in ("comet22", "cometkiwi"):
        return _load_comet(name, device)
    if name == "alti":
        raise ScorerError(
            "alti: source-contribution extraction needs an introspectable "
            "translation model, which this adapter does not provide; use mock "
            "mode or supply alti scores from the model runner"
        )
    raise ScorerError(f"unknown scorer {name!r}")


def _load_labse(device: str):
    try:
        from sentence_transformers import SentenceTransformer

        model = SentenceTransformer("sentence-transformers/LaBSE", device=device)
    except Exception as exc:
        raise ScorerError(f"labse: cannot load sentence-transformers LaBSE: {exc}") from exc

    def score(item) -> dict:
        emb = model.encode(
            [item.source_text, item.translation_text],
            normalize_embeddings=True,
            show_progress_bar=False,
        )
        return {"labse": max(-1.0, min(1.0, float(emb[0] @ emb[1])))}

    return score


def _load_lid():
    path = os.environ.get("FASTTEXT_LID_MODEL", "lid.176.bin")
    try:
        import fasttext

        model = fasttext.load_model(path)
    except Exception as exc:
        raise ScorerError(f"lid: cannot load fasttext model from {path!r}: {exc}") from exc

    def score(item) -> dict:
        labels, probs = model.predict(item.translation_text.replace("\n", " ") or " ")
        return {
            "lid_label": labels[0].replace("__label__", ""),
            "lid_prob": min(1.0, float(probs[0])),
        }

    return score


def _load_comet(name: str, device: str):
    checkpoint = {
        "comet22": "Unbabel/wmt22-comet-da",
        "cometkiwi": "Unbabel/wmt22-cometkiwi-da",
    }[name]
    try:
        from comet import download_model, load_from_checkpoint

        model = load_from_checkpoint(download_model(checkpoint))
    except Exception as exc:
        raise ScorerError(f"{name}: cannot load {checkpoint}: {exc}") from exc

    def score(item) -> dict:
        entry = {"src": item.source_text, "mt": item.translation_text}
        if name == "comet22":
            if item.reference_text is None:
                raise ValueError(f"record {item.id!r} has no reference for comet22")
            entry["ref"] = item.reference_text
        output = model.predict([entry], batch_size=1, gpus=0, progress_bar=False)
        value = float(output.scores[0])
        # the paper-style 0-100 presentation for the reference-based variant
        return {name: value * 100.0 if name == "comet22" else value}

    return score


def scorer_version(name: str) -> str:
    try:
        if name == "labse":
            import sentence_transformers

            return f"sentence-transformers {sentence_transformers.__version__} LaBSE"
        if name == "lid":
            return os.environ.get("FASTTEXT_LID_MODEL", "lid.176.bin")
        if name in ("comet22", "cometkiwi"):
            import comet

            return f"unbabel-comet {comet.__version__}"
    except Exception:
        pass
    return "unavailable"
