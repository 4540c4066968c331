"""Versioned JSON documents for fitted models.

Floats are written with Python's shortest round-trip repr, so loading a
document reproduces the exact parameters.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .exceptions import DataError
from .mbnb import MbnbParams
from .mixture import HbmModel, HbmVariant, MixtureParams

FORMAT_VERSION = 1


def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def mbnb_to_dict(m: MbnbParams, /, **extra) -> dict:
    doc = {
        "version": FORMAT_VERSION,
        "kind": "mbnb",
        "pi": float(m.pi),
        "p1": _floats(m.p1),
        "p0": _floats(m.p0),
        "feature_names": list(m.feature_names),
        "alpha": float(m.alpha),
    }
    doc.update(extra)
    return doc


def mixture_to_dict(m: MixtureParams) -> dict:
    return {
        "version": FORMAT_VERSION,
        "kind": "mixture",
        "K": m.n_components,
        "mu": _floats(m.mu),
        "P": _floats(m.P),
        "feature_names": list(m.feature_names),
    }


def hbm_to_dict(h: HbmModel, /, **extra) -> dict:
    doc = {
        "version": FORMAT_VERSION,
        "kind": "hbm",
        "variant": h.variant.value,
        "top": mbnb_to_dict(h.top),
        "mixture": None if h.mixture is None else mixture_to_dict(h.mixture),
        "class_mixtures": None if h.class_mixtures is None else [mixture_to_dict(c) for c in h.class_mixtures],
    }
    doc.update(extra)
    return doc


def to_dict(model, /, **extra) -> dict:
    if isinstance(model, MbnbParams):
        return mbnb_to_dict(model, **extra)
    if isinstance(model, MixtureParams):
        return {**mixture_to_dict(model), **extra}
    if isinstance(model, HbmModel):
        return hbm_to_dict(model, **extra)
    raise TypeError(f"cannot serialize {type(model).__name__}")


def from_dict(doc: dict):
    try:
        version = doc["version"]
        kind = doc["kind"]
    except (KeyError, TypeError):
        raise DataError("model document lacks version/kind") from None
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported model format version {version}")
    try:
        if kind == "mbnb":
            return MbnbParams(doc["pi"], doc["p1"], doc["p0"], tuple(doc["feature_names"]), doc.get("alpha", 0.0))
        if kind == "mixture":
            m = MixtureParams(doc["mu"], doc["P"], tuple(doc["feature_names"]))
            if m.n_components != doc["K"]:
                raise DataError("K does not match the number of components")
            return m
        if kind == "hbm":
            cms = doc.get("class_mixtures")
            return HbmModel(
                HbmVariant(doc["variant"]),
                from_dict(doc["top"]),
                None if doc.get("mixture") is None else from_dict(doc["mixture"]),
                None if cms is None else tuple(from_dict(c) for c in cms),
            )
    except KeyError as e:
        raise DataError(f"model document missing field {e.args[0]!r}") from None
    raise DataError(f"unknown model kind {kind!r}")


def dumps(model, /, **extra) -> str:
    return json.dumps(to_dict(model, **extra), indent=2) + "\n"


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DataError(f"invalid model document: {e}") from None
    return from_dict(doc), doc


def save_model(model, path, /, **extra) -> None:
    Path(path).write_text(dumps(model, **extra), encoding="utf-8")


def load_model(path):
    """Return ``(model, raw document)``."""
    return loads(Path(path).read_text(encoding="utf-8"))
