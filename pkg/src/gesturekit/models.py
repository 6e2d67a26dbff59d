"""Trained gesture model bundles and their versioned JSON persistence.

A model set is one trained recognizer: per-gesture HMMs, each paired with the
codebook it was trained against (shared for spherical quantizers, per-gesture
for elliptical ones), optional measured error models, and a prior. Files are
plain JSON with a version field; numeric fields round-trip bit-exact because
floats are serialized via repr.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .core import Codebook, ModelFormatError, UnsupportedVersionError
from .errormodel import GmmErrorModel, Mixture1D
from .hmm import Hmm, Topology
from .quantize import QuantizerKind

FORMAT_VERSION = 1


@dataclass(frozen=True)
class GestureModel:
    """One gesture's trained recognizer components."""

    label: str
    codebook: Codebook
    hmm: Hmm
    quantizer: QuantizerKind
    error_model: GmmErrorModel | None = None
    prior: float = 1.0

    def __post_init__(self):
        if not self.label:
            raise ValueError("gesture label must be non-empty")
        if self.hmm.n_symbols != self.codebook.size:
            raise ValueError(
                f"HMM emits {self.hmm.n_symbols} symbols but codebook has "
                f"{self.codebook.size} codewords")
        if self.error_model is not None \
                and self.error_model.n_codewords != self.codebook.size:
            raise ValueError("error model size does not match codebook")
        if self.quantizer is QuantizerKind.STATISTICAL_GMM \
                and self.error_model is None:
            raise ValueError("statistical_gmm quantizer requires an error model")
        if not (self.prior > 0 and np.isfinite(self.prior)):
            raise ValueError("prior must be positive and finite")

    def with_prior(self, prior: float) -> "GestureModel":
        return replace(self, prior=prior)


def validate_model_set(models) -> None:
    """Check that a list of GestureModels forms a coherent recognizer."""
    models = list(models)
    if not models:
        raise ValueError("model set is empty")
    labels = [m.label for m in models]
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate gesture labels in model set")
    kinds = {m.quantizer for m in models}
    if len(kinds) != 1:
        raise ValueError("all models in a set must share one quantizer kind")
    sizes = {m.codebook.size for m in models}
    if len(sizes) != 1:
        raise ValueError("all codebooks in a set must have equal size")
    total = sum(m.prior for m in models)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"priors must sum to 1, got {total!r}")


def set_priors(models, weights) -> list[GestureModel]:
    """Return a copy of the model set with normalized priors installed.

    weights is either a sequence aligned with the models or a mapping from
    label to weight (absent labels keep their current prior mass). Weights
    must be non-negative and not all zero; an exact zero is floored to a
    negligible positive mass so the prior stays in (0,1].
    """
    models = list(models)
    if isinstance(weights, dict):
        unknown = set(weights) - {m.label for m in models}
        if unknown:
            raise ValueError(f"unknown labels in weights: {sorted(unknown)}")
        raw = [float(weights.get(m.label, m.prior)) for m in models]
    else:
        raw = [float(w) for w in weights]
        if len(raw) != len(models):
            raise ValueError("need one weight per model")
    if any(w < 0 for w in raw):
        raise ValueError("weights must be non-negative")
    if not any(w > 0 for w in raw):
        raise ValueError("weights must not be all zero")
    floor = 1e-12 * max(raw)
    raw = [max(w, floor) for w in raw]
    total = sum(raw)
    return [m.with_prior(w / total) for m, w in zip(models, raw)]


def _codebook_to_dict(cb: Codebook) -> dict:
    return {
        "codewords": cb.codewords.tolist(),
        "shape": cb.shape,
        "center": cb.center.tolist(),
        "radii": cb.radii.tolist(),
    }


def _codebook_from_dict(d: dict) -> Codebook:
    return Codebook(
        codewords=np.array(d["codewords"], dtype=np.float64),
        shape=d["shape"],
        center=np.array(d["center"], dtype=np.float64),
        radii=np.array(d["radii"], dtype=np.float64),
    )


def _mixture_to_dict(m: Mixture1D) -> dict:
    return {"weights": m.weights.tolist(), "means": m.means.tolist(),
            "stds": m.stds.tolist(), "fallback": m.fallback}


def _mixture_from_dict(d: dict) -> Mixture1D:
    return Mixture1D(np.array(d["weights"]), np.array(d["means"]),
                     np.array(d["stds"]), bool(d["fallback"]))


def _error_model_to_dict(em: GmmErrorModel) -> dict:
    return {
        "axis_means": em.axis_means.tolist(),
        "axis_stds": em.axis_stds.tolist(),
        "mixtures": [_mixture_to_dict(m) for m in em.mixtures],
        "global_mixture": _mixture_to_dict(em.global_mixture),
        "residual_counts": em.residual_counts.tolist(),
        "inherited": em.inherited.tolist(),
    }


def _error_model_from_dict(d: dict) -> GmmErrorModel:
    return GmmErrorModel(
        axis_means=np.array(d["axis_means"], dtype=np.float64),
        axis_stds=np.array(d["axis_stds"], dtype=np.float64),
        mixtures=tuple(_mixture_from_dict(m) for m in d["mixtures"]),
        global_mixture=_mixture_from_dict(d["global_mixture"]),
        residual_counts=np.array(d["residual_counts"], dtype=np.int64),
        inherited=np.array(d["inherited"], dtype=bool),
    )


def _hmm_to_dict(h: Hmm) -> dict:
    return {
        "A": h.A.tolist(), "B": h.B.tolist(), "pi": h.pi.tolist(),
        "topology": {"kind": h.topology.kind, "band": h.topology.band},
    }


def _hmm_from_dict(d: dict) -> Hmm:
    topo = Topology(d["topology"]["kind"], d["topology"]["band"])
    return Hmm(np.array(d["A"], dtype=np.float64),
               np.array(d["B"], dtype=np.float64),
               np.array(d["pi"], dtype=np.float64), topo)


def save_models(models, path) -> None:
    """Write a model set to versioned JSON.

    When every model references the same codebook object it is written once
    at the top level instead of per gesture.
    """
    models = list(models)
    validate_model_set(models)
    shared = all(m.codebook is models[0].codebook for m in models[1:]) \
        and len(models) > 1
    doc = {
        "version": FORMAT_VERSION,
        "quantizer": models[0].quantizer.value,
        "shared_codebook": _codebook_to_dict(models[0].codebook) if shared else None,
        "models": [
            {
                "label": m.label,
                "prior": m.prior,
                "codebook": None if shared else _codebook_to_dict(m.codebook),
                "hmm": _hmm_to_dict(m.hmm),
                "error_model": (None if m.error_model is None
                                else _error_model_to_dict(m.error_model)),
            }
            for m in models
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_models(path) -> list[GestureModel]:
    """Read a model set back; shared codebooks reload as one object."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise ModelFormatError("missing version field")
    if doc["version"] != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"unsupported model format version {doc['version']!r}")
    try:
        kind = QuantizerKind(doc["quantizer"])
        shared = (None if doc["shared_codebook"] is None
                  else _codebook_from_dict(doc["shared_codebook"]))
        models = []
        for md in doc["models"]:
            cb = shared if md["codebook"] is None else _codebook_from_dict(md["codebook"])
            if cb is None:
                raise ModelFormatError(
                    f"model {md.get('label')!r} has no codebook")
            em = (None if md["error_model"] is None
                  else _error_model_from_dict(md["error_model"]))
            models.append(GestureModel(
                label=md["label"], codebook=cb, hmm=_hmm_from_dict(md["hmm"]),
                quantizer=kind, error_model=em, prior=float(md["prior"])))
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc
    validate_model_set(models)
    return models
