"""Codebook construction and trace quantization.

Codebooks place a fixed template of unit-sphere directions on either one shared
sphere (radius = mean sample norm, center at the origin) or a per-gesture
ellipsoid (per-axis mean / standard deviation of that gesture's samples).
Quantizers map continuous samples to codeword indices, either deterministically
(nearest codeword) or statistically (sampling from a per-sample distribution
over codewords derived from a measured error model or from inverse distances).
"""

from __future__ import annotations

import enum
from typing import TYPE_CHECKING

import numpy as np

from .core import Codebook, Dataset, Trace

if TYPE_CHECKING:
    from .errormodel import GmmErrorModel

EPS_SIGMA = 1e-3   # variance floor, in g; keeps Gaussian densities finite
EPS_DIST = 1e-9    # below this distance a sample counts as on a codeword

_SQRT2 = np.sqrt(2.0)


class QuantizerKind(str, enum.Enum):
    """The four quantizer variants under evaluation."""

    DETERMINISTIC_SPHERICAL = "deterministic_spherical"
    DETERMINISTIC_ELLIPTICAL = "deterministic_elliptical"
    STATISTICAL_GMM = "statistical_gmm"
    STATISTICAL_RANDOM = "statistical_random"

    @property
    def is_statistical(self) -> bool:
        return self in (QuantizerKind.STATISTICAL_GMM, QuantizerKind.STATISTICAL_RANDOM)

    @property
    def shares_codebook(self) -> bool:
        """Spherical quantization uses one codebook for all gestures."""
        return self is QuantizerKind.DETERMINISTIC_SPHERICAL


def unit_sphere_template(n: int = 18) -> np.ndarray:
    """Deterministic template of n equally spaced unit directions.

    For the default n=18 the template is the 6 unit-axis points plus the 12
    normalized edge-midpoint directions (+-1,+-1,0)/sqrt2, (+-1,0,+-1)/sqrt2,
    (0,+-1,+-1)/sqrt2, in that fixed order. Other sizes fall back to a
    Fibonacci-lattice placement, which is also deterministic.
    """
    if n < 1:
        raise ValueError(f"template size must be >= 1, got {n}")
    if n == 18:
        axes = [
            (1, 0, 0), (-1, 0, 0),
            (0, 1, 0), (0, -1, 0),
            (0, 0, 1), (0, 0, -1),
        ]
        edges = []
        for sx in (1, -1):
            for sy in (1, -1):
                edges.append((sx / _SQRT2, sy / _SQRT2, 0.0))
        for sx in (1, -1):
            for sz in (1, -1):
                edges.append((sx / _SQRT2, 0.0, sz / _SQRT2))
        for sy in (1, -1):
            for sz in (1, -1):
                edges.append((0.0, sy / _SQRT2, sz / _SQRT2))
        return np.array(axes + edges, dtype=np.float64)
    # Fibonacci lattice: near-uniform coverage for any n.
    k = np.arange(n, dtype=np.float64)
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    z = 1.0 - (2.0 * k + 1.0) / n
    theta = 2.0 * np.pi * k / phi
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    pts = np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=1)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _all_samples(traces) -> np.ndarray:
    arrs = [tr.accel for tr in traces]
    if not arrs:
        raise ValueError("no traces given")
    return np.concatenate(arrs, axis=0)


def build_spherical_codebook(dataset: Dataset, n: int = 18) -> Codebook:
    """One shared codebook for all gestures: a sphere centered at the origin.

    The radius is the mean Euclidean norm of every sample in the dataset.
    """
    if len(dataset) == 0:
        raise ValueError("cannot build a codebook from an empty dataset")
    samples = _all_samples(dataset.traces)
    radius = float(np.linalg.norm(samples, axis=1).mean())
    radius = max(radius, EPS_SIGMA)
    template = unit_sphere_template(n)
    return Codebook(
        codewords=template * radius,
        shape="spherical",
        center=np.zeros(3),
        radii=np.full(3, radius),
    )


def build_elliptical_codebook(traces, n: int = 18) -> Codebook:
    """Per-gesture codebook on the ellipsoid fitted to this gesture's samples.

    Center is the per-axis mean and radii the per-axis standard deviation
    (floored at EPS_SIGMA) over all samples of the gesture; the template is
    scaled by the radii and translated by the center, so every codeword
    satisfies sum(((c - mu) / sigma)**2) == 1.
    """
    samples = _all_samples(traces)
    if samples.shape[0] < 2:
        raise ValueError("need at least 2 samples to fit an ellipsoid")
    center = samples.mean(axis=0)
    radii = np.maximum(samples.std(axis=0), EPS_SIGMA)
    template = unit_sphere_template(n)
    return Codebook(
        codewords=template * radii + center,
        shape="elliptical",
        center=center,
        radii=radii,
    )


def smooth_trace(trace: Trace, window: int = 3) -> Trace:
    """Centered moving average over the acceleration channels.

    Windows shrink at the boundaries so the output length equals the input
    length. Off by default in every quantizer.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    if window == 1:
        return trace
    half = window // 2
    acc = trace.accel
    out = np.empty_like(acc)
    for t in range(acc.shape[0]):
        lo, hi = max(0, t - half), min(acc.shape[0], t + half + 1)
        out[t] = acc[lo:hi].mean(axis=0)
    return Trace(trace.times, out, trace.gesture_label, trace.subject_id)


def _sq_distances(acc: np.ndarray, codebook: Codebook) -> np.ndarray:
    """(T, n) squared Euclidean distances from each sample to each codeword."""
    diff = acc[:, None, :] - codebook.codewords[None, :, :]
    return np.einsum("tnk,tnk->tn", diff, diff)


def quantize_deterministic(trace: Trace, codebook: Codebook,
                           smooth: bool = False) -> np.ndarray:
    """Map each sample to the index of its nearest codeword.

    Ties break to the lowest index. Returns an int array of trace length.
    """
    if smooth:
        trace = smooth_trace(trace)
    return np.argmin(_sq_distances(trace.accel, codebook), axis=1)


def _gmm_log_weights(acc: np.ndarray, codebook: Codebook,
                     error_model: "GmmErrorModel") -> np.ndarray:
    """(T, n) log numerators of the codeword-probability formula.

    For codeword i the weight is the product over axes k of the Gaussian
    density of the signed per-axis distance d_{i,k} under the measured
    residual statistics (mu_{i,k}, sigma_{i,k}), with the 1/sqrt(2 pi
    sx^2 sy^2 sz^2) normalizer; normalizing over codewords yields the
    mapping distribution.
    """
    mu = error_model.axis_means              # (n, 3)
    sigma = np.maximum(error_model.axis_stds, EPS_SIGMA)
    d = acc[:, None, :] - codebook.codewords[None, :, :]     # (T, n, 3)
    z = (d - mu[None, :, :]) / sigma[None, :, :]
    log_norm = -0.5 * (np.log(2.0 * np.pi) + np.log(sigma ** 2).sum(axis=1))  # (n,)
    return log_norm[None, :] - 0.5 * np.einsum("tnk,tnk->tn", z, z)


def _normalize_log_weights(logw: np.ndarray) -> np.ndarray:
    logw = logw - logw.max(axis=-1, keepdims=True)
    p = np.exp(logw)
    return p / p.sum(axis=-1, keepdims=True)


def codeword_probabilities_gmm(sample: np.ndarray, codebook: Codebook,
                               error_model: "GmmErrorModel") -> np.ndarray:
    """Distribution over codewords for one sample under the measured error model.

    Probabilities are proportional to the per-axis Gaussian density of the
    signed distances to each codeword, normalized over the codebook. Sigmas
    below the EPS_SIGMA floor are clamped, so the result is always finite.
    """
    acc = np.asarray(sample, dtype=np.float64).reshape(1, 3)
    if error_model.n_codewords != codebook.size:
        raise ValueError(
            f"error model covers {error_model.n_codewords} codewords, "
            f"codebook has {codebook.size}"
        )
    return _normalize_log_weights(_gmm_log_weights(acc, codebook, error_model))[0]


def codeword_probabilities_inverse_distance(sample: np.ndarray,
                                            codebook: Codebook) -> np.ndarray:
    """Distribution over codewords proportional to inverse Euclidean distance.

    P(code_i) = (1/d_i) / sum_j (1/d_j). A sample within EPS_DIST of a
    codeword collapses to a point mass on the nearest such codeword.
    """
    acc = np.asarray(sample, dtype=np.float64).reshape(1, 3)
    return _inverse_distance_rows(acc, codebook)[0]


def _inverse_distance_rows(acc: np.ndarray, codebook: Codebook) -> np.ndarray:
    d = np.sqrt(_sq_distances(acc, codebook))
    p = np.zeros_like(d)
    near = d.min(axis=1) < EPS_DIST
    if near.any():
        idx = np.argmin(d[near], axis=1)
        p[np.flatnonzero(near), idx] = 1.0
    far = ~near
    if far.any():
        w = 1.0 / d[far]
        p[far] = w / w.sum(axis=1, keepdims=True)
    return p


def distribution_matrix(trace: Trace, codebook: Codebook, kind: QuantizerKind,
                        error_model: "GmmErrorModel | None" = None) -> np.ndarray:
    """(T, n) per-sample codeword distributions for a statistical quantizer."""
    if kind is QuantizerKind.STATISTICAL_GMM:
        if error_model is None:
            raise ValueError("statistical_gmm quantization requires an error model")
        if error_model.n_codewords != codebook.size:
            raise ValueError("error model and codebook sizes disagree")
        return _normalize_log_weights(
            _gmm_log_weights(trace.accel, codebook, error_model)
        )
    if kind is QuantizerKind.STATISTICAL_RANDOM:
        return _inverse_distance_rows(trace.accel, codebook)
    raise ValueError(f"{kind.value} has no sampling distribution")


def sample_symbols(dist: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one symbol per row of a (T, n) distribution matrix."""
    cum = np.cumsum(dist, axis=1)
    u = rng.random(dist.shape[0])
    idx = (u[:, None] > cum).sum(axis=1)
    return np.minimum(idx, dist.shape[1] - 1)


def sample_symbol_batch(dist: np.ndarray, rng: np.random.Generator,
                        count: int) -> np.ndarray:
    """Draw `count` independent length-T symbol sequences from a (T, n)
    distribution matrix; returns (count, T)."""
    cum = np.cumsum(dist, axis=1)
    u = rng.random((count, dist.shape[0]))
    idx = (u[:, :, None] > cum[None, :, :]).sum(axis=2)
    return np.minimum(idx, dist.shape[1] - 1)


def sample_observation_sequence(trace: Trace, codebook: Codebook,
                                kind: QuantizerKind,
                                error_model: "GmmErrorModel | None" = None,
                                rng=None) -> np.ndarray:
    """Produce one discrete observation sequence for the given quantizer kind.

    Deterministic kinds ignore the RNG and equal quantize_deterministic.
    Statistical kinds draw each symbol independently from its per-sample
    codeword distribution; an identical seed yields an identical sequence.
    """
    if not kind.is_statistical:
        return quantize_deterministic(trace, codebook)
    rng = np.random.default_rng(rng)
    dist = distribution_matrix(trace, codebook, kind, error_model)
    return sample_symbols(dist, rng)
