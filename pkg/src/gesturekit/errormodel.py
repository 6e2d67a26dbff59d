"""Measured quantization-error models: residual collection and GMM fitting.

For each gesture we quantize its training traces deterministically, collect the
signed per-axis residuals between every sample and its assigned codeword, and
summarize them two ways per codeword: per-axis mean/stddev (the parameters of
the codeword-probability formula) and a 3-component Gaussian mixture over
residual distance magnitudes whose components are selected by comparing a
distance against the midpoints of adjacent component means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Codebook
from .quantize import EPS_SIGMA, quantize_deterministic

MIN_GMM_POINTS_PER_COMPONENT = 3   # below k * this, fall back to one Gaussian
SPARSE_CODEWORD_MIN = 9            # codewords with fewer residuals inherit the global fit


@dataclass(frozen=True)
class Mixture1D:
    """A k-component 1-D Gaussian mixture in canonical (ascending-mean) form."""

    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    fallback: bool = False    # true when data was too sparse for a full EM fit

    def __post_init__(self):
        w, m, s = (np.asarray(x, dtype=np.float64)
                   for x in (self.weights, self.means, self.stds))
        if not (w.shape == m.shape == s.shape) or w.ndim != 1:
            raise ValueError("weights, means, stds must be equal-length vectors")
        if abs(w.sum() - 1.0) > 1e-9 or (w <= 0).any():
            raise ValueError("component weights must be positive and sum to 1")
        if (np.diff(m) < 0).any():
            raise ValueError("component means must be ascending")
        if (s < EPS_SIGMA - 1e-15).any():
            raise ValueError(f"component stds must respect the {EPS_SIGMA} floor")
        for name, x in (("weights", w), ("means", m), ("stds", s)):
            object.__setattr__(self, name, x)
            x.setflags(write=False)

    @property
    def k(self) -> int:
        return int(self.weights.size)

    def component_for(self, distance: float) -> int:
        """Pick the component whose region contains the distance.

        Regions are split at the midpoints of adjacent component means:
        below (m1+m2)/2 -> component 0, between the midpoints -> component 1,
        above (m2+m3)/2 -> component 2 (generalized to any k).
        """
        mids = (self.means[:-1] + self.means[1:]) / 2.0
        return int(np.searchsorted(mids, distance, side="right"))

    def density(self, x) -> np.ndarray:
        """Mixture pdf, selecting a single component per point by region."""
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        mids = (self.means[:-1] + self.means[1:]) / 2.0
        c = np.searchsorted(mids, x, side="right")
        m, s = self.means[c], self.stds[c]
        return np.exp(-0.5 * ((x - m) / s) ** 2) / (np.sqrt(2 * np.pi) * s)

    def log_pdf(self, x) -> np.ndarray:
        """Full mixture log-density (all components weighted)."""
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))[:, None]
        z = (x - self.means[None, :]) / self.stds[None, :]
        comp = (np.log(self.weights)[None, :]
                - 0.5 * z * z
                - np.log(np.sqrt(2 * np.pi) * self.stds)[None, :])
        hi = comp.max(axis=1, keepdims=True)
        return (hi + np.log(np.exp(comp - hi).sum(axis=1, keepdims=True)))[:, 0]


@dataclass(frozen=True)
class ResidualSet:
    """Per-codeword signed per-axis residuals, in g.

    per_codeword[i] is a (k_i, 3) array of sample-minus-codeword differences
    for the samples deterministically assigned to codeword i.
    """

    per_codeword: tuple[np.ndarray, ...]

    def __post_init__(self):
        frozen = []
        for r in self.per_codeword:
            r = np.asarray(r, dtype=np.float64).reshape(-1, 3)
            if not np.isfinite(r).all():
                raise ValueError("residuals must be finite")
            r.setflags(write=False)
            frozen.append(r)
        object.__setattr__(self, "per_codeword", tuple(frozen))

    @property
    def counts(self) -> np.ndarray:
        return np.array([r.shape[0] for r in self.per_codeword])

    def pooled(self) -> np.ndarray:
        """All residuals stacked into one (N, 3) array."""
        return np.concatenate(self.per_codeword, axis=0)


def compute_residuals(traces, codebook: Codebook) -> ResidualSet:
    """Quantize each trace deterministically and bin residuals by codeword."""
    bins: list[list[np.ndarray]] = [[] for _ in range(codebook.size)]
    for tr in traces:
        symbols = quantize_deterministic(tr, codebook)
        resid = tr.accel - codebook.codewords[symbols]
        for i in range(codebook.size):
            sel = symbols == i
            if sel.any():
                bins[i].append(resid[sel])
    per_codeword = tuple(
        np.concatenate(b, axis=0) if b else np.empty((0, 3)) for b in bins
    )
    return ResidualSet(per_codeword)


def fit_gmm(residuals, k: int = 3, seed: int = 0) -> Mixture1D:
    """EM-fit a k-component 1-D Gaussian mixture over scalar residuals.

    Needs at least 3*k points; with fewer, returns a flagged fallback whose k
    identical components carry the sample mean and stddev. Deterministic
    under the seed.
    """
    mix, _ = fit_gmm_detailed(residuals, k, seed)
    return mix


def fit_gmm_detailed(residuals, k: int = 3,
                     seed: int = 0) -> tuple[Mixture1D, list[float]]:
    """fit_gmm plus the per-iteration log-likelihood trace."""
    x = np.asarray(residuals, dtype=np.float64).ravel()
    if x.size < MIN_GMM_POINTS_PER_COMPONENT * k:
        mean = float(x.mean()) if x.size else 0.0
        std = max(float(x.std()) if x.size else 0.0, EPS_SIGMA)
        return Mixture1D(np.full(k, 1.0 / k), np.full(k, mean), np.full(k, std),
                         fallback=True), []

    rng = np.random.default_rng(seed)
    means = _kmeanspp_init(x, k, rng)
    stds = np.full(k, max(float(x.std()), EPS_SIGMA))
    weights = np.full(k, 1.0 / k)

    ll_history: list[float] = []
    prev_ll = -np.inf
    for _ in range(200):
        # E-step in log space
        z = (x[:, None] - means[None, :]) / stds[None, :]
        log_comp = (np.log(weights)[None, :] - 0.5 * z * z
                    - np.log(np.sqrt(2 * np.pi) * stds)[None, :])
        hi = log_comp.max(axis=1, keepdims=True)
        log_total = hi[:, 0] + np.log(np.exp(log_comp - hi).sum(axis=1))
        resp = np.exp(log_comp - log_total[:, None])
        ll = float(log_total.sum())
        ll_history.append(ll)

        # M-step
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-12)
        weights = nk / nk.sum()
        means = (resp * x[:, None]).sum(axis=0) / nk
        var = (resp * (x[:, None] - means[None, :]) ** 2).sum(axis=0) / nk
        stds = np.maximum(np.sqrt(var), EPS_SIGMA)

        if ll - prev_ll < 1e-8 and np.isfinite(prev_ll):
            break
        prev_ll = ll

    order = np.argsort(means, kind="stable")
    return Mixture1D(weights[order], means[order], stds[order]), ll_history


def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++-style center choice on scalars."""
    centers = [x[rng.integers(x.size)]]
    for _ in range(1, k):
        d2 = np.min((x[:, None] - np.array(centers)[None, :]) ** 2, axis=1)
        total = d2.sum()
        if total <= 0:
            centers.append(x[rng.integers(x.size)])
            continue
        centers.append(x[rng.choice(x.size, p=d2 / total)])
    return np.array(centers, dtype=np.float64)


@dataclass(frozen=True)
class GmmErrorModel:
    """Per-codeword residual statistics for one gesture.

    axis_means/axis_stds are (n, 3) signed per-axis residual summaries (stds
    floored at EPS_SIGMA); mixtures holds one canonical 3-component mixture
    over residual magnitudes per codeword. Codewords whose residual count is
    below SPARSE_CODEWORD_MIN inherit the gesture-global statistics, recorded
    in `inherited`.
    """

    axis_means: np.ndarray
    axis_stds: np.ndarray
    mixtures: tuple[Mixture1D, ...]
    global_mixture: Mixture1D
    residual_counts: np.ndarray
    inherited: np.ndarray

    def __post_init__(self):
        am = np.asarray(self.axis_means, dtype=np.float64)
        st = np.asarray(self.axis_stds, dtype=np.float64)
        if am.shape != st.shape or am.ndim != 2 or am.shape[1] != 3:
            raise ValueError("axis stats must be (n, 3) arrays")
        if (st < EPS_SIGMA - 1e-15).any():
            raise ValueError("axis stds must respect the variance floor")
        if len(self.mixtures) != am.shape[0]:
            raise ValueError("need one mixture per codeword")
        for name, val in (("axis_means", am), ("axis_stds", st)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        rc = np.asarray(self.residual_counts, dtype=np.int64)
        inh = np.asarray(self.inherited, dtype=bool)
        rc.setflags(write=False)
        inh.setflags(write=False)
        object.__setattr__(self, "residual_counts", rc)
        object.__setattr__(self, "inherited", inh)

    @property
    def n_codewords(self) -> int:
        return int(self.axis_means.shape[0])


def build_error_model(traces, codebook: Codebook, seed: int = 0) -> GmmErrorModel:
    """Fit the per-codeword error model for one gesture's training traces."""
    residuals = compute_residuals(traces, codebook)
    return build_error_model_from_residuals(residuals, seed=seed)


def build_error_model_from_residuals(residuals: ResidualSet,
                                     seed: int = 0) -> GmmErrorModel:
    pooled = residuals.pooled()
    if pooled.shape[0] == 0:
        raise ValueError("no residuals to fit")
    global_axis_mean = pooled.mean(axis=0)
    global_axis_std = np.maximum(pooled.std(axis=0), EPS_SIGMA)
    global_mix = fit_gmm(np.linalg.norm(pooled, axis=1), seed=seed)

    n = len(residuals.per_codeword)
    axis_means = np.empty((n, 3))
    axis_stds = np.empty((n, 3))
    mixtures: list[Mixture1D] = []
    inherited = np.zeros(n, dtype=bool)
    for i, r in enumerate(residuals.per_codeword):
        if r.shape[0] < SPARSE_CODEWORD_MIN:
            axis_means[i] = global_axis_mean
            axis_stds[i] = global_axis_std
            mixtures.append(global_mix)
            inherited[i] = True
        else:
            axis_means[i] = r.mean(axis=0)
            axis_stds[i] = np.maximum(r.std(axis=0), EPS_SIGMA)
            mixtures.append(fit_gmm(np.linalg.norm(r, axis=1), seed=seed + 1 + i))
    return GmmErrorModel(axis_means, axis_stds, tuple(mixtures), global_mix,
                         residuals.counts, inherited)


def error_model_report(traces, codebook: Codebook,
                       model: GmmErrorModel) -> dict:
    """JSON-friendly diagnostic summary of the measured residuals.

    Includes per-codeword counts/means/stddevs and per-position (timestep)
    statistics over the common prefix of the traces; the per-position view is
    informational only.
    """
    residuals = compute_residuals(traces, codebook)
    per_codeword = [
        {
            "codeword": i,
            "count": int(r.shape[0]),
            "mean": [float(v) for v in (r.mean(axis=0) if r.size else np.zeros(3))],
            "std": [float(v) for v in (r.std(axis=0) if r.size else np.zeros(3))],
            "inherited_global": bool(model.inherited[i]),
        }
        for i, r in enumerate(residuals.per_codeword)
    ]
    t_min = min(len(tr) for tr in traces)
    stacked = np.stack([tr.accel[:t_min] for tr in traces])
    assigned = np.stack([
        codebook.codewords[quantize_deterministic(tr, codebook)[:t_min]]
        for tr in traces
    ])
    per_pos = stacked - assigned
    per_position = [
        {
            "t": t,
            "mean": [float(v) for v in per_pos[:, t].mean(axis=0)],
            "std": [float(v) for v in per_pos[:, t].std(axis=0)],
        }
        for t in range(t_min)
    ]
    return {"per_codeword": per_codeword, "per_position": per_position}
