"""Lazy uncertain values, sequential hypothesis testing, and the classifiers.

An UncertainValue wraps a sampler and defers all computation until a
hypothesis test actually needs evidence. pr() draws batches and maintains a
Wald interval on the Bernoulli mean until it clears the queried probability
on either side, so easy questions stop after one batch and only genuinely
close calls pay for more samples.

The statistical classifier treats the quantizer distribution of each gesture
as a distribution over symbol sequences for the trace and estimates each
gesture's evidence, the mean likelihood of a sampled sequence under that
gesture's model, by Monte-Carlo rounds that share one underlying random draw.
The posterior over gestures is the softmax of log prior plus log evidence;
sampling stops once that posterior vector is stable across batches. The
decision is the posterior argmax when it clears the threshold thr, so replays
across a threshold grid are exactly monotone.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from .hmm import log_likelihood, stacked_log_likelihood
from .quantize import (QuantizerKind, distribution_matrix,
                       quantize_deterministic)


@dataclass(frozen=True)
class HypothesisConfig:
    """Parameters of the sequential Bernoulli test."""

    prob: float = 0.5
    alpha: float = 0.1
    max_samples: int = 1000
    batch: int = 50

    def __post_init__(self):
        if not 0 < self.prob < 1:
            raise ValueError("prob must be in (0,1)")
        if not 0 < self.alpha < 0.5:
            raise ValueError("alpha must be in (0,0.5)")
        if self.batch < 1 or self.max_samples < self.batch:
            raise ValueError("need max_samples >= batch >= 1")

    @property
    def z(self) -> float:
        return float(norm.ppf(1.0 - self.alpha / 2.0))


class UncertainValue:
    """A distribution represented by a batched sampler.

    The sampler maps (rng, n) to an array of n draws; the same seed stream
    therefore reproduces the same sample sequence. Values compose by mapping
    elementwise functions over draws.
    """

    def __init__(self, sampler: Callable[[np.random.Generator, int], np.ndarray]):
        self._sampler = sampler

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        out = np.asarray(self._sampler(rng, n))
        if out.shape[0] != n:
            raise ValueError("sampler returned wrong batch size")
        return out

    @classmethod
    def constant(cls, value) -> "UncertainValue":
        return cls(lambda rng, n: np.repeat(np.asarray(value)[None, ...], n, axis=0))

    @classmethod
    def bernoulli(cls, p: float) -> "UncertainValue":
        if not 0 <= p <= 1:
            raise ValueError("p must be in [0,1]")
        return cls(lambda rng, n: rng.random(n) < p)

    @classmethod
    def normal(cls, mean: float, std: float) -> "UncertainValue":
        return cls(lambda rng, n: rng.normal(mean, std, n))

    def map(self, f: Callable[[np.ndarray], np.ndarray]) -> "UncertainValue":
        return UncertainValue(lambda rng, n: np.asarray(f(self.sample(rng, n))))

    @staticmethod
    def combine(f: Callable[..., np.ndarray], *values: "UncertainValue") -> "UncertainValue":
        return UncertainValue(
            lambda rng, n: np.asarray(f(*(v.sample(rng, n) for v in values))))

    def __gt__(self, other: float) -> "UncertainValue":
        return self.map(lambda x: x > other)

    def __lt__(self, other: float) -> "UncertainValue":
        return self.map(lambda x: x < other)


def _wald_bounds(wins: float, n: int, z: float) -> tuple[float, float]:
    p = wins / n
    half = z * math.sqrt(p * (1.0 - p) / n)
    return p - half, p + half


def _sequential_test(draw: Callable[[int], np.ndarray], cfg: HypothesisConfig,
                     prob: float) -> tuple[bool, np.ndarray]:
    """Run the sequential Wald test against `prob` on a batched truth source.

    Returns (decision, stream of drawn booleans). Decides true as soon as the
    interval's lower bound exceeds prob, false as soon as the upper bound
    drops below it, and by point estimate at the max_samples cap.
    """
    z = cfg.z
    chunks: list[np.ndarray] = []
    wins = 0
    n = 0
    while n < cfg.max_samples:
        take = min(cfg.batch, cfg.max_samples - n)
        got = np.asarray(draw(take), dtype=bool)
        chunks.append(got)
        wins += int(got.sum())
        n += got.size
        lo, hi = _wald_bounds(wins, n, z)
        if lo > prob:
            return True, np.concatenate(chunks)
        if hi < prob:
            return False, np.concatenate(chunks)
    return wins / n > prob, np.concatenate(chunks)


def decide_stream(stream: np.ndarray, cfg: HypothesisConfig, prob: float) -> bool:
    """Replay the sequential test over an already-recorded evidence stream.

    The stream holds values in [0, 1]: Bernoulli truths or per-draw
    probabilities. The interval half-width uses m(1-m)/n, which for a mean-m
    variable bounded in [0, 1] is the largest possible variance, so the test
    stays valid (conservatively) for non-boolean streams. The stream is
    walked in the same batch sizes as the live test; its end plays the role
    of the max_samples cap. For a fixed stream the result is monotone in
    prob: deciding true at some threshold implies true at every lower one.
    """
    stream = np.asarray(stream, dtype=np.float64)
    z = cfg.z
    wins = 0.0
    n = 0
    while n < stream.size:
        take = min(cfg.batch, stream.size - n)
        wins += float(stream[n:n + take].sum())
        n += take
        lo, hi = _wald_bounds(wins, n, z)
        if lo > prob:
            return True
        if hi < prob:
            return False
    return wins / n > prob


def stream_strength(stream: np.ndarray, cfg: HypothesisConfig) -> float:
    """The highest threshold the recorded stream still decides true at.

    Found by bisection, which is valid because decide_stream is monotone in
    the threshold.
    """
    if not decide_stream(stream, cfg, 1e-12):
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2.0
        if decide_stream(stream, cfg, mid):
            lo = mid
        else:
            hi = mid
    return lo


def pr(value: UncertainValue, cfg: HypothesisConfig = HypothesisConfig(),
       rng=None) -> bool:
    """Evidence-based truth of a Bernoulli uncertain value at cfg.prob."""
    gen = np.random.default_rng(rng)
    decision, _ = _sequential_test(lambda n: value.sample(gen, n), cfg, cfg.prob)
    return decision


@dataclass(frozen=True)
class ClassifierConfig:
    """Classifier settings: quantizer kind, decision threshold, test config.

    The hypothesis config supplies the sampling budget (batch size and
    max_samples); converge_tol is the largest per-gesture posterior movement
    across a batch that still counts as converged.
    """

    quantizer: QuantizerKind = QuantizerKind.STATISTICAL_GMM
    thr: float = 0.5
    hypothesis: HypothesisConfig = field(default_factory=HypothesisConfig)
    priors: tuple[float, ...] | None = None
    seed: int | None = 0
    converge_tol: float = 0.005

    def __post_init__(self):
        if not 0 < self.thr < 1:
            raise ValueError("thr must be in (0,1)")
        if not 0 < self.converge_tol < 1:
            raise ValueError("converge_tol must be in (0,1)")
        if self.priors is not None:
            p = np.asarray(self.priors, dtype=np.float64)
            if (p <= 0).any() or abs(p.sum() - 1.0) > 1e-9:
                raise ValueError("priors must be positive and sum to 1")


@dataclass(frozen=True)
class ClassificationResult:
    """Outcome of one statistical classification."""

    decision: str | None
    labels: tuple[str, ...]
    posteriors: tuple[float, ...]          # converged posterior per gesture
    sample_counts: tuple[int, ...]         # sequences scored per gesture
    strengths: tuple[float, ...]           # highest thr each gesture survives
    candidates: tuple[str, ...]
    samples_used: int                      # sampling rounds drawn
    elapsed_ms: float
    records: tuple[np.ndarray, ...] = ()   # per-gesture posterior trajectory
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "decision": self.decision,
            "posteriors": {lab: p for lab, p in zip(self.labels, self.posteriors)},
            "sample_counts": {lab: int(c)
                              for lab, c in zip(self.labels, self.sample_counts)},
            "candidates": list(self.candidates),
            "samples_used": int(self.samples_used),
            "elapsed_ms": self.elapsed_ms,
            "degenerate": self.degenerate,
        }


def _log_priors(models, cfg: ClassifierConfig | None) -> np.ndarray:
    if cfg is not None and cfg.priors is not None:
        if len(cfg.priors) != len(models):
            raise ValueError("priors length must match model count")
        p = np.asarray(cfg.priors, dtype=np.float64)
    else:
        p = np.array([m.prior for m in models], dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.log(p)


def _deterministic_scores(trace, models, log_priors: np.ndarray) -> np.ndarray:
    """Per-gesture log(prior) + log-likelihood of its own deterministic
    quantization of the trace."""
    scores = np.empty(len(models))
    for j, m in enumerate(models):
        obs = quantize_deterministic(trace, m.codebook)
        scores[j] = log_priors[j] + log_likelihood(m.hmm, obs)
    return scores


def _softmax_posteriors(scores: np.ndarray) -> tuple[np.ndarray, bool]:
    """Normalized exp(scores); uniform with a flag when all scores are -inf."""
    if not np.isfinite(scores).any():
        n = scores.size
        return np.full(n, 1.0 / n), True
    hi = scores.max()
    w = np.exp(scores - hi)
    return w / w.sum(), False


def posterior(trace, model, all_models, obs) -> float:
    """P(model's gesture | trace) with the given observation sequence.

    The model under test is scored on `obs`; every other gesture is scored
    on its own deterministic quantization of the trace. Computed in log
    space. If every likelihood is -inf the posterior is uniform and a
    warning is emitted.
    """
    all_models = list(all_models)
    idx = next((j for j, m in enumerate(all_models) if m is model), None)
    if idx is None:
        idx = next(j for j, m in enumerate(all_models) if m.label == model.label)
    log_p = _log_priors(all_models, None)
    scores = _deterministic_scores(trace, all_models, log_p)
    scores[idx] = log_p[idx] + log_likelihood(all_models[idx].hmm, np.asarray(obs))
    post, degenerate = _softmax_posteriors(scores)
    if degenerate:
        warnings.warn("all gesture likelihoods are -inf; posterior is uniform")
    return float(post[idx])


def classify_deterministic(trace, models) -> str:
    """Single-pass Bayes decision over deterministic quantizations."""
    models = list(models)
    if not models:
        raise ValueError("models must be non-empty")
    scores = _deterministic_scores(trace, models, _log_priors(models, None))
    return models[int(np.argmax(scores))].label


def deterministic_posteriors(trace, models) -> np.ndarray:
    """The full posterior vector behind classify_deterministic."""
    models = list(models)
    scores = _deterministic_scores(trace, models, _log_priors(models, None))
    post, degenerate = _softmax_posteriors(scores)
    if degenerate:
        warnings.warn("all gesture likelihoods are -inf; posterior is uniform")
    return post


def classify_statistical(trace, models,
                         cfg: ClassifierConfig = ClassifierConfig()) -> ClassificationResult:
    """Statistical classification by Monte-Carlo evidence estimation.

    Each gesture's quantizer distribution turns the trace into a distribution
    over symbol sequences. The gesture's evidence is the mean likelihood of a
    sampled sequence under its own model, accumulated as a running
    log-sum-exp over rounds; the posterior is the softmax of log prior plus
    log evidence. Every round draws one sequence per gesture from a shared
    uniform draw, so one simulated noise realization is judged consistently
    across models while each gesture's marginals follow its own distribution
    exactly. Sampling stops once the posterior vector has moved less than
    cfg.converge_tol across two consecutive batches, or at the sample cap.
    The decision is the posterior argmax when it clears cfg.thr; None means
    abstention.
    """
    if not cfg.quantizer.is_statistical:
        raise ValueError("classify_statistical requires a statistical quantizer kind")
    models = list(models)
    if not models:
        raise ValueError("models must be non-empty")
    start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    log_p = _log_priors(models, cfg)
    cums = [np.cumsum(distribution_matrix(trace, m.codebook, cfg.quantizer,
                                          error_model=m.error_model), axis=1)
            for m in models]
    n_models = len(models)
    n_steps = cums[0].shape[0]
    h = cfg.hypothesis

    evidence = np.full(n_models, -np.inf)  # running logsumexp of round scores
    snapshots: list[np.ndarray] = []       # posterior vector after each batch
    degenerate = True
    stable = 0
    n = 0
    while n < h.max_samples:
        take = min(h.batch, h.max_samples - n)
        u = rng.random((take, n_steps))    # one draw, shared by all models
        obs = np.empty((n_models, take, n_steps), dtype=np.int64)
        for j in range(n_models):
            obs[j] = np.minimum((u[:, :, None] > cums[j][None, :, :]).sum(axis=2),
                                cums[j].shape[1] - 1)
        scores = stacked_log_likelihood([m.hmm for m in models], obs)
        evidence = np.logaddexp(evidence, logsumexp(scores, axis=1))
        n += take
        post, degenerate = _softmax_posteriors(log_p + evidence)
        if snapshots and np.abs(post - snapshots[-1]).max() < cfg.converge_tol:
            stable += 1
        else:
            stable = 0
        snapshots.append(post)
        if stable >= 2:
            break
    trajectory = np.vstack(snapshots)
    post = trajectory[-1]
    labels = tuple(m.label for m in models)
    candidates = [] if degenerate else np.flatnonzero(post > cfg.thr).tolist()
    decision = labels[int(np.argmax(post))] if candidates else None
    elapsed = (time.perf_counter() - start) * 1000.0
    return ClassificationResult(
        decision=decision, labels=labels,
        posteriors=tuple(float(p) for p in post),
        sample_counts=(n,) * n_models,
        strengths=tuple(float(p) for p in post),
        candidates=tuple(labels[i] for i in candidates),
        samples_used=n, elapsed_ms=elapsed,
        records=tuple(np.ascontiguousarray(trajectory[:, i])
                      for i in range(n_models)),
        degenerate=degenerate)


def decide_with_threshold(result: ClassificationResult, thr: float) -> str | None:
    """Replay a recorded classification at a different threshold.

    Uses the recorded posteriors only, so the outcome across a grid of
    thresholds is exactly monotone: raising thr can only turn the decision
    into an abstention, never the reverse, and the decided label never
    changes.
    """
    if not 0 < thr < 1:
        raise ValueError("thr must be in (0,1)")
    if result.degenerate or not result.posteriors:
        return None
    best = int(np.argmax(result.posteriors))
    return result.labels[best] if result.posteriors[best] > thr else None
