"""Experimental protocol: splits, training, metrics, sweeps, and timing.

Everything here is plumbing around the classifiers: stratified train/test
splits repeated over seeds, per-gesture precision/recall with explicit
abstention accounting (an abstention is a false negative for the true
gesture, never a true positive), threshold sweeps replayed from recorded
classification runs, and sensitivity tables over gesture and subject counts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset
from .errormodel import build_error_model
from .hmm import LEFT_TO_RIGHT, TrainConfig, Topology, baum_welch_train
from .models import GestureModel, validate_model_set
from .quantize import (QuantizerKind, build_elliptical_codebook,
                       build_spherical_codebook, quantize_deterministic)
from .synthetic import synthetic_dataset
from .uncertain import (ClassificationResult, ClassifierConfig,
                        HypothesisConfig, classify_deterministic,
                        classify_statistical, decide_with_threshold)

DEFAULT_THR_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))


@dataclass(frozen=True)
class EvalConfig:
    """Protocol settings for the repeated-split experiments."""

    split_ratio: float = 0.75
    repetitions: int = 10
    thr_grid: tuple[float, ...] = DEFAULT_THR_GRID
    kinds: tuple[QuantizerKind, ...] = (
        QuantizerKind.DETERMINISTIC_SPHERICAL,
        QuantizerKind.DETERMINISTIC_ELLIPTICAL,
        QuantizerKind.STATISTICAL_GMM,
    )
    seed: int = 0
    n_states: int = 8
    thr: float = 0.5
    hypothesis: HypothesisConfig = field(default_factory=HypothesisConfig)

    def __post_init__(self):
        if not 0 < self.split_ratio < 1:
            raise ValueError("split_ratio must be in (0,1)")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")


@dataclass(frozen=True)
class TrainSpec:
    """What train_all needs to build one model set."""

    quantizer: QuantizerKind = QuantizerKind.STATISTICAL_GMM
    n_states: int = 8
    codebook_size: int = 18
    topology: Topology = LEFT_TO_RIGHT
    seed: int = 0
    emission_floor: float = 1e-6


@dataclass(frozen=True)
class GestureMetrics:
    label: str
    tp: int
    fp: int
    fn: int

    @property
    def support(self) -> int:
        return self.tp + self.fn

    @property
    def zero_support(self) -> bool:
        """True when no trace was attributed to this gesture, making
        precision undefined (reported as 1)."""
        return self.tp + self.fp == 0

    @property
    def precision(self) -> float:
        return 1.0 if self.zero_support else self.tp / (self.tp + self.fp)

    @property
    def recall(self) -> float:
        return 1.0 if self.support == 0 else self.tp / self.support


@dataclass(frozen=True)
class RunMetrics:
    """Metrics of one model set evaluated on one test split."""

    kind: QuantizerKind
    repetition: int
    per_gesture: tuple[GestureMetrics, ...]
    n_traces: int
    n_correct: int
    n_abstained: int
    timing_ms: tuple[float, ...]
    samples_used: tuple[int, ...]

    @property
    def recognition(self) -> float:
        return self.n_correct / self.n_traces if self.n_traces else 0.0

    @property
    def abstention_rate(self) -> float:
        return self.n_abstained / self.n_traces if self.n_traces else 0.0

    @property
    def macro_precision(self) -> float:
        return float(np.mean([g.precision for g in self.per_gesture]))

    @property
    def macro_recall(self) -> float:
        return float(np.mean([g.recall for g in self.per_gesture]))

    @property
    def mean_ms(self) -> float:
        return float(np.mean(self.timing_ms)) if self.timing_ms else 0.0

    @property
    def p95_ms(self) -> float:
        return float(np.percentile(self.timing_ms, 95)) if self.timing_ms else 0.0


@dataclass(frozen=True)
class MetricsReport:
    """A bag of RunMetrics with per-kind aggregates and export helpers."""

    runs: tuple[RunMetrics, ...]

    def for_kind(self, kind: QuantizerKind) -> tuple[RunMetrics, ...]:
        return tuple(r for r in self.runs if r.kind is kind)

    def recognition_stats(self, kind: QuantizerKind) -> tuple[float, float]:
        vals = [r.recognition for r in self.for_kind(kind)]
        return float(np.mean(vals)), float(np.std(vals))

    def to_dict(self) -> dict:
        return {
            "runs": [
                {
                    "kind": r.kind.value,
                    "repetition": r.repetition,
                    "recognition": r.recognition,
                    "abstention_rate": r.abstention_rate,
                    "macro_precision": r.macro_precision,
                    "macro_recall": r.macro_recall,
                    "mean_ms": r.mean_ms,
                    "p95_ms": r.p95_ms,
                    "per_gesture": [
                        {"label": g.label, "tp": g.tp, "fp": g.fp, "fn": g.fn,
                         "precision": g.precision, "recall": g.recall,
                         "zero_support": g.zero_support}
                        for g in r.per_gesture
                    ],
                }
                for r in self.runs
            ],
            "aggregate": {
                kind.value: {
                    "recognition_mean": self.recognition_stats(kind)[0],
                    "recognition_std": self.recognition_stats(kind)[1],
                }
                for kind in {r.kind for r in self.runs}
            },
        }

    def csv_rows(self) -> list[list]:
        """One row per gesture x kind x repetition, ready for csv.writer."""
        rows = [["kind", "repetition", "label", "tp", "fp", "fn",
                 "precision", "recall", "recognition", "abstention_rate"]]
        for r in self.runs:
            for g in r.per_gesture:
                rows.append([r.kind.value, r.repetition, g.label, g.tp, g.fp,
                             g.fn, g.precision, g.recall, r.recognition,
                             r.abstention_rate])
        return rows


def split(dataset: Dataset, ratio: float = 0.75,
          seed: int = 0) -> tuple[Dataset, Dataset]:
    """Stratified, seed-deterministic partition into train and test."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must be in (0,1)")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for label, traces in dataset.by_label().items():
        n = len(traces)
        if n < 2:
            raise ValueError(f"gesture {label!r} has {n} trace(s); need >= 2 to split")
        n_train = min(max(int(round(ratio * n)), 1), n - 1)
        order = rng.permutation(n)
        chosen = set(order[:n_train].tolist())
        train.extend(t for i, t in enumerate(traces) if i in chosen)
        test.extend(t for i, t in enumerate(traces) if i not in chosen)
    return (Dataset(tuple(train), provenance=dataset.provenance),
            Dataset(tuple(test), provenance=dataset.provenance))


def train_all(train_set: Dataset, spec: TrainSpec) -> list[GestureModel]:
    """Train one GestureModel per label in the training set.

    Spherical kinds share a single codebook object across gestures; the
    other kinds build one elliptical codebook per gesture. The HMM always
    trains on deterministic quantizations; the measured error model is built
    unconditionally so any model set can also be scored statistically.
    Priors start uniform.
    """
    groups = train_set.by_label()
    shared = (build_spherical_codebook(train_set, n=spec.codebook_size)
              if spec.quantizer.shares_codebook else None)
    models = []
    n = len(groups)
    for g, (label, traces) in enumerate(groups.items()):
        codebook = shared if shared is not None else \
            build_elliptical_codebook(traces, n=spec.codebook_size)
        sequences = [quantize_deterministic(t, codebook) for t in traces]
        cfg = TrainConfig(n_states=spec.n_states, n_symbols=codebook.size,
                          topology=spec.topology, seed=spec.seed + g,
                          emission_floor=spec.emission_floor)
        hmm = baum_welch_train(sequences, cfg)
        error_model = build_error_model(traces, codebook, seed=spec.seed + g)
        models.append(GestureModel(label=label, codebook=codebook, hmm=hmm,
                                   quantizer=spec.quantizer,
                                   error_model=error_model, prior=1.0 / n))
    validate_model_set(models)
    return models


def _classify_once(trace, models, kind: QuantizerKind, cfg: EvalConfig,
                   seed: int) -> tuple[str | None, float, int]:
    """Returns (decision, elapsed ms, samples used) for one test trace."""
    if kind.is_statistical:
        res = classify_statistical(trace, models, ClassifierConfig(
            quantizer=kind, thr=cfg.thr, hypothesis=cfg.hypothesis, seed=seed))
        return res.decision, res.elapsed_ms, res.samples_used
    t0 = time.perf_counter()
    decision = classify_deterministic(trace, models)
    return decision, (time.perf_counter() - t0) * 1000.0, 0


def evaluate(models, test_set: Dataset, cfg: EvalConfig = EvalConfig(),
             repetition: int = 0) -> MetricsReport:
    """Score a trained model set on a test split.

    Abstentions count as a false negative for the true gesture and as a
    false positive attributed to "none"; they are never correct. The
    recognition rate is the fraction of test traces whose decision equals
    the true label.
    """
    models = list(models)
    kind = models[0].quantizer
    labels = [m.label for m in models]
    unknown = {t.gesture_label for t in test_set.traces} - set(labels)
    if unknown:
        raise ValueError(f"test set contains unknown labels {sorted(unknown)}")
    tp = {lab: 0 for lab in labels}
    fp = {lab: 0 for lab in labels}
    fn = {lab: 0 for lab in labels}
    n_correct = 0
    n_abstained = 0
    timing, samples = [], []
    for i, trace in enumerate(test_set.traces):
        decision, ms, used = _classify_once(trace, models, kind, cfg,
                                            seed=cfg.seed * 100_003 + i)
        timing.append(ms)
        samples.append(used)
        truth = trace.gesture_label
        if decision is None:
            n_abstained += 1
            fn[truth] += 1
        elif decision == truth:
            n_correct += 1
            tp[truth] += 1
        else:
            fn[truth] += 1
            fp[decision] += 1
    per_gesture = tuple(GestureMetrics(lab, tp[lab], fp[lab], fn[lab])
                        for lab in labels)
    run = RunMetrics(kind=kind, repetition=repetition, per_gesture=per_gesture,
                     n_traces=len(test_set.traces), n_correct=n_correct,
                     n_abstained=n_abstained, timing_ms=tuple(timing),
                     samples_used=tuple(samples))
    return MetricsReport(runs=(run,))


def run_protocol(dataset: Dataset, cfg: EvalConfig = EvalConfig()) -> MetricsReport:
    """The repeated-split protocol over every quantizer kind under test."""
    runs = []
    for rep in range(cfg.repetitions):
        train_set, test_set = split(dataset, cfg.split_ratio, seed=cfg.seed + rep)
        for kind in cfg.kinds:
            models = train_all(train_set, TrainSpec(
                quantizer=kind, n_states=cfg.n_states, seed=cfg.seed + rep))
            report = evaluate(models, test_set, cfg, repetition=rep)
            runs.extend(report.runs)
    return MetricsReport(runs=tuple(runs))


@dataclass(frozen=True)
class ThresholdSweep:
    """Per-gesture precision/recall over a threshold grid, from one recorded
    classification of the test set (replayed, not re-sampled)."""

    thr_grid: tuple[float, ...]
    labels: tuple[str, ...]
    precision: np.ndarray       # (n_labels, n_thr)
    recall: np.ndarray          # (n_labels, n_thr)
    recognition: np.ndarray     # (n_thr,)
    abstention: np.ndarray      # (n_thr,)

    def to_dict(self) -> dict:
        return {
            "thr_grid": list(self.thr_grid),
            "recognition": self.recognition.tolist(),
            "abstention": self.abstention.tolist(),
            "per_gesture": {
                lab: {"precision": self.precision[i].tolist(),
                      "recall": self.recall[i].tolist()}
                for i, lab in enumerate(self.labels)
            },
        }


def record_classifications(models, test_set: Dataset,
                           cfg: EvalConfig = EvalConfig()) -> list[ClassificationResult]:
    """One statistical classification per test trace, keeping win records."""
    models = list(models)
    kind = models[0].quantizer
    if not kind.is_statistical:
        kind = QuantizerKind.STATISTICAL_GMM
    return [
        classify_statistical(trace, models, ClassifierConfig(
            quantizer=kind, thr=cfg.thr, hypothesis=cfg.hypothesis,
            seed=cfg.seed * 100_003 + i))
        for i, trace in enumerate(test_set.traces)
    ]


def sweep_threshold(models, test_set: Dataset,
                    thr_grid=DEFAULT_THR_GRID,
                    cfg: EvalConfig = EvalConfig(),
                    recorded: list[ClassificationResult] | None = None) -> ThresholdSweep:
    """Precision/recall curves across thresholds from one recorded run.

    Every threshold replays the same recorded posteriors, so recall is
    non-increasing and abstention non-decreasing in thr, exactly.
    """
    models = list(models)
    labels = tuple(m.label for m in models)
    results = recorded if recorded is not None \
        else record_classifications(models, test_set, cfg)
    truths = [t.gesture_label for t in test_set.traces]
    n_thr = len(thr_grid)
    tp = np.zeros((len(labels), n_thr))
    fp = np.zeros((len(labels), n_thr))
    fn = np.zeros((len(labels), n_thr))
    correct = np.zeros(n_thr)
    abstained = np.zeros(n_thr)
    index = {lab: i for i, lab in enumerate(labels)}
    for truth, res in zip(truths, results):
        for k, thr in enumerate(thr_grid):
            decision = decide_with_threshold(res, thr)
            if decision is None:
                abstained[k] += 1
                fn[index[truth], k] += 1
            elif decision == truth:
                correct[k] += 1
                tp[index[truth], k] += 1
            else:
                fn[index[truth], k] += 1
                fp[index[decision], k] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(tp + fp > 0, tp / np.maximum(tp + fp, 1), 1.0)
        recall = np.where(tp + fn > 0, tp / np.maximum(tp + fn, 1), 1.0)
    n = max(len(results), 1)
    return ThresholdSweep(thr_grid=tuple(thr_grid), labels=labels,
                          precision=precision, recall=recall,
                          recognition=correct / n, abstention=abstained / n)


def gesture_count_sensitivity(dataset: Dataset, counts,
                              cfg: EvalConfig = EvalConfig()) -> dict:
    """Recognition mean/std per quantizer kind as the gesture count grows."""
    all_labels = dataset.labels
    rng = np.random.default_rng(cfg.seed)
    table: dict = {"counts": list(counts), "kinds": {k.value: [] for k in cfg.kinds}}
    for count in counts:
        if count > len(all_labels):
            raise ValueError(f"dataset has only {len(all_labels)} gestures")
        chosen = set(rng.choice(len(all_labels), size=count, replace=False).tolist())
        keep = {all_labels[i] for i in chosen}
        subset = Dataset(tuple(t for t in dataset.traces
                               if t.gesture_label in keep),
                         provenance=dataset.provenance)
        report = run_protocol(subset, cfg)
        for kind in cfg.kinds:
            mean, std = report.recognition_stats(kind)
            table["kinds"][kind.value].append({"count": count, "mean": mean,
                                               "std": std})
    return table


def user_count_sensitivity(counts=(2, 4, 6, 8),
                           cfg: EvalConfig = EvalConfig(),
                           n_gestures: int = 5,
                           samples_per_gesture: int = 8) -> dict:
    """Recognition of the deterministic elliptical pipeline as the number of
    synthetic subjects grows; reports the max-min spread across counts."""
    rows = []
    for n_users in counts:
        ds = synthetic_dataset(n_gestures, samples_per_gesture=samples_per_gesture,
                               n_subjects=n_users, seed=cfg.seed,
                               noise_scale=0.5)
        sub_cfg = EvalConfig(split_ratio=cfg.split_ratio,
                             repetitions=cfg.repetitions,
                             kinds=(QuantizerKind.DETERMINISTIC_ELLIPTICAL,),
                             seed=cfg.seed, n_states=cfg.n_states,
                             thr=cfg.thr, hypothesis=cfg.hypothesis)
        report = run_protocol(ds, sub_cfg)
        mean, std = report.recognition_stats(QuantizerKind.DETERMINISTIC_ELLIPTICAL)
        rows.append({"n_users": n_users, "mean": mean, "std": std})
    spread = max(r["mean"] for r in rows) - min(r["mean"] for r in rows)
    return {"rows": rows, "spread": spread}


@dataclass(frozen=True)
class TimingStats:
    mean_ms: float
    p95_ms: float
    mean_samples_used: float
    n: int


def time_classification(models, test_set: Dataset,
                        cfg: EvalConfig = EvalConfig()) -> TimingStats:
    """Wall-clock stats for the classifier matching the models' kind."""
    models = list(models)
    kind = models[0].quantizer
    timing, samples = [], []
    for i, trace in enumerate(test_set.traces):
        _, ms, used = _classify_once(trace, models, kind, cfg,
                                     seed=cfg.seed * 100_003 + i)
        timing.append(ms)
        samples.append(used)
    return TimingStats(mean_ms=float(np.mean(timing)),
                       p95_ms=float(np.percentile(timing, 95)),
                       mean_samples_used=float(np.mean(samples)),
                       n=len(timing))
