"""Core domain types: accelerometer samples, traces, codebooks, datasets, CSV ingestion.

All acceleration values are expressed in units of g (~9.80665 m/s^2). Types are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

G_MS2 = 9.80665          # one g in m/s^2
MAX_ACCEL_G = 16.0       # sensor sanity bound; anything larger is a corrupt row

TRACE_CSV_HEADER = ["trace_id", "label", "subject", "t", "ax", "ay", "az"]


class GestureKitError(Exception):
    """Base class for all errors raised by this package."""


class TraceParseError(GestureKitError):
    """A CSV row could not be parsed; the message names the line number."""


class TraceValidationError(GestureKitError):
    """A trace or sample violates a domain invariant."""


class ModelFormatError(GestureKitError):
    """A model file is corrupt or structurally invalid."""


class UnsupportedVersionError(ModelFormatError):
    """A model file declares a version this code does not understand."""


@dataclass(frozen=True)
class AccelSample:
    """One timestamped 3-axis accelerometer reading, in g."""

    t: float
    ax: float
    ay: float
    az: float

    def __post_init__(self):
        vals = (self.t, self.ax, self.ay, self.az)
        if not all(math.isfinite(v) for v in vals):
            raise TraceValidationError(f"non-finite sample: {vals}")
        if self.t < 0:
            raise TraceValidationError(f"negative timestamp: {self.t}")
        for name, v in (("ax", self.ax), ("ay", self.ay), ("az", self.az)):
            if abs(v) > MAX_ACCEL_G:
                raise TraceValidationError(
                    f"|{name}| = {abs(v)} g exceeds the {MAX_ACCEL_G} g sanity bound"
                )

    def vector(self) -> np.ndarray:
        return np.array([self.ax, self.ay, self.az])


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Trace:
    """An ordered accelerometer recording of one gesture attempt.

    Stores timestamps as a (T,) array and accelerations as a (T, 3) array;
    both views are read-only. `samples` materializes AccelSample objects.
    """

    times: np.ndarray
    accel: np.ndarray
    gesture_label: str | None = None
    subject_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "times", _freeze(self.times))
        object.__setattr__(self, "accel", _freeze(self.accel))
        t, a = self.times, self.accel
        if t.ndim != 1 or a.shape != (t.size, 3):
            raise TraceValidationError(
                f"shape mismatch: times {t.shape}, accel {a.shape}"
            )
        if t.size < 2:
            raise TraceValidationError(f"trace needs >= 2 samples, got {t.size}")
        if not (np.isfinite(t).all() and np.isfinite(a).all()):
            raise TraceValidationError("trace contains non-finite values")
        if t[0] < 0:
            raise TraceValidationError(f"negative timestamp: {t[0]}")
        if not (np.diff(t) > 0).all():
            raise TraceValidationError(
                f"timestamps not strictly increasing in trace "
                f"(label={self.gesture_label!r})"
            )
        if (np.abs(a) > MAX_ACCEL_G).any():
            raise TraceValidationError(
                f"acceleration exceeds the {MAX_ACCEL_G} g sanity bound"
            )

    @classmethod
    def from_samples(cls, samples, gesture_label=None, subject_id=None) -> "Trace":
        samples = list(samples)
        t = np.array([s.t for s in samples])
        a = np.array([[s.ax, s.ay, s.az] for s in samples])
        return cls(t, a, gesture_label, subject_id)

    @property
    def samples(self) -> tuple[AccelSample, ...]:
        return tuple(
            AccelSample(float(t), float(a[0]), float(a[1]), float(a[2]))
            for t, a in zip(self.times, self.accel)
        )

    def __len__(self) -> int:
        return int(self.times.size)

    def with_label(self, label: str) -> "Trace":
        return Trace(self.times, self.accel, label, self.subject_id)


@dataclass(frozen=True)
class Codebook:
    """An ordered set of 3-D codewords on a spherical or elliptical contour.

    Every codeword c satisfies sum(((c - center) / radii)**2) == 1 to within
    1e-9, i.e. all codewords lie exactly on the contour.
    """

    codewords: np.ndarray
    shape: str                      # "spherical" | "elliptical"
    center: np.ndarray
    radii: np.ndarray

    MEMBERSHIP_TOL = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "codewords", _freeze(self.codewords))
        object.__setattr__(self, "center", _freeze(self.center))
        object.__setattr__(self, "radii", _freeze(self.radii))
        if self.shape not in ("spherical", "elliptical"):
            raise ValueError(f"unknown codebook shape: {self.shape!r}")
        if self.codewords.ndim != 2 or self.codewords.shape[1] != 3:
            raise ValueError(f"codewords must be (n, 3), got {self.codewords.shape}")
        if self.center.shape != (3,) or self.radii.shape != (3,):
            raise ValueError("center and radii must be 3-vectors")
        if not (self.radii > 0).all():
            raise ValueError(f"radii must be strictly positive, got {self.radii}")
        m = (((self.codewords - self.center) / self.radii) ** 2).sum(axis=1)
        if np.abs(m - 1.0).max() > self.MEMBERSHIP_TOL:
            raise ValueError(
                f"codewords off the contour by up to {np.abs(m - 1.0).max():.3e}"
            )

    @property
    def size(self) -> int:
        return int(self.codewords.shape[0])


@dataclass(frozen=True)
class Dataset:
    """Labeled traces grouped by gesture label."""

    traces: tuple[Trace, ...]
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))
        for tr in self.traces:
            if not tr.gesture_label:
                raise TraceValidationError("dataset traces must all carry a label")

    def by_label(self) -> dict[str, list[Trace]]:
        """Traces grouped by label, labels in first-appearance order."""
        groups: dict[str, list[Trace]] = {}
        for tr in self.traces:
            groups.setdefault(tr.gesture_label, []).append(tr)
        return groups

    @property
    def labels(self) -> list[str]:
        return list(self.by_label().keys())

    def n_samples(self) -> int:
        return sum(len(tr) for tr in self.traces)

    def __len__(self) -> int:
        return len(self.traces)


def load_traces(path, format: str = "csv", units: str = "g") -> Dataset:
    """Load a trace CSV (header: trace_id,label,subject,t,ax,ay,az) into a Dataset.

    Row order is preserved within each trace; traces appear in first-row order.
    `units="ms2"` divides accelerations by 9.80665 to normalize to g. Every
    valid row lands in exactly one trace; a bad row raises rather than being
    dropped.
    """
    if format != "csv":
        raise ValueError(f"unsupported format: {format!r}")
    if units not in ("g", "ms2"):
        raise ValueError(f"unsupported units: {units!r}")
    scale = 1.0 if units == "g" else 1.0 / G_MS2

    rows: dict[str, list[tuple[float, float, float, float]]] = {}
    meta: dict[str, tuple[str, str]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceParseError(f"{path}: empty file") from None
        if [h.strip() for h in header] != TRACE_CSV_HEADER:
            raise TraceParseError(
                f"{path}: line 1: expected header {','.join(TRACE_CSV_HEADER)}, "
                f"got {','.join(header)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 7:
                raise TraceParseError(
                    f"{path}: line {lineno}: expected 7 fields, got {len(row)}"
                )
            trace_id, label, subject = row[0], row[1], row[2]
            try:
                t = float(row[3])
                a = (float(row[4]) * scale, float(row[5]) * scale, float(row[6]) * scale)
            except ValueError as exc:
                raise TraceParseError(f"{path}: line {lineno}: {exc}") from None
            rows.setdefault(trace_id, []).append((t, *a))
            meta.setdefault(trace_id, (label, subject))

    traces = []
    for trace_id, samples in rows.items():
        label, subject = meta[trace_id]
        arr = np.array(samples)
        try:
            traces.append(
                Trace(arr[:, 0], arr[:, 1:4], gesture_label=label or None,
                      subject_id=subject or None)
            )
        except TraceValidationError as exc:
            raise TraceValidationError(f"trace {trace_id!r}: {exc}") from None
    return Dataset(tuple(traces), provenance=str(path))


def save_traces(traces, path, id_prefix: str | None = None) -> None:
    """Write traces in the trace CSV schema (the inverse of load_traces).

    Trace ids are `{prefix}{index:04d}`; the prefix defaults to the trace's
    label so files generated for different gestures can be concatenated
    without id collisions.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_CSV_HEADER)
        for i, tr in enumerate(traces):
            prefix = id_prefix if id_prefix is not None \
                else (f"{tr.gesture_label}-" if tr.gesture_label else "t")
            trace_id = f"{prefix}{i:04d}"
            for t, a in zip(tr.times, tr.accel):
                writer.writerow(
                    [trace_id, tr.gesture_label or "", tr.subject_id or "",
                     repr(float(t)), repr(float(a[0])), repr(float(a[1])),
                     repr(float(a[2]))]
                )
