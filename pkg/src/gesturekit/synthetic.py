"""Synthetic accelerometer traces and dead-reckoning integration.

Gestures are smooth paths through waypoints; the simulated accelerometer
reports the path's second derivative plus the gravity projection for the
device orientation, in g, so a motionless device reads (0, 0, -1). The
inverse direction (double integration back to a path) is included to
demonstrate how fast orientation error grows into position error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .core import G_MS2, Dataset, Trace

DEFAULT_RATE_HZ = 50.0
Z_UP = np.array([0.0, 0.0, 1.0])


def rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=np.float64)


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=np.float64)


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=np.float64)


def euler_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Orientation rotation R_z(alpha) @ R_y(beta) @ R_x(gamma), radians.

    This is the matrix that carries world-frame vectors into the sensor
    frame; a still device measures -R @ z_hat.
    """
    return rot_z(alpha) @ rot_y(beta) @ rot_x(gamma)


@dataclass(frozen=True)
class GestureTemplate:
    """A named path through 3-D waypoints, traced over `duration` seconds.

    The path is a clamped cubic spline (zero velocity at both ends), so the
    motion starts and stops at rest. base_orientation is the yaw/pitch/roll
    the device is held at while performing the gesture.
    """

    template_id: str
    waypoints: np.ndarray
    duration: float = 1.2
    base_orientation: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=np.float64)
        if wp.ndim != 2 or wp.shape[1] != 3 or wp.shape[0] < 3:
            raise ValueError("waypoints must be a (K >= 3, 3) array")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        wp.setflags(write=False)
        object.__setattr__(self, "waypoints", wp)

    def _spline(self) -> CubicSpline:
        knots = np.linspace(0.0, self.duration, self.waypoints.shape[0])
        zero = np.zeros(3)
        return CubicSpline(knots, self.waypoints, bc_type=((1, zero), (1, zero)))

    def path(self, times) -> np.ndarray:
        """Positions in meters at the given times."""
        return self._spline()(np.asarray(times, dtype=np.float64))

    def accel_world(self, times) -> np.ndarray:
        """Second derivative of the path, m/s^2, world frame."""
        return self._spline()(np.asarray(times, dtype=np.float64), 2)


@dataclass(frozen=True)
class NoiseSpec:
    """Measurement imperfections applied by the generator.

    sigma: per-axis additive Gaussian stddev in g. orientation_jitter:
    stddev in radians of a per-trace perturbation of each orientation angle.
    speed_jitter: fractional stddev of a per-trace time-warp of the gesture
    duration. The seed makes a given spec fully deterministic.
    """

    sigma: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation_jitter: float = 0.0
    speed_jitter: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if len(self.sigma) != 3:
            raise ValueError("sigma must have 3 entries")
        if any(s < 0 for s in self.sigma) or self.orientation_jitter < 0 \
                or self.speed_jitter < 0:
            raise ValueError("noise magnitudes must be non-negative")


NO_NOISE = NoiseSpec()


def _circle_waypoints(plane: str, radius: float = 0.10, n: int = 13) -> np.ndarray:
    theta = np.linspace(0.0, 2 * np.pi, n)
    flat = np.stack([radius * np.cos(theta), radius * np.sin(theta)], axis=1)
    wp = np.zeros((n, 3))
    if plane == "xy":
        wp[:, 0], wp[:, 1] = flat[:, 0], flat[:, 1]
    elif plane == "xz":
        wp[:, 0], wp[:, 2] = flat[:, 0], flat[:, 1]
    else:
        raise ValueError(f"unknown plane {plane!r}")
    return wp


def _letter_waypoints(corners: list[tuple[float, float]],
                      scale: float = 0.15) -> np.ndarray:
    pts = np.array([(x, y, 0.0) for x, y in corners], dtype=np.float64) * scale
    return pts - pts.mean(axis=0)


def template_library() -> dict[str, GestureTemplate]:
    """The six canonical templates."""
    line = np.array([[0, 0, 0], [0.2, 0, 0], [0, 0, 0]], dtype=np.float64)
    line -= line.mean(axis=0)
    return {
        "circle-xy": GestureTemplate("circle-xy", _circle_waypoints("xy")),
        "circle-xz": GestureTemplate("circle-xz", _circle_waypoints("xz")),
        "line-x": GestureTemplate("line-x", line),
        "line-y": GestureTemplate("line-y", line[:, [1, 0, 2]]),
        "m-shape": GestureTemplate("m-shape", _letter_waypoints(
            [(0, 0), (0, 1), (0.5, 0.35), (1, 1), (1, 0)])),
        "n-shape": GestureTemplate("n-shape", _letter_waypoints(
            [(0, 0), (0, 1), (1, 0), (1, 1)])),
    }


def get_template(template_id: str) -> GestureTemplate:
    lib = template_library()
    if template_id not in lib:
        raise KeyError(f"unknown template {template_id!r}; "
                       f"known: {sorted(lib)}")
    return lib[template_id]


def vary_template(template: GestureTemplate, seed: int,
                  max_rotation_deg: float = 25.0,
                  scale_range: tuple[float, float] = (0.75, 1.25)) -> GestureTemplate:
    """A deterministic rotated/rescaled variant of a template."""
    rng = np.random.default_rng(seed)
    angle = math.radians(rng.uniform(-max_rotation_deg, max_rotation_deg))
    scale = rng.uniform(*scale_range)
    wp = (template.waypoints * scale) @ rot_z(angle).T
    return replace(template, waypoints=wp)


def template_set(n: int) -> list[GestureTemplate]:
    """n distinct templates: the canonical six, then deterministic variants."""
    base = list(template_library().values())
    out: list[GestureTemplate] = []
    i = 0
    while len(out) < n:
        src = base[i % len(base)]
        if i < len(base):
            out.append(src)
        else:
            round_no = i // len(base)
            var = vary_template(src, seed=1000 + i,
                                max_rotation_deg=30.0 * round_no,
                                scale_range=(0.7, 1.3))
            out.append(replace(var, template_id=f"{src.template_id}-v{round_no}"))
        i += 1
    return out


def generate_gesture(template: GestureTemplate,
                     noise: NoiseSpec = NO_NOISE,
                     n_samples: int = 61,
                     label: str | None = None,
                     subject: str | None = None) -> Trace:
    """Simulate one accelerometer trace of the template.

    The device-frame reading is R (a_world / g - z_hat) plus per-axis noise,
    where R is the world-to-sensor rotation for the (jittered) orientation.
    At rest this reads (0, 0, -1) g. Deterministic under noise.seed.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    rng = np.random.default_rng(noise.seed)
    duration = template.duration
    if noise.speed_jitter:
        duration *= max(0.5, 1.0 + noise.speed_jitter * rng.standard_normal())
    angles = np.asarray(template.base_orientation, dtype=np.float64)
    if noise.orientation_jitter:
        angles = angles + rng.normal(0.0, noise.orientation_jitter, 3)

    times = np.linspace(0.0, duration, n_samples)
    # Time-warp: the same shape traced over the jittered duration.
    a_world_g = template.accel_world(times * (template.duration / duration)) \
        * (template.duration / duration) ** 2 / G_MS2
    r = euler_matrix(*angles)
    measured = (a_world_g - Z_UP) @ r.T
    sigma = np.asarray(noise.sigma, dtype=np.float64)
    if sigma.any():
        measured = measured + rng.normal(0.0, 1.0, measured.shape) * sigma
    return Trace(times=times, accel=measured,
                 gesture_label=label if label is not None else template.template_id,
                 subject_id=subject)


def still_trace(duration: float = 10.0, rate_hz: float = DEFAULT_RATE_HZ,
                orientation: tuple[float, float, float] = (0.0, 0.0, 0.0)) -> Trace:
    """A noiseless motionless device held at the given orientation."""
    n = int(round(duration * rate_hz)) + 1
    times = np.linspace(0.0, duration, n)
    measured = np.tile(-(euler_matrix(*orientation) @ Z_UP), (n, 1))
    return Trace(times=times, accel=measured)


def integrate_path(trace: Trace,
                   assumed_orientation: tuple[float, float, float] = (0.0, 0.0, 0.0),
                   ) -> np.ndarray:
    """Dead-reckon device positions (meters) from a trace.

    Gravity is removed by rotating the readings back to the world frame with
    the assumed orientation (a_inertial = R^-1 a_m + g z_hat), then velocity
    and position come from trapezoidal integration. Requires timestamps
    uniform to within 1% of the mean step.
    """
    dt = np.diff(trace.times)
    mean_dt = dt.mean()
    if np.abs(dt - mean_dt).max() > 0.01 * mean_dt:
        raise ValueError("integrate_path requires uniform timestamps (within 1%)")
    r = euler_matrix(*assumed_orientation)
    a_world = (trace.accel @ r + Z_UP) * G_MS2     # row form of R^-1 @ a
    vel = cumulative_trapezoid(a_world, trace.times, axis=0, initial=0.0)
    pos = cumulative_trapezoid(vel, trace.times, axis=0, initial=0.0)
    return pos


_SIGMA_PROFILES = ((0.18, 0.06, 0.02), (0.02, 0.18, 0.06), (0.06, 0.02, 0.18))


def gesture_noise_profile(gesture_index: int, seed: int = 0,
                          scale: float = 1.0) -> tuple[float, float, float]:
    """A per-gesture anisotropic noise stddev triple, deterministic in seed.

    Each gesture gets a distinct dominant axis (cycling x, y, z) and a
    gesture-specific magnitude, so different gestures produce differently
    shaped residual clouds.
    """
    rng = np.random.default_rng(10007 * (seed + 1) + gesture_index)
    base = np.array(_SIGMA_PROFILES[gesture_index % 3])
    return tuple(float(v) for v in base * scale * (0.8 + 0.4 * rng.random()))


def synthetic_dataset(n_gestures: int, samples_per_gesture: int = 20,
                      n_subjects: int = 1, seed: int = 0,
                      noise_scale: float = 1.0) -> Dataset:
    """A labeled multi-gesture, multi-subject dataset for the harness.

    Gestures come from template_set(n_gestures) with gesture-specific
    anisotropic noise; each subject holds the device at a slightly different
    fixed orientation and adds per-trace orientation/speed jitter. Fully
    deterministic under seed. samples_per_gesture counts traces per gesture
    per subject.
    """
    if n_subjects < 1 or samples_per_gesture < 1:
        raise ValueError("need at least one subject and one sample per gesture")
    templates = template_set(n_gestures)
    subj_rng = np.random.default_rng(seed)
    subject_angles = subj_rng.normal(0.0, math.radians(4.0), (n_subjects, 3))
    traces = []
    for g, tpl in enumerate(templates):
        sigma = gesture_noise_profile(g, seed=seed, scale=noise_scale)
        for s in range(n_subjects):
            subj_tpl = replace(tpl, base_orientation=tuple(subject_angles[s]))
            for r in range(samples_per_gesture):
                noise = NoiseSpec(
                    sigma=sigma,
                    orientation_jitter=0.015 * noise_scale,
                    speed_jitter=0.08 * noise_scale,
                    seed=seed * 1_000_003 + g * 10_007 + s * 101 + r)
                traces.append(generate_gesture(subj_tpl, noise,
                                               subject=f"s{s}"))
    return Dataset(tuple(traces), provenance=f"synthetic(seed={seed})")


def drift_curve(angle_errors, duration: float = 10.0,
                dt: float = 0.02) -> tuple[np.ndarray, np.ndarray]:
    """Position-error growth for a still device with misjudged orientation.

    For each tilt error (radians, about the y axis) the device is simulated
    at the tilted orientation while integration assumes identity. Returns
    (times, errors) with errors[i] the per-time position-error magnitude in
    meters for angle_errors[i]; each curve is close to
    0.5 * g * sin(angle) * t^2.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    angle_errors = np.atleast_1d(np.asarray(angle_errors, dtype=np.float64))
    times = None
    rows = []
    for angle in angle_errors:
        tr = still_trace(duration=duration, rate_hz=1.0 / dt,
                         orientation=(0.0, float(angle), 0.0))
        pos = integrate_path(tr)
        times = tr.times
        rows.append(np.linalg.norm(pos, axis=1))
    return times, np.vstack(rows)
