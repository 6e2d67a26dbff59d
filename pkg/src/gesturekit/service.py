"""HTTP service for interactive training and classification sessions.

Sessions live in memory: register gestures, append sample traces, train a
model set, classify fresh traces, and tune the threshold and priors without
retraining. Per-session mutations are serialized by a lock; trained model
sets are immutable, so classification runs lock-free against them.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from fastapi import Body, FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .core import Dataset, Trace, TraceValidationError
from .evaluate import (DEFAULT_THR_GRID, EvalConfig, TrainSpec,
                       record_classifications, sweep_threshold, train_all)
from .models import set_priors
from .quantize import QuantizerKind
from .uncertain import (ClassifierConfig, classify_deterministic,
                        classify_statistical, deterministic_posteriors)

DEFAULT_MIN_SAMPLES = 10


@dataclass
class Session:
    session_id: str
    lock: threading.Lock = field(default_factory=threading.Lock)
    gestures: dict[str, list[Trace]] = field(default_factory=dict)
    models: list | None = None
    trained_counts: dict[str, int] = field(default_factory=dict)
    quantizer: QuantizerKind = QuantizerKind.STATISTICAL_GMM
    n_states: int = 8
    seed: int = 0
    thr: float = 0.5
    min_samples: int = DEFAULT_MIN_SAMPLES
    prior_weights: dict[str, float] | None = None
    classify_count: int = 0
    metrics_cache: dict | None = None

    @property
    def stale(self) -> bool:
        """True when samples changed since the last training run."""
        if self.models is None:
            return False
        return {k: len(v) for k, v in self.gestures.items()} != self.trained_counts

    def effective_models(self) -> list:
        if self.models is None:
            raise HTTPException(status_code=409, detail="session is not trained yet")
        if self.prior_weights:
            return set_priors(self.models, self.prior_weights)
        return self.models


def _rows_to_trace(rows, label: str | None = None) -> Trace:
    if not isinstance(rows, list) or len(rows) < 2:
        raise HTTPException(400, "sample must be an array of at least 2 rows")
    times, accel = [], []
    for i, row in enumerate(rows):
        if not isinstance(row, (list, tuple)) or len(row) != 4:
            raise HTTPException(400, f"row {i} must be [t, ax, ay, az]")
        try:
            vals = [float(v) for v in row]
        except (TypeError, ValueError):
            raise HTTPException(400, f"row {i} contains a non-numeric value")
        times.append(vals[0])
        accel.append(vals[1:])
    try:
        return Trace(times=times, accel=accel, gesture_label=label)
    except (TraceValidationError, ValueError) as exc:
        raise HTTPException(400, str(exc))


def create_app() -> FastAPI:
    app = FastAPI(title="gesturekit service")
    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def _invalid_body(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc.errors())})

    def get_session(session_id: str) -> Session:
        sess = sessions.get(session_id)
        if sess is None:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return sess

    @app.post("/sessions", status_code=201)
    def create_session():
        sess = Session(session_id=uuid.uuid4().hex)
        with store_lock:
            sessions[sess.session_id] = sess
        return {"session_id": sess.session_id}

    @app.post("/sessions/{session_id}/gestures")
    def add_gesture(session_id: str, payload: dict = Body(...)):
        sess = get_session(session_id)
        label = payload.get("label")
        if not isinstance(label, str) or not label:
            raise HTTPException(400, "body must contain a non-empty string 'label'")
        with sess.lock:
            if label in sess.gestures:
                raise HTTPException(409, f"gesture {label!r} already registered")
            sess.gestures[label] = []
        return {"label": label, "samples": 0}

    @app.post("/sessions/{session_id}/gestures/{label}/samples")
    def add_sample(session_id: str, label: str, payload: list = Body(...)):
        sess = get_session(session_id)
        if label not in sess.gestures:
            raise HTTPException(404, f"unknown gesture {label!r}")
        trace = _rows_to_trace(payload, label)
        with sess.lock:
            sess.gestures[label].append(trace)
            count = len(sess.gestures[label])
        return {"label": label, "samples": count}

    @app.post("/sessions/{session_id}/train")
    def train(session_id: str, payload: dict = Body(default={})):
        sess = get_session(session_id)
        quantizer = payload.get("quantizer", sess.quantizer.value)
        try:
            kind = QuantizerKind(quantizer)
        except ValueError:
            raise HTTPException(400, f"unknown quantizer {quantizer!r}")
        n_states = payload.get("n_states", sess.n_states)
        seed = payload.get("seed", sess.seed)
        if not isinstance(n_states, int) or n_states < 1 \
                or not isinstance(seed, int):
            raise HTTPException(400, "n_states must be a positive int and seed an int")
        with sess.lock:
            if not sess.gestures:
                raise HTTPException(409, "no gestures registered")
            for label, traces in sess.gestures.items():
                if len(traces) < sess.min_samples:
                    raise HTTPException(
                        409, f"gesture {label!r} has {len(traces)} samples; "
                             f"need at least {sess.min_samples}")
            dataset = Dataset(tuple(t for traces in sess.gestures.values()
                                    for t in traces))
            models = train_all(dataset, TrainSpec(
                quantizer=kind, n_states=n_states, seed=seed))
            sess.models = models
            sess.quantizer = kind
            sess.n_states = n_states
            sess.seed = seed
            sess.trained_counts = {k: len(v) for k, v in sess.gestures.items()}
            sess.metrics_cache = None
        return {"status": "trained", "quantizer": kind.value,
                "gestures": {k: len(v) for k, v in sess.gestures.items()}}

    @app.post("/sessions/{session_id}/classify")
    def classify(session_id: str, payload: dict = Body(...)):
        sess = get_session(session_id)
        rows = payload.get("sample")
        trace = _rows_to_trace(rows)
        mode = payload.get("mode", "dead_start")
        if mode not in ("signaled", "dead_start"):
            raise HTTPException(400, "mode must be 'signaled' or 'dead_start'")
        thr = payload.get("thr", sess.thr)
        if not (isinstance(thr, (int, float)) and 0 < thr < 1):
            raise HTTPException(400, "thr must be a number in (0,1)")
        with sess.lock:
            models = sess.effective_models()
            sess.classify_count += 1
            call_no = sess.classify_count
        if sess.quantizer.is_statistical:
            res = classify_statistical(trace, models, ClassifierConfig(
                quantizer=sess.quantizer, thr=float(thr),
                seed=sess.seed * 7919 + call_no))
            doc = res.to_dict()
            if mode == "signaled" and doc["decision"] is None:
                # The user told us a gesture happened, so pick the best
                # supported one instead of abstaining.
                best = max(range(len(res.labels)),
                           key=lambda i: (res.strengths[i], -i))
                doc["decision"] = res.labels[best]
                doc["forced"] = True
        else:
            decision = classify_deterministic(trace, models)
            post = deterministic_posteriors(trace, models)
            doc = {"decision": decision,
                   "posteriors": {m.label: float(p)
                                  for m, p in zip(models, post)},
                   "candidates": [decision], "samples_used": 0}
        doc["mode"] = mode
        doc["thr"] = float(thr)
        return doc

    @app.patch("/sessions/{session_id}/config")
    def patch_config(session_id: str, payload: dict = Body(...)):
        sess = get_session(session_id)
        with sess.lock:
            if "thr" in payload:
                thr = payload["thr"]
                if not (isinstance(thr, (int, float)) and 0 < thr < 1):
                    raise HTTPException(400, "thr must be a number in (0,1)")
                sess.thr = float(thr)
            if "min_samples" in payload:
                ms = payload["min_samples"]
                if not isinstance(ms, int) or ms < 1:
                    raise HTTPException(400, "min_samples must be a positive int")
                sess.min_samples = ms
            if "priors" in payload:
                weights = payload["priors"]
                if not isinstance(weights, dict):
                    raise HTTPException(400, "priors must be a label->weight object")
                unknown = set(weights) - set(sess.gestures)
                if unknown:
                    raise HTTPException(400, f"unknown gestures {sorted(unknown)}")
                try:
                    vals = {k: float(v) for k, v in weights.items()}
                except (TypeError, ValueError):
                    raise HTTPException(400, "prior weights must be numbers")
                if any(v < 0 for v in vals.values()):
                    raise HTTPException(400, "prior weights must be non-negative")
                sess.prior_weights = vals
            return {"thr": sess.thr, "min_samples": sess.min_samples,
                    "priors": sess.prior_weights,
                    "quantizer": sess.quantizer.value}

    @app.get("/sessions/{session_id}/metrics")
    def metrics(session_id: str):
        sess = get_session(session_id)
        with sess.lock:
            models = sess.effective_models()
            if sess.metrics_cache is None:
                # Replayed threshold curves over the session's own training
                # samples (in-sample by construction): one recorded
                # classification per sample, re-decided per threshold.
                dataset = Dataset(tuple(t for traces in sess.gestures.values()
                                        for t in traces))
                cfg = EvalConfig(seed=sess.seed, thr=sess.thr)
                recorded = record_classifications(models, dataset, cfg)
                sweep = sweep_threshold(models, dataset, DEFAULT_THR_GRID,
                                        cfg, recorded=recorded)
                sess.metrics_cache = sweep.to_dict()
            doc = dict(sess.metrics_cache)
            doc["in_sample"] = True
            doc["stale"] = sess.stale
            doc["thr"] = sess.thr
            return doc

    @app.get("/sessions/{session_id}")
    def session_state(session_id: str):
        sess = get_session(session_id)
        return {
            "session_id": sess.session_id,
            "gestures": {k: len(v) for k, v in sess.gestures.items()},
            "trained": sess.models is not None,
            "stale": sess.stale,
            "quantizer": sess.quantizer.value,
            "thr": sess.thr,
            "min_samples": sess.min_samples,
            "priors": sess.prior_weights,
        }

    return app


app = create_app()
