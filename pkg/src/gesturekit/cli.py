"""Command-line interface: gen | train | classify | eval | drift.

JSON results go to stdout, diagnostics to stderr. Exit codes: 0 success
(including an abstaining classification), 1 internal error, 2 invalid
input. All randomness flows from --seed, and timing fields are omitted from
outputs so identical invocations produce identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

from .core import GestureKitError, load_traces, save_traces
from .evaluate import (EvalConfig, TrainSpec, run_protocol, split,
                       sweep_threshold, train_all)
from .models import load_models, save_models
from .quantize import QuantizerKind
from .synthetic import (NoiseSpec, drift_curve, generate_gesture,
                        get_template, synthetic_dataset)
from .uncertain import ClassifierConfig, classify_deterministic, \
    classify_statistical, deterministic_posteriors

KIND_CHOICES = [k.value for k in QuantizerKind]


class CliError(Exception):
    """Invalid input reported with exit code 2."""


def _parse_triple(text: str, flag: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise CliError(f"{flag} expects three comma-separated numbers")
    try:
        return tuple(float(p) for p in parts)   # type: ignore[return-value]
    except ValueError as exc:
        raise CliError(f"{flag}: {exc}") from exc


def cmd_gen(args) -> int:
    try:
        template = get_template(args.template)
    except KeyError as exc:
        raise CliError(exc.args[0]) from exc
    sigma = _parse_triple(args.noise_xyz, "--noise-xyz")
    traces = [
        generate_gesture(template,
                         NoiseSpec(sigma=sigma, orientation_jitter=args.orientation_jitter,
                                   speed_jitter=args.speed_jitter,
                                   seed=args.seed * 1_000_003 + k))
        for k in range(args.count)
    ]
    prefix = args.id_prefix if args.id_prefix is not None \
        else f"{args.template}-s{args.seed}-"
    save_traces(traces, args.out, id_prefix=prefix)
    print(json.dumps({"written": len(traces), "out": args.out}))
    return 0


def cmd_train(args) -> int:
    dataset = load_traces(args.input, units=args.units)
    spec = TrainSpec(quantizer=QuantizerKind(args.quantizer),
                     n_states=args.states, seed=args.seed)
    models = train_all(dataset, spec)
    save_models(models, args.out)
    print(json.dumps({"gestures": [m.label for m in models],
                      "quantizer": args.quantizer, "out": args.out}))
    return 0


def cmd_classify(args) -> int:
    models = load_models(args.model)
    dataset = load_traces(args.input, units=args.units)
    kind = QuantizerKind(args.quantizer) if args.quantizer else models[0].quantizer
    results = []
    for i, trace in enumerate(dataset.traces):
        if kind.is_statistical:
            res = classify_statistical(trace, models, ClassifierConfig(
                quantizer=kind, thr=args.thr, seed=args.seed * 100_003 + i))
            doc = res.to_dict()
            doc.pop("elapsed_ms")
        else:
            decision = classify_deterministic(trace, models)
            post = deterministic_posteriors(trace, models)
            doc = {"decision": decision,
                   "posteriors": {m.label: float(p)
                                  for m, p in zip(models, post)}}
        results.append(doc)
    print(json.dumps(results[0] if len(results) == 1 else {"results": results}))
    return 0


def cmd_eval(args) -> int:
    if args.input:
        dataset = load_traces(args.input, units=args.units)
    else:
        dataset = synthetic_dataset(args.synthetic_gestures,
                                    samples_per_gesture=args.samples,
                                    n_subjects=args.subjects, seed=args.seed)
    kinds = tuple(QuantizerKind(k) for k in args.kinds.split(","))
    cfg = EvalConfig(repetitions=args.reps, kinds=kinds, seed=args.seed,
                     thr=args.thr)
    report = run_protocol(dataset, cfg)
    doc = report.to_dict()
    for run in doc["runs"]:        # wall-clock fields break reproducibility
        run.pop("mean_ms", None)
        run.pop("p95_ms", None)
    if args.sweep:
        train_set, test_set = split(dataset, cfg.split_ratio, seed=cfg.seed)
        models = train_all(train_set, TrainSpec(
            quantizer=QuantizerKind.STATISTICAL_GMM, n_states=cfg.n_states,
            seed=cfg.seed))
        doc["sweep"] = sweep_threshold(models, test_set, cfg.thr_grid, cfg).to_dict()
    if args.out_csv:
        with open(args.out_csv, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(report.csv_rows())
        print(f"wrote {args.out_csv}", file=sys.stderr)
    if args.out_json:
        with open(args.out_json, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
        print(f"wrote {args.out_json}", file=sys.stderr)
    else:
        print(json.dumps(doc))
    return 0


def cmd_drift(args) -> int:
    try:
        angles_deg = [float(a) for a in args.angles_deg.split(",")]
    except ValueError as exc:
        raise CliError(f"--angles-deg: {exc}") from exc
    times, errors = drift_curve([math.radians(a) for a in angles_deg],
                                duration=args.duration, dt=args.dt)
    writer = csv.writer(open(args.out, "w", newline="", encoding="utf-8")
                        if args.out else sys.stdout)
    writer.writerow(["t"] + [f"err_deg_{a:g}" for a in angles_deg])
    for i, t in enumerate(times):
        writer.writerow([repr(float(t))] + [repr(float(errors[j, i]))
                                            for j in range(len(angles_deg))])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gesturekit",
                                description="Accelerometer gesture recognition toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate synthetic gesture traces as CSV")
    g.add_argument("--template", required=True)
    g.add_argument("--count", type=int, default=10)
    g.add_argument("--noise-xyz", default="0,0,0")
    g.add_argument("--orientation-jitter", type=float, default=0.0)
    g.add_argument("--speed-jitter", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--id-prefix", default=None,
                   help="trace id prefix (default: '<template>-s<seed>-')")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train a model set from a trace CSV")
    t.add_argument("input")
    t.add_argument("--out", required=True)
    t.add_argument("--quantizer", choices=KIND_CHOICES,
                   default=QuantizerKind.STATISTICAL_GMM.value)
    t.add_argument("--states", type=int, default=8)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--units", choices=["g", "ms2"], default="g")
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("classify", help="classify traces against a model file")
    c.add_argument("model")
    c.add_argument("input")
    c.add_argument("--quantizer", choices=KIND_CHOICES, default=None,
                   help="override the kind stored in the model file")
    c.add_argument("--thr", type=float, default=0.5)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--units", choices=["g", "ms2"], default="g")
    c.set_defaults(func=cmd_classify)

    e = sub.add_parser("eval", help="run the repeated-split evaluation protocol")
    e.add_argument("--input", default=None)
    e.add_argument("--synthetic-gestures", type=int, default=6)
    e.add_argument("--samples", type=int, default=16)
    e.add_argument("--subjects", type=int, default=1)
    e.add_argument("--kinds", default=",".join([
        QuantizerKind.DETERMINISTIC_SPHERICAL.value,
        QuantizerKind.DETERMINISTIC_ELLIPTICAL.value,
        QuantizerKind.STATISTICAL_GMM.value]))
    e.add_argument("--reps", type=int, default=10)
    e.add_argument("--thr", type=float, default=0.5)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--sweep", action="store_true")
    e.add_argument("--out-json", default=None)
    e.add_argument("--out-csv", default=None)
    e.add_argument("--units", choices=["g", "ms2"], default="g")
    e.set_defaults(func=cmd_eval)

    d = sub.add_parser("drift", help="dead-reckoning error growth table as CSV")
    d.add_argument("--angles-deg", default="0.5,1,2")
    d.add_argument("--duration", type=float, default=10.0)
    d.add_argument("--dt", type=float, default=0.02)
    d.add_argument("--out", default=None)
    d.set_defaults(func=cmd_drift)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (CliError, GestureKitError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:    # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
