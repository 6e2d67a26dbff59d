"""Train the three quantizer kinds on one synthetic set and compare them.

Generates ten gestures with gesture-specific anisotropic sensor noise,
holds out a quarter of the traces, trains a model set per quantizer kind
on the rest, and prints recognition, macro precision/recall, abstention,
and latency side by side.  Run from the repository root:

    python3 demos/quickstart.py
"""

import numpy as np

from gesturekit.evaluate import EvalConfig, TrainSpec, evaluate, split, train_all
from gesturekit.quantize import QuantizerKind
from gesturekit.synthetic import synthetic_dataset
from gesturekit.uncertain import ClassifierConfig, classify_statistical


def main() -> None:
    ds = synthetic_dataset(n_gestures=10, samples_per_gesture=12, seed=0,
                           noise_scale=1.0)
    train_set, test_set = split(ds, ratio=0.75, seed=0)
    print(f"{len(train_set.traces)} training traces, "
          f"{len(test_set.traces)} test traces, "
          f"{len(set(t.gesture_label for t in ds.traces))} gestures\n")

    print(f"{'kind':<26} {'recognition':>11} {'precision':>9} "
          f"{'recall':>7} {'abstain':>7} {'mean ms':>8}")
    model_sets = {}
    for kind in (QuantizerKind.DETERMINISTIC_SPHERICAL,
                 QuantizerKind.DETERMINISTIC_ELLIPTICAL,
                 QuantizerKind.STATISTICAL_GMM):
        models = train_all(train_set, TrainSpec(
            quantizer=kind, n_states=8, seed=0,
            emission_floor=1e-2, codebook_size=26))
        model_sets[kind] = models
        run = evaluate(models, test_set, EvalConfig(seed=0, thr=0.5)).runs[0]
        print(f"{kind.value:<26} {run.recognition:>11.3f} "
              f"{run.macro_precision:>9.3f} {run.macro_recall:>7.3f} "
              f"{run.abstention_rate:>7.3f} {run.mean_ms:>8.2f}")

    # one statistical classification in detail
    trace = next(t for t in test_set.traces
                 if t.gesture_label == "circle-xy-v1")
    models = model_sets[QuantizerKind.STATISTICAL_GMM]
    res = classify_statistical(trace, models, ClassifierConfig(thr=0.5, seed=0))
    order = np.argsort(res.posteriors)[::-1][:3]
    print(f"\ntrace labeled {trace.gesture_label!r} -> "
          f"decision {res.decision!r} after {res.samples_used} rounds")
    for i in order:
        print(f"  P({models[i].label}) = {res.posteriors[i]:.3f}")


if __name__ == "__main__":
    main()
