"""Accelerometer gesture recognition with statistical quantization.

Per-gesture discrete HMMs over vector-quantized acceleration symbols, with a
choice of quantizers: one shared spherical codebook, per-gesture elliptical
codebooks, and two statistical quantizers that sample codewords from a
measured error model or from inverse distances instead of committing to the
nearest one. Classification runs either a single Bayes pass or a sequential
hypothesis test with a tunable precision/recall threshold and abstention.
"""

from .core import (AccelSample, Codebook, Dataset, GestureKitError,
                   ModelFormatError, Trace, TraceParseError,
                   TraceValidationError, UnsupportedVersionError, load_traces,
                   save_traces)
from .errormodel import (GmmErrorModel, Mixture1D, ResidualSet,
                         build_error_model, compute_residuals, fit_gmm)
from .evaluate import (EvalConfig, MetricsReport, TrainSpec, evaluate,
                       gesture_count_sensitivity, run_protocol, split,
                       sweep_threshold, time_classification, train_all,
                       user_count_sensitivity)
from .hmm import (ERGODIC, LEFT_TO_RIGHT, Hmm, Topology, TrainConfig,
                  baum_welch_train, baum_welch_train_detailed,
                  forward_backward, log_likelihood, make_topology)
from .models import GestureModel, load_models, save_models, set_priors
from .quantize import (QuantizerKind, build_elliptical_codebook,
                       build_spherical_codebook, codeword_probabilities_gmm,
                       codeword_probabilities_inverse_distance,
                       quantize_deterministic, sample_observation_sequence,
                       smooth_trace)
from .synthetic import (GestureTemplate, NoiseSpec, drift_curve,
                        generate_gesture, integrate_path, synthetic_dataset,
                        template_library, template_set)
from .uncertain import (ClassificationResult, ClassifierConfig,
                        HypothesisConfig, UncertainValue,
                        classify_deterministic, classify_statistical,
                        decide_with_threshold, posterior, pr)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
