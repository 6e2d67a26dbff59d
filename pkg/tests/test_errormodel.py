"""Tests for residual collection and the measured quantization-error model."""

import numpy as np
import pytest

from gesturekit.core import Codebook, Trace
from gesturekit.errormodel import (
    MIN_GMM_POINTS_PER_COMPONENT,
    SPARSE_CODEWORD_MIN,
    GmmErrorModel,
    Mixture1D,
    ResidualSet,
    build_error_model,
    compute_residuals,
    error_model_report,
    fit_gmm,
    fit_gmm_detailed,
)
from gesturekit.quantize import EPS_SIGMA, unit_sphere_template


def make_trace(accel, label="g0"):
    accel = np.asarray(accel, dtype=float)
    return Trace(np.arange(accel.shape[0]) * 0.02, accel,
                 gesture_label=label, subject_id="s0")


def two_codeword_book():
    return Codebook(np.array([[1.0, 0, 0], [-1.0, 0, 0]]),
                    "spherical", np.zeros(3), np.ones(3))


def full_sphere_book(radius=1.0):
    return Codebook(unit_sphere_template(18) * radius, "spherical",
                    np.zeros(3), np.full(3, radius))


def traces_on_codewords(book, per_codeword, sigma, seed=0):
    """Traces whose samples sit on codewords plus known Gaussian noise.

    Visits codewords round-robin so every codeword collects the same number
    of residuals and the assignment is unambiguous (noise << spacing).
    """
    rng = np.random.default_rng(seed)
    order = np.tile(np.arange(book.size), per_codeword)
    samples = book.codewords[order] + rng.normal(0.0, sigma, (order.size, 3))
    return [make_trace(samples)], order


class TestMixture1D:
    """Canonical-form container and the midpoint component rule."""

    def test_component_selection_by_midpoints(self):
        mix = Mixture1D(np.array([0.3, 0.4, 0.3]),
                        np.array([0.1, 0.3, 0.7]),
                        np.array([0.05, 0.05, 0.05]))
        # midpoints are 0.2 and 0.5
        assert mix.component_for(0.0) == 0
        assert mix.component_for(0.19) == 0
        assert mix.component_for(0.21) == 1
        assert mix.component_for(0.49) == 1
        assert mix.component_for(0.51) == 2
        assert mix.component_for(5.0) == 2

    def test_density_uses_selected_component_only(self):
        mix = Mixture1D(np.array([0.5, 0.25, 0.25]),
                        np.array([0.0, 1.0, 2.0]),
                        np.array([0.1, 0.2, 0.3]))
        x = 0.9    # inside component 1's region (0.5, 1.5)
        expected = np.exp(-0.5 * ((x - 1.0) / 0.2) ** 2) / (
            np.sqrt(2 * np.pi) * 0.2)
        np.testing.assert_allclose(mix.density(x), [expected], rtol=1e-12)

    def test_log_pdf_is_full_mixture(self):
        mix = Mixture1D(np.array([0.2, 0.3, 0.5]),
                        np.array([0.0, 0.5, 1.5]),
                        np.array([0.1, 0.2, 0.4]))
        x = np.array([0.3, 1.0])
        direct = np.log(sum(
            w * np.exp(-0.5 * ((x - m) / s) ** 2) / (np.sqrt(2 * np.pi) * s)
            for w, m, s in zip(mix.weights, mix.means, mix.stds)))
        np.testing.assert_allclose(mix.log_pdf(x), direct, rtol=1e-12)

    def test_descending_means_rejected(self):
        with pytest.raises(ValueError, match="ascending"):
            Mixture1D(np.array([0.5, 0.5]), np.array([1.0, 0.5]),
                      np.array([0.1, 0.1]))

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            Mixture1D(np.array([0.5, 0.4]), np.array([0.0, 1.0]),
                      np.array([0.1, 0.1]))


class TestComputeResiduals:
    def test_hand_computed_bins(self):
        """Residual = sample minus assigned codeword, per axis, signed."""
        book = two_codeword_book()
        tr = make_trace([[1.1, 0.2, 0.0],
                         [-0.8, 0.0, -0.1],
                         [0.9, -0.1, 0.3]])
        rs = compute_residuals([tr], book)
        np.testing.assert_array_equal(rs.counts, [2, 1])
        np.testing.assert_allclose(
            rs.per_codeword[0],
            [[0.1, 0.2, 0.0], [-0.1, -0.1, 0.3]], atol=1e-12)
        np.testing.assert_allclose(
            rs.per_codeword[1], [[0.2, 0.0, -0.1]], atol=1e-12)

    def test_unvisited_codeword_gets_empty_bin(self):
        book = two_codeword_book()
        tr = make_trace([[1.0, 0.1, 0.0], [0.9, 0.0, 0.0]])
        rs = compute_residuals([tr], book)
        assert rs.per_codeword[1].shape == (0, 3)

    def test_pooled_stacks_everything(self):
        rs = ResidualSet((np.ones((2, 3)), np.zeros((3, 3))))
        assert rs.pooled().shape == (5, 3)


class TestFitGmm:
    def test_log_likelihood_monotone_per_iteration(self):
        rng = np.random.default_rng(10)
        x = np.concatenate([rng.normal(0.1, 0.02, 300),
                            rng.normal(0.3, 0.05, 300),
                            rng.normal(0.8, 0.1, 300)])
        _, history = fit_gmm_detailed(x, seed=1)
        assert len(history) >= 2
        assert (np.diff(np.array(history)) >= -1e-8).all()

    def test_recovers_separated_components(self):
        rng = np.random.default_rng(11)
        x = np.concatenate([rng.normal(0.1, 0.02, 500),
                            rng.normal(0.5, 0.03, 500),
                            rng.normal(1.2, 0.05, 500)])
        mix = fit_gmm(x, seed=2)
        assert not mix.fallback
        np.testing.assert_allclose(mix.means, [0.1, 0.5, 1.2], atol=0.02)
        np.testing.assert_allclose(mix.weights, [1 / 3] * 3, atol=0.03)

    def test_means_always_ascending(self):
        rng = np.random.default_rng(12)
        for seed in range(8):
            mix = fit_gmm(rng.exponential(0.2, 200), seed=seed)
            assert (np.diff(mix.means) >= 0).all()

    def test_sparse_input_falls_back_to_single_gaussian(self):
        """Fewer than 3k points yields k identical flagged components."""
        x = np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8])
        assert x.size < MIN_GMM_POINTS_PER_COMPONENT * 3
        mix = fit_gmm(x)
        assert mix.fallback
        assert mix.k == 3
        np.testing.assert_allclose(mix.means, x.mean(), atol=1e-12)
        np.testing.assert_allclose(mix.stds, max(x.std(), EPS_SIGMA), atol=1e-12)
        np.testing.assert_allclose(mix.weights, 1 / 3, atol=1e-15)

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(13)
        x = rng.exponential(0.3, 400)
        m1 = fit_gmm(x, seed=5)
        m2 = fit_gmm(x, seed=5)
        np.testing.assert_array_equal(m1.means, m2.means)
        np.testing.assert_array_equal(m1.weights, m2.weights)

    def test_identical_points_respect_sigma_floor(self):
        mix = fit_gmm(np.full(30, 0.25), seed=0)
        assert (mix.stds >= EPS_SIGMA - 1e-15).all()


class TestBuildErrorModel:
    def test_recovers_injected_axis_noise(self):
        """Per-axis stds of the fitted model match the injected noise."""
        # radius >> noise so no sample strays to a neighboring codeword
        book = full_sphere_book(radius=4.0)
        sigma = np.array([0.2, 0.1, 0.05])
        traces, _ = traces_on_codewords(book, per_codeword=400,
                                        sigma=sigma, seed=3)
        model = build_error_model(traces, book, seed=0)
        assert not model.inherited.any()
        # every codeword sees the same isotropic-per-axis noise
        np.testing.assert_allclose(
            model.axis_stds, np.tile(sigma, (book.size, 1)), rtol=0.15)
        np.testing.assert_allclose(
            model.axis_means, 0.0, atol=0.06)

    def test_sparse_codewords_inherit_global_statistics(self):
        book = two_codeword_book()
        rng = np.random.default_rng(4)
        # codeword 0 gets plenty of residuals, codeword 1 too few
        dense = np.array([1.0, 0, 0]) + rng.normal(0, 0.05, (40, 3))
        sparse = np.array([-1.0, 0, 0]) + rng.normal(0, 0.05, (SPARSE_CODEWORD_MIN - 1, 3))
        model = build_error_model(
            [make_trace(np.concatenate([dense, sparse]))], book)
        assert not model.inherited[0]
        assert model.inherited[1]
        rs = compute_residuals(
            [make_trace(np.concatenate([dense, sparse]))], book)
        pooled = rs.pooled()
        np.testing.assert_allclose(model.axis_means[1], pooled.mean(axis=0),
                                   atol=1e-12)
        np.testing.assert_allclose(
            model.axis_stds[1],
            np.maximum(pooled.std(axis=0), EPS_SIGMA), atol=1e-12)
        assert model.mixtures[1] is model.global_mixture

    def test_dense_codeword_keeps_own_statistics(self):
        book = two_codeword_book()
        rng = np.random.default_rng(5)
        dense0 = np.array([1.0, 0, 0]) + rng.normal(0, 0.02, (50, 3))
        dense1 = np.array([-1.0, 0, 0]) + rng.normal(0, 0.08, (50, 3))
        model = build_error_model(
            [make_trace(np.concatenate([dense0, dense1]))], book)
        rs = compute_residuals(
            [make_trace(np.concatenate([dense0, dense1]))], book)
        np.testing.assert_allclose(model.axis_means[0],
                                   rs.per_codeword[0].mean(axis=0), atol=1e-12)
        np.testing.assert_allclose(model.axis_stds[1],
                                   rs.per_codeword[1].std(axis=0), atol=1e-12)
        assert model.axis_stds[1].mean() > model.axis_stds[0].mean()

    def test_counts_and_shapes(self):
        book = full_sphere_book()
        traces, order = traces_on_codewords(book, per_codeword=12,
                                            sigma=np.full(3, 0.01), seed=6)
        model = build_error_model(traces, book)
        assert model.n_codewords == book.size
        np.testing.assert_array_equal(model.residual_counts,
                                      np.full(book.size, 12))
        assert len(model.mixtures) == book.size

    def test_validation_rejects_mismatched_shapes(self):
        mix = Mixture1D(np.array([1.0]), np.array([0.1]), np.array([0.05]))
        with pytest.raises(ValueError, match="one mixture per codeword"):
            GmmErrorModel(np.zeros((2, 3)), np.full((2, 3), 0.1),
                          (mix,), mix, np.array([1, 1]),
                          np.zeros(2, dtype=bool))


class TestErrorModelReport:
    def test_report_structure_and_values(self):
        book = two_codeword_book()
        rng = np.random.default_rng(7)
        acc = np.concatenate([
            np.array([1.0, 0, 0]) + rng.normal(0, 0.03, (20, 3)),
            np.array([-1.0, 0, 0]) + rng.normal(0, 0.03, (20, 3)),
        ])
        traces = [make_trace(acc[:20]), make_trace(acc[20:])]
        model = build_error_model(traces, book)
        report = error_model_report(traces, book, model)
        assert {row["codeword"] for row in report["per_codeword"]} == {0, 1}
        counts = {row["codeword"]: row["count"] for row in report["per_codeword"]}
        assert counts[0] == 20 and counts[1] == 20
        assert len(report["per_position"]) == 20
        for row in report["per_position"]:
            assert len(row["mean"]) == 3 and len(row["std"]) == 3
