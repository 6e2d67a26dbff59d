"""Tests for the discrete HMM module.

The forward recursion is checked against brute-force path enumeration and
the Baum-Welch reestimate against an exact rational-arithmetic EM step,
both from tests/oracles.py.
"""

import numpy as np
import pytest

from gesturekit.hmm import (
    ERGODIC,
    LEFT_TO_RIGHT,
    Hmm,
    Topology,
    TrainConfig,
    batch_log_likelihood,
    baum_welch_train,
    baum_welch_train_detailed,
    forward_backward,
    log_likelihood,
    make_topology,
    stacked_log_likelihood,
)
from oracles import em_one_step_fractions, forward_prob_enumerate


def random_hmm(rng, n_states, n_symbols):
    """Random dense HMM with strictly positive rows."""
    a = rng.random((n_states, n_states)) + 0.05
    b = rng.random((n_states, n_symbols)) + 0.05
    pi = rng.random(n_states) + 0.05
    return Hmm(
        a / a.sum(axis=1, keepdims=True),
        b / b.sum(axis=1, keepdims=True),
        pi / pi.sum(),
    )


class TestTopology:
    """Transition-structure masks."""

    def test_ergodic_mask_is_full(self):
        assert Topology("ergodic").mask(5).all()

    def test_banded_mask_rows(self):
        """Band 3 allows self plus the next three states."""
        mask = LEFT_TO_RIGHT.mask(6)
        assert list(np.flatnonzero(mask[0])) == [0, 1, 2, 3]
        assert list(np.flatnonzero(mask[4])) == [4, 5]
        assert list(np.flatnonzero(mask[5])) == [5]
        assert not mask[3, 2]

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown topology"):
            Topology("circular")

    def test_mass_on_forbidden_transition_rejected(self):
        a = np.array([[0.5, 0.5], [0.5, 0.5]])
        b = np.full((2, 3), 1.0 / 3.0)
        pi = np.array([0.5, 0.5])
        with pytest.raises(ValueError, match="topology forbids"):
            Hmm(a, b, pi, Topology("left_to_right", 0))


class TestHmmValidation:
    """Constructor rejects malformed parameter sets."""

    def test_row_sums_checked(self):
        a = np.array([[0.6, 0.3], [0.4, 0.6]])
        b = np.full((2, 2), 0.5)
        with pytest.raises(ValueError, match="rows of A"):
            Hmm(a, b, np.array([0.5, 0.5]))

    def test_negative_entries_checked(self):
        a = np.array([[1.2, -0.2], [0.4, 0.6]])
        b = np.full((2, 2), 0.5)
        with pytest.raises(ValueError, match="negative"):
            Hmm(a, b, np.array([0.5, 0.5]))

    def test_arrays_frozen(self):
        hmm = random_hmm(np.random.default_rng(0), 2, 2)
        with pytest.raises(ValueError):
            hmm.A[0, 0] = 0.9


class TestMakeTopology:
    def test_initial_guess_valid_and_deterministic(self):
        _, h1 = make_topology("left_to_right", 8, n_symbols=18, seed=3)
        _, h2 = make_topology("left_to_right", 8, n_symbols=18, seed=3)
        np.testing.assert_array_equal(h1.A, h2.A)
        np.testing.assert_array_equal(h1.B, h2.B)
        assert (h1.A[~LEFT_TO_RIGHT.mask(8)] == 0).all()

    def test_perturbation_within_one_percent(self):
        mask, hmm = make_topology("ergodic", 4, n_symbols=6, seed=1)
        # uniform row value is 0.25; 1% multiplicative noise then renormalize
        assert np.abs(hmm.A - 0.25).max() < 0.25 * 0.021
        assert not np.allclose(hmm.A, 0.25)


class TestForward:
    """Scaled forward likelihood versus exhaustive path enumeration."""

    def test_matches_enumeration_on_random_instances(self):
        rng = np.random.default_rng(42)
        for _ in range(60):
            n_states = int(rng.integers(1, 4))
            n_symbols = int(rng.integers(2, 5))
            t_len = int(rng.integers(1, 7))
            hmm = random_hmm(rng, n_states, n_symbols)
            obs = rng.integers(0, n_symbols, size=t_len)
            expected = forward_prob_enumerate(hmm.A, hmm.B, hmm.pi, obs)
            got = log_likelihood(hmm, obs)
            np.testing.assert_allclose(got, np.log(expected), rtol=1e-10)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(7)
        hmm = random_hmm(rng, 3, 4)
        obs = rng.integers(0, 4, size=(5, 9))
        batch = batch_log_likelihood(hmm, obs)
        single = np.array([log_likelihood(hmm, row) for row in obs])
        np.testing.assert_allclose(batch, single, rtol=1e-12)

    def test_stacked_matches_per_model_batch(self):
        # mixed state and symbol counts exercise the zero padding
        rng = np.random.default_rng(23)
        hmms = [random_hmm(rng, s, v) for s, v in ((2, 3), (4, 5), (3, 2))]
        obs = [rng.integers(0, h.n_symbols, size=(6, 11)) for h in hmms]
        got = stacked_log_likelihood(hmms, np.stack(obs))
        want = np.array([batch_log_likelihood(h, o)
                         for h, o in zip(hmms, obs)])
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_stacked_keeps_neg_inf_rows(self):
        a = np.array([[1.0]])
        b = np.array([[1.0, 0.0]])
        dead = Hmm(a, b, np.array([1.0]))
        live = random_hmm(np.random.default_rng(3), 2, 2)
        obs = np.array([[[0, 1, 0], [0, 0, 0]]] * 2)
        got = stacked_log_likelihood([dead, live], obs)
        assert got[0, 0] == -np.inf
        assert np.isfinite(got[0, 1]) and np.isfinite(got[1]).all()

    def test_impossible_sequence_gives_neg_inf(self):
        a = np.array([[1.0]])
        b = np.array([[1.0, 0.0]])
        hmm = Hmm(a, b, np.array([1.0]))
        assert log_likelihood(hmm, [0, 1, 0]) == -np.inf

    def test_symbol_out_of_range_rejected(self):
        hmm = random_hmm(np.random.default_rng(0), 2, 3)
        with pytest.raises(ValueError, match="out of range"):
            log_likelihood(hmm, [0, 3])


class TestForwardBackward:
    def test_gamma_rows_normalized(self):
        rng = np.random.default_rng(11)
        hmm = random_hmm(rng, 3, 4)
        obs = rng.integers(0, 4, size=12)
        gamma, xi = forward_backward(hmm, obs)
        np.testing.assert_allclose(gamma.sum(axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(xi.sum(axis=(1, 2)), 1.0, atol=1e-12)

    def test_xi_marginalizes_to_gamma(self):
        """Summing xi over the next state recovers gamma at time t."""
        rng = np.random.default_rng(12)
        hmm = random_hmm(rng, 4, 3)
        obs = rng.integers(0, 3, size=8)
        gamma, xi = forward_backward(hmm, obs)
        np.testing.assert_allclose(xi.sum(axis=2), gamma[:-1], atol=1e-12)

    def test_zero_probability_sequence_raises(self):
        a = np.array([[1.0]])
        b = np.array([[1.0, 0.0]])
        hmm = Hmm(a, b, np.array([1.0]))
        with pytest.raises(ValueError, match="zero probability"):
            forward_backward(hmm, [1])


class TestBaumWelch:
    """Reestimation properties and the exact one-step cross-check."""

    def test_one_step_matches_exact_em(self):
        """A single unsmoothed update equals the rational-arithmetic EM."""
        a = np.array([[0.7, 0.3], [0.4, 0.6]])
        b = np.array([[0.9, 0.1], [0.2, 0.8]])
        pi = np.array([0.6, 0.4])
        init = Hmm(a, b, pi, ERGODIC)
        seqs = [
            np.array([0, 1, 0, 0]),
            np.array([1, 1, 0, 1]),
            np.array([0, 0, 1, 1]),
        ]
        cfg = TrainConfig(n_states=2, n_symbols=2, topology=ERGODIC,
                          max_iters=1, emission_floor=0.0)
        trained = baum_welch_train(seqs, cfg, init=init)
        a_ref, b_ref, pi_ref = em_one_step_fractions(a, b, pi, seqs)
        np.testing.assert_allclose(trained.A, a_ref, atol=1e-12)
        np.testing.assert_allclose(trained.B, b_ref, atol=1e-12)
        np.testing.assert_allclose(trained.pi, pi_ref, atol=1e-12)

    def test_log_likelihood_never_decreases(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n_symbols = int(rng.integers(3, 6))
            seqs = [rng.integers(0, n_symbols, size=int(rng.integers(4, 10)))
                    for _ in range(int(rng.integers(2, 6)))]
            cfg = TrainConfig(n_states=3, n_symbols=n_symbols,
                              topology=ERGODIC, max_iters=25, seed=int(rng.integers(1000)),
                              emission_floor=0.0)
            _, report = baum_welch_train_detailed(seqs, cfg)
            lls = np.array(report.log_likelihoods)
            assert (np.diff(lls) >= -1e-9).all()

    def test_mixed_lengths_accepted(self):
        rng = np.random.default_rng(9)
        seqs = [rng.integers(0, 4, size=n) for n in (5, 8, 5, 11, 8)]
        cfg = TrainConfig(n_states=3, n_symbols=4, topology=ERGODIC,
                          max_iters=10)
        hmm, report = baum_welch_train_detailed(seqs, cfg)
        assert report.iterations >= 1
        assert np.isfinite(report.final_log_likelihood)
        np.testing.assert_allclose(hmm.A.sum(axis=1), 1.0, atol=1e-9)

    def test_topology_zeros_preserved(self):
        rng = np.random.default_rng(13)
        seqs = [rng.integers(0, 5, size=20) for _ in range(6)]
        cfg = TrainConfig(n_states=6, n_symbols=5, max_iters=15)
        hmm = baum_welch_train(seqs, cfg)
        assert (hmm.A[~LEFT_TO_RIGHT.mask(6)] == 0).all()

    def test_emission_floor_keeps_b_positive(self):
        """Smoothing leaves no zero emission, so unseen symbols stay finite."""
        seqs = [np.zeros(12, dtype=int) for _ in range(4)]
        cfg = TrainConfig(n_states=2, n_symbols=6, topology=ERGODIC,
                          max_iters=5)
        hmm = baum_welch_train(seqs, cfg)
        assert hmm.B.min() > 0
        assert np.isfinite(log_likelihood(hmm, [0, 3, 5]))

    def test_training_improves_fit_on_structured_data(self):
        """A model trained on a pattern beats the untrained guess on it."""
        rng = np.random.default_rng(21)
        pattern = np.tile([0, 0, 1, 2, 2, 3], 4)
        seqs = [np.clip(pattern + rng.integers(0, 2, size=pattern.size) * 0, 0, 3)
                for _ in range(8)]
        cfg = TrainConfig(n_states=4, n_symbols=4, max_iters=40, seed=2)
        _, init = make_topology(cfg.topology, cfg.n_states,
                                n_symbols=cfg.n_symbols, seed=cfg.seed)
        trained = baum_welch_train(seqs, cfg)
        assert log_likelihood(trained, pattern) > log_likelihood(init, pattern)

    def test_init_model_shape_checked(self):
        bad = random_hmm(np.random.default_rng(1), 3, 4)
        cfg = TrainConfig(n_states=2, n_symbols=4, topology=ERGODIC)
        with pytest.raises(ValueError, match="init"):
            baum_welch_train([np.array([0, 1, 2])], cfg, init=bad)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(30)
        seqs = [rng.integers(0, 6, size=14) for _ in range(5)]
        cfg = TrainConfig(n_states=4, n_symbols=6, max_iters=12, seed=8)
        h1 = baum_welch_train(seqs, cfg)
        h2 = baum_welch_train(seqs, cfg)
        np.testing.assert_array_equal(h1.A, h2.A)
        np.testing.assert_array_equal(h1.B, h2.B)
