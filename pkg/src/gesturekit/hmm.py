"""Discrete hidden Markov models: likelihood evaluation and Baum-Welch training.

Supports ergodic and banded left-to-right topologies. All probability math
runs with per-timestep scaling, so likelihoods of long sequences are exact in
log space and impossible observations come back as -inf rather than underflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import _freeze

ROW_SUM_TOL = 1e-9
STARVED_OCCUPANCY = 1e-30


@dataclass(frozen=True)
class Topology:
    """Allowed-transition structure: 'ergodic' or 'left_to_right' with a band.

    A band of b allows transitions from state i to states i..i+b (b=3 gives
    four possible next states counting the self-transition).
    """

    kind: str
    band: int | None = None

    def __post_init__(self):
        if self.kind not in ("ergodic", "left_to_right"):
            raise ValueError(f"unknown topology kind: {self.kind!r}")
        if self.kind == "left_to_right":
            band = 3 if self.band is None else self.band
            if band < 0:
                raise ValueError(f"band must be >= 0, got {band}")
            object.__setattr__(self, "band", band)
        elif self.band is not None:
            raise ValueError("ergodic topology takes no band")

    def mask(self, n_states: int) -> np.ndarray:
        """(S, S) boolean array of allowed transitions."""
        if self.kind == "ergodic":
            return np.ones((n_states, n_states), dtype=bool)
        i = np.arange(n_states)
        j = np.arange(n_states)
        return (i[:, None] <= j[None, :]) & (j[None, :] <= i[:, None] + self.band)


ERGODIC = Topology("ergodic")
LEFT_TO_RIGHT = Topology("left_to_right", 3)


@dataclass(frozen=True)
class Hmm:
    """A discrete HMM: transition matrix A, emission matrix B, initial pi."""

    A: np.ndarray
    B: np.ndarray
    pi: np.ndarray
    topology: Topology = ERGODIC

    def __post_init__(self):
        object.__setattr__(self, "A", _freeze(self.A))
        object.__setattr__(self, "B", _freeze(self.B))
        object.__setattr__(self, "pi", _freeze(self.pi))
        S = self.A.shape[0]
        if self.A.shape != (S, S):
            raise ValueError(f"A must be square, got {self.A.shape}")
        if self.B.ndim != 2 or self.B.shape[0] != S:
            raise ValueError(f"B must be (S, V), got {self.B.shape}")
        if self.pi.shape != (S,):
            raise ValueError(f"pi must be (S,), got {self.pi.shape}")
        for name, m in (("A", self.A), ("B", self.B)):
            if (m < 0).any():
                raise ValueError(f"{name} has negative entries")
            if np.abs(m.sum(axis=1) - 1.0).max() > ROW_SUM_TOL:
                raise ValueError(f"rows of {name} must sum to 1")
        if (self.pi < 0).any() or abs(self.pi.sum() - 1.0) > ROW_SUM_TOL:
            raise ValueError("pi must be a probability vector")
        if (self.A[~self.topology.mask(S)] != 0).any():
            raise ValueError("A has mass on transitions the topology forbids")

    @property
    def n_states(self) -> int:
        return int(self.A.shape[0])

    @property
    def n_symbols(self) -> int:
        return int(self.B.shape[1])


@dataclass(frozen=True)
class TrainConfig:
    """Baum-Welch settings; defaults follow the package-wide conventions."""

    n_states: int = 8
    n_symbols: int = 18
    topology: Topology = LEFT_TO_RIGHT
    max_iters: int = 100
    tol: float = 1e-6
    seed: int = 0
    emission_floor: float = 1e-6   # add-eps smoothing applied to B after training

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")


@dataclass
class TrainingReport:
    """Diagnostics from one Baum-Welch run."""

    iterations: int = 0
    converged: bool = False
    log_likelihoods: list[float] = field(default_factory=list)
    reseeded_states: list[tuple[int, int]] = field(default_factory=list)  # (iter, state)

    @property
    def final_log_likelihood(self) -> float:
        return self.log_likelihoods[-1] if self.log_likelihoods else float("-inf")


def make_topology(kind, n_states: int, band: int = 3, n_symbols: int = 18,
                  seed: int = 0) -> tuple[np.ndarray, Hmm]:
    """Allowed-transition mask plus a reproducible initial parameter guess.

    Initial rows are uniform over the allowed entries, perturbed by seeded
    multiplicative noise of at most 1% so that symmetric states break ties
    deterministically.
    """
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    topology = kind if isinstance(kind, Topology) else Topology(
        kind, band if kind == "left_to_right" else None)
    mask = topology.mask(n_states)
    rng = np.random.default_rng(seed)

    def perturbed_rows(base: np.ndarray) -> np.ndarray:
        noise = 1.0 + rng.uniform(-0.01, 0.01, size=base.shape)
        rows = base * noise
        return rows / rows.sum(axis=-1, keepdims=True)

    A = perturbed_rows(mask / mask.sum(axis=1, keepdims=True))
    B = perturbed_rows(np.full((n_states, n_symbols), 1.0 / n_symbols))
    pi = perturbed_rows(np.full(n_states, 1.0 / n_states))
    return mask, Hmm(A, B, pi, topology)


def _check_obs(obs: np.ndarray, n_symbols: int) -> np.ndarray:
    obs = np.asarray(obs, dtype=np.int64)
    if obs.size == 0:
        raise ValueError("observation sequence must be non-empty")
    if obs.min() < 0 or obs.max() >= n_symbols:
        raise ValueError(
            f"symbol out of range [0, {n_symbols}): {obs.min()}..{obs.max()}"
        )
    return obs


def batch_log_likelihood(hmm: Hmm, obs_matrix: np.ndarray) -> np.ndarray:
    """Scaled-forward log P(obs | hmm) for each row of an (R, T) symbol matrix.

    Rows whose probability is exactly zero come back as -inf.
    """
    obs = _check_obs(obs_matrix, hmm.n_symbols)
    if obs.ndim == 1:
        obs = obs[None, :]
    R, T = obs.shape
    logp = np.zeros(R)
    alpha = hmm.pi[None, :] * hmm.B[:, obs[:, 0]].T
    for t in range(T):
        if t > 0:
            alpha = (alpha @ hmm.A) * hmm.B[:, obs[:, t]].T
        c = alpha.sum(axis=1)
        dead = c <= 0.0
        if dead.any():
            logp[dead] = -np.inf
            alpha[dead] = 1.0 / hmm.n_states   # keep iterating the live rows
            c = np.where(dead, 1.0, c)
        logp = logp + np.where(np.isneginf(logp), 0.0, np.log(c))
        alpha = alpha / c[:, None]
    return logp


def stacked_log_likelihood(hmms, obs_stack: np.ndarray) -> np.ndarray:
    """Scaled-forward log-likelihoods for several models scored in lockstep.

    ``obs_stack`` is an (M, R, T) array holding one (R, T) symbol matrix per
    model.  Row r of slice m is scored against ``hmms[m]`` exactly as
    ``batch_log_likelihood`` would, but the recursion runs once over stacked
    (M, R, S) alphas so classifying against many models costs a single pass.
    Models may differ in state or symbol count; smaller ones are zero-padded.
    """
    obs = np.stack([_check_obs(o, h.n_symbols)
                    for h, o in zip(hmms, obs_stack, strict=True)])
    M, R, T = obs.shape
    S = max(h.n_states for h in hmms)
    V = max(h.n_symbols for h in hmms)
    A = np.zeros((M, S, S))
    B = np.zeros((M, S, V))
    pi = np.zeros((M, S))
    for m, h in enumerate(hmms):
        A[m, :h.n_states, :h.n_states] = h.A
        B[m, :h.n_states, :h.n_symbols] = h.B
        pi[m, :h.n_states] = h.pi
    midx = np.arange(M)[:, None]
    logp = np.zeros((M, R))
    alpha = pi[:, None, :] * B[midx, :, obs[:, :, 0]]
    for t in range(T):
        if t > 0:
            alpha = np.matmul(alpha, A) * B[midx, :, obs[:, :, t]]
        c = alpha.sum(axis=2)
        dead = c <= 0.0
        if dead.any():
            logp[dead] = -np.inf
            alpha[dead] = 1.0 / S   # keep iterating the live rows
            c = np.where(dead, 1.0, c)
        logp = logp + np.where(np.isneginf(logp), 0.0, np.log(c))
        alpha = alpha / c[..., None]
    return logp


def log_likelihood(hmm: Hmm, obs) -> float:
    """log P(obs | hmm) via the scaled forward algorithm (-inf representable)."""
    return float(batch_log_likelihood(hmm, np.asarray(obs)[None, :])[0])


def forward_backward(hmm: Hmm, obs) -> tuple[np.ndarray, np.ndarray]:
    """Per-timestep state posteriors gamma (T, S) and transition posteriors
    xi (T-1, S, S), each normalized to sum to 1 per timestep.

    Raises if the observation sequence has probability zero under the model.
    """
    obs = _check_obs(np.asarray(obs), hmm.n_symbols)
    gamma, xi, _, starved = _forward_backward_batch(hmm, obs[None, :])
    del starved
    return gamma[0], xi[0]


def _forward_backward_batch(hmm: Hmm, obs: np.ndarray):
    """Scaled forward-backward over an (N, T) batch of equal-length sequences.

    Returns (gamma (N,T,S), xi (N,T-1,S,S), total_log_likelihood, none).
    """
    N, T = obs.shape
    S = hmm.n_states
    emis = hmm.B.T[obs]                      # (N, T, S): emission prob per state
    alpha = np.empty((N, T, S))
    c = np.empty((N, T))

    a = hmm.pi[None, :] * emis[:, 0]
    for t in range(T):
        if t > 0:
            a = (a @ hmm.A) * emis[:, t]
        ct = a.sum(axis=1)
        if (ct <= 0.0).any():
            raise ValueError("observation sequence has zero probability")
        a = a / ct[:, None]
        alpha[:, t] = a
        c[:, t] = ct

    beta = np.empty((N, T, S))
    b = np.ones((N, S))
    beta[:, T - 1] = b
    for t in range(T - 2, -1, -1):
        b = ((b * emis[:, t + 1]) @ hmm.A.T) / c[:, t + 1, None]
        beta[:, t] = b

    gamma = alpha * beta
    gamma = gamma / gamma.sum(axis=2, keepdims=True)

    xi = (alpha[:, :-1, :, None]
          * hmm.A[None, None, :, :]
          * (emis[:, 1:] * beta[:, 1:])[:, :, None, :])
    xi = xi / xi.sum(axis=(2, 3), keepdims=True)

    total_ll = float(np.log(c).sum())
    return gamma, xi, total_ll, None


def baum_welch_train(sequences, cfg: TrainConfig = TrainConfig(),
                     init: Hmm | None = None) -> Hmm:
    """Multi-sequence Baum-Welch; see baum_welch_train_detailed for diagnostics."""
    hmm, _ = baum_welch_train_detailed(sequences, cfg, init=init)
    return hmm


def baum_welch_train_detailed(sequences,
                              cfg: TrainConfig = TrainConfig(),
                              init: Hmm | None = None
                              ) -> tuple[Hmm, TrainingReport]:
    """Run EM to a local likelihood maximum over a set of symbol sequences.

    Per-sequence statistics are accumulated before re-estimation, sequences of
    equal length are processed as one batch, and topology zeros in A survive
    every iteration exactly. States that end an iteration with no occupancy
    are re-seeded to uniform-over-allowed rows and flagged in the report.
    Stops when the total log-likelihood improves by less than cfg.tol or after
    cfg.max_iters iterations; B receives add-eps smoothing afterwards.

    Starts from the seeded perturbed-uniform guess unless `init` supplies a
    starting model (whose shape must match cfg).
    """
    seqs = [_check_obs(np.asarray(s), cfg.n_symbols) for s in sequences]
    if not seqs:
        raise ValueError("need at least one training sequence")

    by_length: dict[int, list[np.ndarray]] = {}
    for s in seqs:
        by_length.setdefault(s.size, []).append(s)
    batches = [np.stack(group) for group in by_length.values()]

    if init is not None:
        if init.n_states != cfg.n_states or init.n_symbols != cfg.n_symbols:
            raise ValueError("init model shape does not match cfg")
        mask, hmm = init.topology.mask(cfg.n_states), init
    else:
        mask, hmm = make_topology(cfg.topology, cfg.n_states,
                                  n_symbols=cfg.n_symbols, seed=cfg.seed)
    mask_f = mask.astype(float)
    S, V = cfg.n_states, cfg.n_symbols
    report = TrainingReport()
    prev_ll = -np.inf

    for iteration in range(cfg.max_iters):
        A_num = np.zeros((S, S))
        A_den = np.zeros(S)
        B_num = np.zeros((S, V))
        B_den = np.zeros(S)
        pi_acc = np.zeros(S)
        total_ll = 0.0

        for obs in batches:
            gamma, xi, ll, _ = _forward_backward_batch(hmm, obs)
            total_ll += ll
            A_num += xi.sum(axis=(0, 1))
            A_den += gamma[:, :-1].sum(axis=(0, 1))
            B_den += gamma.sum(axis=(0, 1))
            # scatter-add gamma into per-symbol bins
            for k in range(V):
                sel = obs == k
                if sel.any():
                    B_num[:, k] += gamma[sel].sum(axis=0)
            pi_acc += gamma[:, 0].sum(axis=0)

        report.log_likelihoods.append(total_ll)
        report.iterations = iteration + 1

        starved = A_den <= STARVED_OCCUPANCY
        A_new = np.zeros((S, S))
        ok = ~starved
        A_new[ok] = A_num[ok] / A_den[ok, None]
        B_new = np.zeros((S, V))
        okB = B_den > STARVED_OCCUPANCY
        B_new[okB] = B_num[okB] / B_den[okB, None]
        for i in np.flatnonzero(starved):
            A_new[i] = mask_f[i] / mask_f[i].sum()
            report.reseeded_states.append((iteration, int(i)))
        for i in np.flatnonzero(~okB):
            B_new[i] = 1.0 / V
        A_new = A_new * mask_f
        A_new = A_new / A_new.sum(axis=1, keepdims=True)
        B_new = B_new / B_new.sum(axis=1, keepdims=True)
        pi_new = pi_acc / pi_acc.sum()
        hmm = Hmm(A_new, B_new, pi_new, hmm.topology)

        if np.isfinite(prev_ll) and total_ll - prev_ll < cfg.tol:
            report.converged = True
            break
        prev_ll = total_ll

    if cfg.emission_floor > 0:
        B = hmm.B + cfg.emission_floor
        hmm = Hmm(hmm.A, B / B.sum(axis=1, keepdims=True), hmm.pi, hmm.topology)
    return hmm, report
