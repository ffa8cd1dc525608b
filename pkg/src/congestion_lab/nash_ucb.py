"""Centralized optimistic learning (Nash-UCB) in congestion games.

Each episode builds optimistic payoff evaluators from the data so far,
solves them for an approximate pure Nash equilibrium with the greedy
dynamic, plays that joint action once and updates the estimators.

Semi-bandit feedback keeps per-(facility, count) sample means with a
Hoeffding bonus.  Bandit feedback runs ridge regression over the
(facility, count) indicator features, shared by all players, with an
elliptical bonus.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import rng as rng_mod
from .equilibrium import StagePayoffOracle, congestion_oracle, eps_nash_greedy
from .game import BANDIT, SEMI, CongestionGame, count_profile, deterministic_policy, nash_gap, sample_rounds
from .trace import RegretTrace

REFRESH_EVERY = 1000


# ---------------------------------------------------------------------------
# Estimators


@dataclass
class FacilityCounter:
    """Visit counts N[f, n] and reward sums S[f, n] (column 0 unused)."""

    num_facilities: int
    num_players: int
    N: np.ndarray = field(init=False)
    S: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.N = np.zeros((self.num_facilities, self.num_players + 1), dtype=np.int64)
        self.S = np.zeros((self.num_facilities, self.num_players + 1))

    def update(self, counts: np.ndarray, realized: np.ndarray) -> None:
        used = np.nonzero(counts > 0)[0]
        self.N[used, counts[used]] += 1
        self.S[used, counts[used]] += realized[used]

    @property
    def means(self) -> np.ndarray:
        return self.S / np.maximum(self.N, 1)

    def preload(self, rewards: np.ndarray, visits: int = 1) -> None:
        """Inject exact observations: ``visits`` samples at every true mean."""
        self.N[:, 1:] = visits
        self.S[:, 1:] = visits * np.asarray(rewards, dtype=float)


def confidence_log(num_players: int, K: int, delta: float) -> float:
    """2 log(4 (m + 1) K / delta)."""
    return 2.0 * math.log(4.0 * (num_players + 1) * max(K, 1) / delta)


def sqrt_beta(dim: int, num_facilities: int, num_players: int, k: int, iota: float) -> float:
    """sqrt(d) + sqrt(F d log(1 + m k F / d) + F iota)."""
    inner = num_facilities * dim * math.log(1.0 + num_players * k * num_facilities / dim) + num_facilities * iota
    return math.sqrt(dim) + math.sqrt(max(inner, 0.0))


class RidgeState:
    """Ridge regression with unit regularization and rank-one updates.

    Keeps V, its inverse (Sherman-Morrison, refreshed from V every
    ``refresh_every`` updates), the response vector and log det V.
    """

    def __init__(self, dim: int, refresh_every: int = REFRESH_EVERY) -> None:
        self.dim = dim
        self.V = np.eye(dim)
        self.V_inv = np.eye(dim)
        self.response = np.zeros(dim)
        self.logdet = 0.0
        self.updates = 0
        self.refresh_every = refresh_every

    @property
    def theta(self) -> np.ndarray:
        return self.V_inv @ self.response

    def norm_sq(self, x: np.ndarray) -> float:
        return float(x @ self.V_inv @ x)

    def update(self, x: np.ndarray, y: float) -> None:
        u = self.V_inv @ x
        denom = 1.0 + float(x @ u)
        self.V += np.outer(x, x)
        self.V_inv -= np.outer(u, u) / denom
        self.response += y * x
        self.logdet += math.log(denom)
        self.updates += 1
        if self.updates % self.refresh_every == 0:
            self.refresh()

    def refresh(self) -> None:
        self.V_inv = np.linalg.inv(self.V)
        self.V_inv = 0.5 * (self.V_inv + self.V_inv.T)
        self.logdet = float(np.linalg.slogdet(self.V)[1])


def feature_index(f: int, n: int, num_players: int) -> int:
    """Position of the (facility f, count n >= 1) indicator."""
    return f * num_players + (n - 1)


def feature_vector(game: CongestionGame, a, i: int) -> np.ndarray:
    """0/1 vector of length mF with a one at (f, n^f(a)) for each f in a_i."""
    counts = count_profile(game, a)
    m = game.num_players
    x = np.zeros(m * game.num_facilities)
    for f in game.action_sets[i][a[i]]:
        x[feature_index(f, counts[f], m)] = 1.0
    return x


# ---------------------------------------------------------------------------
# Optimistic evaluators


def semi_bandit_values(counter: FacilityCounter, iota: float) -> np.ndarray:
    """Optimistic per-(facility, count) values r_hat + sqrt(iota / (N v 1))."""
    vals = counter.means + np.sqrt(iota / np.maximum(counter.N, 1))
    vals[:, 0] = 0.0
    return vals


def semi_bandit_q_tables(counter: FacilityCounter, game: CongestionGame, iota: float) -> StagePayoffOracle:
    members = [game.membership(i) for i in range(game.num_players)]
    r_max = game.num_facilities * (1.0 + math.sqrt(iota))
    return congestion_oracle(members, semi_bandit_values(counter, iota), r_max)


def bandit_q_tables(
    ridge: RidgeState, game: CongestionGame, k: int, iota: float, r_max: float | None = None
) -> StagePayoffOracle:
    """Optimistic evaluators <A_i(a), theta_hat> + max_j ||A_j(a)||_{V^-1} sqrt(beta_k)."""
    m, F = game.num_players, game.num_facilities
    theta = ridge.theta
    V_inv = ridge.V_inv.copy()
    root_beta = sqrt_beta(ridge.dim, F, m, k, iota)
    members = [game.membership(i).astype(int) for i in range(m)]
    acts = [[np.array(act, dtype=int) for act in game.action_sets[i]] for i in range(m)]
    if r_max is None:
        r_max = math.sqrt(F) * (math.sqrt(ridge.dim) + root_beta)

    def payoff(a):
        counts = np.zeros(F, dtype=int)
        for i, ai in enumerate(a):
            counts += members[i][ai]
        out = np.empty(m)
        bonus = 0.0
        for i, ai in enumerate(a):
            fs = acts[i][ai]
            if len(fs) == 0:
                out[i] = 0.0
                continue
            idx = fs * m + counts[fs] - 1
            out[i] = theta[idx].sum()
            bonus = max(bonus, float(V_inv[np.ix_(idx, idx)].sum()))
        return out + math.sqrt(max(bonus, 0.0)) * root_beta

    return StagePayoffOracle(game.action_counts, payoff, float(r_max))


def bandit_r_max(game: CongestionGame, K: int, iota: float) -> float:
    d = game.num_players * game.num_facilities
    return math.sqrt(game.num_facilities) * (math.sqrt(d) + sqrt_beta(d, game.num_facilities, game.num_players, K, iota))


# ---------------------------------------------------------------------------
# Learner


@dataclass
class UcbConfig:
    K: int
    delta: float = 0.01
    eps_stage: float | None = None
    iota: float | None = None
    refresh_every: int = REFRESH_EVERY
    record_time: bool = False

    def __post_init__(self) -> None:
        if self.K < 0:
            raise ValueError("K must be non-negative")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.eps_stage is not None and not self.eps_stage > 0:
            raise ValueError("eps_stage must be positive")

    def stage_eps(self) -> float:
        return self.eps_stage if self.eps_stage is not None else 1.0 / max(self.K, 1)


@dataclass
class EpisodeResult:
    k: int
    profile: tuple[int, ...]
    gap: float
    rewards: np.ndarray
    stage_rounds: int
    converged: bool
    oracle: StagePayoffOracle


class NashUCB:
    """Episode-by-episode driver; ``step`` runs one episode."""

    def __init__(
        self,
        game: CongestionGame,
        cfg: UcbConfig,
        seed: int = 0,
        counter: FacilityCounter | None = None,
        ridge: RidgeState | None = None,
    ) -> None:
        self.game = game
        self.cfg = cfg
        self.seed = seed
        m, F = game.num_players, game.num_facilities
        self.iota = cfg.iota if cfg.iota is not None else confidence_log(m, cfg.K, cfg.delta)
        self.eps = cfg.stage_eps()
        self.counter = counter if counter is not None else FacilityCounter(F, m)
        self.ridge = ridge if ridge is not None else RidgeState(m * F, cfg.refresh_every)
        self.profile = tuple(0 for _ in range(m))
        self.k = 0
        if game.feedback == BANDIT:
            self.r_max = bandit_r_max(game, cfg.K, self.iota)

    def oracle(self) -> StagePayoffOracle:
        if self.game.feedback == SEMI:
            return semi_bandit_q_tables(self.counter, self.game, self.iota)
        return bandit_q_tables(self.ridge, self.game, self.k + 1, self.iota, self.r_max)

    def step(self) -> EpisodeResult:
        game = self.game
        oracle = self.oracle()
        res = eps_nash_greedy(oracle, self.eps, start=self.profile)
        self.k += 1
        a = res.profile
        self.profile = a
        gap = nash_gap(game, deterministic_policy(game, a))
        realized, player = sample_rounds(game, np.array([a]), rng_mod.stream(self.seed, self.k))
        counts = count_profile(game, a)
        if game.feedback == SEMI:
            self.counter.update(counts, np.nan_to_num(realized[0]))
        else:
            for i in range(game.num_players):
                self.ridge.update(feature_vector(game, a, i), float(player[0, i]))
        return EpisodeResult(self.k, a, gap, player[0], res.rounds_used, res.converged, oracle)


def run_nash_ucb(
    game: CongestionGame,
    cfg: UcbConfig,
    seed: int = 0,
    on_episode: Callable[[NashUCB, EpisodeResult], None] | None = None,
    learner: NashUCB | None = None,
) -> RegretTrace:
    """Run ``cfg.K`` episodes and return the regret trace.

    Bandit runs also record, per episode, the largest squared leverage
    max_i ||A_i(a^k)||^2 under (V^k)^{-1} (``max_leverage``) and log det V^k
    (``logdet``), both taken before the episode's updates.
    """
    learner = learner if learner is not None else NashUCB(game, cfg, seed)
    trace = RegretTrace(game.num_players, seed)
    for _ in range(cfg.K):
        t0 = time.perf_counter()
        if game.feedback == BANDIT:
            logdet = learner.ridge.logdet
            V_inv = learner.ridge.V_inv.copy()
        res = learner.step()
        if game.feedback == BANDIT:
            lev = max(
                float(x @ V_inv @ x)
                for x in (feature_vector(game, res.profile, i) for i in range(game.num_players))
            )
            trace.record("max_leverage", lev)
            trace.record("logdet", logdet)
        ms = (time.perf_counter() - t0) * 1e3 if cfg.record_time else 0.0
        trace.append(res.gap, res.rewards, res.stage_rounds, res.converged, ms)
        if on_episode is not None:
            on_episode(learner, res)
    return trace
