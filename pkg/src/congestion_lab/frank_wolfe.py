"""Decentralized Frank-Wolfe learning with exploration.

Every player keeps a mixed policy over her own actions.  In each episode
all players sample ``tau`` rounds independently from their policies, then
each player, using only her own actions and rewards, estimates the gradient
of the potential with respect to her policy, takes a Frank-Wolfe step toward
the best vertex, and mixes in a fixed exploration distribution.

Bandit feedback uses a G-optimal exploration design and the covariance-
weighted linear estimator; semi-bandit feedback uses the facility-cover
exploration distribution and an inverse-propensity estimator per facility.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import rng as rng_mod
from .design import g_optimal, semi_bandit_exploration, span_coordinates
from .game import BANDIT, FEEDBACK_MODES, SEMI, CongestionGame, action_values, nash_gap, sample_rounds
from .trace import RegretTrace

BOUND_SLACK = 1e-9


@dataclass
class FwConfig:
    K: int
    tau: int
    gamma: float
    nu: float
    feedback: str = BANDIT
    schedule: str = "manual"
    design_tol: float = 1e-3
    check_bounds: bool = True
    record_time: bool = False

    def __post_init__(self) -> None:
        if self.K < 0 or self.tau < 1:
            raise ValueError("need K >= 0 and tau >= 1")
        if not 0.0 <= self.gamma <= 1.0 or not 0.0 <= self.nu <= 1.0:
            raise ValueError("gamma and nu must lie in [0, 1]")
        if self.feedback not in FEEDBACK_MODES:
            raise ValueError(f"feedback must be one of {FEEDBACK_MODES}")
        if self.schedule not in ("manual", "theorem"):
            raise ValueError("schedule must be 'manual' or 'theorem'")

    @classmethod
    def theorem_default(cls, K: int, num_players: int, num_facilities: int, feedback: str, **kw) -> "FwConfig":
        """Parameter schedule from the regret analysis, with tau = K^2.

        Bandit: nu = F / (m sqrt K), gamma = F / (m K), needs K >= 2F/m.
        Semi-bandit: the same with F replaced by sqrt(F), needs K >= 2 sqrt(F)/m.
        """
        scale = float(num_facilities) if feedback == BANDIT else math.sqrt(num_facilities)
        if K < 2.0 * scale / num_players:
            raise ValueError(
                f"K={K} below the schedule floor {2.0 * scale / num_players:.3g} for {feedback} feedback"
            )
        nu = scale / (num_players * math.sqrt(K))
        gamma = scale / (num_players * K)
        if nu > 1.0:
            raise ValueError(f"schedule gives nu={nu:.3g} > 1; increase K")
        return cls(K=K, tau=K * K, gamma=gamma, nu=nu, feedback=feedback, schedule="theorem", **kw)


def fw_step(policy: np.ndarray, grad: np.ndarray, gamma: float, nu: float, rho: np.ndarray) -> np.ndarray:
    """(1 - gamma) (nu e_best + (1 - nu) policy) + gamma rho, best = argmax grad."""
    grad = np.asarray(grad, dtype=float)
    if not np.all(np.isfinite(grad)):
        raise ValueError("gradient estimate is not finite")
    vertex = np.zeros_like(policy)
    vertex[int(np.argmax(grad))] = 1.0
    out = (1.0 - gamma) * (nu * vertex + (1.0 - nu) * policy) + gamma * rho
    return out / out.sum()


def fw_gap(game: CongestionGame, policy: Sequence[np.ndarray]) -> float:
    """Frank-Wolfe gap: sum over players of max_a grad_i(a) - <pi_i, grad_i>."""
    total = 0.0
    for i in range(game.num_players):
        grad = action_values(game, policy, i)
        total += float(grad.max() - policy[i] @ grad)
    return max(total, 0.0)


class PlayerLearner:
    """One player's state.  It is built from the player's own action list and
    the facility count only, and updated from her own observations."""

    def __init__(self, actions: Sequence[Sequence[int]], num_facilities: int, cfg: FwConfig) -> None:
        self.actions = [tuple(a) for a in actions]
        self.num_facilities = num_facilities
        self.cfg = cfg
        self.features = np.zeros((len(self.actions), num_facilities))
        for j, act in enumerate(self.actions):
            self.features[j, list(act)] = 1.0
        if cfg.feedback == BANDIT:
            self.design = g_optimal(self.features, tol=cfg.design_tol)
            self.rho = self.design.weights
            self.coords = span_coordinates(self.features)
        else:
            self.design = None
            self.rho = semi_bandit_exploration(self.actions, num_facilities)
            self.coords = None
        self.policy = np.full(len(self.actions), 1.0 / len(self.actions))
        self.max_term = 0.0

    @property
    def floor_holds(self) -> bool:
        return bool(np.all(self.policy >= self.cfg.gamma * self.rho - 1e-12))

    def covariance(self) -> np.ndarray:
        """E_{a ~ pi}[z z^T] in span coordinates."""
        Z = self.coords
        return Z.T @ (self.policy[:, None] * Z)

    def bandit_weights(self) -> np.ndarray:
        """(A, A) matrix M with M[a, b] = phi(a)^T Sigma^+ phi(b)."""
        Z = self.coords
        if Z.shape[1] == 0:
            return np.zeros((len(self.actions), len(self.actions)))
        return Z @ np.linalg.pinv(self.covariance(), hermitian=True) @ Z.T

    def gradient_bandit(self, actions: np.ndarray, rewards: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Estimate and the per-sample summands (shape (A, tau))."""
        M = self.bandit_weights()
        terms = M[:, actions] * rewards[None, :]
        return terms.mean(axis=1), terms

    def inclusion_probs(self) -> np.ndarray:
        return self.policy @ self.features

    def gradient_semi(self, actions: np.ndarray, facility_rewards: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """IPS estimate; ``facility_rewards`` is (tau, F) and zero off the played action."""
        probs = self.inclusion_probs()
        used = self.features[actions]
        safe = np.where(probs > 0, probs, 1.0)
        terms = np.where(probs > 0, facility_rewards * used / safe, 0.0)
        theta = terms.mean(axis=0)
        return self.features @ theta, terms

    def update(self, actions: np.ndarray, rewards: np.ndarray, facility_rewards: np.ndarray | None = None) -> np.ndarray:
        cfg = self.cfg
        bounded = cfg.check_bounds and cfg.gamma > 0 and self.floor_holds
        if cfg.feedback == BANDIT:
            grad, terms = self.gradient_bandit(actions, rewards)
            # The design is only optimal to within design_tol, so leverages may
            # exceed the rank by that factor.
            bound = self.num_facilities**2 * (1 + cfg.design_tol) / cfg.gamma if cfg.gamma > 0 else math.inf
        else:
            grad, terms = self.gradient_semi(actions, facility_rewards)
            bound = 2.0 * self.num_facilities / cfg.gamma if cfg.gamma > 0 else math.inf
        self.max_term = float(np.abs(terms).max()) if terms.size else 0.0
        if bounded and self.max_term > bound * (1 + BOUND_SLACK):
            raise AssertionError(f"estimator term {self.max_term} exceeds bound {bound}")
        self.policy = fw_step(self.policy, grad, cfg.gamma, cfg.nu, self.rho)
        return grad


def gradient_estimate_bandit(learner: PlayerLearner, actions, rewards) -> np.ndarray:
    return learner.gradient_bandit(np.asarray(actions, dtype=int), np.asarray(rewards, dtype=float))[0]


def gradient_estimate_semi(learner: PlayerLearner, actions, facility_rewards) -> np.ndarray:
    return learner.gradient_semi(np.asarray(actions, dtype=int), np.asarray(facility_rewards, dtype=float))[0]


def sample_episode(
    game: CongestionGame, policies: Sequence[np.ndarray], tau: int, seed: int, k: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw tau joint rounds: (actions (tau, m), facility draws (tau, F), player rewards (tau, m))."""
    cols = []
    for i, p in enumerate(policies):
        g = rng_mod.stream(seed, k, i)
        cols.append(g.choice(len(p), size=tau, p=p))
    actions = np.stack(cols, axis=1)
    realized, player = sample_rounds(game, actions, rng_mod.stream(seed, k, rng_mod.ENV_KEY))
    return actions, realized, player


def player_observations(game: CongestionGame, i: int, actions: np.ndarray, realized: np.ndarray, player: np.ndarray):
    """What player i is allowed to see: her actions, rewards, and (semi-bandit)
    the draws of the facilities in her own actions."""
    own = actions[:, i]
    if game.feedback == SEMI:
        mask = game.membership(i)[own]
        return own, player[:, i], np.where(mask > 0, np.nan_to_num(realized), 0.0)
    return own, player[:, i], None


def run_frank_wolfe(
    game: CongestionGame,
    cfg: FwConfig,
    seed: int = 0,
    on_episode: Callable[[int, list[PlayerLearner]], None] | None = None,
) -> RegretTrace:
    """Run ``cfg.K`` episodes.  The trace's gap column holds the exact Nash gap
    of the policy played in each episode; cumulative regret multiplies by tau.
    ``extras['fw_gap']`` holds the matching Frank-Wolfe gaps, and
    ``extras['policy']`` the final policy after the last update."""
    if cfg.feedback != game.feedback:
        raise ValueError(f"config feedback {cfg.feedback!r} does not match game feedback {game.feedback!r}")
    learners = [PlayerLearner(game.action_sets[i], game.num_facilities, cfg) for i in range(game.num_players)]
    trace = RegretTrace(game.num_players, seed, multiplier=float(cfg.tau))
    for k in range(1, cfg.K + 1):
        t0 = time.perf_counter()
        policy = [lr.policy.copy() for lr in learners]
        gap = nash_gap(game, policy)
        trace.record("fw_gap", fw_gap(game, policy))
        actions, realized, player = sample_episode(game, policy, cfg.tau, seed, k)
        for i, lr in enumerate(learners):
            lr.update(*player_observations(game, i, actions, realized, player))
        ms = (time.perf_counter() - t0) * 1e3 if cfg.record_time else 0.0
        trace.append(gap, player.sum(axis=0), 0, True, ms)
        if on_episode is not None:
            on_episode(k, learners)
    final = [lr.policy.copy() for lr in learners]
    trace.extras["policy"] = final
    trace.extras["final_fw_gap"] = [fw_gap(game, final)]
    return trace
