"""Small fixed instances used by the tests, the acceptance suite and the CLI examples."""

from __future__ import annotations

import numpy as np

from .game import SEMI, CongestionGame, NoiseModel
from .imcg import ImcgSpec


def two_player_single_facility(feedback: str = SEMI) -> CongestionGame:
    """Two players, one facility, actions {idle, use}; r(1) = 1, r(2) = 0.2."""
    return CongestionGame(1, [[(), (0,)], [(), (0,)]], np.array([[1.0, 0.2]]), NoiseModel(), feedback)


def two_player_three_facility(feedback: str = SEMI) -> CongestionGame:
    """Two players, three facilities with congestion-decreasing rewards.

    Each player may take one facility or a pair; the unique pure equilibrium
    has the players on different facilities.
    """
    actions = [
        [(0,), (1,), (2,), (0, 1)],
        [(0,), (1,), (2,), (1, 2)],
    ]
    rewards = np.array([[0.9, 0.2], [0.7, 0.3], [0.5, 0.1]])
    return CongestionGame(3, actions, rewards, NoiseModel(), feedback)


def micro_imcg(feedback: str = SEMI, noise: NoiseModel | None = None) -> ImcgSpec:
    """Two players choosing between two roads over three steps.

    Each road is either clear (state 0) or jammed (state 1); heavier use
    makes a jam more likely at the next step.  Road 0 is fast but sensitive
    to sharing, road 1 is slower but degrades less.
    """
    H, m = 3, 2
    # P(next jammed | road, current state, load)
    jam = {
        0: {0: [0.1, 0.3, 0.8], 1: [0.4, 0.5, 0.9]},
        1: {0: [0.05, 0.2, 0.6], 1: [0.3, 0.4, 0.7]},
    }
    tables = {
        0: {0: [0.9, 0.4], 1: [0.5, 0.2]},
        1: {0: [0.6, 0.5], 1: [0.4, 0.3]},
    }
    P, r = [], []
    for f in range(2):
        Pf = np.zeros((H, 2, m + 1, 2))
        rf = np.zeros((H, 2, m + 1))
        for h in range(H):
            for s in range(2):
                for n in range(m + 1):
                    p = jam[f][s][n]
                    Pf[h, s, n] = [1.0 - p, p]
                rf[h, s, 1:] = tables[f][s]
        P.append(Pf)
        r.append(rf)
    actions = [[(0,), (1,)], [(0,), (1,)]]
    return ImcgSpec(H, actions, (2, 2), tuple(P), tuple(r), (0, 0), noise or NoiseModel(), feedback)


def deterministic_micro_imcg() -> ImcgSpec:
    """``micro_imcg`` with noiseless rewards."""
    return micro_imcg(noise=NoiseModel("trunc_gauss", 0.0))


def single_state_imcg(game: CongestionGame) -> ImcgSpec:
    """Horizon-1 IMCG whose only stage game is ``game``."""
    F, m = game.num_facilities, game.num_players
    P = tuple(np.ones((1, 1, m + 1, 1)) for _ in range(F))
    r = tuple(np.concatenate([[0.0], game.rewards[f]]).reshape(1, 1, m + 1) for f in range(F))
    return ImcgSpec(1, game.action_sets, (1,) * F, P, r, (0,) * F, game.noise, game.feedback)
