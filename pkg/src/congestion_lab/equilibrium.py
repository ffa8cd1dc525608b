"""Approximate pure Nash equilibria of full-information stage games.

The greedy dynamic repeatedly lets the player with the largest
best-response improvement switch to her best response.  On a potential game
each switch raises the potential by exactly the improvement, so the number
of switches is bounded by ``m * r_max / eps``.  On games without a potential
the same loop is run under the same cap and the best profile seen is
returned with ``converged=False``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .game import CongestionGame, enumerate_joint_actions

PayoffFn = Callable[[tuple[int, ...]], np.ndarray]
DeviationFn = Callable[[tuple[int, ...], int], np.ndarray]

EXACT_NE_TOL = 1e-12


@dataclass(frozen=True)
class StagePayoffOracle:
    """Deterministic payoffs of a finite normal-form game.

    Attributes:
        action_counts: number of actions of every player.
        payoff: maps a joint action to the vector of all players' payoffs.
        r_max: bound on the absolute value of any payoff.
        deviations: optional fast path; ``deviations(a, i)`` returns player
            i's payoff for each of her actions with the others held at
            ``a``.  Must agree with ``payoff``.
        potential: optional potential function, exposed for diagnostics.
    """

    action_counts: tuple[int, ...]
    payoff: PayoffFn
    r_max: float
    deviations: DeviationFn | None = None
    potential: Callable[[tuple[int, ...]], float] | None = None

    @property
    def num_players(self) -> int:
        return len(self.action_counts)

    def deviation_values(self, a: tuple[int, ...], i: int) -> np.ndarray:
        if self.deviations is not None:
            return np.asarray(self.deviations(a, i), dtype=float)
        out = np.empty(self.action_counts[i])
        alt = list(a)
        for j in range(self.action_counts[i]):
            alt[i] = j
            out[j] = self.payoff(tuple(alt))[i]
        return out

    def improvements(self, a: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
        """Per-player (best improvement, best-response action index)."""
        delta = np.empty(self.num_players)
        best = np.empty(self.num_players, dtype=int)
        for i in range(self.num_players):
            values = self.deviation_values(a, i)
            j = int(np.argmax(values))
            best[i] = j
            delta[i] = values[j] - values[a[i]]
        return delta, best

    def gap(self, a: Sequence[int]) -> float:
        delta, _ = self.improvements(tuple(int(x) for x in a))
        return float(delta.max())


def congestion_oracle(
    memberships: Sequence[np.ndarray], values: np.ndarray, r_max: float
) -> StagePayoffOracle:
    """Oracle for a facility-additive game.

    Player i playing action j receives ``sum_{f in a_i} values[f, n^f(a)]``
    where ``memberships[i][j]`` marks the facilities of the action and
    ``values`` has shape (F, m + 1) (column 0 is never read).  Such a game
    has the potential sum_f sum_{n=1}^{n^f} values[f, n].
    """
    members = [np.asarray(mt, dtype=float) for mt in memberships]
    values = np.asarray(values, dtype=float)
    num_facilities = values.shape[0]
    fac = np.arange(num_facilities)
    cum = np.zeros_like(values)
    cum[:, 1:] = np.cumsum(values[:, 1:], axis=1)

    def counts_of(a):
        c = np.zeros(num_facilities, dtype=int)
        for i, ai in enumerate(a):
            c += members[i][ai].astype(int)
        return c

    def payoff(a):
        c = counts_of(a)
        per_fac = values[fac, c]
        return np.array([members[i][ai] @ per_fac for i, ai in enumerate(a)])

    def deviations(a, i):
        others = counts_of(a) - members[i][a[i]].astype(int)
        return members[i] @ values[fac, others + 1]

    def potential(a):
        return float(cum[fac, counts_of(a)].sum())

    return StagePayoffOracle(tuple(len(mt) for mt in members), payoff, float(r_max), deviations, potential)


def game_oracle(game: CongestionGame) -> StagePayoffOracle:
    """Oracle over the mean rewards of a congestion game."""
    values = np.zeros((game.num_facilities, game.num_players + 1))
    values[:, 1:] = game.rewards
    members = [game.membership(i) for i in range(game.num_players)]
    r_max = float(max(mt.sum(axis=1).max() for mt in members))
    return congestion_oracle(members, values, max(r_max, 1e-12))


def matrix_oracle(payoffs: np.ndarray) -> StagePayoffOracle:
    """Oracle from a dense tensor of shape (|A_1|, ..., |A_m|, m)."""
    payoffs = np.asarray(payoffs, dtype=float)
    counts = payoffs.shape[:-1]
    if payoffs.shape[-1] != len(counts):
        raise ValueError("last axis must hold one payoff per player")
    return StagePayoffOracle(
        tuple(int(c) for c in counts),
        lambda a: payoffs[tuple(a)],
        float(np.abs(payoffs).max()) if payoffs.size else 0.0,
    )


@dataclass
class GreedyResult:
    profile: tuple[int, ...]
    gap: float
    rounds_used: int
    converged: bool
    path: list[tuple[int, ...]] = field(default_factory=list)
    cycled: bool = False


def round_cap(num_players: int, r_max: float, eps: float) -> int:
    return max(1, math.ceil(num_players * r_max / eps))


def eps_nash_greedy(
    oracle: StagePayoffOracle,
    eps: float,
    start: Sequence[int] | None = None,
    max_rounds: int | None = None,
    record_path: bool = False,
) -> GreedyResult:
    """Greedy best-response dynamic with the potential-game round cap.

    Every round first measures all players' improvements and stops once the
    largest is at most ``eps``; otherwise the player with the largest
    improvement (lowest index on ties) switches to her best response (lowest
    action index on ties).  The dynamic is deterministic, so when a profile
    repeats the run has entered a cycle and would only revisit the same
    profiles until the cap; the loop then stops early and reports the best
    profile seen with ``converged=False`` and ``cycled=True``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    m = oracle.num_players
    if start is None:
        profile = tuple(0 for _ in range(m))
    else:
        profile = tuple(int(x) for x in start)
        if len(profile) != m or any(not 0 <= x < n for x, n in zip(profile, oracle.action_counts)):
            raise ValueError(f"invalid start profile {profile}")
    cap = max_rounds if max_rounds is not None else round_cap(m, oracle.r_max, eps)

    path = [profile] if record_path else []
    seen = {profile}
    best_profile, best_gap = profile, math.inf
    for t in range(1, cap + 1):
        delta, best = oracle.improvements(profile)
        gap = float(delta.max())
        if gap < best_gap:
            best_profile, best_gap = profile, gap
        if gap <= eps:
            return GreedyResult(profile, max(gap, 0.0), t, True, path)
        i = int(np.argmax(delta))
        nxt = list(profile)
        nxt[i] = int(best[i])
        profile = tuple(nxt)
        if record_path:
            path.append(profile)
        if profile in seen:
            return GreedyResult(best_profile, max(best_gap, 0.0), t, False, path, cycled=True)
        seen.add(profile)
    return GreedyResult(best_profile, max(best_gap, 0.0), cap, False, path)


def brute_force_pure_nash(
    oracle: StagePayoffOracle, limit: int = 10**5, tol: float = EXACT_NE_TOL
) -> list[tuple[tuple[int, ...], float]]:
    """All exact pure Nash equilibria, found by enumerating every profile."""
    total = math.prod(oracle.action_counts)
    if total > limit:
        raise ValueError(f"refusing to enumerate {total} profiles (limit {limit})")
    grids = np.meshgrid(*[np.arange(n) for n in oracle.action_counts], indexing="ij")
    found = []
    for row in np.stack([g.ravel() for g in grids], axis=1):
        a = tuple(int(x) for x in row)
        gap = oracle.gap(a)
        if gap <= tol:
            found.append((a, max(gap, 0.0)))
    found.sort(key=lambda item: (item[1], item[0]))
    return found


def pure_nash_of_game(game: CongestionGame) -> list[tuple[tuple[int, ...], float]]:
    enumerate_joint_actions(game)  # size guard
    return brute_force_pure_nash(game_oracle(game))
