"""Congestion games: instances, feedback sampling and exact oracles.

A game has ``num_players`` players and ``num_facilities`` facilities.  Each
player picks one action from an explicit list of facility subsets; facility
``f`` used by ``n`` players pays every user a random reward with mean
``rewards[f, n - 1]``.

Policies are product policies, represented as a sequence with one
probability vector per player.  All expectations below are computed exactly:
per-facility usage counts of the other players follow a Poisson-binomial
law, which a convolution pass over players evaluates in ``O(m^2 F)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Sequence

import numpy as np
from scipy import optimize, stats

SEMI = "semi"
BANDIT = "bandit"
FEEDBACK_MODES = (SEMI, BANDIT)

GAP_CLIP = 1e-9
POLICY_TOL = 1e-9


class GameSpecError(ValueError):
    """Malformed game description; ``path`` locates the offending JSON node."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


# ---------------------------------------------------------------------------
# Noise


@lru_cache(maxsize=4096)
def _trunc_gauss_loc(mean: float, sigma: float) -> float:
    # Location of a N(loc, sigma) truncated to [0, 1] whose mean equals `mean`.
    def excess(loc: float) -> float:
        a, b = (0.0 - loc) / sigma, (1.0 - loc) / sigma
        return float(stats.truncnorm.mean(a, b, loc=loc, scale=sigma)) - mean

    width = 1.0
    while width < 1e12:
        lo, hi = -width, 1.0 + width
        if excess(lo) < 0.0 < excess(hi):
            return optimize.brentq(excess, lo, hi, xtol=1e-14, rtol=1e-14)
        width *= 10.0
    return mean


@dataclass(frozen=True)
class NoiseModel:
    """Distribution of a realized facility reward given its mean.

    ``bernoulli`` draws 1 with probability equal to the mean.  ``trunc_gauss``
    draws from a Gaussian truncated to [0, 1] whose location is solved so the
    truncated mean equals the target mean; ``sigma == 0`` gives noiseless
    rewards.
    """

    kind: str = "bernoulli"
    sigma: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("bernoulli", "trunc_gauss"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "trunc_gauss":
            if self.sigma is None or not self.sigma >= 0:
                raise ValueError("trunc_gauss noise needs sigma >= 0")

    def sample(self, means: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        means = np.asarray(means, dtype=float)
        if self.kind == "bernoulli":
            return (rng.random(means.shape) < means).astype(float)
        u = rng.random(means.shape)
        if self.sigma == 0:
            return means.copy()
        out = np.empty_like(means)
        flat_means, flat_u, flat_out = means.ravel(), u.ravel(), out.ravel()
        uniq, inverse = np.unique(flat_means, return_inverse=True)
        for j, mu in enumerate(uniq):
            sel = inverse == j
            if mu <= 1e-12 or mu >= 1.0 - 1e-12:
                flat_out[sel] = mu
                continue
            loc = _trunc_gauss_loc(float(mu), float(self.sigma))
            a, b = (0.0 - loc) / self.sigma, (1.0 - loc) / self.sigma
            flat_out[sel] = stats.truncnorm.ppf(flat_u[sel], a, b, loc=loc, scale=self.sigma)
        return np.clip(out, 0.0, 1.0)

    def to_json(self) -> dict[str, Any]:
        if self.kind == "bernoulli":
            return {"kind": "bernoulli"}
        return {"kind": "trunc_gauss", "sigma": self.sigma}

    @classmethod
    def from_json(cls, doc: Any, path: str = "$.noise") -> "NoiseModel":
        if not isinstance(doc, dict) or "kind" not in doc:
            raise GameSpecError(path, "expected an object with a 'kind' field")
        kind = doc["kind"]
        if kind == "bernoulli":
            return cls("bernoulli")
        if kind == "trunc_gauss":
            sigma = doc.get("sigma")
            if not isinstance(sigma, (int, float)) or sigma < 0:
                raise GameSpecError(f"{path}.sigma", "trunc_gauss needs a non-negative number")
            return cls("trunc_gauss", float(sigma))
        raise GameSpecError(f"{path}.kind", f"unknown noise kind {kind!r}")


# ---------------------------------------------------------------------------
# Game


def _validate_actions(action_sets: Any, num_facilities: int, path: str = "$.actions"):
    if not isinstance(action_sets, (list, tuple)) or not action_sets:
        raise GameSpecError(path, "expected a non-empty list of per-player action lists")
    players = []
    for i, acts in enumerate(action_sets):
        p = f"{path}[{i}]"
        if not isinstance(acts, (list, tuple)) or not acts:
            raise GameSpecError(p, "each player needs a non-empty action list")
        seen = set()
        clean = []
        for j, act in enumerate(acts):
            q = f"{p}[{j}]"
            if not isinstance(act, (list, tuple)):
                raise GameSpecError(q, "an action is a list of facility ids")
            ids = []
            for t, f in enumerate(act):
                if isinstance(f, bool) or not isinstance(f, (int, np.integer)):
                    raise GameSpecError(f"{q}[{t}]", "facility id must be an integer")
                if not 0 <= f < num_facilities:
                    raise GameSpecError(f"{q}[{t}]", f"facility id {f} outside [0, {num_facilities})")
                ids.append(int(f))
            if len(set(ids)) != len(ids):
                raise GameSpecError(q, "facility ids within an action must be distinct")
            key = frozenset(ids)
            if key in seen:
                raise GameSpecError(q, "duplicate action (same facility subset listed twice)")
            seen.add(key)
            clean.append(tuple(ids))
        players.append(tuple(clean))
    return tuple(players)


@dataclass(frozen=True, eq=False)
class CongestionGame:
    """An atomic congestion game with explicit action lists.

    Attributes:
        num_facilities: number of facilities F.
        action_sets: per player, the ordered list of actions; an action is a
            tuple of distinct facility ids (the empty tuple is allowed).
        rewards: array of shape (F, m); ``rewards[f, n - 1]`` is the mean
            reward of facility ``f`` when ``n`` players use it.
        noise: realized-reward distribution.
        feedback: ``"semi"`` or ``"bandit"``.
    """

    num_facilities: int
    action_sets: tuple[tuple[tuple[int, ...], ...], ...]
    rewards: np.ndarray
    noise: NoiseModel = field(default_factory=NoiseModel)
    feedback: str = SEMI

    def __post_init__(self) -> None:
        if int(self.num_facilities) < 1:
            raise GameSpecError("$.F", "need at least one facility")
        object.__setattr__(self, "num_facilities", int(self.num_facilities))
        acts = _validate_actions(self.action_sets, self.num_facilities)
        object.__setattr__(self, "action_sets", acts)
        m = len(acts)
        table = np.array(self.rewards, dtype=float)
        if table.shape != (self.num_facilities, m):
            raise GameSpecError(
                "$.rewards", f"expected shape ({self.num_facilities}, {m}), got {table.shape}"
            )
        if not np.all((table >= 0.0) & (table <= 1.0)):
            raise GameSpecError("$.rewards", "mean rewards must lie in [0, 1]")
        table.setflags(write=False)
        object.__setattr__(self, "rewards", table)
        if self.feedback not in FEEDBACK_MODES:
            raise GameSpecError("$.feedback", f"expected one of {FEEDBACK_MODES}")

        members = []
        for player_actions in acts:
            mat = np.zeros((len(player_actions), self.num_facilities))
            for j, act in enumerate(player_actions):
                mat[j, list(act)] = 1.0
            mat.setflags(write=False)
            members.append(mat)
        object.__setattr__(self, "_membership", tuple(members))
        cum = np.zeros((self.num_facilities, m + 1))
        cum[:, 1:] = np.cumsum(table, axis=1)
        cum.setflags(write=False)
        object.__setattr__(self, "_cumulative", cum)

    @property
    def num_players(self) -> int:
        return len(self.action_sets)

    @property
    def action_counts(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.action_sets)

    def membership(self, i: int) -> np.ndarray:
        """0/1 matrix (|A_i|, F): row j marks the facilities of action j."""
        return self._membership[i]

    @property
    def cumulative_rewards(self) -> np.ndarray:
        """(F, m + 1) table; column n holds sum_{k<=n} rewards[f, k - 1]."""
        return self._cumulative

    def with_feedback(self, feedback: str) -> "CongestionGame":
        return CongestionGame(self.num_facilities, self.action_sets, self.rewards, self.noise, feedback)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        return {
            "m": self.num_players,
            "F": self.num_facilities,
            "actions": [[list(a) for a in acts] for acts in self.action_sets],
            "rewards": [[float(x) for x in row] for row in self.rewards],
            "noise": self.noise.to_json(),
            "feedback": self.feedback,
        }

    @classmethod
    def from_json(cls, doc: Any) -> "CongestionGame":
        if not isinstance(doc, dict):
            raise GameSpecError("$", "expected a JSON object")
        for key in ("m", "F", "actions", "rewards"):
            if key not in doc:
                raise GameSpecError(f"$.{key}", "missing required field")
        m, F = doc["m"], doc["F"]
        if not isinstance(m, int) or m < 1:
            raise GameSpecError("$.m", "player count must be an integer >= 1")
        if not isinstance(F, int) or F < 1:
            raise GameSpecError("$.F", "facility count must be an integer >= 1")
        actions = _validate_actions(doc["actions"], F)
        if len(actions) != m:
            raise GameSpecError("$.actions", f"expected {m} player action lists, got {len(actions)}")
        rewards = doc["rewards"]
        if not isinstance(rewards, list) or len(rewards) != F:
            raise GameSpecError("$.rewards", f"expected {F} rows (one per facility)")
        for f, row in enumerate(rewards):
            if not isinstance(row, list) or len(row) != m:
                raise GameSpecError(f"$.rewards[{f}]", f"expected {m} entries (n = 1..m)")
            for n, x in enumerate(row):
                if not isinstance(x, (int, float)) or isinstance(x, bool) or not 0.0 <= x <= 1.0:
                    raise GameSpecError(f"$.rewards[{f}][{n}]", "mean reward must be a number in [0, 1]")
        noise = NoiseModel.from_json(doc.get("noise", {"kind": "bernoulli"}))
        feedback = doc.get("feedback", SEMI)
        if feedback not in FEEDBACK_MODES:
            raise GameSpecError("$.feedback", f"expected one of {FEEDBACK_MODES}, got {feedback!r}")
        return cls(F, actions, np.array(rewards, dtype=float), noise, feedback)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path) -> "CongestionGame":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise GameSpecError("$", f"invalid JSON: {exc}") from exc
        return cls.from_json(doc)


# ---------------------------------------------------------------------------
# Policies


def validate_joint_action(game: CongestionGame, a: Sequence[int]) -> tuple[int, ...]:
    if len(a) != game.num_players:
        raise ValueError(f"joint action has {len(a)} entries, game has {game.num_players} players")
    out = []
    for i, ai in enumerate(a):
        if not 0 <= int(ai) < len(game.action_sets[i]):
            raise ValueError(f"action index {ai} invalid for player {i}")
        out.append(int(ai))
    return tuple(out)


def validate_policy(game: CongestionGame, policy: Sequence[np.ndarray]) -> list[np.ndarray]:
    if len(policy) != game.num_players:
        raise ValueError("policy needs one probability vector per player")
    out = []
    for i, p in enumerate(policy):
        p = np.asarray(p, dtype=float)
        if p.shape != (len(game.action_sets[i]),):
            raise ValueError(f"player {i}: expected {len(game.action_sets[i])} probabilities")
        if np.any(p < 0) or abs(p.sum() - 1.0) > POLICY_TOL:
            raise ValueError(f"player {i}: not a probability vector")
        out.append(p)
    return out


def deterministic_policy(game: CongestionGame, a: Sequence[int]) -> list[np.ndarray]:
    a = validate_joint_action(game, a)
    out = []
    for i, ai in enumerate(a):
        p = np.zeros(len(game.action_sets[i]))
        p[ai] = 1.0
        out.append(p)
    return out


def uniform_policy(game: CongestionGame) -> list[np.ndarray]:
    return [np.full(n, 1.0 / n) for n in game.action_counts]


# ---------------------------------------------------------------------------
# Deterministic joint actions


def count_profile(game: CongestionGame, a: Sequence[int]) -> np.ndarray:
    """Number of players using each facility under joint action ``a``."""
    a = validate_joint_action(game, a)
    counts = np.zeros(game.num_facilities, dtype=int)
    for i, ai in enumerate(a):
        counts += game.membership(i)[ai].astype(int)
    return counts


def mean_rewards(game: CongestionGame, a: Sequence[int]) -> np.ndarray:
    """Mean reward of every player under joint action ``a``."""
    counts = count_profile(game, a)
    per_facility = np.where(
        counts > 0, game.rewards[np.arange(game.num_facilities), np.maximum(counts, 1) - 1], 0.0
    )
    return np.array([game.membership(i)[ai] @ per_facility for i, ai in enumerate(a)])


def potential_value(game: CongestionGame, a: Sequence[int]) -> float:
    counts = count_profile(game, a)
    return float(game.cumulative_rewards[np.arange(game.num_facilities), counts].sum())


@dataclass(frozen=True)
class Observation:
    """What one player sees after a round.

    ``reward`` is the player's total realized reward.  Under semi-bandit
    feedback ``facility_rewards`` lists ``(facility, realized reward)`` for
    every facility of the player's action; under bandit feedback it is None.
    """

    reward: float
    facility_rewards: tuple[tuple[int, float], ...] | None = None


def sample_rounds(
    game: CongestionGame, actions: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Play many rounds at once.

    Args:
        actions: integer array (T, m) of action indices.

    Returns:
        ``(facility_rewards, player_rewards)``.  ``facility_rewards`` has
        shape (T, F) and holds one draw per used facility per round (NaN for
        unused facilities); ``player_rewards`` has shape (T, m).
    """
    actions = np.asarray(actions, dtype=int)
    if actions.ndim != 2 or actions.shape[1] != game.num_players:
        raise ValueError("actions must have shape (rounds, players)")
    T = actions.shape[0]
    use = np.zeros((game.num_players, T, game.num_facilities))
    for i in range(game.num_players):
        if np.any((actions[:, i] < 0) | (actions[:, i] >= len(game.action_sets[i]))):
            raise ValueError(f"invalid action index for player {i}")
        use[i] = game.membership(i)[actions[:, i]]
    counts = use.sum(axis=0).astype(int)
    used = counts > 0
    realized = np.full((T, game.num_facilities), np.nan)
    fac_idx = np.nonzero(used)[1]
    means = game.rewards[fac_idx, counts[used] - 1]
    realized[used] = game.noise.sample(means, rng)
    filled = np.where(used, realized, 0.0)
    player = np.einsum("itf,tf->ti", use, filled)
    return realized, player


def sample_round(
    game: CongestionGame, a: Sequence[int], rng: np.random.Generator
) -> tuple[list[Observation], np.ndarray]:
    """One round: per-player observations and the realized facility rewards."""
    a = validate_joint_action(game, a)
    realized, player = sample_rounds(game, np.array([a]), rng)
    realized = realized[0]
    obs = []
    for i, ai in enumerate(a):
        act = game.action_sets[i][ai]
        if game.feedback == SEMI:
            obs.append(Observation(float(player[0, i]), tuple((f, float(realized[f])) for f in act)))
        else:
            obs.append(Observation(float(player[0, i])))
    return obs, realized


# ---------------------------------------------------------------------------
# Product policies: exact expectations


def usage_probabilities(game: CongestionGame, policy: Sequence[np.ndarray]) -> np.ndarray:
    """(m, F) array: probability that player j's action contains facility f."""
    return np.stack([policy[j] @ game.membership(j) for j in range(game.num_players)])


def poisson_binomial(probs: np.ndarray) -> np.ndarray:
    """Count distributions for independent indicators.

    Args:
        probs: (J, F) success probabilities, one row per indicator.

    Returns:
        (F, J + 1) array; entry [f, n] is P(exactly n of column f succeed).
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    J, F = probs.shape
    dist = np.zeros((F, J + 1))
    dist[:, 0] = 1.0
    for j in range(J):
        p = probs[j][:, None]
        nxt = dist * (1.0 - p)
        nxt[:, 1:] += dist[:, :-1] * p
        dist = nxt
    return dist


def facility_load_vector(game: CongestionGame, policy: Sequence[np.ndarray], i: int) -> np.ndarray:
    """Expected reward of each facility to player ``i`` if she joins it.

    Entry f is E[r^f(n^f(a_{-i}) + 1)] with the other players drawn from
    ``policy``.
    """
    probs = usage_probabilities(game, policy)
    others = np.delete(probs, i, axis=0)
    dist = poisson_binomial(others) if len(others) else np.ones((game.num_facilities, 1))
    return (dist * game.rewards[:, : dist.shape[1]]).sum(axis=1)


def action_values(game: CongestionGame, policy: Sequence[np.ndarray], i: int) -> np.ndarray:
    """Expected reward of each of player i's actions against the others' policy."""
    return game.membership(i) @ facility_load_vector(game, policy, i)


def expected_value(game: CongestionGame, policy: Sequence[np.ndarray], i: int) -> float:
    return float(policy[i] @ action_values(game, policy, i))


def expected_potential(game: CongestionGame, policy: Sequence[np.ndarray]) -> float:
    dist = poisson_binomial(usage_probabilities(game, policy))
    return float((dist * game.cumulative_rewards).sum())


def best_response(game: CongestionGame, policy: Sequence[np.ndarray], i: int) -> tuple[int, float]:
    values = action_values(game, policy, i)
    j = int(np.argmax(values))
    return j, float(values[j])


def player_gaps(game: CongestionGame, policy: Sequence[np.ndarray]) -> np.ndarray:
    """Per-player best-response improvement max_a V_i(a, pi_-i) - V_i(pi)."""
    out = np.empty(game.num_players)
    for i in range(game.num_players):
        values = action_values(game, policy, i)
        out[i] = values.max() - policy[i] @ values
    return out


def clip_gap(gap: float) -> float:
    if -GAP_CLIP <= gap < 0.0:
        return 0.0
    return float(gap)


def nash_gap(game: CongestionGame, policy: Sequence[np.ndarray]) -> float:
    """max_i (V_i^{dagger, pi_-i} - V_i^pi); zero exactly at a Nash equilibrium."""
    return clip_gap(float(player_gaps(game, policy).max()))


def enumerate_joint_actions(game: CongestionGame, limit: int = 10**5):
    total = math.prod(game.action_counts)
    if total > limit:
        raise ValueError(f"{total} joint actions exceed the enumeration limit {limit}")
    return np.array(np.meshgrid(*[np.arange(n) for n in game.action_counts], indexing="ij")).reshape(
        game.num_players, -1
    ).T
