"""Independent Markov congestion games and optimistic Nash value iteration.

Every facility carries its own state, which moves according to a kernel
that depends only on that facility's state and on how many players use it.
At each step the players face a congestion game whose reward table depends
on the current facility states.

Joint states are tuples with one entry per facility.  Only product states
whose components are reachable from the initial state are tabulated; the
reachable set of each facility is closed under staying put, so that the
self-loop convention for unvisited empirical rows never leaves the table.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import rng as rng_mod
from .equilibrium import StagePayoffOracle, eps_nash_greedy
from .game import (
    BANDIT,
    FEEDBACK_MODES,
    SEMI,
    CongestionGame,
    GameSpecError,
    NoiseModel,
    _validate_actions,
    sample_rounds,
)
from .nash_ucb import RidgeState, sqrt_beta
from .trace import RegretTrace

STATE_LIMIT = 10**4
ROW_TOL = 1e-9

Policies = dict  # (h, joint state tuple) -> deterministic joint action tuple


# ---------------------------------------------------------------------------
# Instance definition


@dataclass(frozen=True, eq=False)
class ImcgSpec:
    """Horizon, facility dynamics and stage rewards of an IMCG.

    ``P[f]`` has shape (H, S_f, m + 1, S_f) with ``P[f][h, s, n, s2]`` the
    probability that facility f moves from s to s2 after step h when n
    players use it.  ``r[f]`` has shape (H, S_f, m + 1); column n = 0 is
    the (unused) reward of an idle facility.  Steps are 0-indexed here.
    """

    H: int
    action_sets: tuple[tuple[tuple[int, ...], ...], ...]
    S: tuple[int, ...]
    P: tuple[np.ndarray, ...]
    r: tuple[np.ndarray, ...]
    s1: tuple[int, ...]
    noise: NoiseModel = field(default_factory=NoiseModel)
    feedback: str = SEMI

    def __post_init__(self) -> None:
        if self.H < 1:
            raise GameSpecError("$.H", "horizon must be >= 1")
        F = len(self.S)
        if F < 1:
            raise GameSpecError("$.facilities", "need at least one facility")
        acts = _validate_actions(self.action_sets, F)
        object.__setattr__(self, "action_sets", acts)
        m = len(acts)
        Ps, rs = [], []
        for f in range(F):
            Sf = int(self.S[f])
            if Sf < 1:
                raise GameSpecError(f"$.facilities[{f}].S", "state count must be >= 1")
            P = np.array(self.P[f], dtype=float)
            if P.shape != (self.H, Sf, m + 1, Sf):
                raise GameSpecError(f"$.facilities[{f}].P", f"expected shape {(self.H, Sf, m + 1, Sf)}, got {P.shape}")
            if np.any(P < 0) or np.any(np.abs(P.sum(axis=-1) - 1.0) > ROW_TOL):
                raise GameSpecError(f"$.facilities[{f}].P", "every row P[h][s][n] must be a probability vector")
            r = np.array(self.r[f], dtype=float)
            if r.shape == (self.H, Sf, m):
                r = np.concatenate([np.zeros((self.H, Sf, 1)), r], axis=2)
            if r.shape != (self.H, Sf, m + 1):
                raise GameSpecError(f"$.facilities[{f}].r", f"expected shape {(self.H, Sf, m + 1)}, got {r.shape}")
            if np.any(r < 0) or np.any(r > 1):
                raise GameSpecError(f"$.facilities[{f}].r", "rewards must lie in [0, 1]")
            P.setflags(write=False)
            r.setflags(write=False)
            Ps.append(P)
            rs.append(r)
        object.__setattr__(self, "S", tuple(int(x) for x in self.S))
        object.__setattr__(self, "P", tuple(Ps))
        object.__setattr__(self, "r", tuple(rs))
        s1 = tuple(int(x) for x in self.s1)
        if len(s1) != F or any(not 0 <= x < n for x, n in zip(s1, self.S)):
            raise GameSpecError("$.s1", "initial state needs one valid entry per facility")
        object.__setattr__(self, "s1", s1)
        if self.feedback not in FEEDBACK_MODES:
            raise GameSpecError("$.feedback", f"expected one of {FEEDBACK_MODES}")
        if math.prod(self.S) > STATE_LIMIT:
            raise GameSpecError("$.facilities", f"joint state space {math.prod(self.S)} exceeds {STATE_LIMIT}")
        members = []
        for player_actions in acts:
            mat = np.zeros((len(player_actions), F), dtype=int)
            for j, act in enumerate(player_actions):
                mat[j, list(act)] = 1
            members.append(mat)
        object.__setattr__(self, "_members", tuple(members))
        object.__setattr__(self, "_reach", self._reachable())
        object.__setattr__(self, "_stage_cache", {})

    @property
    def num_players(self) -> int:
        return len(self.action_sets)

    @property
    def num_facilities(self) -> int:
        return len(self.S)

    @property
    def action_counts(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.action_sets)

    def membership(self, i: int) -> np.ndarray:
        return self._members[i]

    def counts(self, a: Sequence[int]) -> np.ndarray:
        c = np.zeros(self.num_facilities, dtype=int)
        for i, ai in enumerate(a):
            c += self._members[i][ai]
        return c

    def _reachable(self) -> tuple[tuple[tuple[int, ...], ...], ...]:
        per_h = [tuple((s,) for s in self.s1)]
        for h in range(self.H - 1):
            nxt = []
            for f in range(self.num_facilities):
                cur = per_h[-1][f]
                mass = self.P[f][h][list(cur)].sum(axis=(0, 1))
                nxt.append(tuple(sorted(set(np.nonzero(mass > 0)[0].tolist()) | set(cur))))
            per_h.append(tuple(nxt))
        return tuple(per_h)

    def facility_states(self, h: int) -> tuple[tuple[int, ...], ...]:
        """Per facility, the tabulated states at step h (0-indexed)."""
        return self._reach[h]

    def states(self, h: int) -> list[tuple[int, ...]]:
        return list(itertools.product(*self._reach[h]))

    def stage_game(self, h: int, s: tuple[int, ...]) -> CongestionGame:
        key = (h, s)
        game = self._stage_cache.get(key)
        if game is None:
            table = np.stack([self.r[f][h, s[f], 1:] for f in range(self.num_facilities)])
            game = CongestionGame(self.num_facilities, self.action_sets, table, self.noise, self.feedback)
            self._stage_cache[key] = game
        return game

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        return {
            "H": self.H,
            "m": self.num_players,
            "facilities": [
                {"S": self.S[f], "P": self.P[f].tolist(), "r": self.r[f].tolist()} for f in range(self.num_facilities)
            ],
            "actions": [[list(a) for a in acts] for acts in self.action_sets],
            "s1": list(self.s1),
            "noise": self.noise.to_json(),
            "feedback": self.feedback,
        }

    @classmethod
    def from_json(cls, doc: Any) -> "ImcgSpec":
        if not isinstance(doc, dict):
            raise GameSpecError("$", "expected a JSON object")
        for key in ("H", "m", "facilities", "actions", "s1"):
            if key not in doc:
                raise GameSpecError(f"$.{key}", "missing required field")
        if not isinstance(doc["H"], int):
            raise GameSpecError("$.H", "horizon must be an integer")
        m = doc["m"]
        if not isinstance(m, int) or m < 1:
            raise GameSpecError("$.m", "player count must be an integer >= 1")
        facs = doc["facilities"]
        if not isinstance(facs, list) or not facs:
            raise GameSpecError("$.facilities", "expected a non-empty list")
        S, P, r = [], [], []
        for f, fd in enumerate(facs):
            path = f"$.facilities[{f}]"
            if not isinstance(fd, dict):
                raise GameSpecError(path, "expected an object")
            for key in ("S", "P", "r"):
                if key not in fd:
                    raise GameSpecError(f"{path}.{key}", "missing required field")
            S.append(fd["S"])
            try:
                P.append(np.array(fd["P"], dtype=float))
            except (ValueError, TypeError) as exc:
                raise GameSpecError(f"{path}.P", f"not a rectangular numeric tensor ({exc})") from exc
            try:
                r.append(np.array(fd["r"], dtype=float))
            except (ValueError, TypeError) as exc:
                raise GameSpecError(f"{path}.r", f"not a rectangular numeric tensor ({exc})") from exc
        actions = _validate_actions(doc["actions"], len(facs))
        if len(actions) != m:
            raise GameSpecError("$.actions", f"expected {m} player action lists")
        noise = NoiseModel.from_json(doc.get("noise", {"kind": "bernoulli"}))
        return cls(doc["H"], actions, tuple(S), tuple(P), tuple(r), tuple(doc["s1"]), noise, doc.get("feedback", SEMI))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path) -> "ImcgSpec":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise GameSpecError("$", f"invalid JSON: {exc}") from exc
        return cls.from_json(doc)


# ---------------------------------------------------------------------------
# Models and estimators


@dataclass
class FactoredModel:
    """Per-(step, facility) reward tables (S_f, m + 1) and kernels (S_f, m + 1, S_f)."""

    rewards: list[list[np.ndarray]]
    transitions: list[list[np.ndarray]]


def true_model(spec: ImcgSpec) -> FactoredModel:
    F = spec.num_facilities
    return FactoredModel(
        [[spec.r[f][h] for f in range(F)] for h in range(spec.H)],
        [[spec.P[f][h] for f in range(F)] for h in range(spec.H)],
    )


class TransitionCounter:
    """Visit counts, reward sums and transition counts per (step, facility)."""

    def __init__(self, spec: ImcgSpec) -> None:
        m = spec.num_players
        self.H, self.S = spec.H, spec.S
        self.N = [[np.zeros((Sf, m + 1), dtype=np.int64) for Sf in spec.S] for _ in range(spec.H)]
        self.R = [[np.zeros((Sf, m + 1)) for Sf in spec.S] for _ in range(spec.H)]
        self.T = [[np.zeros((Sf, m + 1, Sf), dtype=np.int64) for Sf in spec.S] for _ in range(spec.H)]

    def update(self, h: int, s, counts, realized, s_next=None) -> None:
        for f, (sf, n) in enumerate(zip(s, counts)):
            self.N[h][f][sf, n] += 1
            if n > 0:
                self.R[h][f][sf, n] += realized[f]
            if s_next is not None:
                self.T[h][f][sf, n, s_next[f]] += 1

    def model(self) -> FactoredModel:
        rewards, trans = [], []
        for h in range(self.H):
            rh, th = [], []
            for f, Sf in enumerate(self.S):
                N = self.N[h][f]
                rh.append(self.R[h][f] / np.maximum(N, 1))
                visited = self.T[h][f].sum(axis=2)
                P = self.T[h][f] / np.maximum(visited, 1)[..., None]
                empty = visited == 0
                if empty.any():
                    idx = np.nonzero(empty)
                    P[idx[0], idx[1], idx[0]] = 1.0
                th.append(P)
            rewards.append(rh)
            trans.append(th)
        return FactoredModel(rewards, trans)


def imcg_confidence_log(spec: ImcgSpec, K: int, delta: float) -> float:
    """2 log(4 (m + 1) (sum_f S_f) T / delta) with T = K H."""
    T = max(K, 1) * spec.H
    return 2.0 * math.log(4.0 * (spec.num_players + 1) * sum(spec.S) * T / delta)


def transition_bonus_from_counts(visits: Sequence[int], S: Sequence[int], H: int, iota: float) -> float:
    """Transition bonus given the visit count N_f of each facility's current
    (state, load) pair.  Cross terms run over ordered pairs f != f'."""
    F = len(S)
    visits = [max(int(n), 1) for n in visits]
    total = 0.0
    for f in range(F):
        total += math.sqrt(4.0 * H * H * F * F * S[f] * iota / visits[f])
    for f in range(F):
        for g in range(F):
            if f != g:
                total += math.sqrt(4.0 * H * H * F * F * (S[f] * S[g] * iota) ** 2 / (visits[f] * visits[g]))
    return total


def transition_bonus(counter: TransitionCounter, spec: ImcgSpec, h: int, s, counts, iota: float) -> float:
    visits = [counter.N[h][f][s[f], counts[f]] for f in range(spec.num_facilities)]
    return transition_bonus_from_counts(visits, spec.S, spec.H, iota)


def reward_bonus_from_counts(visits: Sequence[int], iota: float) -> float:
    return float(sum(math.sqrt(iota / max(int(n), 1)) for n in visits))


def bandit_feature_offsets(spec: ImcgSpec) -> np.ndarray:
    m = spec.num_players
    return np.concatenate([[0], np.cumsum([m * Sf for Sf in spec.S])[:-1]]).astype(int)


def bandit_feature(spec: ImcgSpec, s, a, i: int) -> np.ndarray:
    """0/1 vector of length m sum_f S_f, one per facility of player i's action
    at index offset_f + s_f m + (n_f - 1)."""
    m = spec.num_players
    offsets = bandit_feature_offsets(spec)
    counts = spec.counts(a)
    x = np.zeros(m * sum(spec.S))
    for f in spec.action_sets[i][a[i]]:
        x[offsets[f] + s[f] * m + counts[f] - 1] = 1.0
    return x


# ---------------------------------------------------------------------------
# Expectations over factored transitions


def expected_next(spec: ImcgSpec, kernels: Sequence[np.ndarray], h: int, s, counts, values: np.ndarray) -> np.ndarray:
    """E[values(s')] under the product kernel, for the step-(h+1) table.

    ``values`` has shape (m, |R_0|, ..., |R_{F-1}|) over the tabulated states
    of step h + 1.  Returns one expectation per player.
    """
    reach = spec.facility_states(h + 1)
    out = values
    for f in range(spec.num_facilities):
        row = kernels[f][s[f], counts[f]][list(reach[f])]
        out = np.tensordot(out, row, axes=([1], [0]))
    return out


def state_index(spec: ImcgSpec, h: int, s) -> tuple[int, ...]:
    reach = spec.facility_states(h)
    return tuple(reach[f].index(s[f]) for f in range(spec.num_facilities))


def value_shape(spec: ImcgSpec, h: int) -> tuple[int, ...]:
    return (spec.num_players, *[len(r) for r in spec.facility_states(h)])


# ---------------------------------------------------------------------------
# Exact evaluation


def _check_policies(spec: ImcgSpec, policies: Policies, h: int, s) -> tuple[int, ...]:
    try:
        return policies[(h, s)]
    except KeyError:
        raise KeyError(f"no policy entry for step {h}, state {s}") from None


def _stage_reward(spec: ImcgSpec, h: int, s, a, counts) -> np.ndarray:
    per_fac = np.array([spec.r[f][h, s[f], counts[f]] for f in range(spec.num_facilities)])
    return np.array([spec.membership(i)[ai] @ per_fac for i, ai in enumerate(a)])


def policy_values(spec: ImcgSpec, policies: Policies) -> list[np.ndarray]:
    """V^pi tables per step, each of shape value_shape(spec, h)."""
    kernels = [[spec.P[f][h] for f in range(spec.num_facilities)] for h in range(spec.H)]
    tables: list[np.ndarray] = [None] * spec.H  # type: ignore[list-item]
    for h in reversed(range(spec.H)):
        tab = np.zeros(value_shape(spec, h))
        for s in spec.states(h):
            a = _check_policies(spec, policies, h, s)
            c = spec.counts(a)
            v = _stage_reward(spec, h, s, a, c)
            if h + 1 < spec.H:
                v = v + expected_next(spec, kernels[h], h, s, c, tables[h + 1])
            tab[(slice(None), *state_index(spec, h, s))] = v
        tables[h] = tab
    return tables


def best_response_values(spec: ImcgSpec, policies: Policies, i: int) -> list[np.ndarray]:
    """V^{dagger, pi_-i} tables for player i (leading axis of size 1)."""
    kernels = [[spec.P[f][h] for f in range(spec.num_facilities)] for h in range(spec.H)]
    tables: list[np.ndarray] = [None] * spec.H  # type: ignore[list-item]
    for h in reversed(range(spec.H)):
        shape = value_shape(spec, h)
        tab = np.zeros((1, *shape[1:]))
        for s in spec.states(h):
            base = list(_check_policies(spec, policies, h, s))
            best = -math.inf
            for ai in range(spec.action_counts[i]):
                base[i] = ai
                c = spec.counts(base)
                v = _stage_reward(spec, h, s, base, c)[i]
                if h + 1 < spec.H:
                    v += expected_next(spec, kernels[h], h, s, c, tables[h + 1])[0]
                best = max(best, float(v))
            tab[(0, *state_index(spec, h, s))] = best
        tables[h] = tab
    return tables


def markov_nash_gap(spec: ImcgSpec, policies: Policies) -> float:
    """max_i V^{dagger, pi_-i}_1(s_1) - V^pi_1(s_1) for deterministic Markov policies."""
    root = state_index(spec, 0, spec.s1)
    values = policy_values(spec, policies)[0][(slice(None), *root)]
    gaps = [best_response_values(spec, policies, i)[0][(0, *root)] - values[i] for i in range(spec.num_players)]
    gap = float(max(gaps))
    return 0.0 if -1e-9 <= gap < 0 else gap


# ---------------------------------------------------------------------------
# Rollouts


@dataclass
class EpisodeLog:
    states: list[tuple[int, ...]]
    actions: list[tuple[int, ...]]
    facility_rewards: list[np.ndarray]
    player_rewards: list[np.ndarray]


def imcg_rollout(spec: ImcgSpec, policies: Policies, rng: np.random.Generator) -> EpisodeLog:
    """Play H steps from s_1.  At each step the stage rewards are drawn first,
    then (except after the last step) each facility transitions independently."""
    s = spec.s1
    log = EpisodeLog([], [], [], [])
    for h in range(spec.H):
        a = _check_policies(spec, policies, h, s)
        realized, player = sample_rounds(spec.stage_game(h, s), np.array([a]), rng)
        log.states.append(s)
        log.actions.append(tuple(a))
        log.facility_rewards.append(np.nan_to_num(realized[0]))
        log.player_rewards.append(player[0])
        if h + 1 < spec.H:
            c = spec.counts(a)
            u = rng.random(spec.num_facilities)
            nxt = []
            for f in range(spec.num_facilities):
                cdf = np.cumsum(spec.P[f][h, s[f], c[f]])
                nxt.append(int(min(np.searchsorted(cdf, u[f], side="right"), spec.S[f] - 1)))
            s = tuple(nxt)
    return log


# ---------------------------------------------------------------------------
# Nash value iteration


@dataclass
class NashVIConfig:
    K: int
    delta: float = 0.01
    eps_stage: float | None = None
    iota: float | None = None
    use_bonus: bool = True
    terminal_transition_bonus: bool = False
    refresh_every: int = 1000
    record_time: bool = False

    def __post_init__(self) -> None:
        if self.K < 0:
            raise ValueError("K must be non-negative")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    def stage_eps(self, H: int) -> float:
        return self.eps_stage if self.eps_stage is not None else 1.0 / (max(self.K, 1) * H)


@dataclass
class PlanResult:
    policies: Policies
    values: list[np.ndarray]
    stage_rounds: int
    converged: bool
    unconverged: list[tuple[int, tuple[int, ...], float]]


class NashVI:
    def __init__(self, spec: ImcgSpec, cfg: NashVIConfig, seed: int = 0) -> None:
        self.spec = spec
        self.cfg = cfg
        self.seed = seed
        self.iota = cfg.iota if cfg.iota is not None else imcg_confidence_log(spec, cfg.K, cfg.delta)
        self.eps = cfg.stage_eps(spec.H)
        self.counter = TransitionCounter(spec)
        d = spec.num_players * sum(spec.S)
        self.ridges = [RidgeState(d, cfg.refresh_every) for _ in range(spec.H)]
        self.offsets = bandit_feature_offsets(spec)
        self.profiles: dict = {}
        self.k = 0
        self.last_values: list[np.ndarray] | None = None

    def stage_oracle(self, h: int, s, model: FactoredModel, next_values, bandit: bool) -> StagePayoffOracle:
        spec, cfg = self.spec, self.cfg
        m, F, H = spec.num_players, spec.num_facilities, spec.H
        cap = H * F
        members = [spec.membership(i) for i in range(m)]
        acts = [[np.array(a, dtype=int) for a in spec.action_sets[i]] for i in range(m)]
        N = [self.counter.N[h][f][s[f]] for f in range(F)]
        rew = [model.rewards[h][f][s[f]] for f in range(F)]
        if bandit:
            ridge = self.ridges[h]
            theta, V_inv = ridge.theta, ridge.V_inv
            root_beta = sqrt_beta(ridge.dim, F, m, self.k + 1, self.iota)
            base = np.array([self.offsets[f] + s[f] * m - 1 for f in range(F)])
        cache: dict[tuple[int, ...], tuple[np.ndarray, float]] = {}

        def count_terms(c):
            key = tuple(int(x) for x in c)
            hit = cache.get(key)
            if hit is None:
                if next_values is not None:
                    future = expected_next(spec, model.transitions[h], h, s, c, next_values)
                else:
                    future = np.zeros(m)
                pv = 0.0
                if cfg.use_bonus and (next_values is not None or cfg.terminal_transition_bonus):
                    pv = transition_bonus_from_counts([N[f][c[f]] for f in range(F)], spec.S, H, self.iota)
                hit = (future, pv)
                cache[key] = hit
            return hit

        def payoff(a):
            c = np.zeros(F, dtype=int)
            for i, ai in enumerate(a):
                c += members[i][ai]
            future, pv = count_terms(c)
            q = np.empty(m)
            if bandit:
                shared = 0.0
                for i, ai in enumerate(a):
                    fs = acts[i][ai]
                    idx = base[fs] + c[fs]
                    q[i] = theta[idx].sum() if len(fs) else 0.0
                    if len(fs):
                        shared = max(shared, float(V_inv[np.ix_(idx, idx)].sum()))
                if cfg.use_bonus:
                    q += math.sqrt(max(shared, 0.0)) * root_beta
            else:
                for i, ai in enumerate(a):
                    total = 0.0
                    for f in acts[i][ai]:
                        total += rew[f][c[f]]
                        if cfg.use_bonus:
                            total += math.sqrt(self.iota / max(int(N[f][c[f]]), 1))
                    q[i] = total
            return np.minimum(q + future + pv, cap)

        return StagePayoffOracle(spec.action_counts, payoff, float(cap))

    def plan(self, model: FactoredModel | None = None, bandit: bool | None = None) -> PlanResult:
        """Backward induction over tabulated states; greedy stage solves
        warm-started from the previous episode's profile at the same (h, s)."""
        spec = self.spec
        if model is None:
            model = self.counter.model()
        if bandit is None:
            bandit = spec.feedback == BANDIT
        policies: Policies = {}
        values: list[np.ndarray] = [None] * spec.H  # type: ignore[list-item]
        rounds, converged, bad = 0, True, []
        for h in reversed(range(spec.H)):
            tab = np.zeros(value_shape(spec, h))
            nxt = values[h + 1] if h + 1 < spec.H else None
            for s in spec.states(h):
                oracle = self.stage_oracle(h, s, model, nxt, bandit)
                start = self.profiles.get((h, s))
                res = eps_nash_greedy(oracle, self.eps, start=start)
                rounds += res.rounds_used
                if not res.converged:
                    converged = False
                    bad.append((h, s, res.gap))
                policies[(h, s)] = res.profile
                tab[(slice(None), *state_index(spec, h, s))] = oracle.payoff(res.profile)
            values[h] = tab
        return PlanResult(policies, values, rounds, converged, bad)

    def observe(self, log: EpisodeLog) -> None:
        spec = self.spec
        for h in range(spec.H):
            s, a = log.states[h], log.actions[h]
            c = spec.counts(a)
            s_next = log.states[h + 1] if h + 1 < spec.H else None
            self.counter.update(h, s, c, log.facility_rewards[h], s_next)
            if spec.feedback == BANDIT:
                for i in range(spec.num_players):
                    self.ridges[h].update(bandit_feature(spec, s, a, i), float(log.player_rewards[h][i]))

    def step(self) -> tuple[PlanResult, EpisodeLog, float]:
        plan = self.plan()
        self.k += 1
        self.profiles.update(plan.policies)
        self.last_values = plan.values
        gap = markov_nash_gap(self.spec, plan.policies)
        log = imcg_rollout(self.spec, plan.policies, rng_mod.stream(self.seed, self.k))
        self.observe(log)
        return plan, log, gap


def nash_vi_episode(learner: NashVI) -> tuple[PlanResult, EpisodeLog, float]:
    return learner.step()


def run_nash_vi(
    spec: ImcgSpec,
    cfg: NashVIConfig,
    seed: int = 0,
    on_episode: Callable[[NashVI, PlanResult, EpisodeLog], None] | None = None,
) -> RegretTrace:
    learner = NashVI(spec, cfg, seed)
    trace = RegretTrace(spec.num_players, seed)
    for _ in range(cfg.K):
        t0 = time.perf_counter()
        plan, log, gap = learner.step()
        if plan.unconverged:
            trace.record("unconverged", [(learner.k, h, list(s), g) for h, s, g in plan.unconverged])
        ms = (time.perf_counter() - t0) * 1e3 if cfg.record_time else 0.0
        trace.append(gap, np.sum(log.player_rewards, axis=0), plan.stage_rounds, plan.converged, ms)
        if on_episode is not None:
            on_episode(learner, plan, log)
    return trace
