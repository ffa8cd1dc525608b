"""Brute-force reference computations, written independently of the library.

Everything here enumerates joint actions (or joint state trajectories)
explicitly with plain Python loops; nothing calls the library's dynamic
programs.
"""

from __future__ import annotations

import itertools

import numpy as np


def payoffs(game, a):
    """r_i(a) for all players by direct counting."""
    counts = [0] * game.num_facilities
    for i, ai in enumerate(a):
        for f in game.action_sets[i][ai]:
            counts[f] += 1
    out = []
    for i, ai in enumerate(a):
        out.append(sum(game.rewards[f, counts[f] - 1] for f in game.action_sets[i][ai]))
    return out


def potential(game, a):
    counts = [0] * game.num_facilities
    for i, ai in enumerate(a):
        for f in game.action_sets[i][ai]:
            counts[f] += 1
    return sum(sum(game.rewards[f, n - 1] for n in range(1, counts[f] + 1)) for f in range(game.num_facilities))


def joint_actions(game):
    return itertools.product(*[range(n) for n in game.action_counts])


def prob(policy, a):
    p = 1.0
    for i, ai in enumerate(a):
        p *= policy[i][ai]
    return p


def value(game, policy, i):
    return sum(prob(policy, a) * payoffs(game, a)[i] for a in joint_actions(game))


def load_vector(game, policy, i):
    """E[r^f(n^f(a_-i) + 1)] by enumerating every opponent profile."""
    others = [j for j in range(game.num_players) if j != i]
    out = np.zeros(game.num_facilities)
    for prof in itertools.product(*[range(game.action_counts[j]) for j in others]):
        p = 1.0
        counts = [0] * game.num_facilities
        for j, aj in zip(others, prof):
            p *= policy[j][aj]
            for f in game.action_sets[j][aj]:
                counts[f] += 1
        for f in range(game.num_facilities):
            out[f] += p * game.rewards[f, counts[f]]
    return out


def deviation_values(game, policy, i):
    vals = []
    for ai in range(game.action_counts[i]):
        dev = [np.array(p, dtype=float) for p in policy]
        dev[i] = np.eye(game.action_counts[i])[ai]
        vals.append(value(game, dev, i))
    return np.array(vals)


def gap(game, policy):
    return max(deviation_values(game, policy, i).max() - value(game, policy, i) for i in range(game.num_players))


def expected_potential(game, policy):
    return sum(prob(policy, a) * potential(game, a) for a in joint_actions(game))


def pure_profile_gap(payoff_fn, counts, a):
    """max_i max_{a_i'} r_i(a_i', a_-i) - r_i(a) by explicit enumeration."""
    best = 0.0
    base = payoff_fn(tuple(a))
    for i in range(len(counts)):
        for alt in range(counts[i]):
            b = list(a)
            b[i] = alt
            best = max(best, payoff_fn(tuple(b))[i] - base[i])
    return best


# ---------------------------------------------------------------------------
# Markov games


def _step_payoffs(spec, h, s, a):
    counts = [0] * spec.num_facilities
    for i, ai in enumerate(a):
        for f in spec.action_sets[i][ai]:
            counts[f] += 1
    rewards = [sum(spec.r[f][h, s[f], counts[f]] for f in spec.action_sets[i][ai]) for i, ai in enumerate(a)]
    return rewards, counts


def _successors(spec, h, s, counts):
    """Yield (probability, next joint state) over the full product space."""
    for nxt in itertools.product(*[range(Sf) for Sf in spec.S]):
        p = 1.0
        for f in range(spec.num_facilities):
            p *= spec.P[f][h, s[f], counts[f], nxt[f]]
        if p > 0:
            yield p, nxt


def recursive_policy_value(spec, policies, h, s, i, reward_tables=None, kernels=None):
    """V^pi_{h,i}(s) by recursion over the joint trajectory tree."""
    if h == spec.H:
        return 0.0
    a = policies[(h, s)]
    rewards, counts = _step_payoffs(spec, h, s, a)
    total = rewards[i]
    for p, nxt in _successors(spec, h, s, counts):
        total += p * recursive_policy_value(spec, policies, h + 1, nxt, i)
    return total


def recursive_best_response(spec, policies, h, s, i):
    if h == spec.H:
        return 0.0
    best = -np.inf
    for ai in range(spec.action_counts[i]):
        a = list(policies[(h, s)])
        a[i] = ai
        rewards, counts = _step_payoffs(spec, h, s, a)
        v = rewards[i]
        for p, nxt in _successors(spec, h, s, counts):
            v += p * recursive_best_response(spec, policies, h + 1, nxt, i)
        best = max(best, v)
    return best
