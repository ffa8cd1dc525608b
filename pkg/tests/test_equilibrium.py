import math

import numpy as np
import pytest

import oracles
from conftest import one_player_game, small_game
from congestion_lab.equilibrium import (
    StagePayoffOracle,
    brute_force_pure_nash,
    eps_nash_greedy,
    game_oracle,
    matrix_oracle,
    pure_nash_of_game,
    round_cap,
)
from congestion_lab.game import deterministic_policy, nash_gap


def identical_interest():
    pay = np.zeros((2, 2, 2))
    pay[1, 1] = [1.0, 1.0]
    return matrix_oracle(pay)


def matching_pennies():
    pay = np.zeros((2, 2, 2))
    pay[0, 0] = pay[1, 1] = [1.0, 0.0]
    pay[0, 1] = pay[1, 0] = [0.0, 1.0]
    return matrix_oracle(pay)


class TestGreedy:
    def test_identical_interest_one_switch(self):
        res = eps_nash_greedy(identical_interest(), 0.1, start=(0, 0))
        # At (0,0) no single deviation helps, so the start is already an equilibrium.
        assert res.converged and res.rounds_used == 1 and res.profile == (0, 0)

    def test_identical_interest_from_off_diagonal(self):
        res = eps_nash_greedy(identical_interest(), 0.1, start=(1, 0))
        assert res.converged and res.rounds_used <= 2
        assert res.profile == (1, 1) and res.gap == 0.0

    def test_exact_equilibrium_start_is_returned(self, entry_game):
        res = eps_nash_greedy(game_oracle(entry_game), 0.01, start=(1, 1))
        assert res.profile == (1, 1) and res.rounds_used == 1 and res.converged

    def test_single_player_argmax(self):
        game = one_player_game([0.2, 0.9, 0.4], [(0,), (1,), (2,), ()])
        res = eps_nash_greedy(game_oracle(game), 1e-3)
        assert res.profile == (1,) and res.gap == 0.0

    def test_lowest_player_switches_on_tie(self):
        # Both players gain 1 by moving to action 1; player 0 must move first.
        pay = np.zeros((2, 2, 2))
        pay[1, 0] = [1.0, 0.0]
        pay[0, 1] = [0.0, 1.0]
        pay[1, 1] = [1.0, 1.0]
        res = eps_nash_greedy(matrix_oracle(pay), 0.1, start=(0, 0), record_path=True)
        assert res.path[1] == (1, 0)

    def test_potential_rises_by_switched_delta(self):
        for seed in range(10):
            game = small_game(seed, m=3, F=3, actions=4, monotone=False)
            oracle = game_oracle(game)
            res = eps_nash_greedy(oracle, 1e-6, record_path=True)
            for a, b in zip(res.path, res.path[1:]):
                i = next(j for j in range(3) if a[j] != b[j])
                delta = oracle.payoff(b)[i] - oracle.payoff(a)[i]
                assert oracle.potential(b) - oracle.potential(a) == pytest.approx(delta, abs=1e-12)
                assert delta > 1e-6

    def test_round_cap_formula(self):
        assert round_cap(3, 2.0, 0.05) == 120
        assert round_cap(1, 0.0, 0.1) == 1

    def test_non_potential_game_falls_back(self):
        res = eps_nash_greedy(matching_pennies(), 0.1, start=(0, 0), max_rounds=50)
        assert not res.converged
        assert res.gap == pytest.approx(1.0)

    def test_fallback_returns_best_seen(self):
        # Cycle through four profiles with different gaps.
        pay = np.zeros((2, 2, 2))
        pay[0, 0] = [0.0, 0.6]
        pay[0, 1] = [0.8, 0.0]
        pay[1, 1] = [0.0, 0.7]
        pay[1, 0] = [0.9, 0.0]
        oracle = matrix_oracle(pay)
        res = eps_nash_greedy(oracle, 0.01, start=(0, 0))
        gaps = {a: oracles.pure_profile_gap(oracle.payoff, (2, 2), a) for a in [(0, 0), (0, 1), (1, 0), (1, 1)]}
        assert not res.converged
        assert res.gap == pytest.approx(min(gaps.values()))

    def test_cap_without_cycle_detection_matches(self):
        oracle = matching_pennies()
        short = eps_nash_greedy(oracle, 0.1, start=(0, 0))
        long = eps_nash_greedy(oracle, 0.1, start=(0, 0), max_rounds=1000)
        assert short.profile == long.profile and short.gap == long.gap

    def test_output_always_pure_profile(self):
        game = small_game(2, m=3, F=3, actions=4)
        res = eps_nash_greedy(game_oracle(game), 0.05)
        assert len(res.profile) == 3 and all(isinstance(x, int) for x in res.profile)

    def test_bad_eps(self, entry_game):
        with pytest.raises(ValueError):
            eps_nash_greedy(game_oracle(entry_game), 0.0)

    def test_converges_within_cap_on_random_games(self):
        for seed in range(30):
            game = small_game(100 + seed, m=3, F=3, actions=5, monotone=False)
            oracle = game_oracle(game)
            res = eps_nash_greedy(oracle, 0.05)
            assert res.converged
            assert res.rounds_used <= math.ceil(3 * oracle.r_max / 0.05)
            assert nash_gap(game, deterministic_policy(game, res.profile)) <= 0.05


class TestFastPath:
    def test_deviations_agree_with_payoffs(self):
        game = small_game(9, m=3, F=3, actions=4)
        oracle = game_oracle(game)
        slow = StagePayoffOracle(oracle.action_counts, oracle.payoff, oracle.r_max)
        for a in oracles.joint_actions(game):
            for i in range(3):
                np.testing.assert_allclose(oracle.deviation_values(a, i), slow.deviation_values(a, i), atol=1e-12)

    def test_payoff_matches_direct_count(self):
        game = small_game(10, m=3, F=3, actions=4)
        oracle = game_oracle(game)
        for a in oracles.joint_actions(game):
            np.testing.assert_allclose(oracle.payoff(a), oracles.payoffs(game, a), atol=1e-12)


class TestBruteForce:
    def test_entry_game(self, entry_game):
        found = brute_force_pure_nash(game_oracle(entry_game))
        assert ((1, 1), 0.0) in found

    def test_identical_interest_has_two(self):
        found = brute_force_pure_nash(identical_interest())
        assert [a for a, _ in found] == [(0, 0), (1, 1)]

    def test_single_player(self):
        game = one_player_game([0.2, 0.9], [(0,), (1,)])
        assert brute_force_pure_nash(game_oracle(game)) == [((1,), 0.0)]

    def test_size_guard(self):
        oracle = StagePayoffOracle((400, 400), lambda a: np.zeros(2), 1.0)
        with pytest.raises(ValueError, match="refusing"):
            brute_force_pure_nash(oracle)

    def test_pure_equilibria_have_zero_gap(self):
        for seed in range(15):
            game = small_game(seed, m=3, F=3, actions=4, monotone=False)
            found = pure_nash_of_game(game)
            assert found, "congestion games always have a pure equilibrium"
            for a, _ in found:
                assert nash_gap(game, deterministic_policy(game, a)) <= 1e-9
