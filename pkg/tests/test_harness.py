import json
from pathlib import Path

import numpy as np
import pytest

from congestion_lab.cli import main
from congestion_lab.experiment import ConfigError, ExperimentConfig, run_experiment
from congestion_lab.game import CongestionGame, GameSpecError
from congestion_lab.generators import RoutingGameSpec, generate_random_game, generate_routing_game, parse_players
from congestion_lab.reference import micro_imcg, two_player_single_facility, two_player_three_facility
from congestion_lab.trace import RegretTrace, read_csv, verify_trace

GOLDEN = Path(__file__).parent / "data" / "golden_m2_F3_a4_seed11.json"


def write_config(tmp_path, spec_doc, **fields):
    spec = tmp_path / "spec.json"
    spec.write_text(spec_doc)
    cfg = {"spec": "spec.json", "output_dir": "out", **fields}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


class TestRandomGenerator:
    def test_monotone(self):
        for seed in range(20):
            game = generate_random_game(4, 3, 5, True, seed)
            assert np.all(np.diff(game.rewards, axis=1) <= 0)

    def test_same_seed_same_json(self):
        assert generate_random_game(3, 3, 4, True, 5).dumps() == generate_random_game(3, 3, 4, True, 5).dumps()

    def test_distinct_subsets(self):
        game = generate_random_game(2, 3, 8, False, 1)
        for acts in game.action_sets:
            assert len(set(acts)) == 8

    def test_infeasible_count(self):
        with pytest.raises(ValueError, match="distinct"):
            generate_random_game(2, 2, 5, True, 0)

    def test_golden_instance(self):
        assert generate_random_game(2, 3, 4, True, 11).dumps() == GOLDEN.read_text()


class TestRoutingGenerator:
    def test_single_edge(self):
        game = generate_routing_game(RoutingGameSpec(2, 1, [(0, 1), (0, 1)]))
        assert game.num_facilities == 1
        assert game.action_sets == (((0,),), ((0,),))

    def test_two_by_two_corner(self):
        game = generate_routing_game(RoutingGameSpec(2, 2, [(0, 3), (0, 3)]))
        for acts in game.action_sets:
            assert len(acts) == 2
        assert game.action_sets[0] == ((0, 2), (1, 3))

    def test_cap_one(self):
        game = generate_routing_game(RoutingGameSpec(3, 3, [(0, 8)], cap=1))
        assert len(game.action_sets[0]) == 1

    def test_no_path_names_player(self):
        with pytest.raises(ValueError, match="player 1"):
            generate_routing_game(RoutingGameSpec(2, 2, [(0, 3), (3, 0)]))

    def test_paths_are_simple(self):
        game = generate_routing_game(RoutingGameSpec(3, 3, [(0, 8)], cap=20))
        assert len(game.action_sets[0]) == 6
        for path in game.action_sets[0]:
            assert len(path) == 4

    def test_fixed_reward_curve(self):
        game = generate_routing_game(RoutingGameSpec(2, 2, [(0, 3), (1, 3)], rewards=[0.9, 0.4]))
        np.testing.assert_array_equal(game.rewards, [[0.9, 0.4]] * 4)

    def test_parse_players(self):
        assert parse_players("0>3, 1>3") == [(0, 3), (1, 3)]
        with pytest.raises(ValueError):
            parse_players("0-3")


class TestTrace:
    def test_csv_layout(self):
        t = RegretTrace(2, multiplier=3)
        t.append(0.5, [1.0, 0.0], 4, True)
        t.append(0.25, [0.0, 1.0], 2, False)
        lines = t.to_csv().splitlines()
        assert lines[0] == "k,gap,cum_regret,ms,reward_p1,reward_p2,stage_rounds,converged"
        assert lines[2] == "2,0.25,2.25,0.0,0.0,1.0,2,0"

    def test_verify_detects_tampering(self, tmp_path):
        t = RegretTrace(1)
        for g in [0.1, 0.2, 0.3]:
            t.append(g, [0.0])
        path = tmp_path / "t.csv"
        t.write_csv(path)
        assert verify_trace(path) == []
        text = path.read_text().replace("0.6000000000000001", "0.7")
        path.write_text(text)
        assert verify_trace(path, 1.0)

    def test_negative_gap_refused(self):
        with pytest.raises(ValueError):
            RegretTrace(1).append(-0.1, [0.0])

    def test_best_iterate(self):
        t = RegretTrace(1)
        for g in [0.3, 0.1, 0.1, 0.2]:
            t.append(g, [0.0])
        assert t.best_iterate() == (0.1, 2)


class TestExperiment:
    def test_three_seeds(self, tmp_path):
        path = write_config(tmp_path, two_player_single_facility().dumps(), algorithm="nash-ucb-semi", K=20, seeds=[1, 2, 3])
        summary = run_experiment(ExperimentConfig.load(path))
        out = tmp_path / "out"
        assert sorted(p.name for p in out.iterdir()) == [
            "summary.json", "trace_nash-ucb-semi_1.csv", "trace_nash-ucb-semi_2.csv", "trace_nash-ucb-semi_3.csv",
        ]
        assert [s["seed"] for s in summary["seeds"]] == [1, 2, 3]
        for s in summary["seeds"]:
            assert read_csv(out / s["trace"]).gap.min() == pytest.approx(s["best_iterate_gap"])

    def test_incompatible_algorithm(self, tmp_path):
        path = write_config(tmp_path, two_player_single_facility().dumps(), algorithm="nash-ucb-bandit", K=5)
        with pytest.raises(ConfigError, match="bandit feedback"):
            run_experiment(ExperimentConfig.load(path))

    def test_spec_error_has_json_path(self, tmp_path):
        doc = json.loads(two_player_single_facility().dumps())
        doc["rewards"][0][1] = 2.0
        path = write_config(tmp_path, json.dumps(doc), algorithm="nash-ucb-semi", K=5)
        with pytest.raises(GameSpecError, match=r"\$\.rewards"):
            run_experiment(ExperimentConfig.load(path))

    def test_unknown_override(self, tmp_path):
        path = write_config(tmp_path, two_player_single_facility().dumps(), algorithm="nash-ucb-semi", K=5,
                            overrides={"gamma": 0.1})
        with pytest.raises(ConfigError, match="gamma"):
            ExperimentConfig.load(path)

    def test_fw_multiplier_in_summary(self, tmp_path):
        path = write_config(tmp_path, two_player_single_facility("bandit").dumps(), algorithm="fw-bandit", K=5,
                            overrides={"gamma": 0.1, "nu": 0.2, "tau": 6})
        summary = run_experiment(ExperimentConfig.load(path))
        assert summary["multiplier"] == 6
        assert verify_trace(tmp_path / "out" / "trace_fw-bandit_0.csv", 6) == []

    def test_nash_vi_run(self, tmp_path):
        path = write_config(tmp_path, micro_imcg().dumps(), algorithm="nash-vi-semi", K=4)
        summary = run_experiment(ExperimentConfig.load(path))
        assert len(read_csv(tmp_path / "out" / summary["seeds"][0]["trace"]).k) == 4

    @pytest.mark.slow
    def test_reference_run_best_iterate(self, tmp_path):
        path = write_config(tmp_path, two_player_three_facility().dumps(), algorithm="nash-ucb-semi", K=2000, seeds=[7])
        summary = run_experiment(ExperimentConfig.load(path))
        assert summary["best_iterate_gap"] <= 0.1

    def test_parallel_matches_serial(self, tmp_path, monkeypatch):
        path = write_config(tmp_path, two_player_single_facility().dumps(), algorithm="nash-ucb-semi", K=15, seeds=[4, 5])
        monkeypatch.setenv("CONGESTION_LAB_THREADS", "1")
        run_experiment(ExperimentConfig.load(path))
        serial = (tmp_path / "out" / "trace_nash-ucb-semi_5.csv").read_bytes()
        monkeypatch.setenv("CONGESTION_LAB_THREADS", "2")
        run_experiment(ExperimentConfig.load(path))
        assert (tmp_path / "out" / "trace_nash-ucb-semi_5.csv").read_bytes() == serial


class TestCli:
    def test_gen_random_matches_golden(self, tmp_path):
        out = tmp_path / "g.json"
        assert main(["gen-random", "--m", "2", "--F", "3", "--actions", "4", "--monotone", "--seed", "11", "--out", str(out)]) == 0
        assert out.read_text() == GOLDEN.read_text()

    def test_gen_routing(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["gen-routing", "--grid", "2x2", "--players", "0>3,0>3", "--out", str(out)]) == 0
        game = CongestionGame.load(out)
        assert game.num_facilities == 4 and game.num_players == 2

    def test_gen_routing_no_path_exit_code(self, tmp_path, capsys):
        assert main(["gen-routing", "--grid", "2x2", "--players", "3>0"]) == 2
        assert "player 0" in capsys.readouterr().err

    def test_run_twice_byte_identical_and_verify(self, tmp_path, capsys):
        path = write_config(tmp_path, two_player_three_facility("bandit").dumps(), algorithm="nash-ucb-bandit", K=30, seeds=[0, 9])
        assert main(["run", "--config", str(path)]) == 0
        first = {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir()}
        assert main(["run", "--config", str(path)]) == 0
        second = {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir()}
        assert first == second
        traces = [str(tmp_path / "out" / n) for n in first if n.endswith(".csv")]
        assert main(["verify", "--trace", *traces]) == 0

    def test_verify_reports_failure(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("k,gap,cum_regret,ms,reward_p1,stage_rounds,converged\n1,0.5,0.2,0.0,1.0,1,1\n")
        assert main(["verify", "--trace", str(bad), "--tau", "1"]) == 1

    def test_bad_config_exit_code(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        path.write_text('{"spec": "x.json", "algorithm": "nope", "K": 3}')
        assert main(["run", "--config", str(path)]) == 2
