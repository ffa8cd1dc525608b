import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from congestion_lab.game import CongestionGame  # noqa: E402
from congestion_lab.reference import two_player_single_facility  # noqa: E402

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    def report(key: str, ok: bool, detail: str) -> None:
        ACCEPTANCE_RESULTS[key] = (bool(ok), detail)

    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def entry_game():
    return two_player_single_facility()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def small_game(seed, m=2, F=2, actions=3, monotone=True):
    from congestion_lab.generators import generate_random_game

    return generate_random_game(m, F, actions, monotone, seed)


def one_player_game(rewards, actions):
    return CongestionGame(len(rewards), [actions], np.array(rewards, dtype=float).reshape(-1, 1))
