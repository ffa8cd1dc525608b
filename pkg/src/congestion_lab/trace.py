"""Per-episode regret traces and their CSV form.

Columns, in order: ``k,gap,cum_regret,ms,reward_p1..reward_pm,stage_rounds,
converged``.  ``gap`` is the exact Nash gap of the episode's policy and
``cum_regret`` is ``multiplier`` times its prefix sum, where the multiplier
is the number of rounds per episode for Frank-Wolfe runs and 1 otherwise.
Floats are written with ``repr`` so a trace reloads to identical values.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


@dataclass
class TraceRow:
    k: int
    gap: float
    cum_regret: float
    ms: float
    rewards: tuple[float, ...]
    stage_rounds: int
    converged: bool


@dataclass
class RegretTrace:
    num_players: int
    seed: int = 0
    multiplier: float = 1.0
    rows: list[TraceRow] = field(default_factory=list)
    extras: dict[str, list[Any]] = field(default_factory=dict)
    _gap_total: float = field(default=0.0, repr=False)

    def append(
        self,
        gap: float,
        rewards,
        stage_rounds: int = 0,
        converged: bool = True,
        ms: float = 0.0,
    ) -> TraceRow:
        if gap < 0:
            raise ValueError(f"negative gap {gap}")
        rewards = tuple(float(x) for x in rewards)
        if len(rewards) != self.num_players:
            raise ValueError("need one reward per player")
        self._gap_total += float(gap)
        row = TraceRow(
            len(self.rows) + 1,
            float(gap),
            self.multiplier * self._gap_total,
            float(ms),
            rewards,
            int(stage_rounds),
            bool(converged),
        )
        self.rows.append(row)
        return row

    def record(self, key: str, value: Any) -> None:
        self.extras.setdefault(key, []).append(value)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.rows])

    @property
    def cumulative(self) -> np.ndarray:
        return np.array([r.cum_regret for r in self.rows])

    @property
    def regret(self) -> float:
        return self.rows[-1].cum_regret if self.rows else 0.0

    def best_iterate(self) -> tuple[float, int]:
        """(smallest gap, 1-based episode achieving it); (nan, 0) if empty."""
        if not self.rows:
            return math.nan, 0
        j = int(np.argmin(self.gaps))
        return self.rows[j].gap, self.rows[j].k

    def header(self) -> list[str]:
        players = [f"reward_p{i + 1}" for i in range(self.num_players)]
        return ["k", "gap", "cum_regret", "ms", *players, "stage_rounds", "converged"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header())
        for r in self.rows:
            writer.writerow(
                [r.k, repr(r.gap), repr(r.cum_regret), repr(r.ms), *map(repr, r.rewards), r.stage_rounds, int(r.converged)]
            )
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())


@dataclass
class LoadedTrace:
    header: list[str]
    k: np.ndarray
    gap: np.ndarray
    cum_regret: np.ndarray
    rewards: np.ndarray
    stage_rounds: np.ndarray
    converged: np.ndarray


def read_csv(path) -> LoadedTrace:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        body = [row for row in reader]
    check_header(header)
    m = len(header) - 6
    arr = np.array(body, dtype=float).reshape(len(body), len(header))
    return LoadedTrace(
        header,
        arr[:, 0].astype(int),
        arr[:, 1],
        arr[:, 2],
        arr[:, 4 : 4 + m],
        arr[:, 4 + m].astype(int),
        arr[:, 5 + m].astype(bool),
    )


def check_header(header: list[str]) -> None:
    m = len(header) - 6
    expected = ["k", "gap", "cum_regret", "ms", *[f"reward_p{i + 1}" for i in range(m)], "stage_rounds", "converged"]
    if m < 1 or header != expected:
        raise ValueError(f"unexpected trace header {header}")


def verify_trace(path, multiplier: float | None = None, tol: float = 1e-9) -> list[str]:
    """Re-check a trace file; returns a list of problems (empty when sound).

    When ``multiplier`` is not given it is inferred from the first episode
    with a positive gap (cum_regret / running gap sum), and then checked for
    consistency on every row.
    """
    problems: list[str] = []
    try:
        t = read_csv(path)
    except (ValueError, StopIteration) as exc:
        return [f"unreadable trace: {exc}"]
    if len(t.k) and not np.array_equal(t.k, np.arange(1, len(t.k) + 1)):
        problems.append("episode column is not 1..K")
    if np.any(t.gap < 0):
        problems.append(f"{int((t.gap < 0).sum())} negative gap entries")
    prefix = np.cumsum(t.gap)
    if multiplier is None:
        pos = np.nonzero(prefix > 0)[0]
        multiplier = float(t.cum_regret[pos[0]] / prefix[pos[0]]) if len(pos) else 1.0
    bad = np.abs(t.cum_regret - multiplier * prefix) > tol * np.maximum(1.0, np.abs(t.cum_regret))
    if bad.any():
        problems.append(f"cum_regret differs from prefix sums at episodes {t.k[bad][:5].tolist()}")
    return problems
