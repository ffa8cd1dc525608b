"""Random congestion games and grid routing games."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .game import SEMI, CongestionGame, NoiseModel


def generate_random_game(
    m: int,
    F: int,
    actions_per_player: int,
    monotone: bool = True,
    seed: int = 0,
    noise: NoiseModel | None = None,
    feedback: str = SEMI,
) -> CongestionGame:
    """Uniform rewards and ``actions_per_player`` distinct random subsets per player.

    Subsets are drawn without replacement from all 2^F subsets of the
    facilities (the empty set included).  With ``monotone`` each facility's
    rewards are sorted so that r^f(n) is non-increasing in n.
    """
    if m < 1 or F < 1:
        raise ValueError("need m >= 1 and F >= 1")
    if not 1 <= actions_per_player <= 2**F:
        raise ValueError(f"cannot draw {actions_per_player} distinct subsets of {F} facilities")
    rng = np.random.default_rng(seed)
    rewards = rng.random((F, m))
    if monotone:
        rewards = -np.sort(-rewards, axis=1)
    actions = []
    for _ in range(m):
        codes = rng.choice(2**F, size=actions_per_player, replace=False)
        actions.append([tuple(f for f in range(F) if (int(c) >> f) & 1) for c in codes])
    return CongestionGame(F, actions, rewards, noise or NoiseModel(), feedback)


@dataclass
class RoutingGameSpec:
    """Directed grid of ``width`` x ``height`` nodes, edges pointing right and down.

    Node (x, y) has id ``y * width + x``.  ``rewards`` optionally fixes the
    shared mean-reward curve r(n), n = 1..m, for every edge; otherwise each
    edge gets its own random non-increasing curve.
    """

    width: int
    height: int
    players: list[tuple[int, int]]
    cap: int = 8
    rewards: list[float] | None = None


def grid_edges(width: int, height: int) -> list[tuple[int, int]]:
    edges = []
    for y in range(height):
        for x in range(width):
            u = y * width + x
            if x + 1 < width:
                edges.append((u, u + 1))
            if y + 1 < height:
                edges.append((u, u + width))
    return sorted(edges)


def simple_paths(edges: list[tuple[int, int]], source: int, sink: int, cap: int) -> list[tuple[int, ...]]:
    """Up to ``cap`` simple paths as edge-index tuples, DFS in edge order."""
    out_edges: dict[int, list[int]] = {}
    for e, (u, _) in enumerate(edges):
        out_edges.setdefault(u, []).append(e)
    paths: list[tuple[int, ...]] = []

    def dfs(node: int, visited: set[int], path: list[int]) -> None:
        if len(paths) >= cap:
            return
        if node == sink:
            paths.append(tuple(path))
            return
        for e in out_edges.get(node, []):
            v = edges[e][1]
            if v in visited:
                continue
            visited.add(v)
            path.append(e)
            dfs(v, visited, path)
            path.pop()
            visited.remove(v)
            if len(paths) >= cap:
                return

    dfs(source, {source}, [])
    return paths


def generate_routing_game(
    spec: RoutingGameSpec, seed: int = 0, noise: NoiseModel | None = None, feedback: str = SEMI
) -> CongestionGame:
    if spec.cap < 1:
        raise ValueError("path cap must be >= 1")
    if spec.width < 1 or spec.height < 1:
        raise ValueError("grid dimensions must be positive")
    nodes = spec.width * spec.height
    edges = grid_edges(spec.width, spec.height)
    if not edges:
        raise ValueError("grid has no edges")
    m = len(spec.players)
    if m < 1:
        raise ValueError("need at least one player")
    actions = []
    for i, (src, dst) in enumerate(spec.players):
        if not (0 <= src < nodes and 0 <= dst < nodes):
            raise ValueError(f"player {i}: node ids must lie in [0, {nodes})")
        if src == dst:
            raise ValueError(f"player {i}: source equals sink")
        paths = simple_paths(edges, src, dst, spec.cap)
        if not paths:
            raise ValueError(f"player {i}: no path from {src} to {dst}")
        actions.append(paths)
    rng = np.random.default_rng(seed)
    if spec.rewards is not None:
        curve = np.asarray(spec.rewards, dtype=float)
        if curve.shape != (m,):
            raise ValueError(f"reward curve needs {m} entries")
        rewards = np.tile(curve, (len(edges), 1))
    else:
        rewards = -np.sort(-rng.random((len(edges), m)), axis=1)
    return CongestionGame(len(edges), actions, rewards, noise or NoiseModel(), feedback)


def parse_players(text: str) -> list[tuple[int, int]]:
    """Parse ``"s1>t1,s2>t2"``."""
    out = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            src, dst = chunk.split(">")
            out.append((int(src), int(dst)))
        except ValueError:
            raise ValueError(f"bad player route {chunk!r}; expected 'source>sink'") from None
    return out


def all_subsets(F: int):
    return [tuple(c) for n in range(F + 1) for c in itertools.combinations(range(F), n)]
