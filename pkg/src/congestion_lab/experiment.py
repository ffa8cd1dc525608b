"""Seeded experiment runs: config parsing, per-seed execution, trace files and summaries."""

from __future__ import annotations

import json
import logging
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .frank_wolfe import FwConfig, run_frank_wolfe
from .game import BANDIT, SEMI, CongestionGame
from .imcg import ImcgSpec, NashVIConfig, run_nash_vi
from .nash_ucb import UcbConfig, run_nash_ucb
from .trace import RegretTrace

log = logging.getLogger(__name__)

ALGORITHMS = {
    "nash-ucb-semi": SEMI,
    "nash-ucb-bandit": BANDIT,
    "fw-semi": SEMI,
    "fw-bandit": BANDIT,
    "nash-vi-semi": SEMI,
    "nash-vi-bandit": BANDIT,
}
OVERRIDE_KEYS = {
    "nash-ucb": {"delta", "eps_stage", "iota"},
    "fw": {"gamma", "nu", "tau", "design_tol", "schedule"},
    "nash-vi": {"delta", "eps_stage", "iota"},
}
ROUND_WARNING = 10**7
THREADS_ENV = "CONGESTION_LAB_THREADS"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    spec: str
    algorithm: str
    K: int
    seeds: list[int] = field(default_factory=lambda: [0])
    overrides: dict[str, Any] = field(default_factory=dict)
    output_dir: str = "runs"
    record_time: bool = False

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {sorted(ALGORITHMS)}")
        if not isinstance(self.K, int) or self.K < 1:
            raise ConfigError("K must be an integer >= 1")
        if not self.seeds or any(not isinstance(s, int) or not 0 <= s < 2**64 for s in self.seeds):
            raise ConfigError("seeds must be a non-empty list of 64-bit non-negative integers")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        unknown = set(self.overrides) - OVERRIDE_KEYS[self.family]
        if unknown:
            raise ConfigError(f"overrides {sorted(unknown)} do not apply to {self.algorithm}")

    @property
    def family(self) -> str:
        return self.algorithm.rsplit("-", 1)[0]

    @property
    def feedback(self) -> str:
        return ALGORITHMS[self.algorithm]

    @classmethod
    def from_json(cls, doc: dict[str, Any], base_dir: Path | None = None) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        allowed = {"spec", "algorithm", "K", "seeds", "overrides", "output_dir", "record_time"}
        unknown = set(doc) - allowed
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        for key in ("spec", "algorithm", "K"):
            if key not in doc:
                raise ConfigError(f"config is missing {key!r}")
        cfg = cls(**doc)
        if base_dir is not None:
            cfg.spec = str((base_dir / cfg.spec).resolve()) if not Path(cfg.spec).is_absolute() else cfg.spec
            od = Path(cfg.output_dir)
            cfg.output_dir = str(od if od.is_absolute() else (base_dir / od).resolve())
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_json(doc, path.parent)


def load_instance(cfg: ExperimentConfig):
    if cfg.family == "nash-vi":
        inst = ImcgSpec.load(cfg.spec)
    else:
        inst = CongestionGame.load(cfg.spec)
    if inst.feedback != cfg.feedback:
        raise ConfigError(
            f"algorithm {cfg.algorithm} needs {cfg.feedback} feedback but the instance declares {inst.feedback!r}"
        )
    return inst


def fw_config(cfg: ExperimentConfig, game: CongestionGame) -> FwConfig:
    ov = dict(cfg.overrides)
    schedule = ov.pop("schedule", "manual" if {"gamma", "nu", "tau"} <= set(ov) else "theorem")
    tol = ov.pop("design_tol", 1e-3)
    extra = {"design_tol": tol, "record_time": cfg.record_time}
    if schedule == "theorem":
        fc = FwConfig.theorem_default(cfg.K, game.num_players, game.num_facilities, cfg.feedback, **extra)
        for key in ("gamma", "nu", "tau"):
            if key in ov:
                setattr(fc, key, ov[key])
        FwConfig.__post_init__(fc)
        return fc
    missing = {"gamma", "nu", "tau"} - set(ov)
    if missing:
        raise ConfigError(f"manual schedule needs {sorted(missing)}")
    return FwConfig(cfg.K, int(ov["tau"]), float(ov["gamma"]), float(ov["nu"]), cfg.feedback, "manual", **extra)


def run_seed(cfg: ExperimentConfig, seed: int) -> RegretTrace:
    inst = load_instance(cfg)
    ov = cfg.overrides
    if cfg.family == "nash-ucb":
        return run_nash_ucb(inst, UcbConfig(cfg.K, record_time=cfg.record_time, **ov), seed)
    if cfg.family == "nash-vi":
        return run_nash_vi(inst, NashVIConfig(cfg.K, record_time=cfg.record_time, **ov), seed)
    return run_frank_wolfe(inst, fw_config(cfg, inst), seed)


def _worker_count(n: int) -> int:
    env = os.environ.get(THREADS_ENV)
    limit = os.cpu_count() or 1
    if env:
        try:
            limit = max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return max(1, min(n, limit))


def trace_name(algorithm: str, seed: int) -> str:
    return f"trace_{algorithm}_{seed}.csv"


def run_experiment(cfg: ExperimentConfig) -> dict[str, Any]:
    """Run every seed, write one CSV per seed plus summary.json; return the summary."""
    inst = load_instance(cfg)
    multiplier = 1
    if cfg.family == "fw":
        fc = fw_config(cfg, inst)
        multiplier = fc.tau
        if cfg.K * fc.tau > ROUND_WARNING:
            log.warning(
                "%s: K * tau = %d rounds per seed; consider a manual schedule with a smaller tau",
                cfg.algorithm,
                cfg.K * fc.tau,
            )
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    workers = _worker_count(len(cfg.seeds))
    if workers == 1:
        traces = [run_seed(cfg, s) for s in cfg.seeds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(run_seed, [cfg] * len(cfg.seeds), cfg.seeds))

    per_seed = []
    for seed, trace in zip(cfg.seeds, traces):
        trace.write_csv(out / trace_name(cfg.algorithm, seed))
        best_gap, best_k = trace.best_iterate()
        per_seed.append(
            {
                "seed": seed,
                "trace": trace_name(cfg.algorithm, seed),
                "final_regret": trace.regret,
                "best_iterate_gap": best_gap,
                "best_iterate_episode": best_k,
            }
        )
    summary = {
        "algorithm": cfg.algorithm,
        "K": cfg.K,
        "multiplier": multiplier,
        "overrides": cfg.overrides,
        "seeds": per_seed,
        "median_final_regret": statistics.median(p["final_regret"] for p in per_seed),
        "best_iterate_gap": statistics.median(p["best_iterate_gap"] for p in per_seed),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def multiplier_for(trace_path) -> float | None:
    """Read the regret multiplier from a summary.json next to the trace, if any."""
    trace_path = Path(trace_path)
    summary = trace_path.parent / "summary.json"
    if not summary.exists():
        return None
    try:
        doc = json.loads(summary.read_text())
    except json.JSONDecodeError:
        return None
    names = {p.get("trace") for p in doc.get("seeds", [])}
    if trace_path.name in names:
        return float(doc.get("multiplier", 1))
    return None
