"""Learning Nash equilibria in congestion games from bandit and semi-bandit feedback."""

from .game import CongestionGame, GameSpecError, NoiseModel, nash_gap
from .imcg import ImcgSpec

__all__ = ["CongestionGame", "GameSpecError", "ImcgSpec", "NoiseModel", "nash_gap"]
__version__ = "0.1.0"
