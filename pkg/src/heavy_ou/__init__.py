"""Simulation and drift inference for Ornstein-Uhlenbeck processes driven by
heavy-tailed Lévy noise, with Monte Carlo checks against stable limit laws."""

from .levy_model import JumpKind, JumpMeasureSpec, LevyModel, ScalingFunction, phi
from .simulate import PathRecord, SimConfig, SmallJumpMode, simulate_ou
from .stable_limit import StableLimit

__version__ = "0.1.0"

__all__ = [
    "JumpKind",
    "JumpMeasureSpec",
    "LevyModel",
    "ScalingFunction",
    "phi",
    "PathRecord",
    "SimConfig",
    "SmallJumpMode",
    "simulate_ou",
    "StableLimit",
]
