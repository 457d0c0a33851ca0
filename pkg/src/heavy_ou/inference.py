"""Likelihood machinery for the drift parameter theta.

The log-likelihood ratio is quadratic in theta and depends on the path only
through two statistics taken at a reference point theta0:

    i1 = int omega dm^(theta0)     (Ito, left-point)
    i2 = int omega^2 ds            (left Riemann)

where m^(theta0) is the continuous martingale part of omega under theta0.
Oracle mode reads m from the simulation (sigma dW); observed mode rebuilds it
from grid increments with a threshold jump filter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .levy_model import LevyModel, drift_adjustment, first_moment
from .simulate import PathRecord

__all__ = [
    "JumpFilterConfig",
    "SufficientStats",
    "FilterError",
    "DegeneratePathError",
    "continuous_part_increments",
    "flag_jump_cells",
    "sufficient_stats",
    "log_likelihood_ratio",
    "mle",
    "normalized_error",
]

ORACLE = "oracle"
OBSERVED = "observed"
MAX_FLAGGED_FRACTION = 0.3


class FilterError(RuntimeError):
    """Too many cells classified as jumps."""


class DegeneratePathError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class JumpFilterConfig:
    """Cells with |d omega| > scale * h**exponent are treated as jump cells.

    ``scale=None`` means 5 * sigma_eff of the path (or sigma for raw data).
    """

    threshold_exponent: float = 0.4
    threshold_scale: float | None = None
    scale_multiplier: float = 5.0

    def __post_init__(self):
        if not 0.0 < self.threshold_exponent < 0.5:
            raise ValueError("threshold_exponent must lie in (0, 1/2)")
        if self.threshold_scale is not None and not self.threshold_scale > 0:
            raise ValueError("threshold_scale must be positive")

    def threshold(self, h: float, sigma_eff: float) -> float:
        scale = self.threshold_scale
        if scale is None:
            scale = self.scale_multiplier * sigma_eff
        return scale * h**self.threshold_exponent


@dataclass(frozen=True)
class SufficientStats:
    i1: float
    i2: float
    T: float
    sigma: float
    theta0: float

    def at(self, theta0: float) -> "SufficientStats":
        """Same statistics re-expressed at another reference point."""
        return SufficientStats(self.i1 + (theta0 - self.theta0) * self.i2, self.i2, self.T, self.sigma, theta0)


def _compensated_drift(model: LevyModel, threshold: float) -> float:
    """Drift per unit time that m removes besides the detected jumps.

    Jumps above the threshold are cut out whole; m keeps jumps <= 1 only in
    compensated form, so the compensator of (threshold, 1] is added back.
    """
    if threshold >= 1.0:
        return drift_adjustment(model.jumps, model.b, threshold)
    return model.b - first_moment(model.jumps, threshold, 1.0)


def flag_jump_cells(x: np.ndarray, h: float, threshold: float, passes: int = 2):
    """Flag cells whose increment, net of the mean reversion, exceeds ``threshold``.

    The reversion rate is a least-squares pilot fitted on the unflagged cells
    (starting from all cells). Without this, the fast decay after a large jump
    (|theta x h| > threshold) would itself be flagged. The flags depend on the
    path only, never on the reference point theta0.
    Returns (flags, pilot_theta).
    """
    left = x[:-1]
    dx = np.diff(x)
    keep = np.ones(dx.shape, dtype=bool)
    pilot = 0.0
    for _ in range(passes):
        denom = np.dot(left[keep], left[keep]) * h
        pilot = -np.dot(left[keep], dx[keep]) / denom if denom > 0 else 0.0
        keep = np.abs(dx + pilot * left * h) <= threshold
    return ~keep, float(pilot)


def continuous_part_increments(
    path,
    theta0: float,
    model: LevyModel | None = None,
    filter: JumpFilterConfig | None = None,
    mode: str = ORACLE,
    h: float | None = None,
) -> np.ndarray:
    """Per-cell increments of m^(theta0).

    ``path`` is a PathRecord, or in observed mode also a raw grid array (then
    ``model`` and ``h`` are required). In observed mode a flagged cell keeps
    only the pilot mean-reversion step in place of its increment.
    """
    if mode == ORACLE:
        if not isinstance(path, PathRecord):
            raise TypeError("oracle mode needs a PathRecord with simulation internals")
        x = path.x
        return path.model.sigma * path.brownian_increments + (theta0 - path.theta_true) * x[:-1] * path.h
    if mode != OBSERVED:
        raise ValueError(f"unknown mode {mode!r}")

    filter = filter or JumpFilterConfig()
    if isinstance(path, PathRecord):
        x = path.x
        model = model or path.model
        h = path.h
        sigma_eff = path.sigma_eff
    else:
        if model is None or h is None:
            raise ValueError("raw grid data needs model and h")
        x = np.asarray(path, dtype=float)
        sigma_eff = model.sigma
    dx = np.diff(x)
    thr = filter.threshold(h, sigma_eff)
    flagged, pilot = flag_jump_cells(x, h, thr)
    if flagged.mean() > MAX_FLAGGED_FRACTION:
        raise FilterError(
            f"{flagged.mean():.1%} of cells exceed the jump threshold {thr:.3g}; "
            "the filter is misconfigured for this grid"
        )
    left = x[:-1]
    cont = np.where(flagged, -pilot * left * h, dx)
    return cont + theta0 * left * h - _compensated_drift(model, thr) * h


def sufficient_stats(path, theta0, model=None, filter=None, mode=ORACLE, h=None) -> SufficientStats:
    dm = continuous_part_increments(path, theta0, model, filter, mode, h)
    if isinstance(path, PathRecord):
        x, h, model = path.x, path.h, model or path.model
    else:
        x = np.asarray(path, dtype=float)
    left = x[:-1]
    return SufficientStats(
        i1=float(np.dot(left, dm)),
        i2=float(np.dot(left, left) * h),
        T=len(left) * h,
        sigma=model.sigma,
        theta0=float(theta0),
    )


def log_likelihood_ratio(stats: SufficientStats, theta) -> float:
    """log dP^theta/dP^theta0 on [0, T]."""
    d = np.asarray(theta, dtype=float) - stats.theta0
    s2 = stats.sigma**2
    out = -d / s2 * stats.i1 - d * d / (2 * s2) * stats.i2
    return float(out) if out.ndim == 0 else out


def mle(stats: SufficientStats) -> float:
    if not stats.i2 > 0:
        raise DegeneratePathError("int omega^2 ds = 0: the likelihood is flat")
    return stats.theta0 - stats.i1 / stats.i2


def normalized_error(theta_hat, theta0, phi_T):
    if not phi_T > 0:
        raise ValueError("phi_T must be positive")
    out = (np.asarray(theta_hat, dtype=float) - theta0) / phi_T
    return float(out) if out.ndim == 0 else out
