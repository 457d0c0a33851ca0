"""Limit laws built on the one-sided (alpha/2)-stable variable S.

S is normalised by E exp(-lam S) = exp(-Gamma(1 - alpha/2) lam^(alpha/2)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "StableLimit",
    "laplace",
    "sample_stable",
    "sample_joint_limit",
    "sample_lamn_loglik",
    "lamn_loglik",
    "sample_mle_limit",
    "median_of_means",
]


@dataclass(frozen=True)
class StableLimit:
    alpha: float
    scale: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        beta = self.alpha / 2
        object.__setattr__(self, "scale", math.gamma(1 - beta) ** (1 / beta))

    @property
    def beta(self) -> float:
        return self.alpha / 2

    @property
    def laplace_coefficient(self) -> float:
        return math.gamma(1 - self.beta)


def laplace(limit: StableLimit, lam):
    """E exp(-lam S)."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lambda must be >= 0")
    out = np.exp(-limit.laplace_coefficient * lam**limit.beta)
    return float(out) if out.ndim == 0 else out


def _kanter(beta, angle, expo):
    # S0 with E exp(-lam S0) = exp(-lam^beta), angle ~ U(0, pi), expo ~ Exp(1)
    return (
        np.sin(beta * angle)
        / np.sin(angle) ** (1 / beta)
        * (np.sin((1 - beta) * angle) / expo) ** ((1 - beta) / beta)
    )


def sample_stable(limit: StableLimit, rng: np.random.Generator, size=None):
    """Draw S by Kanter's representation."""
    angle = rng.uniform(0.0, np.pi, size)
    expo = rng.standard_exponential(size)
    # uniform() may return exactly 0; sin(0) would give 0/0
    angle = np.where(angle == 0.0, np.pi * 0.5**53, angle)
    return limit.scale * _kanter(limit.beta, angle, expo)


def sample_joint_limit(limit: StableLimit, theta0: float, rng: np.random.Generator, size=None):
    """(N sqrt(S/(2 theta0)), S/(2 theta0)) with N, S independent."""
    if not theta0 > 0:
        raise ValueError("theta0 must be positive")
    s = sample_stable(limit, rng, size)
    n = rng.standard_normal(size)
    v = s / (2 * theta0)
    return n * np.sqrt(v), v


def lamn_loglik(n, s, u, sigma, theta0):
    """N sqrt(V) u - V u^2 / 2 with V = S / (2 sigma^2 theta0)."""
    v = np.asarray(s) / (2 * sigma**2 * theta0)
    return np.asarray(n) * np.sqrt(v) * u - 0.5 * v * u * u


def sample_lamn_loglik(limit, theta0, sigma, u, rng, size=None):
    if not (sigma > 0 and theta0 > 0):
        raise ValueError("sigma and theta0 must be positive")
    s = sample_stable(limit, rng, size)
    n = rng.standard_normal(size)
    return lamn_loglik(n, s, u, sigma, theta0)


def sample_mle_limit(limit, theta0, sigma, rng, size=None):
    """sigma sqrt(2 theta0) N / sqrt(S)."""
    if not (sigma > 0 and theta0 > 0):
        raise ValueError("sigma and theta0 must be positive")
    s = sample_stable(limit, rng, size)
    n = rng.standard_normal(size)
    return sigma * math.sqrt(2 * theta0) * n / np.sqrt(s)


def median_of_means(x, blocks: int = 32):
    """Median of block means and a normal-theory standard error for it."""
    x = np.asarray(x, dtype=float)
    means = np.array([b.mean() for b in np.array_split(x, blocks)])
    # median of k roughly normal block means has sd ~ sqrt(pi/2) * sd(mean)/sqrt(k)
    se = math.sqrt(math.pi / 2) * means.std(ddof=1) / math.sqrt(blocks)
    return float(np.median(means)), float(se)
