"""Lévy characteristics of the driving noise.

A model is the triplet (sigma^2, b, nu). The Lévy measure nu comes from one of
two parametric regularly varying families:

* ``stable_pareto``: density c_-/|z|^{1+alpha} on z<0 and c_+/z^{1+alpha} on z>0.
* ``log_perturbed``: two-sided tail H(R) = (c_- + c_+) (log(e+R))^gamma / R^alpha,
  split between the signs in the fixed proportion c_- : c_+.

Everything here is a pure function of immutable inputs.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "JumpKind",
    "JumpMeasureSpec",
    "LevyModel",
    "ScalingFunction",
    "NumericalError",
    "tail",
    "tail_density",
    "tilde_tail",
    "tilde_tail_quadrature",
    "phi",
    "truncated_variance",
    "first_moment",
    "drift_adjustment",
    "sample_jump_above",
    "min_cutoff_for_intensity",
]

# sup_R R / ((e+R) log(e+R)); bounds gamma so the log_perturbed density stays >= 0
_LOG_SLOPE_SUP = 0.31785

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


class NumericalError(ArithmeticError):
    """Quadrature or root finding did not converge."""


class JumpKind(str, enum.Enum):
    STABLE_PARETO = "stable_pareto"
    LOG_PERTURBED = "log_perturbed"


@dataclass(frozen=True)
class JumpMeasureSpec:
    kind: JumpKind
    alpha: float
    c_minus: float
    c_plus: float
    gamma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", JumpKind(self.kind))
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if self.c_minus < 0 or self.c_plus < 0 or self.c_minus + self.c_plus <= 0:
            raise ValueError("need c_minus, c_plus >= 0 with c_minus + c_plus > 0")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.kind is JumpKind.STABLE_PARETO and self.gamma != 0.0:
            raise ValueError("stable_pareto has no log exponent; gamma must be 0")
        if self.gamma * _LOG_SLOPE_SUP > self.alpha:
            raise ValueError("gamma too large: the jump density would turn negative")

    @property
    def total_weight(self) -> float:
        return self.c_minus + self.c_plus

    @property
    def p_plus(self) -> float:
        """Probability that a jump is positive."""
        return self.c_plus / self.total_weight

    @property
    def asymmetry(self) -> float:
        return (self.c_plus - self.c_minus) / self.total_weight

    @classmethod
    def stable(cls, alpha, c_minus=0.5, c_plus=0.5):
        return cls(JumpKind.STABLE_PARETO, alpha, c_minus, c_plus, 0.0)

    @classmethod
    def log_perturbed(cls, alpha, c_minus=0.5, c_plus=0.5, gamma=1.0):
        return cls(JumpKind.LOG_PERTURBED, alpha, c_minus, c_plus, gamma)


@dataclass(frozen=True)
class LevyModel:
    sigma: float
    b: float
    jumps: JumpMeasureSpec

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class ScalingFunction:
    """phi_T for a given jump measure; ``mode`` is 'closed_form' or 'numeric'."""

    model: JumpMeasureSpec
    mode: str = "numeric"

    def __post_init__(self):
        if self.mode not in ("closed_form", "numeric"):
            raise ValueError(f"unknown scaling mode {self.mode!r}")
        if self.mode == "closed_form" and self.model.kind is not JumpKind.STABLE_PARETO:
            raise ValueError("closed_form scaling exists only for stable_pareto")

    def __call__(self, T):
        return phi(self, T)


def _check_positive(R):
    R = np.asarray(R, dtype=float)
    if np.any(~(R > 0)):
        raise ValueError("R must be positive")
    return R


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def tail(spec: JumpMeasureSpec, R):
    """H(R) = nu(|z| > R)."""
    R = _check_positive(R)
    c, a = spec.total_weight, spec.alpha
    if spec.kind is JumpKind.STABLE_PARETO:
        out = c / (a * R**a)
    else:
        out = c * np.log(np.e + R) ** spec.gamma / R**a
    return _scalar_or_array(out)


def tail_density(spec: JumpMeasureSpec, z):
    """Density of nu at z (either sign)."""
    z = np.asarray(z, dtype=float)
    r = np.abs(z)
    if np.any(r == 0):
        raise ValueError("the Lévy density is singular at 0")
    weight = np.where(z > 0, spec.c_plus, spec.c_minus) / spec.total_weight
    a = spec.alpha
    if spec.kind is JumpKind.STABLE_PARETO:
        dens = spec.total_weight / r ** (1 + a)
    else:
        slope = spec.gamma * r / ((np.e + r) * np.log(np.e + r))
        dens = np.asarray(tail(spec, r)) / r * (a - slope)
    return _scalar_or_array(weight * dens)


def _integrate_decaying(f, rate, rel_tol=1e-15, max_panels=20000):
    """Integrate f(u) over [0, inf) for f decaying roughly like exp(-rate*u).

    Composite 20-point Gauss-Legendre on panels of width 1/rate; the upper
    limit is extended until a whole panel adds less than rel_tol of the total.
    """
    width = 1.0 / rate
    half = 0.5 * width
    total = 0.0
    for k in range(max_panels):
        mid = (k + 0.5) * width
        u = mid + half * _GL_NODES
        piece = half * float(np.dot(_GL_WEIGHTS, f(u)))
        total += piece
        if k >= 3 and abs(piece) <= rel_tol * abs(total):
            return total
    raise NumericalError(
        f"integral did not converge within {max_panels} panels "
        f"(rate={rate}, partial={total!r}, last panel={piece!r})"
    )


def tilde_tail_quadrature(spec: JumpMeasureSpec, R: float) -> float:
    """alpha * int_R^inf H(z)/z dz by quadrature, substituting z = R e^u."""
    R = float(_check_positive(R))
    a = spec.alpha
    return a * _integrate_decaying(lambda u: tail(spec, R * np.exp(u)), a)


def tilde_tail(spec: JumpMeasureSpec, R):
    """Smoothed tail H~(R); identical to H for the stable family."""
    if spec.kind is JumpKind.STABLE_PARETO:
        return tail(spec, R)
    R = _check_positive(R)
    if R.ndim == 0:
        return tilde_tail_quadrature(spec, float(R))
    return np.array([tilde_tail_quadrature(spec, r) for r in R.ravel()]).reshape(R.shape)


def _phi_closed_form(spec: JumpMeasureSpec, T: float) -> float:
    # solves c / (alpha R^alpha) = 1/T for R = 1/phi
    return (spec.alpha / spec.total_weight) ** (1.0 / spec.alpha) * T ** (-1.0 / spec.alpha)


def phi(scaling: ScalingFunction, T: float, residual_tol: float = 1e-8) -> float:
    """phi_T defined by H~(1/phi_T) = 1/T, for T >= 1."""
    T = float(T)
    if not T >= 1.0:
        raise ValueError(f"phi_T is defined for T >= 1, got {T}")
    spec = scaling.model
    if scaling.mode == "closed_form":
        return _phi_closed_form(spec, T)

    def g(log_r):
        return math.log(T * tilde_tail(spec, math.exp(log_r)))

    # bracket on log(1/phi), grown geometrically around the stable guess
    x0 = -math.log(_phi_closed_form(spec, T))
    step = 1.0
    lo, hi = x0 - step, x0 + step
    for _ in range(200):
        if g(lo) > 0:
            break
        lo -= step
        step *= 2
    step = 1.0
    for _ in range(200):
        if g(hi) < 0:
            break
        hi += step
        step *= 2
    g_lo, g_hi = g(lo), g(hi)
    if not (g_lo > 0 > g_hi):
        raise NumericalError(f"could not bracket phi_T for T={T}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if g_mid == 0.0 or hi - lo < 1e-14 * max(1.0, abs(mid)):
            break
        if g_mid > 0:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    residual = abs(T * tilde_tail(spec, math.exp(mid)) - 1.0)
    if residual > residual_tol:
        raise NumericalError(f"phi_T residual {residual:.3e} above {residual_tol} at T={T}")
    return math.exp(-mid)


def truncated_variance(spec: JumpMeasureSpec, R: float) -> float:
    """int_{|z| <= R} z^2 nu(dz)."""
    R = float(_check_positive(R))
    a, c = spec.alpha, spec.total_weight
    if spec.kind is JumpKind.STABLE_PARETO:
        return c * R ** (2 - a) / (2 - a)
    # integration by parts: -R^2 H(R) + 2 int_0^R z H(z) dz, with z = R e^{-u}
    inner = _integrate_decaying(
        lambda u: R * R * np.exp(-2 * u) * tail(spec, R * np.exp(-u)), 2 - a
    )
    return 2 * inner - R * R * tail(spec, R)


def _abs_first_moment(spec: JumpMeasureSpec, lo: float, hi: float) -> float:
    """int_{lo < |z| <= hi} |z| nu(dz) for 0 < lo <= hi (hi may be inf when alpha > 1)."""
    if hi <= lo:
        return 0.0
    a, c = spec.alpha, spec.total_weight
    if spec.kind is JumpKind.STABLE_PARETO:
        if math.isinf(hi):
            if a <= 1:
                return math.inf
            return c * lo ** (1 - a) / (a - 1)
        if a == 1.0:
            return c * math.log(hi / lo)
        return c * (hi ** (1 - a) - lo ** (1 - a)) / (1 - a)
    # lo H(lo) - hi H(hi) + int_lo^hi H(z) dz, the last with z = lo e^u
    if math.isinf(hi):
        if a <= 1:
            return math.inf
        integral = _integrate_decaying(lambda u: lo * np.exp(u) * tail(spec, lo * np.exp(u)), a - 1)
        return lo * tail(spec, lo) + integral
    span = math.log(hi / lo)
    n_panels = max(1, int(math.ceil(span)))
    edges = np.linspace(0.0, span, n_panels + 1)
    integral = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        half = 0.5 * (right - left)
        u = 0.5 * (left + right) + half * _GL_NODES
        z = lo * np.exp(u)
        integral += half * float(np.dot(_GL_WEIGHTS, z * tail(spec, z)))
    return lo * tail(spec, lo) - hi * tail(spec, hi) + integral


def first_moment(spec: JumpMeasureSpec, lo: float, hi: float) -> float:
    """Signed moment int_{lo < |z| <= hi} z nu(dz); the sign split is fixed, so this
    is the absolute moment times (c_+ - c_-)/(c_+ + c_-)."""
    if spec.c_plus == spec.c_minus:
        return 0.0
    return spec.asymmetry * _abs_first_moment(spec, lo, hi)


def drift_adjustment(spec: JumpMeasureSpec, b: float, R: float) -> float:
    """b_R = b + int_{1 < |z| <= R} z nu(dz)."""
    if not R >= 1.0:
        raise ValueError(f"drift adjustment needs R >= 1, got {R}")
    return b + first_moment(spec, 1.0, float(R))


def _inverse_tail(spec: JumpMeasureSpec, target, lower):
    """Solve H(x) = target for x >= lower (vectorized bisection in log x)."""
    target = np.asarray(target, dtype=float)
    if spec.kind is JumpKind.STABLE_PARETO:
        return (spec.total_weight / (spec.alpha * target)) ** (1.0 / spec.alpha)
    lo = np.full(target.shape, math.log(lower))
    # the stable-tail guess overshoots only by the log factor; widen until bracketed
    hi = np.maximum(lo + 1.0, np.log(spec.total_weight / target) / spec.alpha + 1.0)
    while True:
        bad = np.asarray(tail(spec, np.exp(hi))) > target
        if not bad.any():
            break
        hi = np.where(bad, hi + 2.0 * (hi - lo) + 1.0, hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        above = np.asarray(tail(spec, np.exp(mid))) > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return np.exp(0.5 * (lo + hi))


def sample_jump_above(spec: JumpMeasureSpec, R: float, u, sign_u):
    """Jump sizes conditioned on |J| > R.

    ``u`` and ``sign_u`` are uniform(0,1) draws (scalars or arrays); the
    magnitude solves H(|J|) = u H(R) and the sign is + when sign_u < p_plus.
    """
    R = float(_check_positive(R))
    u = np.asarray(u, dtype=float)
    if spec.kind is JumpKind.STABLE_PARETO:
        mag = R * u ** (-1.0 / spec.alpha)
    else:
        mag = np.maximum(_inverse_tail(spec, u * tail(spec, R), R), R)
    sign = np.where(np.asarray(sign_u) < spec.p_plus, 1.0, -1.0)
    return _scalar_or_array(sign * mag)


def min_cutoff_for_intensity(spec: JumpMeasureSpec, rate: float) -> float:
    """Smallest eps with H(eps) <= rate."""
    return float(_inverse_tail(spec, np.asarray(rate), 1e-300))
