"""Grid simulation of X_t = X_0 - theta int_0^t X_s ds + Z_t.

Per cell of width h the Gaussian part and the drift are propagated with the
exact OU transition. Jumps with |J| > eps_cut form a compound Poisson process
whose arrival times are kept exactly; a jump at tau inside (t_i, t_{i+1}]
contributes J exp(-theta (t_{i+1} - tau)) to X_{i+1}. Jumps with |J| <= eps_cut
are either dropped or replaced by a Brownian motion with the same variance.
Grid values are stored post-jump.
"""
from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .levy_model import (
    JumpMeasureSpec,
    LevyModel,
    first_moment,
    min_cutoff_for_intensity,
    sample_jump_above,
    tail,
    truncated_variance,
)

__all__ = [
    "SmallJumpMode",
    "SimConfig",
    "ConfigurationError",
    "PathRecord",
    "simulate_ou",
    "propagate_ou",
    "jump_response",
    "decompose_heavy",
    "heavy_quadratic_variation",
    "ito_identity_terms",
    "default_eps_cut",
    "path_rng",
    "write_path",
]

MAX_INTENSITY_STEP = 0.5
SOFT_INTENSITY_STEP = 0.1


class ConfigurationError(ValueError):
    pass


class SmallJumpMode(str, enum.Enum):
    DISCARD = "discard"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class SimConfig:
    T: float
    h: float
    theta: float
    eps_cut: float
    small_jump_mode: SmallJumpMode = SmallJumpMode.GAUSSIAN
    x0_mode: str = "zero"  # zero | fixed | stationary
    x0: float = 0.0
    burn_in: float = 50.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "small_jump_mode", SmallJumpMode(self.small_jump_mode))
        if not (self.T > 0 and self.h > 0 and self.h < self.T):
            raise ConfigurationError("need 0 < h < T")
        if not self.theta > 0:
            raise ConfigurationError("theta must be positive")
        if not self.eps_cut > 0:
            raise ConfigurationError("eps_cut must be positive")
        if self.x0_mode not in ("zero", "fixed", "stationary"):
            raise ConfigurationError(f"unknown x0_mode {self.x0_mode!r}")
        n = self.T / self.h
        if abs(n - round(n)) > 1e-9 * n:
            raise ConfigurationError(f"T={self.T} is not a multiple of h={self.h}")

    @property
    def n_cells(self) -> int:
        return int(round(self.T / self.h))


def default_eps_cut(spec: JumpMeasureSpec, h: float) -> float:
    """Smallest cut-off keeping the jump intensity per cell at 0.1."""
    return min_cutoff_for_intensity(spec, SOFT_INTENSITY_STEP / h)


def path_rng(master_seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for path ``index``: the seed sequence is keyed on
    (master_seed, stream, index), so streams do not depend on scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(stream), int(index)]))


@dataclass(frozen=True, eq=False)
class PathRecord:
    times: np.ndarray
    x: np.ndarray
    brownian_increments: np.ndarray  # dW_i
    brownian_ou: np.ndarray  # sigma int_cell e^{-theta(t_{i+1}-s)} dW_s
    small_noise_increments: np.ndarray  # increment of the small-jump substitute
    small_noise_ou: np.ndarray  # its OU-weighted cell integral
    drift_ou: float  # b_eff (1 - e^{-theta h}) / theta
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    theta_true: float
    model: LevyModel
    config: SimConfig
    effective_drift: float
    small_variance: float  # variance rate of the substitute

    @property
    def h(self) -> float:
        return self.config.h

    @property
    def T(self) -> float:
        return self.config.T

    @property
    def sigma_eff(self) -> float:
        return math.sqrt(self.model.sigma**2 + self.small_variance)

    def jump_cells(self) -> np.ndarray:
        """Index i of the cell (t_i, t_{i+1}] holding each jump."""
        return cell_index(self.jump_times, self.h, self.config.n_cells)

    def cell_jump_sum(self, mask=None) -> np.ndarray:
        """Per-cell sum of J exp(-theta (t_{i+1} - tau))."""
        return _cell_jump_contrib(
            self.jump_times, self.jump_sizes, self.theta_true, self.h, self.config.n_cells, mask
        )


def cell_index(times, h, n):
    idx = np.ceil(np.asarray(times) / h).astype(np.int64) - 1
    return np.clip(idx, 0, n - 1)


def _cell_jump_contrib(times, sizes, theta, h, n, mask=None):
    if mask is not None:
        times, sizes = times[mask], sizes[mask]
    idx = cell_index(times, h, n)
    right = (idx + 1) * h
    weights = sizes * np.exp(-theta * (right - times))
    return np.bincount(idx, weights=weights, minlength=n).astype(float)


def propagate_ou(x0: float, decay: float, increments: np.ndarray) -> np.ndarray:
    """x[0] = x0, x[i+1] = decay * x[i] + increments[i]."""
    out = np.empty(len(increments) + 1)
    out[0] = x0
    out[1:] = lfilter([1.0], [1.0, -decay], increments, zi=[decay * x0])[0]
    return out


def effective_drift(model: LevyModel, eps: float) -> float:
    """Drift making the simulated Z match the triplet under the 1{|z|<=1} truncation.

    Jumps above eps are simulated uncompensated and small jumps are centred, so
    the compensator of (eps, 1] is subtracted (or the mean of (1, eps] added).
    """
    if eps <= 1.0:
        return model.b - first_moment(model.jumps, eps, 1.0)
    return model.b + first_moment(model.jumps, 1.0, eps)


def _draw_jumps(spec, T, eps, rng):
    intensity = tail(spec, eps)
    count = rng.poisson(intensity * T)
    times = np.sort(T - rng.uniform(0.0, T, count))  # in (0, T]
    u = 1.0 - rng.uniform(size=count)  # in (0, 1]
    sizes = sample_jump_above(spec, eps, u, rng.uniform(size=count))
    return times, np.atleast_1d(np.asarray(sizes, dtype=float))


def _gaussian_pair(rng, n, theta, h):
    """(dW, int_0^h e^{-theta(h-s)} dW_s) jointly, per cell."""
    a = math.exp(-theta * h)
    var_w = h
    var_i = -math.expm1(-2 * theta * h) / (2 * theta)
    cov = -math.expm1(-theta * h) / theta
    z = rng.standard_normal((2, n))
    dw = math.sqrt(var_w) * z[0]
    slope = cov / var_w
    resid = math.sqrt(max(var_i - slope * cov, 0.0))
    return dw, slope * dw + resid * z[1], a


def simulate_ou(model: LevyModel, cfg: SimConfig, rng=None, with_jumps: bool = True) -> PathRecord:
    """Simulate one path on the grid t_i = i h, i = 0..n.

    ``rng`` may be a Generator or a seed; ``None`` uses ``cfg.seed``. Jumps and
    Gaussian noise come from two child streams, so removing the jumps
    (``with_jumps=False``) leaves the Gaussian part unchanged.
    """
    if rng is None:
        rng = cfg.seed
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    spec = model.jumps
    eps = cfg.eps_cut
    intensity = tail(spec, eps)
    if intensity * cfg.h > MAX_INTENSITY_STEP:
        raise ConfigurationError(
            f"jump intensity H(eps_cut)*h = {intensity * cfg.h:.3g} exceeds "
            f"{MAX_INTENSITY_STEP}: grid too coarse for jump bookkeeping"
        )
    if intensity * cfg.h > SOFT_INTENSITY_STEP * (1 + 1e-9):
        warnings.warn(f"H(eps_cut)*h = {intensity * cfg.h:.3g} > {SOFT_INTENSITY_STEP}", stacklevel=2)

    jump_rng, noise_rng, x0_rng = rng.spawn(3)
    theta, h, n = cfg.theta, cfg.h, cfg.n_cells
    T = n * h

    times, sizes = _draw_jumps(spec, T, eps, jump_rng)
    if not with_jumps:
        times, sizes = times[:0], sizes[:0]

    dw, iw, decay = _gaussian_pair(noise_rng, n, theta, h)
    if cfg.small_jump_mode is SmallJumpMode.GAUSSIAN:
        small_var = truncated_variance(spec, eps)
        dg, ig, _ = _gaussian_pair(noise_rng, n, theta, h)
        dg *= math.sqrt(small_var)
        ig *= math.sqrt(small_var)
    else:
        small_var = 0.0
        dg = np.zeros(n)
        ig = np.zeros(n)
    b_eff = effective_drift(model, eps)
    drift_ou = b_eff * (-math.expm1(-theta * h)) / theta
    sigma_ou = model.sigma * iw

    if cfg.x0_mode == "zero":
        x0 = 0.0
    elif cfg.x0_mode == "fixed":
        x0 = float(cfg.x0)
    else:
        warm = SimConfig(
            T=math.ceil(cfg.burn_in / h) * h, h=h, theta=theta, eps_cut=eps,
            small_jump_mode=cfg.small_jump_mode, x0_mode="zero",
        )
        x0 = float(simulate_ou(model, warm, x0_rng, with_jumps=with_jumps).x[-1])

    jumps = _cell_jump_contrib(times, sizes, theta, h, n)
    x = propagate_ou(x0, decay, sigma_ou + ig + drift_ou + jumps)
    return PathRecord(
        times=np.arange(n + 1) * h,
        x=x,
        brownian_increments=dw,
        brownian_ou=sigma_ou,
        small_noise_increments=dg,
        small_noise_ou=ig,
        drift_ou=drift_ou,
        jump_times=times,
        jump_sizes=sizes,
        theta_true=theta,
        model=model,
        config=cfg,
        effective_drift=b_eff,
        small_variance=small_var,
    )


def jump_response(path: PathRecord, mask=None) -> np.ndarray:
    """OU response to the recorded jumps (optionally a subset) on the grid."""
    contrib = path.cell_jump_sum(mask)
    return propagate_ou(0.0, math.exp(-path.theta_true * path.h), contrib)


def decompose_heavy(path: PathRecord, rho: float, T: float | None = None):
    """Split x into (light, heavy) where heavy responds to jumps above R = T^rho."""
    T = path.T if T is None else T
    alpha = path.model.jumps.alpha
    if not 0.0 <= rho < 1.0 / alpha:
        raise ValueError(f"rho must lie in [0, 1/alpha) = [0, {1 / alpha:.4g}), got {rho}")
    R = T**rho
    if not path.config.eps_cut < R:
        raise ValueError(f"eps_cut={path.config.eps_cut} must be below R_T={R}")
    heavy = jump_response(path, np.abs(path.jump_sizes) > R)
    return path.x - heavy, heavy


def heavy_quadratic_variation(path: PathRecord, R: float) -> float:
    """Sum of J^2 over recorded jumps with |J| > R."""
    if R < path.config.eps_cut:
        raise ValueError("R below eps_cut: smaller jumps were not recorded individually")
    j = path.jump_sizes
    return float(np.sum(j[np.abs(j) > R] ** 2))


def ito_identity_terms(path: PathRecord, R: float) -> dict:
    """Terms of (Y_T)^2 = -2 theta int Y^2 ds + 2 int Y_- d eta + [eta]_T for the
    OU response Y to jumps above R.

    Y_T, Y at jump instants and [eta] come from the jump record exactly. The
    time integral uses the trapezoid rule on the grid refined at the jump
    times (pre- and post-jump values), so its error is O(h^2).
    """
    theta, T = path.theta_true, path.T
    mask = np.abs(path.jump_sizes) > R
    tau = path.jump_times[mask]
    J = path.jump_sizes[mask]
    # Y just before each jump, by exact recursion along the jump times
    pre = np.empty(len(J))
    y, last = 0.0, 0.0
    for k in range(len(J)):
        y *= math.exp(-theta * (tau[k] - last))
        pre[k] = y
        y += J[k]
        last = tau[k]
    y_T = y * math.exp(-theta * (T - last))

    grid_y = jump_response(path, mask)
    knots_t = np.concatenate([path.times, tau, tau])
    knots_y = np.concatenate([grid_y, pre, pre + J])
    # order by time; at a jump instant put the pre-jump value first
    is_post = np.concatenate([np.zeros(len(grid_y)), np.zeros(len(J)), np.ones(len(J))])
    order = np.lexsort((is_post, knots_t))
    t_s, y_s = knots_t[order], knots_y[order]
    y2 = y_s**2
    integral = float(np.sum(0.5 * (y2[1:] + y2[:-1]) * np.diff(t_s)))
    return {
        "lhs": y_T**2,
        "drift": -2 * theta * integral,
        "stochastic": 2 * float(np.dot(pre, J)),
        "bracket": float(np.sum(J**2)),
        "residual": y_T**2 - (-2 * theta * integral + 2 * float(np.dot(pre, J)) + float(np.sum(J**2))),
    }


def write_path(path: PathRecord, csv_path, json_path) -> None:
    """CSV ``time,x`` (17 significant digits) plus a JSON list of jump records;
    JSON floats are written with their shortest round-trip repr."""
    csv_path, json_path = Path(csv_path), Path(json_path)
    lines = ["time,x"]
    lines += [f"{t:.17g},{v:.17g}" for t, v in zip(path.times, path.x)]
    csv_path.write_text("\n".join(lines) + "\n")
    jumps = [
        {"time": float(t), "size": float(s)}
        for t, s in zip(path.jump_times, path.jump_sizes)
    ]
    json_path.write_text(json.dumps({"jumps": jumps}, indent=1) + "\n")
