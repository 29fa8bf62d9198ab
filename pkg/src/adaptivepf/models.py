"""Synthetic observation processes and the Gaussian transition density.

Three generating processes share one interface: a driftless Gaussian walk
with constant volatility, the same walk with a one-off volatility regime
shift, and a random-walk stochastic-volatility variant. All are simulated
with an Euler-Maruyama step of size 1, so the volatility parameters are
per-step quantities.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .rng import RngStream

__all__ = [
    "GaussianModel",
    "RegimeShiftModel",
    "StochVolModel",
    "ModelSpec",
    "ObservationSeries",
    "generate",
    "transition_density",
    "log_transition_density",
    "write_series_csv",
    "read_series_csv",
]

# Sub-stream ids: increments always come from stream 0 so that degenerate
# parameter choices (sigma1 == sigma2, nu == 0) reproduce the plain Gaussian
# path bit-for-bit. Stream 1 drives the volatility innovations.
_STREAM_INCREMENTS = 0
_STREAM_VOLATILITY = 1

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianModel:
    """Constant per-step volatility: dx_t = sigma * z_t."""

    sigma: float

    def validate(self) -> None:
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be finite and > 0, got {self.sigma}")


@dataclass(frozen=True)
class RegimeShiftModel:
    """Volatility sigma1 before step t_star, sigma2 from t_star on."""

    sigma1: float
    sigma2: float
    t_star: int

    def validate(self) -> None:
        for name, v in (("sigma1", self.sigma1), ("sigma2", self.sigma2)):
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and > 0, got {v}")
        if self.t_star < 1:
            raise ValueError(f"t_star must be >= 1, got {self.t_star}")


@dataclass(frozen=True)
class StochVolModel:
    """Random-walk volatility: dx_t = alpha_{t-1} * z_t, alpha reflected at 0.

    The volatility path evolves as alpha_t = |alpha_{t-1} + nu * z'_t|.
    The reflection keeps the (sign-unidentifiable) volatility positive so
    the recorded truth stays interpretable. nu == 0 reproduces the
    Gaussian path with sigma = alpha0 exactly under the same seed.
    """

    alpha0: float
    nu: float

    def validate(self) -> None:
        if not (self.alpha0 > 0.0 and math.isfinite(self.alpha0)):
            raise ValueError(f"alpha0 must be finite and > 0, got {self.alpha0}")
        if not (self.nu >= 0.0 and math.isfinite(self.nu)):
            raise ValueError(f"nu must be finite and >= 0, got {self.nu}")


ModelSpec = Union[GaussianModel, RegimeShiftModel, StochVolModel]


@dataclass
class ObservationSeries:
    """A simulated path x_0..x_T with its increments and optional truth.

    increments[i] is exactly values[i+1] - values[i]; truth[i], when
    present, is the volatility that generated increment i+1.
    """

    values: np.ndarray
    increments: np.ndarray
    truth: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.increments = np.asarray(self.increments, dtype=np.float64)
        if len(self.values) != len(self.increments) + 1:
            raise ValueError(
                f"values must have one more entry than increments, got "
                f"{len(self.values)} values and {len(self.increments)} increments"
            )
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=np.float64)
            if len(self.truth) != len(self.increments):
                raise ValueError("truth must have one entry per increment")

    @property
    def n_steps(self) -> int:
        return len(self.increments)

    def has_constant_truth(self) -> bool:
        """True when the recorded truth is compatible with a fixed sigma."""
        if self.truth is None or len(self.truth) == 0:
            return False
        return bool(np.all(self.truth == self.truth[0]))


def generate(spec: ModelSpec, n_steps: int, rng: RngStream) -> ObservationSeries:
    """Simulate n_steps observations of the given process, starting at x_0 = 0.

    The filters consume only increments, so the level is immaterial. The
    per-step volatility actually applied is recorded as the truth column.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    spec.validate()
    z = rng.substream(_STREAM_INCREMENTS).standard_normal(n_steps)

    if isinstance(spec, GaussianModel):
        vol = np.full(n_steps, spec.sigma)
    elif isinstance(spec, RegimeShiftModel):
        # increment t (1-based) uses sigma1 for t < t_star, sigma2 for t >= t_star
        t = np.arange(1, n_steps + 1)
        vol = np.where(t < spec.t_star, spec.sigma1, spec.sigma2)
    elif isinstance(spec, StochVolModel):
        zv = rng.substream(_STREAM_VOLATILITY).standard_normal(n_steps)
        vol = np.empty(n_steps)
        alpha = spec.alpha0
        for i in range(n_steps):
            vol[i] = alpha
            alpha = abs(alpha + spec.nu * zv[i])
    else:
        raise ValueError(f"unknown model spec {spec!r}")

    raw = vol * z
    values = np.concatenate([[0.0], np.cumsum(raw)])
    # Recompute increments from the stored path so the exact-difference
    # invariant holds despite accumulation rounding.
    increments = np.diff(values)
    return ObservationSeries(values=values, increments=increments, truth=vol)


def transition_density(dx, sigma):
    """Gaussian density of a zero-mean increment with per-step volatility sigma.

    Accepts scalar or array arguments (broadcasting).
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma <= 0.0) or not np.all(np.isfinite(sigma)):
        raise ValueError("sigma must be finite and > 0")
    dx = np.asarray(dx, dtype=np.float64)
    out = (_INV_SQRT_2PI / sigma) * np.exp(-(dx * dx) / (2.0 * sigma * sigma))
    if out.ndim == 0:
        return float(out)
    return out


def log_transition_density(dx, sigma):
    """Log of transition_density, usable far into the Gaussian tails."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma <= 0.0) or not np.all(np.isfinite(sigma)):
        raise ValueError("sigma must be finite and > 0")
    dx = np.asarray(dx, dtype=np.float64)
    out = -_LOG_SQRT_2PI - np.log(sigma) - (dx * dx) / (2.0 * sigma * sigma)
    if out.ndim == 0:
        return float(out)
    return out


def _fmt(x: float) -> str:
    """Full double precision (17 significant digits), deterministic."""
    return "%.17g" % x


def write_series_csv(series: ObservationSeries, path) -> None:
    """Write the series as `t,x,dx,truth` rows for t = 0..T.

    The t=0 row carries x_0 with empty dx and truth fields.
    """
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "x", "dx", "truth"])
        w.writerow([0, _fmt(series.values[0]), "", ""])
        truth = series.truth
        for i in range(series.n_steps):
            w.writerow(
                [
                    i + 1,
                    _fmt(series.values[i + 1]),
                    _fmt(series.increments[i]),
                    _fmt(truth[i]) if truth is not None else "",
                ]
            )


def read_series_csv(path) -> ObservationSeries:
    """Read a series written by write_series_csv."""
    values, increments, truth = [], [], []
    with open(path, "r", newline="") as f:
        r = csv.reader(f)
        header = next(r, None)
        if header is None or [h.strip() for h in header[:4]] != ["t", "x", "dx", "truth"]:
            raise ValueError(f"{path}: expected header 't,x,dx,truth'")
        for row in r:
            if not row or row[0].startswith("#"):
                continue
            t, x, dx, tr = (row + ["", "", "", ""])[:4]
            values.append(float(x))
            if int(t) > 0:
                increments.append(float(dx))
                truth.append(float(tr) if tr != "" else math.nan)
    if not values:
        raise ValueError(f"{path}: no data rows")
    truth_arr = np.asarray(truth)
    has_truth = len(truth_arr) > 0 and not np.any(np.isnan(truth_arr))
    return ObservationSeries(
        values=np.asarray(values),
        increments=np.asarray(increments),
        truth=truth_arr if has_truth else None,
    )
