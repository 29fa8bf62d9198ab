"""Measurement instruments for filter behaviour.

Four per-step quantities characterise what the filter is doing: the
fraction of exactly-zero weights (impoverishment), the probability mass a
single weight update pushes into the pre-update tails (a change
indicator), the total distance particles moved under the last kernel
application as carried through reselection, and the ensemble-average
additional noise (a model-adequacy indicator).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .benchmark import WeightedSample
from .engine import ParticleEnsemble

__all__ = [
    "DiagnosticsRecord",
    "zero_weight_proportion",
    "edge_mass",
    "realized_dispersion_total",
    "average_phi",
]


@dataclass
class DiagnosticsRecord:
    """Per-step outputs of one recorded filter step; None marks not-recorded."""

    t: int
    posterior_mean: Optional[float] = None
    posterior_variance: Optional[float] = None
    ks: Optional[float] = None
    zero_weight_prop: Optional[float] = None
    edge_mass_lo: Optional[float] = None
    edge_mass_hi: Optional[float] = None
    dispersion: Optional[float] = None
    avg_phi: Optional[float] = None


def zero_weight_proportion(ens: ParticleEnsemble) -> float:
    """Fraction of weights that are exactly zero (linear-domain mode only)."""
    if ens.log_weights is not None:
        raise ValueError("zero-weight proportion is not applicable to log-domain weights")
    return float(np.mean(ens.weights == 0.0))


def edge_mass(pre_update: WeightedSample, post_update: WeightedSample, p: float) -> tuple[float, float]:
    """Post-update probability mass in each pre-update p-tail.

    For the upper tail: find the lowest threshold whose at-or-above
    pre-update mass does not exceed p, then report the post-update mass at
    or above it; symmetrically for the lower tail. Particles at tied
    locations are ordered by index, and when even the extreme particle
    alone carries more than p the tail is empty and its mass is 0. Both
    tails are always computed, since the direction of a prospective change
    is unknown online.
    """
    if not (0.0 < p < 0.5):
        raise ValueError(f"quantile level p must lie in (0, 0.5), got {p}")
    if pre_update.points is not post_update.points and not np.array_equal(
        pre_update.points, post_update.points
    ):
        raise ValueError("pre- and post-update samples must share particle locations")
    order = np.argsort(pre_update.points, kind="stable")
    wpre = pre_update.weights[order]
    wpost = post_update.weights[order]

    # suffix[j] = pre-update mass of positions j..N-1 (suffix[N] = 0)
    suffix_pre = np.concatenate([np.cumsum(wpre[::-1])[::-1], [0.0]])
    j_hi = int(np.argmax(suffix_pre <= p))
    suffix_post = np.concatenate([np.cumsum(wpost[::-1])[::-1], [0.0]])
    hi = float(suffix_post[j_hi])

    # prefix[j] = pre-update mass of positions 0..j-1 (prefix[0] = 0)
    prefix_pre = np.concatenate([[0.0], np.cumsum(wpre)])
    j_lo = len(prefix_pre) - 1 - int(np.argmax(prefix_pre[::-1] <= p))
    prefix_post = np.concatenate([[0.0], np.cumsum(wpost)])
    lo = float(prefix_post[j_lo])

    return min(max(lo, 0.0), 1.0), min(max(hi, 0.0), 1.0)


def realized_dispersion_total(ens: ParticleEnsemble) -> float:
    """Total per-particle kernel displacement carried by the ensemble."""
    if ens.last_dispersion is None:
        return 0.0
    return float(ens.last_dispersion.sum())


def average_phi(ens: ParticleEnsemble) -> float:
    """Ensemble mean of the per-particle noise parameter."""
    if ens.phis is None:
        raise ValueError("ensemble carries no noise parameter")
    return float(ens.phis.mean())
