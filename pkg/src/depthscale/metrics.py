"""Evaluation metrics between predicted and ground-truth metric depth.

Standard monocular-depth error set: mean absolute relative error, RMSE,
RMSE in natural-log space, mean absolute log10 error, and the three
threshold accuracies delta < 1.25^i. Pixels count when both grids are
valid and the ground-truth depth lies inside the evaluation range;
predictions are clamped to the range minimum before logarithms (rather
than excluded) so pixel counts stay comparable across methods. Callers
should clamp predictions themselves if negative values are possible;
the rescaling pipeline always does.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoOverlap
from .grids import DepthGrid

CSV_COLUMNS = (
    "image_id",
    "method",
    "region_aware",
    "n_samples",
    "seed",
    "abs_rel",
    "rmse",
    "rmse_log",
    "log10",
    "d1",
    "d2",
    "d3",
    "n_valid",
)


@dataclass(frozen=True)
class MetricReport:
    """One evaluation over the overlapping valid pixels."""

    abs_rel: float
    rmse: float
    rmse_log: float
    log10: float
    delta1: float
    delta2: float
    delta3: float
    valid_pixel_count: int

    def row(self, image_id: str, method: str, region_aware: bool, n_samples: int, seed: int) -> dict:
        """Flat record matching CSV_COLUMNS, for benchmark output."""
        return {
            "image_id": image_id,
            "method": method,
            "region_aware": str(bool(region_aware)).lower(),
            "n_samples": n_samples,
            "seed": seed,
            "abs_rel": self.abs_rel,
            "rmse": self.rmse,
            "rmse_log": self.rmse_log,
            "log10": self.log10,
            "d1": self.delta1,
            "d2": self.delta2,
            "d3": self.delta3,
            "n_valid": self.valid_pixel_count,
        }


def evaluate(
    pred: DepthGrid, gt: DepthGrid, depth_range: tuple[float, float] = (0.001, 10.0)
) -> MetricReport:
    """Compute the metric set over pixels valid in both grids.

    Range gating applies to ground truth only: gt must lie in
    [depth_range[0], depth_range[1]]. Raises NoOverlap when no pixel
    qualifies.
    """
    if pred.shape != gt.shape:
        raise DimensionMismatch(f"prediction shape {pred.shape} != ground truth shape {gt.shape}")
    lo, hi = depth_range
    mask = pred.valid & gt.valid & (gt.values >= lo) & (gt.values <= hi)
    count = int(mask.sum())
    if count == 0:
        raise NoOverlap("no pixel is valid in both grids within the evaluation range")
    p = pred.values[mask]
    g = gt.values[mask]
    diff = p - g
    abs_rel = float(np.mean(np.abs(diff) / g))
    rmse = float(np.sqrt(np.mean(diff**2)))
    p_log = np.maximum(p, lo)
    rmse_log = float(np.sqrt(np.mean((np.log(p_log) - np.log(g)) ** 2)))
    log10 = float(np.mean(np.abs(np.log10(p_log) - np.log10(g))))
    ratio = np.maximum(p / g, g / p)
    delta1 = float(np.mean(ratio < 1.25))
    delta2 = float(np.mean(ratio < 1.25**2))
    delta3 = float(np.mean(ratio < 1.25**3))
    return MetricReport(
        abs_rel=abs_rel,
        rmse=rmse,
        rmse_log=rmse_log,
        log10=log10,
        delta1=delta1,
        delta2=delta2,
        delta3=delta3,
        valid_pixel_count=count,
    )
