import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depthscale.errors import NoOverlap
from depthscale.grids import DepthGrid
from depthscale.metrics import evaluate

RANGE = (0.001, 10.0)


def grid(values, valid=None):
    return DepthGrid(np.atleast_2d(np.asarray(values, dtype=np.float64)), valid)


def naive_evaluate(pred, gt, depth_range):
    """Per-pixel loop reference with exact (fsum) accumulation."""
    lo, hi = depth_range
    abs_rel, sq, sq_log, l10 = [], [], [], []
    hits = [0, 0, 0]
    count = 0
    for r in range(pred.height):
        for c in range(pred.width):
            if not (pred.valid[r, c] and gt.valid[r, c]):
                continue
            g = gt.values[r, c]
            if g < lo or g > hi:
                continue
            count += 1
            p = pred.values[r, c]
            abs_rel.append(abs(p - g) / g)
            sq.append((p - g) ** 2)
            p_log = max(p, lo)
            sq_log.append((math.log(p_log) - math.log(g)) ** 2)
            l10.append(abs(math.log10(p_log) - math.log10(g)))
            ratio = max(p / g, g / p)
            for i in range(3):
                hits[i] += ratio < 1.25 ** (i + 1)
    if count == 0:
        raise NoOverlap("empty")
    return {
        "abs_rel": math.fsum(abs_rel) / count,
        "rmse": math.sqrt(math.fsum(sq) / count),
        "rmse_log": math.sqrt(math.fsum(sq_log) / count),
        "log10": math.fsum(l10) / count,
        "d1": hits[0] / count,
        "d2": hits[1] / count,
        "d3": hits[2] / count,
        "n": count,
    }


def test_perfect_prediction():
    g = grid([[1.0, 2.0], [3.0, 4.0]])
    report = evaluate(g, g, RANGE)
    assert report.abs_rel == 0.0
    assert report.rmse == 0.0
    assert report.delta1 == report.delta2 == report.delta3 == 1.0


def test_hand_computed_pair():
    report = evaluate(grid([2.0, 4.0]), grid([1.0, 4.0]), RANGE)
    assert report.abs_rel == 0.5
    assert report.rmse == pytest.approx(math.sqrt(0.5), rel=1e-15)
    assert report.delta1 == 0.5  # ratio 2 fails, ratio 1 passes
    assert report.valid_pixel_count == 2


def test_invalid_gt_pixels_excluded():
    gt_values = np.array([[1.0, 0.0]])
    gt = DepthGrid(gt_values, gt_values != 0.0)
    report = evaluate(grid([1.0, 5.0]), gt, RANGE)
    assert report.valid_pixel_count == 1
    assert report.abs_rel == 0.0


def test_range_gating_applies_to_gt_only():
    report = evaluate(grid([20.0, 2.0]), grid([20.0, 2.0]), RANGE)
    assert report.valid_pixel_count == 1  # gt 20 m is outside the range


def test_no_overlap():
    with pytest.raises(NoOverlap):
        evaluate(grid([1.0]), grid([50.0]), RANGE)


def test_prediction_clamped_before_logs():
    report = evaluate(grid([0.0005]), grid([1.0]), RANGE)
    assert math.isfinite(report.rmse_log)
    assert report.log10 == pytest.approx(3.0, rel=1e-12)  # log10(1 / 0.001)


def test_delta_one_for_scales_inside_first_threshold():
    gt = grid(np.linspace(0.5, 8.0, 24).reshape(4, 6))
    for c in (0.81, 1.0, 1.24):
        report = evaluate(grid(c * gt.values), gt, RANGE)
        assert report.delta1 == 1.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 12), st.integers(1, 12))
def test_matches_naive_loop(seed, h, w):
    rng = np.random.default_rng(seed)
    pred = DepthGrid(rng.uniform(0.01, 12.0, (h, w)), rng.random((h, w)) > 0.1)
    gt = DepthGrid(rng.uniform(0.01, 12.0, (h, w)), rng.random((h, w)) > 0.1)
    try:
        want = naive_evaluate(pred, gt, RANGE)
    except NoOverlap:
        with pytest.raises(NoOverlap):
            evaluate(pred, gt, RANGE)
        return
    got = evaluate(pred, gt, RANGE)
    assert got.valid_pixel_count == want["n"]
    assert abs(got.abs_rel - want["abs_rel"]) < 1e-12
    assert abs(got.rmse - want["rmse"]) < 1e-12
    assert abs(got.rmse_log - want["rmse_log"]) < 1e-12
    assert abs(got.log10 - want["log10"]) < 1e-12
    assert got.delta1 == want["d1"]
    assert got.delta2 == want["d2"]
    assert got.delta3 == want["d3"]
    # monotone thresholds hold for every input
    assert got.delta1 <= got.delta2 <= got.delta3
