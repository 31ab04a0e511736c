import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reefloop.geometry import BBox, center_error, iou, normalized_center_error


def raster_iou(a: BBox, b: BBox) -> float:
    """Pixel-counting oracle for integer-coordinate boxes.

    Rasterizes both boxes on an integer grid (box (x,y,w,h) covers columns
    x..x+w-1 and rows y..y+h-1) and counts intersection / union pixels.
    """
    x0 = int(min(a.x, b.x))
    y0 = int(min(a.y, b.y))
    x1 = int(max(a.x2, b.x2))
    y1 = int(max(a.y2, b.y2))
    grid_a = np.zeros((y1 - y0, x1 - x0), dtype=bool)
    grid_b = np.zeros_like(grid_a)
    grid_a[int(a.y) - y0 : int(a.y2) - y0, int(a.x) - x0 : int(a.x2) - x0] = True
    grid_b[int(b.y) - y0 : int(b.y2) - y0, int(b.x) - x0 : int(b.x2) - x0] = True
    union = np.logical_or(grid_a, grid_b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(grid_a, grid_b).sum()) / float(union)


def int_boxes(rng: np.random.Generator, n: int) -> list[tuple[BBox, BBox]]:
    pairs = []
    for _ in range(n):
        xa, ya, xb, yb = rng.integers(0, 60, size=4)
        wa, ha, wb, hb = rng.integers(1, 50, size=4)
        pairs.append((BBox(int(xa), int(ya), int(wa), int(ha)),
                      BBox(int(xb), int(yb), int(wb), int(hb))))
    return pairs


valid_box = st.builds(
    BBox,
    x=st.floats(-500, 500),
    y=st.floats(-500, 500),
    w=st.floats(0.1, 400),
    h=st.floats(0.1, 400),
)


class TestIoU:
    def test_identical(self):
        b = BBox(0, 0, 10, 10)
        assert iou(b, b) == 1.0

    def test_disjoint(self):
        assert iou(BBox(0, 0, 10, 10), BBox(20, 20, 10, 10)) == 0.0

    def test_half_overlap(self):
        # intersection 5x10=50, union 100+100-50=150
        got = iou(BBox(0, 0, 10, 10), BBox(5, 0, 10, 10))
        assert got == pytest.approx(50 / 150, abs=1e-12)
        assert got == pytest.approx(raster_iou(BBox(0, 0, 10, 10), BBox(5, 0, 10, 10)), abs=1e-9)

    def test_empty_marker(self):
        b = BBox(0, 0, 10, 10)
        assert iou(None, b) == 0.0
        assert iou(b, None) == 0.0
        assert iou(None, None) == 0.0

    def test_matches_raster_oracle(self):
        rng = np.random.default_rng(11)
        for a, b in int_boxes(rng, 300):
            assert iou(a, b) == pytest.approx(raster_iou(a, b), abs=1e-9)

    @given(valid_box, valid_box)
    def test_symmetric(self, a, b):
        assert iou(a, b) == iou(b, a)

    @given(valid_box)
    def test_self_is_one(self, a):
        assert iou(a, a) == 1.0

    @given(valid_box, valid_box, st.floats(-100, 100), st.floats(-100, 100))
    def test_translation_invariant(self, a, b, du, dv):
        before = iou(a, b)
        after = iou(a.translated(du, dv), b.translated(du, dv))
        assert after == pytest.approx(before, abs=1e-9)

    @given(valid_box, valid_box, st.floats(0.1, 10))
    def test_scale_invariant(self, a, b, s):
        assert iou(a.scaled(s, s), b.scaled(s, s)) == pytest.approx(iou(a, b), abs=1e-9)

    @given(valid_box, valid_box)
    def test_bounded(self, a, b):
        assert 0.0 <= iou(a, b) <= 1.0


class TestCenterError:
    def test_three_four_five(self):
        # centers (100,100) and (103,104)
        pred = BBox(95, 95, 10, 10)
        gt = BBox(98, 99, 10, 10)
        assert center_error(pred, gt) == pytest.approx(5.0, abs=1e-12)

    def test_identity(self):
        b = BBox(3, 4, 7, 9)
        assert center_error(b, b) == 0.0

    def test_empty_pred_is_inf(self):
        assert center_error(None, BBox(0, 0, 10, 10)) == math.inf

    @given(valid_box, valid_box, st.floats(-100, 100), st.floats(-100, 100))
    def test_translation_invariant(self, a, b, du, dv):
        before = center_error(a, b)
        after = center_error(a.translated(du, dv), b.translated(du, dv))
        assert after == pytest.approx(before, abs=1e-6)

    @given(valid_box, valid_box, st.floats(0.1, 10))
    def test_scales_linearly(self, a, b, s):
        assert center_error(a.scaled(s, s), b.scaled(s, s)) == pytest.approx(
            s * center_error(a, b), rel=1e-9, abs=1e-9
        )


class TestNormalizedCenterError:
    def test_formula(self):
        # gt 50x25, pred offset (5,5) from gt center: sqrt(0.1^2 + 0.2^2)
        gt = BBox(0, 0, 50, 25)
        pred = BBox(5, 5, 50, 25)
        assert normalized_center_error(pred, gt) == pytest.approx(
            math.sqrt(0.1**2 + 0.2**2), abs=1e-12
        )

    def test_identity(self):
        b = BBox(10, 10, 30, 20)
        assert normalized_center_error(b, b) == 0.0

    def test_halves_when_gt_doubles(self):
        gt1 = BBox(0, 0, 50, 25)
        gt2 = BBox(0, 0, 100, 50)
        pred1 = BBox(5, 5, 50, 25)
        # same pixel offset of the center against a gt twice as large
        pred2 = BBox(
            gt2.center.u - pred1.w / 2 + 5 - 0,  # center offset (5,5) again
            gt2.center.v - pred1.h / 2 + 5,
            pred1.w,
            pred1.h,
        )
        e1 = normalized_center_error(pred1, gt1)
        e2 = normalized_center_error(pred2, gt2)
        assert e2 == pytest.approx(e1 / 2, abs=1e-12)

    def test_empty_pred_is_inf(self):
        assert normalized_center_error(None, BBox(0, 0, 10, 10)) == math.inf

    @given(valid_box, valid_box, st.floats(0.1, 10))
    def test_scale_invariant(self, a, b, s):
        assert normalized_center_error(a.scaled(s, s), b.scaled(s, s)) == pytest.approx(
            normalized_center_error(a, b), rel=1e-9, abs=1e-9
        )


class TestBBox:
    def test_validate_rejects_degenerate(self):
        with pytest.raises(ValueError):
            BBox(0, 0, 0, 10).validate()
        with pytest.raises(ValueError):
            BBox(0, 0, 10, -1).validate()
        with pytest.raises(ValueError):
            BBox(math.nan, 0, 10, 10).validate()

    def test_clip_inside(self):
        assert BBox(10, 10, 20, 20).clipped(100, 100) == BBox(10, 10, 20, 20)

    def test_clip_partial(self):
        assert BBox(-5, -5, 20, 20).clipped(100, 100) == BBox(0, 0, 15, 15)

    def test_clip_outside(self):
        assert BBox(200, 200, 10, 10).clipped(100, 100) is None
