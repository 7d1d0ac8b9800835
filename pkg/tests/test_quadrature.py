import math

import numpy as np
import pytest

from cutadvect.cutgeom import (polygon_quadrature, segment_quadrature,
                               triangle_quadrature)

UNIT_TRI = ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))


def unit_triangle_monomial(a, b):
    """Exact integral of x^a y^b over the unit triangle."""
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def test_centroid_rule():
    pts, wts = triangle_quadrature(*UNIT_TRI, order=1)
    assert pts == [pytest.approx((1 / 3, 1 / 3))]
    assert wts == [pytest.approx(0.5)]


def test_two_point_gauss_on_x_squared():
    pts, wts, length = segment_quadrature((0.0, 0.0), (1.0, 0.0), order=2)
    assert length == pytest.approx(1.0)
    integral = sum(w * x[0] ** 2 for x, w in zip(pts, wts))
    assert integral == pytest.approx(1 / 3, abs=1e-15)


def test_order2_rule_on_xy():
    pts, wts = triangle_quadrature(*UNIT_TRI, order=2)
    integral = sum(w * x * y for (x, y), w in zip(pts, wts))
    assert integral == pytest.approx(1 / 24, abs=1e-15)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_triangle_exactness_up_to_order(order):
    pts, wts = triangle_quadrature(*UNIT_TRI, order=order)
    for a in range(order + 1):
        for b in range(order + 1 - a):
            integral = sum(w * x ** a * y ** b for (x, y), w in zip(pts, wts))
            assert integral == pytest.approx(unit_triangle_monomial(a, b),
                                             abs=1e-14), (a, b)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_triangle_rule_affine_invariance(order):
    rng = np.random.default_rng(5)
    for _ in range(20):
        tri = [tuple(rng.uniform(-2, 2, size=2)) for _ in range(3)]
        pts, wts = triangle_quadrature(*tri, order=order)
        area = 0.5 * abs(
            (tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1])
            - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]))
        assert sum(wts) == pytest.approx(area, rel=1e-13)
        # linear functions integrate through the centroid
        cx = sum(p[0] for p in tri) / 3
        cy = sum(p[1] for p in tri) / 3
        lin = sum(w * (2.0 * x - 0.7 * y + 0.3) for (x, y), w in zip(pts, wts))
        assert lin == pytest.approx(area * (2.0 * cx - 0.7 * cy + 0.3), rel=1e-12)


@pytest.mark.parametrize("npts", [1, 2, 3])
def test_segment_gauss_exactness(npts):
    a, b = (0.3, -0.4), (1.1, 0.9)
    length = math.hypot(b[0] - a[0], b[1] - a[1])
    pts, wts, seg_len = segment_quadrature(a, b, order=npts)
    assert seg_len == pytest.approx(length)
    for deg in range(2 * npts):
        # integrate the arclength-parametrized monomial t^deg exactly
        exact = length / (deg + 1)
        integral = 0.0
        for (x, y), w in zip(pts, wts):
            t = math.hypot(x - a[0], y - a[1]) / length
            integral += w * t ** deg
        assert integral == pytest.approx(exact, rel=1e-13), deg


def test_polygon_quadrature_concatenates_triangles():
    tris = [((0, 0), (1, 0), (1, 1)), ((0, 0), (1, 1), (0, 1))]
    rule = polygon_quadrature(tris, order=1)
    assert len(rule) == 2
    assert sum(w for _, w in rule) == pytest.approx(1.0)


def test_unsupported_order_rejected():
    with pytest.raises(ValueError):
        triangle_quadrature(*UNIT_TRI, order=4)
    with pytest.raises(ValueError):
        segment_quadrature((0, 0), (1, 0), order=0)
