import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scatter_ab.domain import (
    DomainError, arc_length_in_ball, ball_growth_constant, boundary_quadrature, build_domain,
    load_domain, polyline_quadrature, rasterize,
)


def test_builtin_square_geometry(square):
    assert square.area == pytest.approx(1.0)
    assert square.perimeter == pytest.approx(4.0)
    assert square.bbox == (0.0, 0.0, 1.0, 1.0)


def test_lshape_area(lshape):
    x0, y0, x1, y1 = lshape.bbox
    assert 0 < lshape.area < (x1 - x0) * (y1 - y0)


def test_clockwise_input_is_reoriented():
    d = build_domain([(0, 0), (0, 1), (1, 1), (1, 0)])
    assert d.counterclockwise
    assert d.vertices[0].tolist() == [1.0, 0.0]
    assert d.area == pytest.approx(1.0)
    z = d.edges
    signed = 0.5 * np.sum(np.imag(np.conj(z[:, 0]) * z[:, 1]))
    assert signed > 0


@pytest.mark.parametrize("verts", [
    [(0, 0), (1, 0)],
    [(0, 0), (1, 0), (1, 0), (0, 1)],
    [(0, 0), (1, 0), (2, 0)],
    [(0, 0), (1, 1), (1, 0), (0, 1)],
])
def test_invalid_polygons_rejected(verts):
    with pytest.raises(DomainError):
        build_domain(verts)


def test_load_domain_from_json(tmp_path):
    path = tmp_path / "tri.json"
    path.write_text(json.dumps({"vertices": [[0, 0], [2, 0], [0, 1]]}))
    assert load_domain(str(path)).area == pytest.approx(1.0)
    with pytest.raises(DomainError):
        load_domain("no-such-domain")


def test_contains_edge_points_are_outside(square):
    pts = np.array([0.5 + 0.5j, 0.0 + 0.5j, 1.5 + 0.5j, 0.999 + 0.001j])
    assert square.contains(pts).tolist() == [True, False, False, True]


def test_rasterize_sizes(square):
    g = rasterize(square, 64, 2.0)
    assert g.shape == (64, 64)
    assert g.h == pytest.approx(2.0 / 64)
    assert g.n_masked == 32 * 32
    assert g.masked_area == pytest.approx(1.0)
    with pytest.raises(ValueError):
        rasterize(square, 4)
    with pytest.raises(ValueError):
        rasterize(square, 16, 0.5)


def test_interior_grid_crops_to_mask(square):
    g = rasterize(square, 32, 3.0)
    sub = g.interior_grid()
    assert sub.n_masked == g.n_masked
    assert sub.mask.all()
    sx, sy = sub.lattice_shift(g)
    assert (sx, sy) == g.mask_bounds()[:2]


def test_boundary_quadrature_length(lshape):
    bq = boundary_quadrature(lshape, 50.0)
    assert bq.length == pytest.approx(lshape.perimeter, rel=1e-12)
    assert bq.max_spacing <= 1 / 50 + 1e-12
    assert np.allclose(np.abs(bq.tangents), 1.0)
    assert np.sum(bq.dz()) == pytest.approx(0, abs=1e-12)


def test_polyline_is_open():
    bq = polyline_quadrature([(0, 0), (1, 0), (1, 1)], 10.0)
    assert not bq.closed
    assert bq.length == pytest.approx(2.0)


def test_arc_length_in_ball_exact():
    seg = np.array([[0.0 + 0j, 1.0 + 0j]])
    assert arc_length_in_ball(seg, 0.5 + 0.3j, 0.5) == pytest.approx(0.8)
    assert arc_length_in_ball(seg, 0.5 + 2j, 0.5) == 0.0
    assert arc_length_in_ball(seg, 0.5, 10.0) == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 2), st.floats(-1, 2), st.floats(0.01, 3))
def test_arc_length_bounded_by_polygon_perimeter(x, y, r):
    sq = load_domain("square")
    ell = arc_length_in_ball(sq.edges, complex(x, y), r)
    assert 0 <= ell <= min(sq.perimeter, 8 * r) + 1e-12


def test_ball_growth_constant_square(square):
    bq = boundary_quadrature(square, 40.0)
    m1 = ball_growth_constant(bq, 16, 8)
    m2 = ball_growth_constant(bq, 64, 16)
    # small balls on an edge give 2; the best ball (radius 1/sqrt 2 at the
    # centre) holds the whole perimeter, ratio 4 sqrt 2
    assert 2.0 - 1e-9 <= m1 <= m2 <= 4 * math.sqrt(2) + 1e-9
