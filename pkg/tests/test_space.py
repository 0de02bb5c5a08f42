import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuspgrowth import space as sp
from cuspgrowth.errors import UsageError
from cuspgrowth.models import GroupSpec, build_model
from cuspgrowth.space import HalfPlanePoint, VertexPoint

from .conftest import PSL_GENS

pts = st.builds(lambda x, y: HalfPlanePoint(x, y), st.floats(-3, 3), st.floats(0.1, 8))


def test_distance_examples(psl_small):
    i = HalfPlanePoint(0, 1)
    assert sp.distance(psl_small, i, i) == 0
    assert math.isclose(sp.distance(psl_small, i, HalfPlanePoint(0, 2)), math.log(2))
    assert math.isclose(sp.distance(psl_small, i, HalfPlanePoint(1, 1)), math.acosh(1.5))


def test_mixed_backends_rejected(psl_small, tree):
    with pytest.raises(UsageError):
        sp.distance(psl_small, HalfPlanePoint(0, 1), VertexPoint(()))
    with pytest.raises(UsageError):
        sp.distance(tree, HalfPlanePoint(0, 1), VertexPoint(()))


def test_gromov_products(psl_small, tree):
    i, two_i = HalfPlanePoint(0, 1), HalfPlanePoint(0, 2)
    assert math.isclose(sp.gromov_product(psl_small, two_i, two_i, i), math.log(2))
    o = tree.basepoint
    a = tree.orbit_point(tree.canonical("a"))
    b = tree.orbit_point(tree.canonical("b"))
    assert sp.gromov_product(tree, a, b, o) == 0
    assert sp.gromov_product(tree, a, a, o) == sp.distance(tree, a, o)


def test_geodesics(psl_small, cusped):
    i = HalfPlanePoint(0, 1)
    path = sp.geodesic(psl_small, i, i, 0.1)
    assert len(path) == 1 and path.length == 0
    g = sp.geodesic(psl_small, i, HalfPlanePoint(0, 4), 0.05)
    mid = psl_small.point_along(i, HalfPlanePoint(0, 4), g.length / 2)
    assert abs(mid.z - 2j) < 1e-12
    x = cusped.basepoint
    y = cusped.orbit_point(cusped.canonical("a^4 b"))
    gp = sp.geodesic(cusped, x, y)
    assert gp.length == sp.distance(cusped, x, y)
    for u, v in zip(gp.points, gp.points[1:]):
        assert sp.distance(cusped, u, v) == 1


@settings(max_examples=25, deadline=None)
@given(pts, pts)
def test_geodesic_length_is_distance(x, y):
    model = build_model(GroupSpec.half_plane(PSL_GENS, ["T"], 1.0, 6))
    path = sp.geodesic(model, x, y, 0.05)
    assert math.isclose(path.length, sp.distance(model, x, y), rel_tol=1e-9, abs_tol=1e-12)
    steps = [model.distance(a, b) for a, b in zip(path.points, path.points[1:])]
    assert all(s <= 0.05 + 1e-9 for s in steps)


def test_tree_is_zero_hyperbolic(tree):
    sample = [tree.orbit_point(tree.canonical(w)) for w in ("e", "a b", "b^-1 a", "a^2", "b a^-1 b")]
    assert sp.estimate_hyperbolicity(tree, sample) == 0


def test_collinear_triangle_has_no_defect(psl_small):
    pts_ = [HalfPlanePoint(0, 1), HalfPlanePoint(0, 3), HalfPlanePoint(0, 7)]
    assert sp.triangle_defect(psl_small, *pts_) <= 1e-9


def test_half_plane_sampled_delta_is_bounded(psl_small):
    rng = np.random.default_rng(5)
    sample = []
    for _ in range(7):
        r, th = 5 * math.sqrt(rng.uniform()), rng.uniform(0, 2 * math.pi)
        w = math.tanh(r / 2) * complex(math.cos(th), math.sin(th))
        sample.append(HalfPlanePoint.of(1j * (1 + w) / (1 - w)))
    delta = sp.estimate_hyperbolicity(psl_small, sample, step=0.1)
    assert 0 <= delta <= 4
    for quad in itertools.combinations(sample, 4):
        assert sp.four_point_defect(psl_small, *quad) <= delta + 1e-9


def test_projection_to_horoball():
    model = build_model(GroupSpec.half_plane(PSL_GENS, ["T"], 2.0, 6))
    U = model.horoball(1, 0)                         # {Im >= 2}
    i = HalfPlanePoint(0, 1)
    p = sp.project(model, i, U)
    assert abs(p.z - 2j) < 1e-12
    assert sp.project(model, p, U) == p              # idempotent
    assert sp.project(model, HalfPlanePoint(0, 5), U) == HalfPlanePoint(0, 5)


def test_projection_to_point_set_breaks_ties(tree):
    o = tree.basepoint
    cand = [tree.orbit_point(tree.canonical(w)) for w in ("b", "a", "a b")]
    assert sp.project(tree, o, cand) == min(cand[:2], key=tree.point_key)


def test_dist_to_neighborhood(psl_small):
    i = HalfPlanePoint(0, 1)
    U1 = psl_small.horoball(1, 1)
    d, inside = sp.dist_to_neighborhood(psl_small, i, U1, 0.5)
    assert math.isclose(d, math.log(2)) and not inside
    assert sp.dist_to_neighborhood(psl_small, i, psl_small.horoball(1, 0), 0.0) == (0.0, True)
    assert sp.dist_to_neighborhood(psl_small, HalfPlanePoint(0, 3), psl_small.horoball(1, 0), 0) == (0.0, True)


def test_contraction(psl_small):
    # a geodesic far from U_inf projects to a set of bounded diameter
    U = psl_small.horoball(1, 0)
    x, y = HalfPlanePoint(-3, 0.05), HalfPlanePoint(3, 0.05)
    path = sp.geodesic(psl_small, x, y, 0.05)
    far = [p for p in path.points if psl_small.horoball_distance(p, U) > 1.0]
    sub = sp.PathSample(tuple(far), tuple(float(k) for k in range(len(far))), 1.0)
    assert sp.contraction_diameter(psl_small, sub, U) < 4.0


def test_path_sample_validation():
    with pytest.raises(UsageError):
        sp.PathSample((HalfPlanePoint(0, 1),), (0.5,), 0.1)
    with pytest.raises(UsageError):
        sp.PathSample((HalfPlanePoint(0, 1),), (0.0,), 0.0)
