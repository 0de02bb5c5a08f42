import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuspgrowth import boundary as bd
from cuspgrowth import enumeration as en
from cuspgrowth import space as sp
from cuspgrowth.errors import HorizonError, UsageError
from cuspgrowth.models import GroupSpec, build_model
from cuspgrowth.space import HalfPlanePoint, VertexPoint

from .conftest import PSL_GENS

T = (1, 1, 0, 1)
S = (0, -1, 1, 0)
GOLDEN = (1 + math.sqrt(5)) / 2


def _el(model, m):
    return model.canonical(m)


def _mul(model, *ms):
    out = model.identity
    for m in ms:
        out = model.multiply(out, model.canonical(m))
    return out


# -- shadows -------------------------------------------------------------------------

def test_identity_shadow_is_everything(psl_small, tree):
    for x in (-3.0, 0.0, 0.5, math.inf, GOLDEN):
        assert bd.shadow_contains(psl_small, bd.boundary_point(psl_small, x), psl_small.identity, 0.0)
    far = tree.orbit_point(tree.canonical("b a b a b a"))
    assert bd.shadow_contains(tree, bd.boundary_point(tree, far), tree.identity, 0.0)


def test_vertical_ray_shadow_of_t(psl_small):
    # d(iy, 1 + i) along the ray, minimized by direct search
    ys = np.linspace(1, 10, 200001)
    dmin = float(np.min(np.arccosh(1 + (1 + (ys - 1) ** 2) / (2 * ys))))
    assert dmin == pytest.approx(math.asinh(1.0), abs=1e-9)   # distance to the line Re z = 0
    inf = bd.boundary_point(psl_small, math.inf)
    assert bd.shadow_contains(psl_small, inf, _el(psl_small, T), 2.0)
    assert bd.shadow_contains(psl_small, inf, _el(psl_small, T), dmin + 1e-6)
    assert not bd.shadow_contains(psl_small, inf, _el(psl_small, T), dmin - 1e-6)


def test_zero_radius_shadow_misses_generic_points(psl_small):
    g = _mul(psl_small, T, S, T)
    hits = [bd.shadow_contains(psl_small, bd.boundary_point(psl_small, x), g, 0.0)
            for x in np.linspace(-4, 4, 37) + 0.0123]
    assert not any(hits)


def test_shadow_agrees_with_arc_region(psl_small):
    g = _mul(psl_small, T, S, T, T)
    xs = np.linspace(-3, 3, 601) + 0.0017
    arc = bd.Shadow(g, 1.5).contains_xi(psl_small, xs)
    ray = np.array([bd.shadow_contains(psl_small, bd.BoundaryPoint(float(x)), g, 1.5) for x in xs])
    assert np.array_equal(arc, ray)
    assert arc.any() and not arc.all()


def test_graph_boundary_points_respect_horizon(tree):
    with pytest.raises(HorizonError):
        bd.boundary_point(tree, tree.orbit_point(tree.canonical("a")))
    with pytest.raises(UsageError):
        bd.boundary_point(tree, 1.5)


# -- transition points ------------------------------------------------------------------

def test_cocompact_all_transition(psl_cocompact):
    path = sp.geodesic(psl_cocompact, HalfPlanePoint(0, 1), HalfPlanePoint(3, 0.2), 0.1)
    assert all(f for _, f in bd.transition_points(psl_cocompact, path, bd.TransitionParams()))


def test_vertical_path_deep_points(psl_small):
    params = bd.TransitionParams(eps=0.1, R=1.0)
    path = sp.geodesic(psl_small, HalfPlanePoint(0, 1), HalfPlanePoint(0, 64), 0.01)
    _, deep = bd.deep_matrix(psl_small, path, params, horoballs=[(1.0, 0.0, 4.0)])
    heights = np.array([p.im for p in path.points])
    deep = deep[:, 0]
    assert deep[(heights >= 10) & (heights <= 32)].all()
    assert not deep[heights <= 8].any()
    threshold = 4 * math.exp(-0.1) * math.e
    assert heights[deep].min() == pytest.approx(threshold, rel=0.02)


def test_step_must_resolve_r(psl_small):
    path = sp.geodesic(psl_small, HalfPlanePoint(0, 1), HalfPlanePoint(0, 64), 0.5)
    with pytest.raises(UsageError):
        bd.deep_matrix(psl_small, path, bd.TransitionParams(eps=0.1, R=1.0))


def test_entry_of_deep_segment_is_transition(psl_small):
    params = bd.TransitionParams()
    assert params.R > psl_small.bounded_intersection_diameter(params.eps)
    path = sp.geodesic(psl_small, HalfPlanePoint(0.3, 0.05), HalfPlanePoint(0.3, 200), 0.1)
    flags = bd.transition_points(psl_small, path, params)
    keys, deep = bd.deep_matrix(psl_small, path, params)
    k = keys.index((1, 0))
    entry = int(np.argmax([p.im >= math.exp(-params.eps) - 1e-12 for p in path.points]))
    assert flags[entry][1]
    assert deep[-1, k] and not flags[-1][1]


# -- partial shadows ------------------------------------------------------------------

def test_partial_shadow_subset_and_cocompact_equality(psl_small, psl_cocompact):
    params = bd.TransitionParams(r=2.0)
    xs = np.linspace(-2.5, 2.5, 251) + 0.003
    for g in (_mul(psl_small, T, S), _mul(psl_small, S, T, T), _mul(psl_small, T, T, S, T)):
        plain = bd.Shadow(g, 2.0).contains_xi(psl_small, xs)
        part = bd.PartialShadow(g, params).contains_xi(psl_small, xs)
        assert not (part & ~plain).any()
        assert np.array_equal(bd.Shadow(g, 2.0).contains_xi(psl_cocompact, xs),
                              bd.PartialShadow(g, params).contains_xi(psl_cocompact, xs))


def test_ray_inside_horoball_is_excluded(psl_small):
    params = bd.TransitionParams(eps=1.0, R=4.0, r=3.0)
    g = _el(psl_small, (1, 5, 0, 1))                       # g o = 5 + i on the horosphere of U_inf
    inf = bd.boundary_point(psl_small, math.inf)
    assert bd.shadow_contains(psl_small, inf, g, params.r)
    assert not bd.partial_shadow_contains(psl_small, inf, g, params)
    ray = sp.geodesic(psl_small, HalfPlanePoint(0, 1), HalfPlanePoint(0, 1e5), 0.1)
    assert not any(f for _, f in bd.transition_points(psl_small, ray, params))


def test_graph_partial_shadow_subset(cusped):
    params = bd.TransitionParams(eps=1.0, R=2.0, r=1.0)
    g = cusped.canonical("b a")
    for w in ("b a b a b a", "b a^4 b a b", "b a b^-1 a b a", "a b a b a b"):
        xi = bd.boundary_point(cusped, cusped.orbit_point(cusped.canonical(w)))
        if bd.partial_shadow_contains(cusped, xi, g, params):
            assert bd.shadow_contains(cusped, xi, g, params.r)


# -- cones ------------------------------------------------------------------------------

def test_identity_cone_is_annulus(psl_small):
    for n in (2, 4, 6):
        assert bd.cone_members(psl_small, psl_small.identity, 2.0, n) == \
            en.annulus(psl_small, en.AnnulusQuery(n, 1.0))


def test_cone_inclusions(psl_small):
    params = bd.TransitionParams()
    for g in (_el(psl_small, T), _mul(psl_small, S, T)):
        for n in (3, 6):
            ann = en.annulus(psl_small, en.AnnulusQuery(n, 1.0, g))
            cone = bd.cone_members(psl_small, g, params.r, n)
            part = bd.partial_cone_members(psl_small, g, params, n)
            assert part <= cone <= ann


def test_tree_cone_is_words_starting_with_a(tree):
    a = tree.canonical("a")
    for n in (2, 4):
        cone = bd.cone_members(tree, a, 0.5, n)
        ann = en.annulus(tree, en.AnnulusQuery(n, 1.0, a))
        assert cone == {h for h in ann if h[:1] == a}


# -- measures ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def approx0(psl_small):
    return bd.MeasureApproximant(psl_small, 1.05, T=0.0, delta_hat=1.0)


def test_measure_normalization(psl_small, approx0):
    assert approx0.measure(bd.Everything()) == pytest.approx(1.0, abs=1e-12)
    assert approx0.measure(bd.Shadow(psl_small.identity, 2.0)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(UsageError):
        bd.MeasureApproximant(psl_small, 0.9, delta_hat=1.0)


def test_measure_additive(approx0):
    a = bd.CuspNeighborhood(1, 0, 0.3)
    b = bd.CuspNeighborhood(0, 1, 0.3)
    ma, mb = approx0.mask(a), approx0.mask(b)
    assert not (ma & mb).any()
    assert approx0.measure(a) + approx0.measure(b) == pytest.approx(
        float(approx0.weights[ma | mb].sum()), rel=1e-12)


def test_parabolic_atom_probe(approx0):
    masses, decreasing = bd.parabolic_atom_probe(approx0)
    assert decreasing and masses[0] > 0


def test_identity_shadow_audit(psl_small, approx0):
    audit = bd.shadow_lemma_audit(psl_small, [psl_small.identity], r=3.0, approx=approx0)
    assert audit.rows[0].rho == pytest.approx(1.0)
    assert audit.partial_le_plain


def test_shadow_audit_partial_le_plain(psl_small):
    approx = bd.MeasureApproximant(psl_small, 1.05, T=2.0, delta_hat=1.0)
    sample = bd.sample_elements(psl_small, 12, seed=3)
    audit = bd.shadow_lemma_audit(psl_small, sample, r=3.0, approx=approx)
    assert all(row.rho_partial <= row.rho for row in audit.rows)
    assert math.isfinite(audit.plain["spread"])


def test_busemann(psl_small):
    inf = bd.boundary_point(psl_small, math.inf)
    i, two_i = HalfPlanePoint(0, 1), HalfPlanePoint(0, 2)
    assert bd.busemann(psl_small, inf, i, two_i) == pytest.approx(math.log(2), abs=1e-12)
    assert bd.busemann(psl_small, inf, i, i) == 0


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5), st.lists(st.tuples(st.floats(-3, 3), st.floats(0.05, 5)), min_size=3, max_size=3))
def test_busemann_cocycle(xi, pts):
    model = build_model(GroupSpec.half_plane(PSL_GENS, ["T"], 1.0, 6))
    x, y, z = (HalfPlanePoint(a, b) for a, b in pts)
    b = bd.BoundaryPoint(xi)
    lhs = bd.busemann(model, b, x, z)
    rhs = bd.busemann(model, b, x, y) + bd.busemann(model, b, y, z)
    assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(lhs))


def test_quasiconformality(psl_small):
    approx = bd.MeasureApproximant(psl_small, 1.05, T=2.0, delta_hat=1.0)
    t, st_ = _el(psl_small, T), _mul(psl_small, S, T)
    region = bd.Shadow(st_, 2.0)
    rows, _ = bd.quasiconformality_audit(psl_small, [(psl_small.identity, region)], approx=approx)
    assert rows[0].ratio == pytest.approx(1.0)
    rows, spread = bd.quasiconformality_audit(
        psl_small, [(t, region), (psl_small.inverse(t), bd.Translate(t, region))], approx=approx)
    assert all(math.isfinite(r.ratio) for r in rows)
    prod = rows[0].ratio * rows[1].ratio
    assert 1 / spread["spread"] <= prod <= spread["spread"]
    assert prod == pytest.approx(1.0, rel=1e-6)


# -- stability, conical points, visual metric -------------------------------------------

def test_stability_identical_geodesics(psl_small):
    a = HalfPlanePoint.of(complex(bd._exp_point(psl_small, 1j, 13.0, 0.7)))
    rep = bd.transition_stability_audit(psl_small, [(a, a)])
    assert rep.d_hat == pytest.approx(0.0, abs=1e-9)


def test_stability_cocompact_control(psl_cocompact):
    pairs = bd.sample_geodesic_pairs(psl_cocompact, 5, r=1.0, seed=1)
    rep = bd.transition_stability_audit(psl_cocompact, pairs)
    assert rep.d_hat <= psl_cocompact.constants.delta_hat


def test_stability_tree(tree):
    pairs = bd.sample_geodesic_pairs(tree, 6, r=1.0, length=(7, 7), seed=0)
    rep = bd.transition_stability_audit(tree, pairs, L=0.0)
    assert rep.d_hat == 0


def test_conical_cover(psl_small):
    assert bd.conical_cover_check(psl_small, bd.BoundaryPoint(math.inf), 1.0, 6).parabolic
    gold = bd.BoundaryPoint(GOLDEN)
    c6 = bd.conical_cover_check(psl_small, gold, 1.0, 6)
    c9 = bd.conical_cover_check(psl_small, gold, 1.0, 9)
    assert not c6.parabolic and c9.count > c6.count
    assert bd.conical_cover_check(psl_small, gold, 1.0, 0).count in (1, 2)


def test_visual_distance(psl_small, tree):
    x = bd.boundary_point(tree, tree.orbit_point(tree.canonical("a b a b a b")))
    y = bd.boundary_point(tree, tree.orbit_point(tree.canonical("a b b a b a")))
    assert bd.visual_distance(tree, x, y) == pytest.approx(math.exp(-0.5 * 2))
    near = bd.visual_distance(psl_small, bd.BoundaryPoint(0.1), bd.BoundaryPoint(0.11))
    far = bd.visual_distance(psl_small, bd.BoundaryPoint(0.1), bd.BoundaryPoint(-3.0))
    assert near < far <= 1.0


def test_audit_csv_header():
    text = bd.audit_csv([("shadow", {"r": 3}, "spread", 2.5)])
    assert text.splitlines()[0] == "audit,param_json,key,value"
