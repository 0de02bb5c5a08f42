import collections
import math

import pytest
import yaml

from cuspgrowth.errors import SpecError, TruncationError, UsageError
from cuspgrowth.models import GroupSpec, build_model, load_spec, spec_from_dict
from cuspgrowth.space import HalfPlanePoint, VertexPoint

from .conftest import PSL_GENS, SPECS


def _write(tmp_path, text):
    p = tmp_path / "spec.yaml"
    p.write_text(text)
    return p


def test_shipped_specs_load():
    for name in ("psl2z.yaml", "free_ab.yaml", "free_ab_cusped.yaml"):
        spec = load_spec(SPECS / name)
        assert spec_from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("text", [
    "model: half_plane\ngenerators: {T: [1, 1, 0, 1], S: [0, -1, 1, 0]}\n"
    "parabolics: [T]\ntruncation_radius: 8\n",                       # no height
    "model: half_plane\ngenerators: {T: [1, 1, 0, 2]}\ntruncation_radius: 8\n",
    "model: half_plane\ngenerators: {T: [1, 1, 0]}\ntruncation_radius: 8\n",
    "model: cusped_cayley\ngenerators: [a, b]\nparabolics: [c]\nmax_depth: 3\ntruncation_radius: 8\n",
    "model: cusped_cayley\ngenerators: [a, b]\nmax_depth: -1\ntruncation_radius: 8\n",
    "model: cusped_cayley\ngenerators: [a, b]\nmax_depth: 2\ntruncation_radius: 8\ncolour: red\n",
    "model: sphere\ngenerators: [a]\ntruncation_radius: 8\n",
    "model: [unclosed\n",
])
def test_bad_specs_raise(tmp_path, text):
    with pytest.raises(SpecError):
        load_spec(_write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(SpecError):
        load_spec(tmp_path / "nope.yaml")


def test_spec_round_trip_through_yaml(tmp_path):
    spec = GroupSpec.cusped_cayley(["a", "b"], ["a"], 5, 10)
    path = _write(tmp_path, yaml.safe_dump(spec.to_dict()))
    assert load_spec(path) == spec


def test_modular_action(psl_small):
    T, S = (psl_small.canonical(tuple(PSL_GENS[g])) for g in ("T", "S"))
    i = HalfPlanePoint(0, 1)
    assert abs(psl_small.apply(T, i).z - (1 + 1j)) < 1e-14
    assert abs(psl_small.apply(S, i).z - 1j) < 1e-14
    assert psl_small.canonical(psl_small.multiply(S, S)) == psl_small.identity


def test_s_horoball_is_disc_at_zero(psl_small):
    U = psl_small.translate_horoball(psl_small.canonical(tuple(PSL_GENS["S"])), psl_small.horoball(1, 0))
    assert psl_small.cusp_of(U) == (0, 1)
    # {|z - i/2| <= 1/2}: boundary points are at horoball distance 0
    for th in (0.3, 1.0, 2.0, 2.8):
        z = 0.5j + 0.5 * complex(math.cos(th), math.sin(th))
        assert abs(psl_small.horoball_distance(HalfPlanePoint.of(z), U)) < 1e-9
    assert psl_small.horoball_distance(HalfPlanePoint(0, 1), U) == pytest.approx(0.0, abs=1e-12)
    assert psl_small.horoball_distance(HalfPlanePoint(0, 2), U) == pytest.approx(math.log(2))


def test_stabilizer_fixes_cusp(psl_small):
    U = psl_small.horoball(2, 5)
    p = psl_small.stabilizer_generator(U)
    a, b, c, d = p
    assert c * 2 + d * 5 in (5, -5) and a * 2 + b * 5 in (2, -2)
    assert psl_small.translate_horoball(p, U) == U


def test_horoball_requires_lowest_terms(psl_small, psl_cocompact):
    with pytest.raises(UsageError):
        psl_small.horoball(2, 4)
    with pytest.raises(SpecError):
        psl_cocompact.horoball(1, 0)


def test_canonical_is_idempotent(psl_small, cusped):
    for raw in ((1, 1, 0, 1), (-1, -1, 0, -1), (0, 1, -1, 0), (2, 1, 1, 1)):
        g = psl_small.canonical(raw)
        assert psl_small.canonical(g) == g
        assert psl_small.canonical(tuple(-v for v in raw)) == g
    g = cusped.canonical("a b b^-1 a")
    assert g == cusped.canonical("a^2")
    assert cusped.format_element(g) == "a^2"


def test_tree_distance_is_word_length(tree):
    o = tree.basepoint
    for w in ("a", "a b", "a^2 b^-1", "b a b a"):
        g = tree.canonical(w)
        assert tree.distance(o, tree.orbit_point(g)) == len(g)


def test_truncation(tree):
    with pytest.raises(TruncationError):
        tree.distance(tree.basepoint, tree.orbit_point(tree.canonical("a^9")))


# -- independent breadth-first oracle on string words ------------------------------

def _reduce(s):
    out = []
    for ch in s:
        if out and out[-1] == ch.swapcase():
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


def _oracle_neighbors(v, depth):
    w, k = v
    if k == 0:
        out = [(_reduce(w + x), 0) for x in "aAbB"]
        return out + ([(w, 1)] if depth >= 1 else [])
    out = [(w, k - 1)]
    if k < depth:
        out.append((w, k + 1))
    # horizontal edges join points of the level at parabolic distance <= 2^k
    out += [(_reduce(w + x * j), k) for x in "aA" for j in range(1, (1 << k) + 1)]
    return out


def _oracle_ball(depth, radius):
    dist = {("", 0): 0}
    queue = collections.deque([("", 0)])
    while queue:
        v = queue.popleft()
        if dist[v] == radius:
            continue
        for u in _oracle_neighbors(v, depth):
            if u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def _to_model(model, w):
    return model.canonical(" ".join(x if x.islower() else x.lower() + "^-1" for x in w) or "e")


def test_cusped_distances_match_oracle(cusped):
    oracle = _oracle_ball(5, 5)
    o = cusped.basepoint
    for (w, k), d in oracle.items():
        v = VertexPoint(_to_model(cusped, w), k, 0 if k else -1)
        assert cusped.distance(o, v) == d, (w, k)
    # a^4 is reached through the horoball in 4 steps, not along the Cayley edge path of 4
    assert cusped.distance(o, cusped.orbit_point(cusped.canonical("a^4"))) == 4
    a16 = cusped.orbit_point(cusped.canonical("a^16"))
    assert cusped.distance(o, a16) == 8


def test_cusped_isometry(cusped):
    g = cusped.canonical("b a^-1")
    x = VertexPoint(cusped.canonical("a^3"), 2, 0)
    y = cusped.orbit_point(cusped.canonical("b"))
    assert cusped.distance(x, y) == cusped.distance(cusped.apply(g, x), cusped.apply(g, y))


def test_cusped_horoballs(cusped):
    o = cusped.basepoint
    U = cusped.horoball_of(0, cusped.canonical("b"))
    assert cusped.horoball_distance(o, U) == 1
    assert cusped.in_horoball(cusped.orbit_point(cusped.canonical("b a^5")), U)
    assert not cusped.in_horoball(o, U)
    assert cusped.horoball_of(0, cusped.canonical("b a^3")) == U
    assert cusped.stabilizer_generator(U) == cusped.canonical("b a b^-1")
