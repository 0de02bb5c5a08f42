import pytest
from hypothesis import given
from hypothesis import strategies as st

from cuspgrowth.errors import SpecError
from cuspgrowth.words import FreeProduct

F2 = FreeProduct(["a", "b"])
MOD = FreeProduct(["s", "u"], [2, 3])   # Z/2 * Z/3

letters2 = st.lists(st.sampled_from([1, -1, 2, -2]), max_size=12)
letters_mod = st.lists(st.sampled_from([1, -1, 2, -2]), max_size=12)


def is_reduced(w):
    return all(x != -y for x, y in zip(w, w[1:]))


@given(letters2)
def test_free_reduction(ls):
    w = F2.canonical(ls)
    assert is_reduced(w)
    assert F2.canonical(w) == w


@given(letters2, letters2, letters2)
def test_associativity(u, v, w):
    u, v, w = F2.canonical(u), F2.canonical(v), F2.canonical(w)
    assert F2.multiply(F2.multiply(u, v), w) == F2.multiply(u, F2.multiply(v, w))


@given(letters_mod)
def test_inverse_in_free_product(ls):
    w = MOD.canonical(ls)
    assert MOD.multiply(w, MOD.inverse(w)) == ()
    assert MOD.canonical(w) == w


def test_finite_order_relations():
    assert MOD.canonical((1, 1)) == ()
    assert MOD.canonical((2, 2, 2)) == ()
    assert MOD.canonical((2, 2)) == (-2,)


def test_parse_and_format():
    assert F2.parse("a a^-1 b") == (2,)
    assert F2.parse("a^3 b^-2") == (1, 1, 1, -2, -2)
    assert F2.format(F2.parse("a^3 b^-2")) == "a^3 b^-2"
    assert F2.parse("e") == ()
    with pytest.raises(SpecError):
        F2.parse("c")


def test_strip_power():
    w = F2.parse("b a^3")
    assert F2.strip_power(w, 0) == ((2,), (1, 1, 1))
    assert F2.syllable_exponent((1, 1, 1)) == 3


def test_bad_orders():
    with pytest.raises(SpecError):
        FreeProduct(["a"], [1])
    with pytest.raises(SpecError):
        FreeProduct(["a", "a"])
