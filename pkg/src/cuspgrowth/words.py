"""Normal forms in free products of cyclic groups.

An element is a tuple of nonzero integer letters: ``k + 1`` is the ``k``-th
generator and ``-(k + 1)`` its inverse.  In the normal form no letter is
followed by its inverse, and a run of one letter of a generator of finite order
``m`` has signed exponent in ``(-m/2, m/2]`` (order-2 generators only appear
as positive letters).  The length of the normal form is the word length with
respect to ``{s, s^-1}``, so breadth-first search over right multiplication by
letters explores the Cayley graph exactly.
"""

from __future__ import annotations

import re

from .errors import SpecError

Word = tuple

_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)(?:\^(-?\d+))?\s*\*?")


class FreeProduct:
    """Free product of cyclic groups; ``orders[k] == 0`` means infinite cyclic."""

    def __init__(self, names, orders=None):
        names = list(names)
        if len(set(names)) != len(names) or not names:
            raise SpecError(f"generator names must be distinct and nonempty: {names}")
        orders = [0] * len(names) if orders is None else list(orders)
        if len(orders) != len(names) or any(m < 0 or m == 1 for m in orders):
            raise SpecError(f"bad generator orders {orders}")
        self.names = names
        self.orders = orders
        self._index = {n: k for k, n in enumerate(names)}
        self.letters = []
        for k, m in enumerate(orders):
            self.letters.append(k + 1)
            if m != 2:
                self.letters.append(-(k + 1))
        self.is_free = all(m == 0 for m in orders)

    identity: Word = ()

    def __repr__(self):
        parts = [n if m == 0 else f"{n}:{m}" for n, m in zip(self.names, self.orders)]
        return f"FreeProduct({', '.join(parts)})"

    def _normalize(self, e, m):
        if m == 0:
            return e
        r = e % m
        if 2 * r > m:
            r -= m
        return r

    def mul_letter(self, word, x):
        """Right-multiply a normal form by one letter."""
        gen = abs(x)
        m = self.orders[gen - 1]
        if m == 0:
            if word and word[-1] == -x:
                return word[:-1]
            return word + (x,)
        j = len(word)
        while j > 0 and abs(word[j - 1]) == gen:
            j -= 1
        e = sum(1 if t > 0 else -1 for t in word[j:])
        e = self._normalize(e + (1 if x > 0 else -1), m)
        return word[:j] + ((gen,) * e if e >= 0 else (-gen,) * (-e))

    def multiply(self, u, v):
        w = u
        for x in v:
            w = self.mul_letter(w, x)
        return w

    def inverse(self, w):
        out = ()
        for x in reversed(w):
            out = self.mul_letter(out, -x)
        return out

    def canonical(self, letters):
        """Normal form of an arbitrary letter sequence (free/cyclic reduction)."""
        out = ()
        for x in letters:
            if x == 0 or abs(x) > len(self.names):
                raise SpecError(f"letter {x} out of range")
            out = self.mul_letter(out, x)
        return out

    def power(self, gen, n):
        x = gen + 1 if n >= 0 else -(gen + 1)
        return self.canonical((x,) * abs(n))

    def parse(self, text):
        """Parse ``"a b^-1 a^3"`` / ``"a*b^-1"``; the empty string is the identity."""
        text = text.strip()
        if text in ("", "e", "1"):
            return ()
        letters = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise SpecError(f"cannot parse word {text!r}")
            name, exp = m.group(1), int(m.group(2) or 1)
            if name not in self._index:
                raise SpecError(f"unknown generator {name!r} in {text!r}")
            x = self._index[name] + 1
            letters.extend([x if exp > 0 else -x] * abs(exp))
            pos = m.end()
        return self.canonical(letters)

    def format(self, w):
        if not w:
            return "e"
        out = []
        i = 0
        while i < len(w):
            j = i
            while j < len(w) and w[j] == w[i]:
                j += 1
            e = (j - i) * (1 if w[i] > 0 else -1)
            name = self.names[abs(w[i]) - 1]
            out.append(name if e == 1 else f"{name}^{e}")
            i = j
        return " ".join(out)

    def strip_power(self, w, gen):
        """Drop the trailing syllable of ``gen``: the canonical left-coset rep of ``w<gen>``."""
        j = len(w)
        while j > 0 and abs(w[j - 1]) == gen + 1:
            j -= 1
        return w[:j], w[j:]

    def syllable_exponent(self, tail):
        return sum(1 if t > 0 else -1 for t in tail)
