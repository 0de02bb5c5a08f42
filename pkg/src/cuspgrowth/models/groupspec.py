"""Group specifications and the YAML group-spec file format.

A half-plane spec::

    model: half_plane
    generators:            # name -> [a, b, c, d], or a list of 4-integer rows
      T: [1, 1, 0, 1]
      S: [0, -1, 1, 0]
    parabolics: [T]        # one entry per conjugacy class of maximal parabolics
    horoball_height: 1.0
    truncation_radius: 14
    basepoint: [0.0, 1.0]  # optional, (re, im); defaults to i

A cusped-Cayley spec::

    model: cusped_cayley
    generators: [a, b]     # symbols; "s:2" declares a generator of order 2
    parabolics: [a]
    max_depth: 5
    truncation_radius: 10
    basepoint: "e"         # optional word; the vertex (basepoint, 0)

Unknown keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import yaml

from ..errors import SpecError

HALF_PLANE = "half_plane"
CUSPED_CAYLEY = "cusped_cayley"

_KEYS = {
    HALF_PLANE: {"model", "generators", "parabolics", "horoball_height",
                 "truncation_radius", "basepoint"},
    CUSPED_CAYLEY: {"model", "generators", "parabolics", "max_depth",
                    "truncation_radius", "basepoint"},
}


def _int_matrix(row, what):
    if isinstance(row, (str, bytes)) or len(row) != 4:
        raise SpecError(f"{what}: a matrix is a row of 4 integers, got {row!r}")
    out = []
    for v in row:
        if isinstance(v, bool) or not float(v).is_integer():
            raise SpecError(f"{what}: matrix entries must be integers, got {row!r}")
        out.append(int(v))
    a, b, c, d = out
    if a * d - b * c != 1:
        raise SpecError(f"{what}: determinant of {out} is {a * d - b * c}, not 1")
    return tuple(out)


@dataclass(frozen=True)
class GroupSpec:
    """Everything needed to build a model.

    ``generators`` is a tuple of ``(name, matrix)`` pairs for the half-plane and
    a tuple of ``(name, order)`` pairs for cusped graphs (order 0 = infinite).
    ``parabolics`` holds one generator name (or, for the half-plane, a matrix)
    per conjugacy class of maximal parabolic subgroups.
    """

    model: str
    generators: tuple
    parabolics: tuple = ()
    horoball_height: float | None = None
    max_depth: int | None = None
    truncation_radius: float = 10.0
    basepoint: object = None

    def __post_init__(self):
        if self.model not in _KEYS:
            raise SpecError(f"model must be {HALF_PLANE!r} or {CUSPED_CAYLEY!r}, got {self.model!r}")
        if not self.generators:
            raise SpecError("at least one generator is required")
        r = self.truncation_radius
        if isinstance(r, bool) or not isinstance(r, (int, float)) or not math.isfinite(r) or r < 1:
            raise SpecError(f"truncation_radius must be a finite number >= 1, got {r!r}")
        names = [n for n, _ in self.generators]
        if len(set(names)) != len(names):
            raise SpecError(f"duplicate generator names {names}")
        if self.model == HALF_PLANE:
            t = self.horoball_height
            if t is None or isinstance(t, bool) or not math.isfinite(t) or t <= 0:
                raise SpecError(f"horoball_height must be a positive number, got {t!r}")
            if self.max_depth is not None:
                raise SpecError("max_depth belongs to cusped_cayley specs")
            for name, m in self.generators:
                _int_matrix(m, f"generator {name}")
            for p in self.parabolics:
                if isinstance(p, str):
                    if p not in names:
                        raise SpecError(f"parabolic {p!r} is not a generator")
                else:
                    _int_matrix(p, "parabolic")
            if self.basepoint is not None:
                z = complex(self.basepoint)
                if not z.imag > 0:
                    raise SpecError(f"half-plane basepoint needs im > 0, got {self.basepoint!r}")
        else:
            d = self.max_depth
            if d is None or isinstance(d, bool) or not isinstance(d, int) or d < 0:
                raise SpecError(f"max_depth must be an integer >= 0, got {d!r}")
            if self.horoball_height is not None:
                raise SpecError("horoball_height belongs to half_plane specs")
            orders = dict(self.generators)
            for p in self.parabolics:
                if not isinstance(p, str) or p not in orders:
                    raise SpecError(f"parabolic {p!r} is not a generator symbol")
                if orders[p] != 0:
                    raise SpecError(f"parabolic generator {p!r} has finite order")
            if len(set(self.parabolics)) != len(self.parabolics):
                raise SpecError("parabolic classes listed twice")
            if self.basepoint is not None and not isinstance(self.basepoint, str):
                raise SpecError("cusped_cayley basepoint is a word string")

    @classmethod
    def half_plane(cls, generators, parabolics=(), horoball_height=1.0,
                   truncation_radius=10.0, basepoint=None):
        if isinstance(generators, dict):
            gens = tuple((str(k), _int_matrix(v, f"generator {k}")) for k, v in generators.items())
        else:
            gens = tuple((f"g{k}", _int_matrix(v, f"generator {k}")) for k, v in enumerate(generators))
        paras = tuple(p if isinstance(p, str) else _int_matrix(p, "parabolic") for p in parabolics)
        return cls(HALF_PLANE, gens, paras, horoball_height=float(horoball_height),
                   truncation_radius=truncation_radius,
                   basepoint=None if basepoint is None else complex(basepoint))

    @classmethod
    def cusped_cayley(cls, generators, parabolics=(), max_depth=5,
                      truncation_radius=8, basepoint=None):
        gens = []
        for g in generators:
            name, _, order = str(g).partition(":")
            try:
                order = int(order) if order else 0
            except ValueError:
                raise SpecError(f"bad generator symbol {g!r}") from None
            gens.append((name.strip(), order))
        return cls(CUSPED_CAYLEY, tuple(gens), tuple(parabolics), max_depth=max_depth,
                   truncation_radius=truncation_radius, basepoint=basepoint)

    def to_dict(self):
        """Plain-data form used in report headers."""
        if self.model == HALF_PLANE:
            out = {"model": self.model,
                   "generators": {n: list(m) for n, m in self.generators},
                   "parabolics": [p if isinstance(p, str) else list(p) for p in self.parabolics],
                   "horoball_height": self.horoball_height}
            if self.basepoint is not None:
                z = complex(self.basepoint)
                out["basepoint"] = [z.real, z.imag]
        else:
            out = {"model": self.model,
                   "generators": [n if o == 0 else f"{n}:{o}" for n, o in self.generators],
                   "parabolics": list(self.parabolics),
                   "max_depth": self.max_depth}
            if self.basepoint is not None:
                out["basepoint"] = self.basepoint
        out["truncation_radius"] = self.truncation_radius
        return out


def spec_from_dict(data) -> GroupSpec:
    if not isinstance(data, dict):
        raise SpecError("a group spec is a mapping")
    model = data.get("model")
    if model not in _KEYS:
        raise SpecError(f"model must be {HALF_PLANE!r} or {CUSPED_CAYLEY!r}, got {model!r}")
    unknown = sorted(set(data) - _KEYS[model])
    if unknown:
        raise SpecError(f"unknown field(s) for {model}: {', '.join(map(str, unknown))}")
    if "generators" not in data:
        raise SpecError("missing field: generators")
    trunc = data.get("truncation_radius", 10.0)
    paras = data.get("parabolics") or []
    if not isinstance(paras, list):
        raise SpecError("parabolics must be a list")
    if model == HALF_PLANE:
        bp = data.get("basepoint")
        if bp is not None:
            if not isinstance(bp, (list, tuple)) or len(bp) != 2:
                raise SpecError("half-plane basepoint is [re, im]")
            bp = complex(float(bp[0]), float(bp[1]))
        gens = data["generators"]
        if not isinstance(gens, (dict, list)):
            raise SpecError("generators must be a mapping or a list of 4-integer rows")
        return GroupSpec.half_plane(gens, [_para_entry(p) for p in paras],
                                    horoball_height=_number(data.get("horoball_height"), "horoball_height"),
                                    truncation_radius=_number(trunc, "truncation_radius"), basepoint=bp)
    gens = data["generators"]
    if not isinstance(gens, list) or not all(isinstance(g, str) for g in gens):
        raise SpecError("cusped_cayley generators are a list of symbols")
    depth = data.get("max_depth")
    if depth is None:
        raise SpecError("missing field: max_depth")
    return GroupSpec.cusped_cayley(gens, [_para_entry(p) for p in paras], max_depth=depth,
                                   truncation_radius=_number(trunc, "truncation_radius"),
                                   basepoint=data.get("basepoint"))


def _number(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecError(f"{name} must be a number, got {v!r}")
    return float(v)


def _para_entry(p):
    # a one-element list is accepted as the generating set of a cyclic parabolic
    if isinstance(p, list) and len(p) == 1 and not isinstance(p[0], (int, float)):
        p = p[0]
    if isinstance(p, list) and len(p) != 4:
        raise SpecError(f"parabolic entry {p!r}: only cyclic parabolic subgroups are supported")
    return p


def load_spec(path) -> GroupSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read spec file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise SpecError(f"malformed spec file {path}: {exc}") from exc
    return spec_from_dict(data)
