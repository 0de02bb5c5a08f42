"""Horoball references shared by both backends."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class HoroballRef:
    """One horoball ``U = element . U_cls``.

    ``cusp`` is the tangency point ``(p, q)`` in the half-plane (``(1, 0)`` is
    infinity) and ``None`` in a cusped graph.  ``foot`` is the nearest point of
    the horosphere to the model basepoint, ``foot_distance`` the distance to
    it, and ``rep`` an element ``t_U`` with ``t_U . o`` close to the foot.
    Identity is decided by ``(cls, element)`` alone.
    """

    cls: int
    element: tuple
    cusp: tuple | None = field(default=None, compare=False)
    foot: object = field(default=None, compare=False)
    foot_distance: float = field(default=float("nan"), compare=False)
    rep: tuple | None = field(default=None, compare=False)
    rep_distance: float = field(default=float("nan"), compare=False)

    def sort_key(self):
        return (self.foot_distance, self.cls, self.element)
