"""Analytic bound values that remember whether their preconditions held."""

from __future__ import annotations


class Bound(float):
    """A float bound with an applicability flag.

    Bounds are reported raw and may exceed 1; use :meth:`clamped` when
    comparing against probabilities.
    """

    applicable: bool
    note: str

    def __new__(cls, value: float, applicable: bool = True, note: str = ""):
        obj = super().__new__(cls, value)
        obj.applicable = applicable
        obj.note = note
        return obj

    def clamped(self) -> float:
        return min(1.0, float(self))

    def __repr__(self):
        flag = "" if self.applicable else f", applicable=False, note={self.note!r}"
        return f"Bound({float(self)!r}{flag})"

    def __reduce__(self):
        return (Bound, (float(self), self.applicable, self.note))
