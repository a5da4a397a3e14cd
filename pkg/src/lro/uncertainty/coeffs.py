"""Symbolic coefficients for canonicalization.

Every scalar that ends up in the cone program data is tracked as

    c0 + sum_i a_i theta_i + sum_j b_j y_j + sum_ij c_ij theta_i y_j,

i.e. affine in the set parameter ``theta`` at fixed ``y`` and affine in the
family parameter ``y`` at fixed ``theta``.  Products that would leave this
class (``theta * theta``, ``y * y``, anything involving an existing cross
term) raise immediately, which is what guarantees the parameter map built
from these coefficients reproduces canonicalization exactly.
"""

from __future__ import annotations

import numbers

__all__ = ["Coef", "LinExpr"]


class Coef:
    __slots__ = ("c0", "lin_t", "lin_y", "bilin")

    def __init__(self, c0=0.0, lin_t=None, lin_y=None, bilin=None):
        self.c0 = float(c0)
        self.lin_t = lin_t or {}
        self.lin_y = lin_y or {}
        self.bilin = bilin or {}

    @classmethod
    def const(cls, v: float) -> "Coef":
        return cls(c0=v)

    @classmethod
    def theta(cls, idx: int, coeff: float = 1.0) -> "Coef":
        return cls(lin_t={int(idx): float(coeff)})

    @classmethod
    def y(cls, idx: int, coeff: float = 1.0) -> "Coef":
        return cls(lin_y={int(idx): float(coeff)})

    @property
    def is_constant(self) -> bool:
        return not (self.lin_t or self.lin_y or self.bilin)

    @property
    def is_structural(self) -> bool:
        """True if the coefficient can ever be nonzero."""
        return bool(self.c0 or self.lin_t or self.lin_y or self.bilin)

    def __add__(self, other):
        other = _as_coef(other)
        return Coef(
            self.c0 + other.c0,
            _merge(self.lin_t, other.lin_t),
            _merge(self.lin_y, other.lin_y),
            _merge(self.bilin, other.bilin),
        )

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-_as_coef(other))

    def __rsub__(self, other):
        return _as_coef(other) + (-self)

    def __mul__(self, other):
        other = _as_coef(other)
        if self.is_constant:
            return other._scaled(self.c0)
        if other.is_constant:
            return self._scaled(other.c0)
        if self.bilin or other.bilin:
            raise ValueError("product with a cross term leaves the biaffine class")
        if (self.lin_t and other.lin_t) or (self.lin_y and other.lin_y):
            raise ValueError("nonlinear parameter product (theta*theta or y*y)")
        out = self._scaled(other.c0) + other._scaled(self.c0)
        out.c0 = self.c0 * other.c0  # scaled terms double-counted the constant
        bil = dict(out.bilin)
        for ti, tv in self.lin_t.items():
            for yj, yv in other.lin_y.items():
                _acc(bil, (ti, yj), tv * yv)
        for ti, tv in other.lin_t.items():
            for yj, yv in self.lin_y.items():
                _acc(bil, (ti, yj), tv * yv)
        out.bilin = bil
        return out

    __rmul__ = __mul__

    def _scaled(self, s: float) -> "Coef":
        if s == 0.0:
            return Coef()
        return Coef(
            self.c0 * s,
            {k: v * s for k, v in self.lin_t.items()},
            {k: v * s for k, v in self.lin_y.items()},
            {k: v * s for k, v in self.bilin.items()},
        )

    def value(self, theta, y) -> float:
        out = self.c0
        for i, v in self.lin_t.items():
            out += v * theta[i]
        for j, v in self.lin_y.items():
            out += v * y[j]
        for (i, j), v in self.bilin.items():
            out += v * theta[i] * y[j]
        return out

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"Coef({self.c0!r}, t={self.lin_t}, y={self.lin_y}, ty={self.bilin})"


def _as_coef(v) -> Coef:
    if isinstance(v, Coef):
        return v
    if isinstance(v, numbers.Real):
        return Coef.const(float(v))
    raise TypeError(f"cannot interpret {type(v)} as coefficient")


def _merge(a: dict, b: dict) -> dict:
    if not b:
        return dict(a)
    out = dict(a)
    for k, v in b.items():
        _acc(out, k, v)
    return out


def _acc(d: dict, k, v) -> None:
    nv = d.get(k, 0.0) + v
    if nv == 0.0:
        d.pop(k, None)
    else:
        d[k] = nv


class LinExpr:
    """Linear expression over program variables with :class:`Coef` weights."""

    __slots__ = ("terms", "offset")

    def __init__(self, terms: dict[int, Coef] | None = None, offset: Coef | None = None):
        self.terms = terms or {}
        self.offset = offset if offset is not None else Coef()

    @classmethod
    def var(cls, col: int, coeff=1.0) -> "LinExpr":
        return cls({int(col): _as_coef(coeff)})

    @classmethod
    def of(cls, offset) -> "LinExpr":
        return cls(offset=_as_coef(offset))

    def __add__(self, other):
        if isinstance(other, (Coef, numbers.Real)):
            return LinExpr(dict(self.terms), self.offset + other)
        out = dict(self.terms)
        for col, coef in other.terms.items():
            cur = out.get(col)
            out[col] = coef if cur is None else cur + coef
        return LinExpr(out, self.offset + other.offset)

    __radd__ = __add__

    def __neg__(self):
        return self.scaled(-1.0)

    def __sub__(self, other):
        if isinstance(other, (Coef, numbers.Real)):
            return LinExpr(dict(self.terms), self.offset - other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scaled(self, s) -> "LinExpr":
        s = _as_coef(s)
        return LinExpr(
            {col: coef * s for col, coef in self.terms.items()},
            self.offset * s,
        )
