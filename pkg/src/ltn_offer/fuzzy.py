"""Fuzzy-logic connectives over truth degrees in [0, 1].

Three backends share one interface:

* Gödel:       a AND b = min(a,b),       a OR b = max(a,b),       a -> b = 1 if a<=b else b
* Product:     a AND b = a*b,            a OR b = a+b-a*b,        a -> b = 1 if a=0 else min(1, b/a)
* Łukasiewicz: a AND b = max(0, a+b-1),  a OR b = min(1, a+b),    a -> b = min(1, 1-a+b)

Negation is 1-a everywhere. Folds are left-associative with identity 0 for
OR and 1 for AND on empty input.

The module also provides forward-mode dual numbers so gradients of any
expression built from these connectives can be read off exactly. Kink and
tie conventions are part of the contract (tests freeze them):

* min/max ties: the left operand's gradient wins.
* Łukasiewicz clamps: zero gradient once the sum leaves the active region;
  exactly at the kink the clamped (constant) side wins.
* Product implication at a=0: constant 1, zero gradient.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import DomainError

# inputs may miss [0,1] by this much (float noise) and are clamped back
DOMAIN_TOL = 1e-9


class Backend(enum.Enum):
    GODEL = "godel"
    PRODUCT = "product"
    LUKASIEWICZ = "lukasiewicz"

    @classmethod
    def parse(cls, name: str) -> "Backend":
        for member in cls:
            if member.value == name:
                return member
        valid = ", ".join(m.value for m in cls)
        raise DomainError(f"unknown backend '{name}' (expected one of: {valid})")


BACKENDS = tuple(Backend)


def _check(x: float, what: str = "truth value") -> float:
    if not (-DOMAIN_TOL <= x <= 1.0 + DOMAIN_TOL):
        raise DomainError(f"{what} {x!r} outside [0, 1]")
    return min(1.0, max(0.0, x))


def and_(backend: Backend, a: float, b: float) -> float:
    a = _check(a)
    b = _check(b)
    if backend is Backend.GODEL:
        return min(a, b)
    if backend is Backend.PRODUCT:
        return a * b
    return max(0.0, a + b - 1.0)


def or_(backend: Backend, a: float, b: float) -> float:
    a = _check(a)
    b = _check(b)
    if backend is Backend.GODEL:
        return max(a, b)
    if backend is Backend.PRODUCT:
        return a + b - a * b
    return min(1.0, a + b)


def not_(a: float) -> float:
    return 1.0 - _check(a)


def implies(backend: Backend, a: float, b: float) -> float:
    a = _check(a)
    b = _check(b)
    if backend is Backend.GODEL:
        return 1.0 if a <= b else b
    if backend is Backend.PRODUCT:
        if a == 0.0:
            return 1.0
        return min(1.0, b / a)
    return min(1.0, 1.0 - a + b)


def fold_or(backend: Backend, values: Iterable[float]) -> float:
    acc = 0.0
    first = True
    for v in values:
        if first:
            acc = _check(v)
            first = False
        else:
            acc = or_(backend, acc, v)
    return acc


def fold_and(backend: Backend, values: Iterable[float]) -> float:
    acc = 1.0
    first = True
    for v in values:
        if first:
            acc = _check(v)
            first = False
        else:
            acc = and_(backend, acc, v)
    return acc


# ---------------------------------------------------------------------------
# forward-mode dual numbers


@dataclass(frozen=True)
class DualNumber:
    """Value plus exact partial derivatives w.r.t. named parameters.

    Parameters are arbitrary hashable keys; a missing key means a zero
    partial. Arithmetic supports mixing with plain floats.
    """

    value: float
    partials: Mapping[object, float]

    @classmethod
    def var(cls, value: float, param: object) -> "DualNumber":
        return cls(float(value), {param: 1.0})

    @classmethod
    def const(cls, value: float) -> "DualNumber":
        return cls(float(value), {})

    def partial(self, param: object) -> float:
        return self.partials.get(param, 0.0)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        return DualNumber(self.value + other.value,
                          _combine(self.partials, 1.0, other.partials, 1.0))

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        return DualNumber(self.value - other.value,
                          _combine(self.partials, 1.0, other.partials, -1.0))

    def __rsub__(self, other):
        other = _coerce(other)
        return DualNumber(other.value - self.value,
                          _combine(other.partials, 1.0, self.partials, -1.0))

    def __mul__(self, other):
        other = _coerce(other)
        return DualNumber(self.value * other.value,
                          _combine(self.partials, other.value, other.partials, self.value))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        inv = 1.0 / other.value
        return DualNumber(self.value * inv,
                          _combine(self.partials, inv,
                                   other.partials, -self.value * inv * inv))

    def __neg__(self):
        return DualNumber(-self.value, _combine(self.partials, -1.0, {}, 0.0))


def _coerce(x) -> DualNumber:
    if isinstance(x, DualNumber):
        return x
    return DualNumber.const(float(x))


def _combine(pa: Mapping[object, float], fa: float,
             pb: Mapping[object, float], fb: float) -> dict:
    out: dict = {}
    if fa != 0.0:
        for k, v in pa.items():
            out[k] = fa * v
    if fb != 0.0:
        for k, v in pb.items():
            out[k] = out.get(k, 0.0) + fb * v
    return out


def _check_dual(x: DualNumber) -> DualNumber:
    value = _check(x.value)
    if value != x.value:
        return DualNumber(value, dict(x.partials))
    return x


def dual_sigmoid(x: DualNumber) -> DualNumber:
    s = 1.0 / (1.0 + math.exp(-x.value))
    return DualNumber(s, _combine(x.partials, s * (1.0 - s), {}, 0.0))


def dual_not(a: DualNumber) -> DualNumber:
    return 1.0 - _check_dual(a)


def dual_and(backend: Backend, a: DualNumber, b: DualNumber) -> DualNumber:
    a = _check_dual(a)
    b = _check_dual(b)
    if backend is Backend.GODEL:
        # tie goes to the left operand
        return a if a.value <= b.value else b
    if backend is Backend.PRODUCT:
        return a * b
    s = a + b - 1.0
    # at the kink (s == 0) the clamped constant side wins
    return s if s.value > 0.0 else DualNumber.const(0.0)


def dual_or(backend: Backend, a: DualNumber, b: DualNumber) -> DualNumber:
    a = _check_dual(a)
    b = _check_dual(b)
    if backend is Backend.GODEL:
        return a if a.value >= b.value else b
    if backend is Backend.PRODUCT:
        return a + b - a * b
    s = a + b
    return s if s.value < 1.0 else DualNumber.const(1.0)


def dual_implies(backend: Backend, a: DualNumber, b: DualNumber) -> DualNumber:
    a = _check_dual(a)
    b = _check_dual(b)
    if backend is Backend.GODEL:
        return DualNumber.const(1.0) if a.value <= b.value else b
    if backend is Backend.PRODUCT:
        if a.value == 0.0:
            return DualNumber.const(1.0)
        r = b / a
        return DualNumber.const(1.0) if r.value >= 1.0 else r
    s = 1.0 - a + b
    return DualNumber.const(1.0) if s.value >= 1.0 else s


def dual_fold_or(backend: Backend, values: Iterable[DualNumber]) -> DualNumber:
    acc = DualNumber.const(0.0)
    first = True
    for v in values:
        if first:
            acc = _check_dual(v)
            first = False
        else:
            acc = dual_or(backend, acc, v)
    return acc


def dual_fold_and(backend: Backend, values: Iterable[DualNumber]) -> DualNumber:
    acc = DualNumber.const(1.0)
    first = True
    for v in values:
        if first:
            acc = _check_dual(v)
            first = False
        else:
            acc = dual_and(backend, acc, v)
    return acc
