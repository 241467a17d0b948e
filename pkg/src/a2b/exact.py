"""Exact scalar arithmetic: p-adic valuations and quadratic radicals.

Everything downstream compares numbers exactly. Two kinds of scalars appear:
rationals (Fraction) and single-term radicals q*sqrt(m) with m in {1, 2, 3, 6}.
Valuations live in Z plus +infinity for 0; math.inf absorbs addition and
cooperates with min(), so no sentinel class is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

INF = math.inf

_RADICANDS = (1, 2, 3, 6)


class GeometryError(Exception):
    """Base for all structured failures raised by this package."""


class ParameterError(GeometryError):
    pass


class SingularMatrix(GeometryError):
    pass


# deterministic for n < 3.3e24, far beyond anything used here
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in _MR_BASES:
        if n == q:
            return True
        if n % q == 0:
            return False
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=None)
def _prime_ok(p) -> bool:
    return isinstance(p, int) and not isinstance(p, bool) and is_prime(p)


def check_prime(p: int) -> None:
    if not _prime_ok(p):
        raise ParameterError(f"p must be a prime integer, got {p!r}")


def int_valuation(n: int, p: int) -> int:
    """v_p of a nonzero integer (sign ignored)."""
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def valuation(q, p: int):
    """v_p(q) for rational q; valuation(0, p) is INF."""
    check_prime(p)
    if isinstance(q, int):
        if q == 0:
            return INF
        return int_valuation(q, p)
    if isinstance(q, float):
        # floats are rounding noise by the time they reach here
        raise ParameterError("valuation needs an exact rational")
    q = Fraction(q)
    if q == 0:
        return INF
    return int_valuation(q.numerator, p) - int_valuation(q.denominator, p)


def _det3(a) -> Fraction:
    return (
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    )


def elementary_divisors(m, p: int) -> tuple:
    """Valuations (d1 <= d2 <= d3) of the diagonal form of an invertible
    rational 3x3 matrix under p-integral row and column operations.

    Pivot: entry of minimal valuation, ties broken row-major. The divisor
    sum must equal v_p(det), which is asserted.
    """
    check_prime(p)
    work = [[Fraction(m[i][j]) for j in range(3)] for i in range(3)]
    det_val = valuation(_det3(work), p)
    if det_val is INF:
        raise SingularMatrix("elementary divisors need an invertible matrix")
    rows = [0, 1, 2]
    cols = [0, 1, 2]
    divs = []
    for _ in range(3):
        best = None
        for i in rows:
            for j in cols:
                if work[i][j] == 0:
                    continue
                v = valuation(work[i][j], p)
                if best is None or v < best[0]:
                    best = (v, i, j)
        if best is None:
            raise SingularMatrix("zero block while diagonalizing")
        pv, pi, pj = best
        divs.append(pv)
        piv = work[pi][pj]
        # min-valuation pivot keeps the multipliers p-integral
        for i in rows:
            if i != pi and work[i][pj] != 0:
                f = work[i][pj] / piv
                for j in range(3):
                    work[i][j] -= f * work[pi][j]
        rows.remove(pi)
        cols.remove(pj)
    divs.sort()
    assert sum(divs) == det_val, "divisor sum must match det valuation"
    return tuple(divs)


@dataclass(frozen=True)
class RadicalValue:
    """A scalar coef*sqrt(radicand) with radicand in {1, 2, 3, 6}.

    The distance-like quantities of the model each live on one of these
    rational lines, so keeping the radicand explicit makes every comparison
    exact. Zero normalizes to radicand 1.
    """

    coef: Fraction
    radicand: int = 1

    def __post_init__(self):
        if self.radicand not in _RADICANDS:
            raise ParameterError(f"radicand must be one of {_RADICANDS}")
        c = self.coef if isinstance(self.coef, Fraction) else Fraction(self.coef)
        object.__setattr__(self, "coef", c)
        if c == 0 and self.radicand != 1:
            object.__setattr__(self, "radicand", 1)

    def __float__(self) -> float:
        return float(self.coef) * math.sqrt(self.radicand)

    def __neg__(self):
        return RadicalValue(-self.coef, self.radicand)

    def __abs__(self):
        return RadicalValue(abs(self.coef), self.radicand)

    def scaled(self, f) -> "RadicalValue":
        return RadicalValue(self.coef * Fraction(f), self.radicand)

    def __add__(self, other):
        if not isinstance(other, RadicalValue):
            return NotImplemented
        if other.coef == 0:
            return self
        if self.coef == 0:
            return other
        if self.radicand != other.radicand:
            raise ParameterError("cannot add radicals over different radicands exactly")
        return RadicalValue(self.coef + other.coef, self.radicand)

    def __sub__(self, other):
        if not isinstance(other, RadicalValue):
            return NotImplemented
        return self.__add__(-other)

    def square(self) -> Fraction:
        return self.coef * self.coef * self.radicand

    def sign(self) -> int:
        return (self.coef > 0) - (self.coef < 0)

    def __lt__(self, other):
        return compare_radical(self, other) < 0

    def __le__(self, other):
        return compare_radical(self, other) <= 0

    def __gt__(self, other):
        return compare_radical(self, other) > 0

    def __ge__(self, other):
        return compare_radical(self, other) >= 0


def compare_radical(x: RadicalValue, y: RadicalValue) -> int:
    """Sign of x - y. Signs first, then squares; distinct squarefree
    radicands can only agree at zero, so this is decisive."""
    sx, sy = x.sign(), y.sign()
    if sx != sy:
        return 1 if sx > sy else -1
    if sx == 0:
        return 0
    d = x.square() - y.square()
    if d == 0:
        assert x.radicand == y.radicand, "nonzero radicals over distinct radicands cannot coincide"
        return 0
    return sx * (1 if d > 0 else -1)


def compare_radical_vs_sqrt(a: RadicalValue, r) -> int:
    """Sign of a - sqrt(r) for rational r >= 0."""
    r = Fraction(r)
    if r < 0:
        raise ParameterError("compare_radical_vs_sqrt needs r >= 0")
    if r == 0:
        return a.sign()
    if a.coef <= 0:
        return -1
    d = a.square() - r
    return (d > 0) - (d < 0)
