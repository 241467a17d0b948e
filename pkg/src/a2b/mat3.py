"""Tiny exact 3x3 / R^3 toolkit over Fraction.

Matrices are row-major 3-tuples of 3-tuples, vectors are 3-tuples. Everything
is immutable and hashable so frames can key caches directly.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .exact import SingularMatrix

F0 = Fraction(0)
F1 = Fraction(1)


def fr(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def vec(a, b=None, c=None):
    if b is None:
        a, b, c = a
    return (fr(a), fr(b), fr(c))


def mat(rows):
    return tuple(tuple(fr(x) for x in r) for r in rows)


def identity():
    return ((F1, F0, F0), (F0, F1, F0), (F0, F0, F1))


def vadd(u, v):
    return (u[0] + v[0], u[1] + v[1], u[2] + v[2])


def vsub(u, v):
    return (u[0] - v[0], u[1] - v[1], u[2] - v[2])


def vscale(s, v):
    return (s * v[0], s * v[1], s * v[2])


def dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def cross(u, v):
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


def norm2(v):
    return v[0] * v[0] + v[1] * v[1] + v[2] * v[2]


def vmean(v) -> Fraction:
    return (fr(v[0]) + v[1] + v[2]) / 3


def tl(v):
    """Traceless representative: subtract the mean."""
    m = vmean(v)
    return (v[0] - m, v[1] - m, v[2] - m)


def is_zero_vec(v) -> bool:
    return v[0] == 0 and v[1] == 0 and v[2] == 0


def matvec(m, v):
    return (dot(m[0], v), dot(m[1], v), dot(m[2], v))


def vecmat(v, m):
    # covector times matrix
    return (
        v[0] * m[0][0] + v[1] * m[1][0] + v[2] * m[2][0],
        v[0] * m[0][1] + v[1] * m[1][1] + v[2] * m[2][1],
        v[0] * m[0][2] + v[1] * m[1][2] + v[2] * m[2][2],
    )


def matmul(a, b):
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3))
        for i in range(3)
    )


def transpose(m):
    return tuple(tuple(m[j][i] for j in range(3)) for i in range(3))


def det3(m) -> Fraction:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def inv3(m):
    d = det3(m)
    if d == 0:
        raise SingularMatrix("matrix is not invertible")
    # adjugate over det; exact division even for plain int entries
    d = fr(d)
    return (
        (
            (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d,
        ),
        (
            (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d,
        ),
        (
            (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d,
        ),
    )


@lru_cache(maxsize=4096)
def inv_cached(m):
    return inv3(m)


def from_cols(c0, c1, c2):
    return (
        (c0[0], c1[0], c2[0]),
        (c0[1], c1[1], c2[1]),
        (c0[2], c1[2], c2[2]),
    )


def col(m, j):
    return (m[0][j], m[1][j], m[2][j])


def cols(m):
    return (col(m, 0), col(m, 1), col(m, 2))


def first_nonzero(v):
    for i in range(3):
        if v[i] != 0:
            return i
    return None


def normalize_line(v):
    """Scale so the first nonzero entry is 1. Returns (unit, scale) with
    unit == v / scale."""
    i = first_nonzero(v)
    if i is None:
        raise SingularMatrix("zero vector has no direction")
    s = fr(v[i])
    return (v[0] / s, v[1] / s, v[2] / s), s
