"""Points of the model as additive norms, with an exact chart calculus.

A point is an additive norm on Q^3 up to an additive constant, presented by a
frame (three independent column vectors) and rational weights: the norm of
sum_i a_i * frame_col_i is min_i (v_p(a_i) + weight_i). Distances, geodesics
and membership in apartments all reduce to exact rational arithmetic through
common splitting frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .exact import (
    INF,
    GeometryError,
    ParameterError,
    SingularMatrix,
    check_prime,
    valuation,
)
from .mat3 import (
    col,
    det3,
    from_cols,
    identity,
    inv_cached,
    mat,
    matmul,
    matvec,
    norm2,
    normalize_line,
    tl,
    vec,
    vsub,
)


class StabilizationError(GeometryError):
    """An iterative deepening loop hit its cap before telling anything."""


@dataclass(frozen=True)
class NormPoint:
    """Canonical presentation: columns scaled to leading coefficient 1 and
    weights centered to mean zero. Presentations are not unique across
    frames; use points_equal, never ==, to compare points."""

    p: int
    frame: tuple
    weights: tuple

    def nu(self, v):
        """Norm of a vector of Q^3 (INF for the zero vector)."""
        a = matvec(inv_cached(self.frame), vec(v))
        return min(valuation(a[i], self.p) + self.weights[i] for i in range(3))

    def __repr__(self):
        return f"NormPoint(p={self.p}, frame={self.frame}, weights={self.weights})"


def norm_point(p, frame, weights) -> NormPoint:
    check_prime(p)
    frame = mat(frame)
    if det3(frame) == 0:
        raise SingularMatrix("frame columns must be independent")
    ws = [fr for fr in (Fraction(w) for w in weights)]
    ncols = []
    for j in range(3):
        unit, scale = normalize_line(col(frame, j))
        ncols.append(unit)
        # dividing the column by s rescales its coordinate by s
        ws[j] -= valuation(scale, p)
    m = (ws[0] + ws[1] + ws[2]) / 3
    return NormPoint(p, from_cols(*ncols), (ws[0] - m, ws[1] - m, ws[2] - m))


def standard_point(p) -> NormPoint:
    return norm_point(p, identity(), (0, 0, 0))


def lattice_point(p, frame) -> NormPoint:
    """Class of the lattice spanned by the frame columns."""
    return norm_point(p, frame, (0, 0, 0))


def apply_gl(g, x: NormPoint) -> NormPoint:
    """Pushforward by g: the norm v -> nu_x(g^-1 v)."""
    return norm_point(x.p, matmul(mat(g), x.frame), x.weights)


def common_frame(x: NormPoint, y: NormPoint):
    """One frame splitting both points.

    Returns (G, cx, cy) with the columns of G carrying x at weights cx
    (== x.weights) and y at weights cy (exact, not recentered).

    Pivoting minimizes v_p(entry) + row weight - column weight, ties
    row-major; that two-sided choice keeps every elimination multiplier
    legal on its own side, so one pass suffices.
    """
    if x.p != y.p:
        raise ParameterError("points live over different primes")
    p = x.p
    M = [list(row) for row in matmul(inv_cached(x.frame), y.frame)]
    a = list(x.weights)
    b = list(y.weights)
    E = [list(row) for row in x.frame]  # columns: the evolving common basis
    act_r = [0, 1, 2]
    act_c = [0, 1, 2]
    rowof = [0, 0, 0]
    unit = [None, None, None]
    for _ in range(3):
        best = None
        for i in act_r:
            for j in act_c:
                if M[i][j] == 0:
                    continue
                v = valuation(M[i][j], p) + a[i] - b[j]
                if best is None or v < best[0]:
                    best = (v, i, j)
        if best is None:
            raise SingularMatrix("transition matrix degenerated")
        _, pi, pj = best
        piv = M[pi][pj]
        for i in act_r:
            if i == pi or M[i][pj] == 0:
                continue
            lam = M[i][pj] / piv
            for j in range(3):
                M[i][j] -= lam * M[pi][j]
            # compensating column move on the x side
            for r in range(3):
                E[r][pi] += lam * E[r][i]
        for j in act_c:
            if j == pj or M[pi][j] == 0:
                continue
            mu = M[pi][j] / piv
            for i in range(3):
                M[i][j] -= mu * M[i][pj]
        act_r.remove(pi)
        act_c.remove(pj)
        rowof[pj] = pi
        unit[pj] = piv
    cy = [None, None, None]
    for j in range(3):
        cy[rowof[j]] = b[j] - valuation(unit[j], p)
    return mat(E), tuple(a), tuple(cy)


def points_equal(x: NormPoint, y: NormPoint) -> bool:
    if x.p != y.p:
        return False
    if x.frame == y.frame:
        return x.weights == y.weights
    _, cx, cy = common_frame(x, y)
    return tl(cx) == tl(cy)


def distance2(x: NormPoint, y: NormPoint) -> Fraction:
    """Exact squared distance."""
    _, cx, cy = common_frame(x, y)
    return norm2(vsub(tl(cx), tl(cy)))


def distance(x: NormPoint, y: NormPoint) -> float:
    return math.sqrt(float(distance2(x, y)))


def geodesic_point(x: NormPoint, y: NormPoint, t) -> NormPoint:
    """Point at parameter t on the affine segment from x to y (t in [0, 1]
    is the geodesic; other t continue the same line in a shared chart)."""
    t = Fraction(t)
    G, cx, cy = common_frame(x, y)
    w = tuple((1 - t) * cx[i] + t * cy[i] for i in range(3))
    return norm_point(x.p, G, w)


def chart_weights(x: NormPoint, frame):
    """Weights presenting x on the given frame, or None when the frame does
    not split x. Splitting holds exactly when the per-column norms use up
    the whole determinant valuation."""
    M = matmul(inv_cached(x.frame), mat(frame))
    d = det3(M)
    if d == 0:
        raise SingularMatrix("chart frame must be invertible")
    c = x.weights
    w = []
    for j in range(3):
        w.append(min(valuation(M[i][j], x.p) + c[i] for i in range(3)))
    if sum(w) != valuation(d, x.p) + sum(c):
        return None
    return tuple(w)


def in_apartment(x: NormPoint, frame) -> bool:
    return chart_weights(x, frame) is not None


def is_vertex(x: NormPoint) -> bool:
    """Lattice classes are exactly the points with integral weight gaps."""
    w = x.weights
    return (w[0] - w[1]).denominator == 1 and (w[1] - w[2]).denominator == 1


# ---------------------------------------------------------------------------
# angles

_COS_TAGS = (
    # (4*cos^2 numerator over AB, sign, tag, radians)
    (4, 1, "0", 0.0),
    (3, 1, "pi/6", math.pi / 6),
    (1, 1, "pi/3", math.pi / 3),
    (0, 0, "pi/2", math.pi / 2),
    (1, -1, "2pi/3", 2 * math.pi / 3),
    (3, -1, "5pi/6", 5 * math.pi / 6),
    (4, -1, "pi", math.pi),
)


@dataclass(frozen=True)
class AngleValue:
    radians: float
    exact: str | None

    def __float__(self):
        return self.radians


def _classify_angle(A, B, C) -> AngleValue:
    # cos = N / (2 sqrt(A B)), exact recognition of cos^2 in {0,1/4,3/4,1}
    N = A + B - C
    sign = (N > 0) - (N < 0)
    n2_4 = 4 * N * N
    ab4 = 4 * A * B
    for mult, sg, tag, rad in _COS_TAGS:
        if sg == sign and n2_4 == mult * ab4:
            return AngleValue(rad, tag)
    cos = float(N) / (2.0 * math.sqrt(float(A) * float(B)))
    return AngleValue(math.acos(max(-1.0, min(1.0, cos))), None)


def comparison_angle(x, y, z) -> float:
    """Euclidean comparison angle at x of the triangle x, y, z."""
    A = distance2(x, y)
    B = distance2(x, z)
    if A == 0 or B == 0:
        raise ParameterError("comparison angle needs endpoints distinct from the corner")
    C = distance2(y, z)
    cos = float(A + B - C) / (2.0 * math.sqrt(float(A) * float(B)))
    return math.acos(max(-1.0, min(1.0, cos)))


def angle(x: NormPoint, y: NormPoint, z: NormPoint, cap: int = 64) -> AngleValue:
    """Angle at x between the segments toward y and z.

    Legs are shrunk through dyadic parameters inside fixed charts; once
    halving the legs exactly halves the chord twice in a row, the germ spans
    a flat triangle and the comparison value is the true angle.
    """
    Gy, cyx, cyy = common_frame(x, y)
    Gz, czx, czz = common_frame(x, z)
    dy = vsub(tl(cyy), tl(cyx))
    dz = vsub(tl(czz), tl(czx))
    A0 = norm2(dy)
    B0 = norm2(dz)
    if A0 == 0 or B0 == 0:
        raise ParameterError("angle needs endpoints distinct from the corner")

    def legs(t):
        wy = tuple(cyx[i] + t * (cyy[i] - cyx[i]) for i in range(3))
        wz = tuple(czx[i] + t * (czz[i] - czx[i]) for i in range(3))
        return norm_point(x.p, Gy, wy), norm_point(x.p, Gz, wz)

    t = Fraction(1)
    C_t = distance2(*legs(t))
    streak = 0
    for _ in range(cap):
        t2 = t / 2
        C_2 = distance2(*legs(t2))
        if 4 * C_2 == C_t:
            streak += 1
        else:
            streak = 0
        t, C_t = t2, C_2
        if streak >= 2:
            return _classify_angle(t * t * A0, t * t * B0, C_t)
    raise StabilizationError("chord ratios never stabilized; raise the cap")
