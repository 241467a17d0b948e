"""Holonomy shifts, S-sets, tripods, and the four point structure.

Rays toward a chamber center, up to strong asymptoty, form a line of
classes: the class coordinate is affine along the vertical axis of any
flat adapted to the flag and constant across the horizontal directions.
Carrying a class around a cycle of flats F_{1,2} -> F_{2,3} -> F_{3,1}
translates the coordinate by a fixed amount, the shift of the triple.
Tripods (points seeing all three centers at pairwise angle pi) exist
exactly when the shift vanishes; their locus l_{1,2,3} is a vertical
interval and its lower endpoint, the minimizer of the vertex function
b_{1,2}, is the canonical tripodal point.

Conventions: hatted values are sqrt(6)-scaled for vertex kinds and
sqrt(2)-scaled for centers, matching the Busemann machinery; class
coordinates grow toward the nu-type vertex.
"""

import math
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

from .boundary import (_scaled_busemann, apply_gl_flag, center_point, flag,
                       flat, intersect_flats, mu_point, nu_point, opposite,
                       plane_basis, primitive)
from .core import NormPoint, angle, distance2, points_equal
from .exact import (GeometryError, ParameterError, RadicalValue, check_prime,
                    valuation)
from .mat3 import cross, dot, fr, identity, mat, matmul, vadd
from .regions import ConvexRegion, plane_coords, singular_hull, whole_plane

# chart direction toward the eta_{i,j} vertex of a flat, and a horizontal
# functional vanishing on it: a convex set is vertical iff LEVEL is constant
VERT = (1, -2, 1)
LEVEL = (1, 0, -1)

_HEX_DIRECTIONS = ((2, -1, -1), (1, -2, 1), (-1, -1, 2),
                   (-2, 1, 1), (-1, 2, -1), (1, 1, -2))


class NoTripod(GeometryError):
    """Nonzero holonomy shift; carries the shift as certificate."""

    def __init__(self, shift_value):
        super().__init__(f"holonomy shift {float(shift_value):+.6g} is nonzero")
        self.shift = shift_value


class BudgetExhausted(GeometryError):
    """A randomized search ran out of attempts; carries a partial report."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@lru_cache(maxsize=4096)
def _flat(fa, fb, p):
    return flat(fa, fb, p)


def center_hat(f, p, x):
    """sqrt(2)-scaled Busemann value of the chamber center of f at x."""
    return _scaled_busemann(center_point(f), p).hat(x)


@lru_cache(maxsize=4096)
def _kappa(fa, fb, p):
    base = _flat(fa, fb, p).base
    return center_hat(fa, p, base) + center_hat(fb, p, base)


def kappa_hat(fa, fb, p):
    """Minimum of hat(b_a) + hat(b_b) over the building, attained on F_{a,b}."""
    return _kappa(fa, fb, p)


def on_flat(fa, fb, p, x):
    """Slope criterion for membership in F_{a,b}.

    b_a + b_b is minimal exactly on the parallel set of the two chamber
    centers, and for opposite regular points that parallel set is the
    single flat they span.
    """
    return center_hat(fa, p, x) + center_hat(fb, p, x) == _kappa(fa, fb, p)


def _class_hat(f, p, x):
    # difference of the two vertex functions of the flag: affine with
    # pattern VERT on every adapted chart, so constant horizontally
    return (_scaled_busemann(nu_point(f.line), p).hat(x)
            - _scaled_busemann(mu_point(f.plane), p).hat(x))


@dataclass(frozen=True, eq=False)
class StrongAsymptoteClass:
    """Ray toward a chamber center, up to strong asymptoty."""

    center: object      # Flag
    base: NormPoint
    coordinate: RadicalValue

    def __eq__(self, other):
        if not isinstance(other, StrongAsymptoteClass):
            return NotImplemented
        return self.center == other.center and self.coordinate == other.coordinate

    def __hash__(self):
        return hash((self.center, self.coordinate))


def asymptote_class(f, p, base):
    """Class of the ray from base toward the chamber center of f."""
    return StrongAsymptoteClass(f, base, RadicalValue(fr(_class_hat(f, p, base)) / 6, 6))


def shift(f1, f2, f3, p):
    """Signed translation of class coordinates around F_{1,2}, F_{2,3}, F_{3,1}.

    Transporting a class between the two ends of a flat keeps the point
    and swaps the center, so the net effect of the cycle is the sum of
    the coordinate jumps at one point of each flat; the difference of two
    class functions is constant on their connecting flat, which makes the
    choice of those points immaterial.
    """
    flags = (f1, f2, f3)
    h = fr(0)
    for a, b in ((0, 1), (1, 2), (2, 0)):
        base = _flat(flags[a], flags[b], p).base
        h += _class_hat(flags[b], p, base) - _class_hat(flags[a], p, base)
    return RadicalValue(h / 6, 6)


def _pair_val(fa, fb, p):
    return valuation(dot(fa.line, fb.plane), p)


def _pairing_shift_hat(f1, f2, f3, p):
    # valuation form of the shift: at the base lattice of each flat only
    # the line-against-plane pairings of the two flags survive
    flags = (f1, f2, f3)
    h = 0
    for a, b in ((0, 1), (1, 2), (2, 0)):
        h += _pair_val(flags[a], flags[b], p) - _pair_val(flags[b], flags[a], p)
    return 3 * h


@dataclass(frozen=True)
class SSet:
    """Flags that are pairwise opposite with all triple shifts zero.

    Failed candidates are representable too: ok is False and the
    certificate names the first failing pair or triple.
    """

    p: int
    flags: tuple
    ok: bool
    certificate: object
    report: tuple

    def __len__(self):
        return len(self.flags)

    def flat(self, i, j):
        return _flat(self.flags[i], self.flags[j], self.p)

    def kappa(self, i, j):
        return _kappa(self.flags[i], self.flags[j], self.p)


def is_sset(flags, p):
    """(bool, certificate); the certificate is the first failing pair or triple."""
    flags = tuple(flags)
    if len(flags) < 3:
        raise ParameterError("an S-set needs at least three flags")
    for i, j in combinations(range(len(flags)), 2):
        if flags[i] == flags[j]:
            return False, ("pair", i, j, "repeated")
        if not opposite(flags[i], flags[j]):
            return False, ("pair", i, j, "not opposite")
    for i, j, k in combinations(range(len(flags)), 3):
        s = shift(flags[i], flags[j], flags[k], p)
        if s.coef != 0:
            return False, ("triple", i, j, k, s)
    return True, None


def make_sset(flags, p):
    """Validated SSet with the full pair/triple report."""
    flags = tuple(flags)
    if len(flags) < 3:
        raise ParameterError("an S-set needs at least three flags")
    check_prime(p)
    report = []
    certificate = None
    for i, j in combinations(range(len(flags)), 2):
        good = flags[i] != flags[j] and opposite(flags[i], flags[j])
        report.append(("pair", i, j, good))
        if not good and certificate is None:
            certificate = ("pair", i, j,
                           "repeated" if flags[i] == flags[j] else "not opposite")
    if certificate is None:
        for i, j, k in combinations(range(len(flags)), 3):
            s = shift(flags[i], flags[j], flags[k], p)
            report.append(("triple", i, j, k, s))
            if s.coef != 0 and certificate is None:
                certificate = ("triple", i, j, k, s)
    return SSet(p, flags, certificate is None, certificate, tuple(report))


@dataclass(frozen=True)
class Tripod:
    point: NormPoint
    flags: tuple
    flats: tuple        # F_{1,2}, F_{1,3}, F_{2,3}


@dataclass(frozen=True)
class TripodSegment:
    """The vertical interval l_{1,2,3} in the chart of F_{1,2}.

    lower minimizes b_{1,2} and is None when the interval runs off toward
    eta_{1,2}; upper mirrors it on the other side.  The hat fields are the
    sqrt(6)-scaled b_{1,2} values at the respective ends.
    """

    flags: tuple
    flats: tuple
    region: ConvexRegion
    kind: str           # point | segment | ray | line
    lower: object
    upper: object
    lower_hat: object
    upper_hat: object

    @property
    def flat(self):
        return self.flats[0]


def _tripod_data(f1, f2, f3, p):
    s = shift(f1, f2, f3, p)
    if s.coef != 0:
        raise NoTripod(s)
    F12 = _flat(f1, f2, p)
    F13 = _flat(f1, f3, p)
    F23 = _flat(f2, f3, p)
    R = intersect_flats(F12, F13).intersect(intersect_flats(F12, F23))
    if R.is_empty():
        raise GeometryError("zero shift but empty tripodal set")
    lo, hi = R.extent(LEVEL)
    if lo != hi:
        raise GeometryError("tripodal set is not vertical")
    return (F12, F13, F23), R


def _lower_chart(R):
    # lower endpoint = minimal b_{i,j} = maximal <VERT, .>; fall back to
    # the other end, then to any member when the interval is a full line
    lo, hi = R.extent(VERT)
    t = hi if hi is not None else lo
    src = R if t is None else R.cut_eq(VERT, t)
    c = src.feasible_point()
    if c is None:
        raise GeometryError("vertical interval lost its feasible point")
    return c


def find_tripod(f1, f2, f3, p):
    """Tripod at the canonical tripodal point, or NoTripod when shifted.

    The point maximizes b_1 on F_{1,2} cap F_{1,3}; within the maximizing
    face it is the lower endpoint of l_{1,2,3}.  The slope criterion is
    re-verified for all three pairs before returning.
    """
    try:
        flats, R = _tripod_data(f1, f2, f3, p)
    except NoTripod as bad:
        return bad
    F12, F13, F23 = flats
    pat, off = _scaled_busemann(center_point(f1), p).linear_on_flat(F12)
    slo, shi = intersect_flats(F12, F13).extent(pat)
    if slo is None:
        raise GeometryError("b_1 is unbounded above on the double intersection")
    rlo, rhi = R.extent(pat)
    if not rlo == rhi == slo:
        raise GeometryError("tripodal set does not realize the b_1 maximum")
    pt = F12.point(_lower_chart(R))
    for fa, fb in ((f1, f2), (f1, f3), (f2, f3)):
        if not on_flat(fa, fb, p, pt):
            raise GeometryError("slope criterion rejects the tripodal point")
    return Tripod(pt, (f1, f2, f3), flats)


def tripod_point(sset, i, j, k):
    """Canonical tripodal point for a triple of an S-set."""
    t = find_tripod(sset.flags[i], sset.flags[j], sset.flags[k], sset.p)
    if isinstance(t, NoTripod):
        raise t
    return t.point


def tripod_segment(f1, f2, f3, p):
    """l_{1,2,3} with endpoint classification; raises NoTripod when shifted."""
    flats, R = _tripod_data(f1, f2, f3, p)
    F12 = flats[0]
    pat, off = _scaled_busemann(F12.eta_ij, p).linear_on_flat(F12)
    if pat != VERT:
        raise GeometryError("vertex pattern is not vertical")
    lo, hi = R.extent(pat)
    lower = F12.point(R.cut_eq(pat, hi).feasible_point()) if hi is not None else None
    upper = F12.point(R.cut_eq(pat, lo).feasible_point()) if lo is not None else None
    lower_hat = off - hi if hi is not None else None
    upper_hat = off - lo if lo is not None else None
    if lower is not None and upper is not None:
        kind = "point" if points_equal(lower, upper) else "segment"
    elif lower is None and upper is None:
        kind = "line"
    else:
        kind = "ray"
    return TripodSegment((f1, f2, f3), flats, R, kind,
                         lower, upper, lower_hat, upper_hat)


_PAIRINGS = (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2)))


@dataclass(frozen=True)
class FourPointStructure:
    """Points p, p', the bridge between them, and the regions s1, s2, C.

    All regions live in the chart of chart_flat = F_{1,2} (renumbered).
    kind is "fourpod" (p = p'), "tree" (distinct points on a level bridge)
    or "generic" (distinct b_{1,2} levels, no embedded tree).
    """

    prime: int
    flags: tuple
    order: tuple
    kind: str
    point: NormPoint
    point_prime: NormPoint
    edge_hat: Fraction
    chart_flat: object
    chart_point: tuple
    chart_point_prime: tuple
    s1: ConvexRegion
    s2: ConvexRegion
    quad: ConvexRegion
    verdicts: tuple


def _hat_interval(R, off):
    lo, hi = R.extent(VERT)
    return (off - hi if hi is not None else None,
            off - lo if lo is not None else None)


def _level_chart(R, off, bhat):
    c = R.cut_eq(VERT, off - bhat).feasible_point()
    if c is None:
        raise GeometryError("level does not meet the vertical interval")
    return c


def four_point_structure(flags, p):
    """Classify a four flag S-set and verify its tripod verdicts exactly.

    The numbering is chosen so that eta_1, eta_3 sit across the interior
    tree edge from eta_2, eta_4 (the kappa-sum pairing with the smallest
    total), which makes the four tripodal points live at p and p' as the
    endpoint pattern requires.
    """
    flags = tuple(flags)
    if len(flags) != 4:
        raise ParameterError("the four point structure needs four flags")
    ok, certificate = is_sset(flags, p)
    if not ok:
        raise ParameterError(f"not an S-set: {certificate}")

    sigma = [_kappa(flags[a], flags[b], p) + _kappa(flags[c], flags[d], p)
             for (a, b), (c, d) in _PAIRINGS]
    top = sorted(sigma)
    if top[1] != top[2]:
        raise GeometryError("kappa sums violate the four point condition")
    edge = (top[2] - top[0]) / 2

    if edge == 0:
        order = (0, 1, 2, 3)
    else:
        (a, b), (c, d) = _PAIRINGS[sigma.index(top[0])]
        order = (a, c, b, d)    # split partners sit across the interior edge
    g = tuple(flags[i] for i in order)

    F = {}
    for i, j in combinations(range(4), 2):
        F[i, j] = _flat(g[i], g[j], p)
    R = {key: intersect_flats(F[0, 1], fl) for key, fl in F.items() if key != (0, 1)}

    s1 = R[0, 2].intersect(R[1, 2]).intersect(R[0, 3]).intersect(R[2, 3])
    s2 = R[0, 3].intersect(R[1, 3]).intersect(R[1, 2]).intersect(R[2, 3])
    if s1.is_empty() or s2.is_empty():
        raise GeometryError("a tripodal interval of the structure vanished")
    for s in (s1, s2):
        lo, hi = s.extent(LEVEL)
        if lo != hi:
            raise GeometryError("tripodal interval is not vertical")

    F01 = F[0, 1]
    pat, off = _scaled_busemann(F01.eta_ij, p).linear_on_flat(F01)
    b1lo, b1hi = _hat_interval(s1, off)
    b2lo, b2hi = _hat_interval(s2, off)

    if edge == 0:
        quadset = s1.intersect(s2)
        if quadset.is_empty():
            raise GeometryError("four pod case without a common tripodal point")
        cp = cpp = _lower_chart(quadset)
        kind = "fourpod"
    elif b1lo is not None and b2hi is not None and b1lo > b2hi:
        cp = _level_chart(s1, off, b1lo)
        cpp = _level_chart(s2, off, b2hi)
        kind = "generic"
    elif b2lo is not None and b1hi is not None and b2lo > b1hi:
        cp = _level_chart(s1, off, b1hi)
        cpp = _level_chart(s2, off, b2lo)
        kind = "generic"
    else:
        # overlapping levels: the four end tree embeds along a flat bridge
        lo = b1lo if b2lo is None else b2lo if b1lo is None else max(b1lo, b2lo)
        hi = b1hi if b2hi is None else b2hi if b1hi is None else min(b1hi, b2hi)
        if lo is not None and hi is not None:
            t = (lo + hi) / 2
        elif lo is not None:
            t = lo
        elif hi is not None:
            t = hi
        else:
            t = off
        cp = _level_chart(s1, off, t)
        cpp = _level_chart(s2, off, t)
        kind = "tree"

    pt = F01.point(cp)
    ptp = F01.point(cpp)

    # the interior tree edge must equal the b_1 gap between p and p'
    gap = abs(center_hat(g[0], p, pt) - center_hat(g[0], p, ptp))
    if gap != edge:
        raise GeometryError("kappa edge and b_1 gap disagree")

    verdicts = []
    for tri, q, label in (((0, 1, 2), pt, "p"), ((0, 2, 3), pt, "p"),
                          ((0, 1, 3), ptp, "p_prime"), ((1, 2, 3), ptp, "p_prime")):
        good = all(on_flat(g[i], g[j], p, q) for i, j in combinations(tri, 2))
        if not good:
            raise GeometryError("a tripod verdict fails in the four point structure")
        verdicts.append((tri, label, good))

    # the bridge stays inside the four cyclically adjacent flats
    steps = 100
    for k in range(steps + 1):
        c = tuple(cp[i] + Fraction(k, steps) * (cpp[i] - cp[i]) for i in range(3))
        q = F01.point(c)
        for i, j in ((0, 1), (1, 2), (2, 3), (0, 3)):
            if not on_flat(g[i], g[j], p, q):
                raise GeometryError("the bridge leaves the cyclic flats")

    if not points_equal(pt, ptp):
        up = F01.point(tuple(cp[i] + VERT[i] for i in range(3)))
        a = angle(pt, up, ptp)
        if not math.pi / 3 - 1e-9 <= a.radians <= 2 * math.pi / 3 + 1e-9:
            raise GeometryError("bridge angle leaves [pi/3, 2pi/3]")

    pts, rays = [cp, cpp], []
    for s in (s1, s2):
        pts.extend(s.vertices())
        lo, hi = s.extent(VERT)
        if hi is None:
            rays.append(VERT)
        if lo is None:
            rays.append(tuple(-v for v in VERT))
    quad = singular_hull(pts, tuple(rays))
    for s in (s1, s2):
        if not quad.contains_region(s):
            raise GeometryError("the hull misses a tripodal interval")

    return FourPointStructure(p, g, order, kind, pt, ptp, edge, F01, cp, cpp,
                              s1, s2, quad, tuple(verdicts))


@dataclass
class FlatsReport:
    """Verdicts for the three intersection identities of a four flag S-set."""

    quad_equal: bool
    cross_empty: object     # None when the generic hypothesis is unmet
    strips_contained: bool
    separation: object
    samples: int
    skipped: tuple

    @property
    def ok(self):
        return (self.quad_equal and self.strips_contained
                and self.cross_empty is not False)


def check_flats_identity(structure, samples=1000, rng=None, member=on_flat):
    """Sampled verdicts for the flat intersection identities.

    member is the membership oracle used on sampled points; tests swap in
    a broken one to confirm violations are detected.  The emptiness
    verdict needs the generic structure (distinct b_{1,2} levels) and is
    skipped otherwise.
    """
    if rng is None:
        rng = random.Random(11)
    g = structure.flags
    p = structure.prime
    F = {(i, j): _flat(g[i], g[j], p) for i, j in combinations(range(4), 2)}

    def fl(i, j):
        return F[min(i, j), max(i, j)]

    # F_{1,2} cap F_{3,4} = F_{1,4} cap F_{2,3} = the singular hull C
    RA = intersect_flats(F[0, 1], F[2, 3])
    RB = intersect_flats(F[0, 3], F[1, 2])
    quad_equal = RA.equals(structure.quad)
    for c in RA.sample(samples, rng):
        q = F[0, 1].point(c)
        quad_equal = quad_equal and member(g[0], g[3], p, q) and member(g[1], g[2], p, q)
    for c in RB.sample(samples, rng):
        q = F[0, 3].point(c)
        quad_equal = quad_equal and member(g[0], g[1], p, q) and member(g[2], g[3], p, q)

    skipped = ()
    separation = None
    if structure.kind == "generic":
        cross_empty = intersect_flats(F[0, 2], F[1, 3]).is_empty()
        kap = _kappa(g[0], g[2], p)
        for c in whole_plane().sample(samples, rng):
            q = F[1, 3].point(c)
            d = center_hat(g[0], p, q) + center_hat(g[2], p, q) - kap
            if separation is None or d < separation:
                separation = d
        cross_empty = cross_empty and separation is not None and separation > 0
    else:
        cross_empty = None
        skipped = ("cross_empty",)

    strips = True
    for (a, b), (c, d) in _PAIRINGS:
        for i0, i1, j0, j1 in ((a, b, c, d), (b, a, c, d),
                               (c, d, a, b), (d, c, a, b)):
            RI = intersect_flats(fl(i0, i1), fl(j0, j1))
            if RI.is_empty():
                continue
            for cc in RI.sample(samples, rng):
                q = fl(i0, i1).point(cc)
                if not (member(g[i0], g[j0], p, q) or member(g[i0], g[j1], p, q)):
                    strips = False
    return FlatsReport(quad_equal, cross_empty, strips, separation, samples, skipped)


@dataclass
class EndpointReport:
    """Per-item verdicts at the lower endpoint; None marks an unmet hypothesis."""

    items: dict
    data: dict

    @property
    def ok(self):
        return all(v is not False for v in self.items.values())


def check_endpoint_props(seg, x):
    """Evaluate the endpoint geometry of l_{1,2,3} at the point x.

    Items: distinct_directions (the three eta_{i,j} directions at p),
    spans_flat (their exact angle table with the nu directions),
    dominant_pair, distance_bound, angle_cone, angle_cone_segment and
    halfplane_split.  Angle gates are toleranced at 1e-9; every value
    comparison is exact.
    """
    if seg.lower is None:
        raise ParameterError("the tripod segment has no lower endpoint")
    pt = seg.lower
    p = seg.flat.p
    F12, F13, F23 = seg.flats

    def toward(y, fl, pat, t=1):
        c = fl.chart(y)
        if c is None:
            raise GeometryError("point left its flat")
        return fl.point(tuple(c[i] + t * pat[i] for i in range(3)))

    ideal = {"12": (F12, VERT), "13": (F13, VERT), "23": (F23, VERT)}
    nu_src = {"1": (F12, (2, -1, -1)), "2": (F23, (2, -1, -1)),
              "3": (F13, (-1, -1, 2))}
    comp = {"12": "3", "13": "2", "23": "1"}

    items, data = {}, {}
    qi = {k: toward(pt, fl, pat) for k, (fl, pat) in ideal.items()}
    angs = {uv: angle(pt, qi[uv[0]], qi[uv[1]])
            for uv in combinations(sorted(qi), 2)}
    items["distinct_directions"] = all(a.radians > 1e-9 for a in angs.values())
    spans = all(a.exact == "2pi/3" for a in angs.values())
    for key, q in qi.items():
        for nk, (fl, pat) in nu_src.items():
            a = angle(pt, q, toward(pt, fl, pat))
            want = "pi" if nk == comp[key] else "pi/3"
            spans = spans and a.exact == want
    items["spans_flat"] = spans

    def beta(fl):
        sb = _scaled_busemann(fl.eta_ij, p)
        h0 = sb.hat(pt)
        return lambda y: sb.hat(y) - h0

    b = {"12": beta(F12), "13": beta(F13), "23": beta(F23)}
    vals = {k: f(x) for k, f in b.items()}
    data["beta"] = vals

    if points_equal(x, pt):
        items.update(dominant_pair=None, angle_cone=None,
                     angle_cone_segment=None, halfplane_split=None)
        items["distance_bound"] = True
        return EndpointReport(items, data)

    ax = {k: angle(pt, x, q) for k, q in qi.items()}
    best = max(ax, key=lambda k: ax[k].radians)
    items["dominant_pair"] = (ax[best].radians >= 2 * math.pi / 3 - 1e-9
                              and all(vals[best] >= v for v in vals.values()))

    dhat = max(max(vals.values()), 0)
    items["distance_bound"] = 3 * distance2(x, pt) <= 2 * dhat * dhat

    dom = [k for k in vals
           if all(vals[k] > vals[o] for o in vals if o != k)]
    if not dom:
        items["angle_cone"] = None
        items["angle_cone_segment"] = None
    else:
        k = dom[0]
        flv, patv = nu_src[comp[k]]
        items["angle_cone"] = (angle(pt, x, toward(pt, flv, patv)).radians
                               < math.pi / 3 + 1e-9)
        ok6 = True
        charts = list(seg.region.sample(5, random.Random(7)))
        charts.append(F12.chart(pt))
        if seg.upper is not None:
            charts.append(F12.chart(seg.upper))
        for c in charts:
            y = F12.point(c)
            if points_equal(y, x):
                continue
            ok6 = ok6 and (angle(y, x, toward(y, flv, patv)).radians
                           < math.pi / 3 + 1e-9)
        items["angle_cone_segment"] = ok6

    a1 = angle(pt, x, toward(pt, F12, LEVEL))
    if a1.radians > math.pi / 2 + 1e-9:
        items["halfplane_split"] = None
    else:
        an1 = angle(pt, x, toward(pt, F12, (2, -1, -1)))
        if an1.radians <= math.pi / 3 + 1e-9:
            data["halfplane_branch"] = "cone"
            items["halfplane_split"] = (vals["23"] >= vals["12"]
                                        and vals["23"] >= vals["13"])
        else:
            data["halfplane_branch"] = "split"
            good = vals["12"] == vals["13"] and vals["12"] > 0
            good = good and 4 * vals["12"] * vals["12"] > 6 * distance2(x, pt)
            a = prev = None
            for t in (4, 8, 16, 32, 64, 128):
                a = angle(x, toward(pt, F12, VERT, t), toward(pt, F13, VERT, t))
                if prev is not None and a.radians == prev.radians:
                    break
                prev = a
            items["halfplane_split"] = good and a.radians <= 1e-9
    return EndpointReport(items, data)


def _rank2(vecs):
    base = None
    for v in vecs:
        if v == (0, 0):
            continue
        if base is None:
            base = v
        elif base[0] * v[1] - base[1] * v[0] != 0:
            return 2
    return 0 if base is None else 1


def _region_shape(R):
    """Coarse shape: empty, point, segment, ray, line, polygon, sector,
    strip, halfplane or plane."""
    if R.is_empty():
        return "empty"
    dirs = [d for d in _HEX_DIRECTIONS if R.has_direction(d)]
    verts = [plane_coords(c) for c in R.vertices()]
    vecs = [plane_coords(d) for d in dirs]
    if len(verts) > 1:
        s0, t0 = verts[0]
        vecs += [(s - s0, t - t0) for s, t in verts[1:]]
    rank = _rank2(vecs)
    if rank == 0:
        return "point"
    if rank == 1:
        if not dirs:
            return "segment"
        return "line" if len(dirs) == 2 else "ray"
    if not dirs:
        return "polygon"
    if len(dirs) == 6:
        return "plane"
    if len(dirs) == 4:
        return "halfplane"
    have = set(dirs)
    if any(tuple(-x for x in d) in have for d in dirs):
        return "strip"
    return "sector"


def region_shape(R):
    """Shape word for a chart region (sector, strip, polygon, ...)."""
    return _region_shape(R)


def random_gl(rng, steps=5):
    """Integer shear product; unimodular, so flags stay integral."""
    g = identity()
    for _ in range(steps):
        i = rng.randrange(3)
        j = (i + rng.randrange(1, 3)) % 3
        rows = [[fr(1 if a == b else 0) for b in range(3)] for a in range(3)]
        rows[i][j] = fr(rng.choice((-2, -1, 1, 2)))
        g = matmul(g, mat(rows))
    return g


def apply_gl_sset(g, s):
    """Image S-set under g; shifts are invariant, so validity carries over."""
    return make_sset(tuple(apply_gl_flag(g, f) for f in s.flags), s.p)


def _random_primitive(rng, height):
    while True:
        v = tuple(rng.randint(-height, height) for _ in range(3))
        if any(v):
            return primitive(v)


def _random_flag(rng, height):
    li = _random_primitive(rng, height)
    for _ in range(64):
        w = _random_primitive(rng, height)
        n = cross(li, w)
        if any(n):
            return flag(li, n)
    raise GeometryError("flag sampling starved")


def _aligned_potential(cand, flags, pots, p):
    # a candidate extends the coboundary structure iff every existing flag
    # proposes the same potential value for it
    val = None
    for f, ph in zip(flags, pots):
        a = _pair_val(f, cand, p) - _pair_val(cand, f, p)
        want = ph - a
        if val is None:
            val = want
        elif val != want:
            return None
    return 0 if val is None else val


def _slide_correction(cand, flags, pots, p, height):
    """Slide the candidate line inside its plane to repair one pairing.

    Applicable when exactly one existing flag disagrees about the
    candidate's potential: the disagreeing valuation is retargeted by a
    rational translation along the plane, then everything is rechecked.
    Returns (flag, potential) or None when no slide works.
    """
    want = {}
    for idx, (f, ph) in enumerate(zip(flags, pots)):
        a = _pair_val(f, cand, p) - _pair_val(cand, f, p)
        want[idx] = ph - a
    counts = Counter(want.values())
    if len(counts) != 2:
        return None
    (consensus, _), (odd, n_odd) = counts.most_common()
    if n_odd != 1:
        return None
    bad = next(i for i, v in want.items() if v == odd)
    f = flags[bad]
    target = _pair_val(f, cand, p) - pots[bad] + consensus
    if target < 0:
        return None
    u, w = plane_basis(cand.plane)
    for slide in (u, w, vadd(u, w)):
        if not any(cross(slide, cand.line)):
            continue
        b0 = dot(slide, f.plane)
        if b0 == 0:
            continue
        a0 = dot(cand.line, f.plane)
        va, vb = valuation(a0, p), valuation(b0, p)
        if va == target:
            continue
        if va > target:
            t = Fraction(p) ** (target - vb)
        else:
            t = Fraction(p ** target - a0, b0)
        line2 = tuple(cand.line[i] * t.denominator + slide[i] * t.numerator
                      for i in range(3))
        if not any(line2):
            continue
        if max(abs(v) for v in primitive(line2)) > height ** 3:
            continue
        cand2 = flag(line2, cand.plane)
        if any(cand2 == h or not opposite(cand2, h) for h in flags):
            continue
        pot2 = _aligned_potential(cand2, flags, pots, p)
        if pot2 is not None:
            return cand2, pot2
    return None


def _plain_sset(p, size, seed, height, budget):
    rng = random.Random(f"sset:{p}:{size}:{height}:{seed}")
    flags, pots = [], []
    corrected = 0
    for _ in range(budget):
        cand = _random_flag(rng, height)
        if any(cand == f or not opposite(cand, f) for f in flags):
            continue
        pot = _aligned_potential(cand, flags, pots, p)
        if pot is None:
            fixed = _slide_correction(cand, flags, pots, p, height)
            if fixed is None:
                continue
            cand, pot = fixed
            corrected += 1
        flags.append(cand)
        pots.append(pot)
        if len(flags) == size:
            out = make_sset(flags, p)
            if not out.ok:
                raise GeometryError(f"generator built an invalid S-set: {out.certificate}")
            return out
    raise BudgetExhausted(
        f"S-set sampling stalled at {len(flags)} of {size} flags",
        {"flags": len(flags), "target": size, "corrected": corrected})


def _shaped_sset(p, seed, height, budget, shape):
    histogram = {"generic": 0, "tree": 0, "fourpod": 0}
    tries = max(1, budget // 40)    # a quadruple costs about forty raw draws
    for attempt in range(tries):
        try:
            s = _plain_sset(p, 4, f"{seed}:{attempt}", height, 400)
        except BudgetExhausted:
            continue
        fps = four_point_structure(s.flags, p)
        histogram[fps.kind] += 1
        if fps.kind == shape:
            return s
    raise BudgetExhausted(f"no {shape} quadruple in {tries} attempts",
                          {"attempts": tries, "shapes": histogram})


def random_sset(p, size=3, seed=0, height=8, budget=4000, shape=None):
    """Random S-set by rejection sampling of flags of bounded height.

    Pairing valuations are kept coboundary-aligned, which forces every
    triple shift to vanish; a candidate that misses alignment by a single
    flag is repaired by sliding its line inside its plane when possible.
    shape (size 4 only) retries until the four point structure has the
    requested kind and raises BudgetExhausted with a partial report when
    the attempts run out.
    """
    check_prime(p)
    if size < 3:
        raise ParameterError("an S-set needs at least three flags")
    if shape is not None:
        if size != 4:
            raise ParameterError("shape targeting needs exactly four flags")
        if shape not in ("generic", "tree", "fourpod"):
            raise ParameterError(f"unknown shape {shape!r}")
        return _shaped_sset(p, seed, height, budget, shape)
    return _plain_sset(p, size, seed, height, budget)


def _example_pool(p):
    scales = (1, -1, p, -p, p * p)
    lines = []
    for a in scales:
        for bb in scales:
            lines.append(primitive((1, a, bb)))
    seconds = ((0, 1, 0), (0, 0, 1), (0, 1, 1), (0, 1, -1), (0, 1, p))
    pool = []
    seen = set()
    for li in lines:
        for w in seconds:
            n = cross(li, w)
            if not any(n):
                continue
            f = flag(li, n)
            if f not in seen:
                seen.add(f)
                pool.append(f)
    return pool


@lru_cache(maxsize=8)
def four_point_example(p=5):
    """Deterministic quadruple with p != p' at distinct b_{1,2} levels.

    Scans a fixed family of branched flags over the standard opposite
    pair and returns the first quadruple whose structure is generic (so
    no embedded tree realizes its four boundary points) and whose double
    intersection F_{1,2} cap F_{2,3} is a flat sector.
    """
    check_prime(p)
    f1 = flag((1, 0, 0), (0, 0, 1))
    f2 = flag((0, 0, 1), (1, 0, 0))
    pool = _example_pool(p)
    for f3 in pool:
        if not (opposite(f1, f3) and opposite(f2, f3)):
            continue
        if _pairing_shift_hat(f1, f2, f3, p) != 0:
            continue
        shape = _region_shape(intersect_flats(_flat(f1, f2, p), _flat(f2, f3, p)))
        if shape != "sector":
            continue
        for f4 in pool:
            if f4 == f3 or not (opposite(f1, f4) and opposite(f2, f4)
                                and opposite(f3, f4)):
                continue
            quad = (f1, f2, f3, f4)
            if any(_pairing_shift_hat(quad[i], quad[j], quad[k], p) != 0
                   for i, j, k in combinations(range(4), 3)):
                continue
            fps = four_point_structure(quad, p)
            if fps.kind == "generic":
                return make_sset(quad, p)
    raise GeometryError("no generic example found in the scan pool")
