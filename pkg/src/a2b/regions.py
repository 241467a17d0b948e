"""Exact half-plane geometry inside a single flat chart.

A chart identifies a flat with the plane of mean-zero weight triples.
Regions are finite intersections of half-planes with integer normals,
and every query (feasibility, extents, nearest point) runs over
Fractions via Fourier-Motzkin elimination, so answers are exact.

Plane coordinates: c = (s, t - s, -t), i.e. (s, t) = (c0, -c2).  The
ambient squared length of a mean-zero triple restricts to the Gram form
[[2, -1], [-1, 2]] in these coordinates.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import gcd

from .exact import GeometryError, ParameterError
from .mat3 import dot, fr, tl

F0 = Fraction(0)
F1 = Fraction(1)

# Normals of the six wall-parallel half-plane families (kernels are the
# singular directions of the chart).
SINGULAR_NORMALS = (
    (1, -1, 0), (-1, 1, 0), (0, 1, -1), (0, -1, 1), (1, 0, -1), (-1, 0, 1))


def plane_coords(c):
    """(s, t) coordinates of a weight triple, recentered to mean zero."""
    v = tl(c)
    return (v[0], -v[2])


def weight_coords(st):
    s, t = st
    return (s, t - s, -t)


def gram2(u):
    """Squared chart length of a plane vector (s, t)."""
    s, t = u
    return 2 * s * s - 2 * s * t + 2 * t * t


def functional(n):
    """Plane coefficients (a, b) of c -> <n, c> on mean-zero triples."""
    return (fr(n[0]) - fr(n[1]), fr(n[1]) - fr(n[2]))


def halfplane(n, rhs=0):
    """Half-plane {c : <n, c> >= rhs} on mean-zero weight triples.

    The normal is projected to mean zero and scaled to a primitive
    integer vector; rhs is scaled along, so the set is unchanged.
    """
    a, b, c = (fr(v) for v in n)
    r = fr(rhs)
    m = a + b + c
    a, b, c, r = 3 * a - m, 3 * b - m, 3 * c - m, 3 * r
    if a == b == c == 0:
        raise ParameterError("normal is constant on the chart")
    den = a.denominator
    den = den * b.denominator // gcd(den, b.denominator)
    den = den * c.denominator // gcd(den, c.denominator)
    ai, bi, ci = int(a * den), int(b * den), int(c * den)
    g = gcd(gcd(abs(ai), abs(bi)), abs(ci))
    return HalfPlane((ai // g, bi // g, ci // g), r * den / g)


@dataclass(frozen=True)
class HalfPlane:
    n: tuple        # primitive integer normal with zero sum
    rhs: Fraction   # the constraint is <n, c> >= rhs


def region(halfplanes=()):
    """Region cut out by the given half-planes (canonical constraint list).

    Parallel same-direction constraints collapse to the tightest one and
    the list is sorted, so equal constructions compare equal.
    """
    best = {}
    for hp in halfplanes:
        cur = best.get(hp.n)
        if cur is None or hp.rhs > cur:
            best[hp.n] = hp.rhs
    return ConvexRegion(tuple(HalfPlane(n, r) for n, r in sorted(best.items())))


def whole_plane():
    return region(())


def _project(cons, func):
    """Range of a*s + b*t over {cons}; returns (feasible, lo, hi).

    cons is a list of rows (a, b, r) meaning a*s + b*t >= r.  None for
    lo or hi means unbounded on that side.  Fourier-Motzkin: rotate so
    the target functional is the first axis, eliminate the second.
    """
    alpha, beta = func
    if alpha == 0 and beta == 0:
        if not cons:
            return True, F0, F0
        ok, _, _ = _project(cons, (F1, F0))
        return ok, F0, F0
    det = alpha * alpha + beta * beta
    lowers = []     # z >= slope*w + icept
    uppers = []
    wcons = []      # rows (cw, rr): cw*w >= rr
    for a, b, r in cons:
        cw = a * alpha + b * beta
        cz = b * alpha - a * beta
        rr = r * det
        if cz == 0:
            wcons.append((cw, rr))
        else:
            slope, icept = -cw / cz, rr / cz
            (lowers if cz > 0 else uppers).append((slope, icept))
    for ls, li in lowers:
        for us, ui in uppers:
            # a z between the two lines exists iff (us-ls)*w >= li-ui
            wcons.append((us - ls, li - ui))
    feasible = True
    lo = hi = None
    for cw, rr in wcons:
        if cw == 0:
            if rr > 0:
                feasible = False
        elif cw > 0:
            v = rr / cw
            if lo is None or v > lo:
                lo = v
        else:
            v = rr / cw
            if hi is None or v < hi:
                hi = v
    if lo is not None and hi is not None and lo > hi:
        feasible = False
    return feasible, lo, hi


def _pick(lo, hi):
    if lo is None and hi is None:
        return F0
    if lo is None:
        return hi - 1
    if hi is None:
        return lo + 1
    return (lo + hi) / 2


def _rand_in(lo, hi, rng, window):
    if lo is None and hi is None:
        lo, hi = -window, window
    elif lo is None:
        lo = hi - window
    elif hi is None:
        hi = lo + window
    return lo + (hi - lo) * Fraction(rng.randrange(0, 49), 48)


@dataclass(frozen=True)
class ConvexRegion:
    halfplanes: tuple

    @cached_property
    def _cons(self):
        return tuple(functional(hp.n) + (hp.rhs,) for hp in self.halfplanes)

    @cached_property
    def _empty(self):
        ok, _, _ = _project(self._cons, (F1, F0))
        return not ok

    def is_empty(self):
        return self._empty

    def contains(self, c):
        s, t = plane_coords(c)
        return all(a * s + b * t >= r for a, b, r in self._cons)

    def extent(self, n):
        """Exact (min, max) of <n, .> over the region; None = unbounded."""
        if self._empty:
            raise GeometryError("extent of an empty region")
        _, lo, hi = _project(self._cons, functional(n))
        return lo, hi

    def minimize(self, n):
        return self.extent(n)[0]

    def maximize(self, n):
        return self.extent(n)[1]

    def feasible_point(self):
        """A mean-zero triple inside the region, or None when empty."""
        ok, lo, hi = _project(self._cons, (F1, F0))
        if not ok:
            return None
        s = _pick(lo, hi)
        tlo = thi = None
        for a, b, r in self._cons:
            if b == 0:
                continue    # pure s-constraints already hold at s
            v = (r - a * s) / b
            if b > 0:
                tlo = v if tlo is None or v > tlo else tlo
            else:
                thi = v if thi is None or v < thi else thi
        return weight_coords((s, _pick(tlo, thi)))

    def sample(self, k, rng, window=8):
        """k exact member points; deterministic for a seeded rng.

        Unbounded coordinate ranges are clipped to the given window
        before drawing, so samples stay near the interesting part.
        """
        if self._empty:
            return []
        win = fr(window)
        _, slo, shi = _project(self._cons, (F1, F0))
        pts = []
        for _ in range(k):
            s = _rand_in(slo, shi, rng, win)
            tlo = thi = None
            for a, b, r in self._cons:
                if b == 0:
                    continue
                v = (r - a * s) / b
                if b > 0:
                    tlo = v if tlo is None or v > tlo else tlo
                else:
                    thi = v if thi is None or v < thi else thi
            pts.append(weight_coords((s, _rand_in(tlo, thi, rng, win))))
        return pts

    def vertices(self):
        """Corner points as mean-zero triples, deduplicated and sorted."""
        cons = self._cons
        seen = set()
        for i in range(len(cons)):
            a1, b1, r1 = cons[i]
            for j in range(i + 1, len(cons)):
                a2, b2, r2 = cons[j]
                det = a1 * b2 - a2 * b1
                if det == 0:
                    continue
                s = (r1 * b2 - r2 * b1) / det
                t = (a1 * r2 - a2 * r1) / det
                if all(a * s + b * t >= r for a, b, r in cons):
                    seen.add((s, t))
        return [weight_coords(st) for st in sorted(seen)]

    def nearest(self, c):
        """(squared distance, nearest point) from c in the chart metric.

        The projection onto a nonempty polyhedron lies on a constraint
        line or at a vertex, so candidate enumeration is exhaustive and
        the result is exact.
        """
        if self._empty:
            raise GeometryError("nearest point in an empty region")
        s0, t0 = plane_coords(c)
        if all(a * s0 + b * t0 >= r for a, b, r in self._cons):
            return F0, weight_coords((s0, t0))
        cons = self._cons
        best = None
        for a, b, r in cons:
            q = 2 * (a * a + a * b + b * b) / 3     # <n, Ginv n> > 0
            lam = (r - (a * s0 + b * t0)) / q
            fs = s0 + lam * (2 * a + b) / 3
            ft = t0 + lam * (a + 2 * b) / 3
            if all(aa * fs + bb * ft >= rr for aa, bb, rr in cons):
                d2 = lam * lam * q
                if best is None or d2 < best[0]:
                    best = (d2, (fs, ft))
        for v in self.vertices():
            vs, vt = plane_coords(v)
            d2 = gram2((s0 - vs, t0 - vt))
            if best is None or d2 < best[0]:
                best = (d2, (vs, vt))
        if best is None:
            raise GeometryError("projection candidates exhausted")
        return best[0], weight_coords(best[1])

    def dist2(self, c):
        return self.nearest(c)[0]

    def intersect(self, other):
        return region(self.halfplanes + other.halfplanes)

    def cut(self, n, rhs=0):
        return region(self.halfplanes + (halfplane(n, rhs),))

    def cut_eq(self, n, value):
        hp = halfplane(n, value)
        neg = HalfPlane(tuple(-v for v in hp.n), -hp.rhs)
        return region(self.halfplanes + (hp, neg))

    def has_direction(self, d):
        """True when the recession cone contains the direction d."""
        s, t = plane_coords(d)
        return all(a * s + b * t >= 0 for a, b, _ in self._cons)

    def bounded(self):
        if self._empty:
            return True
        for f in ((F1, F0), (F0, F1)):
            _, lo, hi = _project(self._cons, f)
            if lo is None or hi is None:
                return False
        return True

    def contains_region(self, other):
        """True when other is a subset of self."""
        if other._empty:
            return True
        if self._empty:
            return False
        for hp in self.halfplanes:
            _, lo, _ = _project(other._cons, functional(hp.n))
            if lo is None or lo < hp.rhs:
                return False
        return True

    def equals(self, other):
        return self.contains_region(other) and other.contains_region(self)

    def reduced(self):
        """Drop half-planes implied by the rest (exact LP test each)."""
        if self._empty:
            return self
        keep = list(self.halfplanes)
        i = 0
        while i < len(keep):
            rest = keep[:i] + keep[i + 1:]
            cons = tuple(functional(hp.n) + (hp.rhs,) for hp in rest)
            ok, lo, _ = _project(cons, functional(keep[i].n))
            if ok and lo is not None and lo >= keep[i].rhs:
                keep.pop(i)
            else:
                i += 1
        return ConvexRegion(tuple(keep))


def singular_hull(points, rays=()):
    """Smallest region cut by wall-parallel half-planes that contains the
    given chart points; a ray direction knocks out every family it exits."""
    pts = [tl(p) for p in points]
    if not pts:
        raise ParameterError("singular hull needs at least one point")
    dirs = [tl(r) for r in rays]
    hps = []
    for n in SINGULAR_NORMALS:
        if any(dot(n, d) < 0 for d in dirs):
            continue
        hps.append(halfplane(n, min(dot(n, q) for q in pts)))
    return region(hps)
