"""Ideal boundary objects: flags, singular directions, flats, Busemann functions.

A flag is an incident (line, plane) pair over Q, each stored as a primitive
integer vector (the plane through its normal covector).  Ideal points come
in three kinds: "nu" (a line vertex), "mu" (a plane vertex), and "center"
(the regular midpoint direction of a flag's chamber).  Two opposite flags
span a flat, charted by the frame (L_i, P_i ^ P_j, L_j).

Busemann functions are evaluated exactly in scaled units: hat(b) is the
integer-pattern linear functional on any adapted chart, which equals
sqrt(6) * b for vertex kinds and sqrt(2) * b for chamber centers.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import product

from .core import AngleValue, chart_weights, lattice_point, norm_point
from .exact import INF, GeometryError, ParameterError, RadicalValue, valuation
from .mat3 import (col, cross, det3, dot, fr, from_cols, inv3, is_zero_vec,
                   matmul, matvec, norm2)


class NotOpposite(GeometryError):
    """The two flags do not span a flat."""


def primitive(v):
    """Scale a nonzero rational 3-vector to primitive integers with the
    first nonzero entry positive."""
    vv = tuple(fr(x) for x in v)
    if is_zero_vec(vv):
        raise ParameterError("zero vector has no primitive form")
    den = 1
    for x in vv:
        den = den * x.denominator // math.gcd(den, x.denominator)
    ints = [int(x * den) for x in vv]
    g = math.gcd(math.gcd(abs(ints[0]), abs(ints[1])), abs(ints[2]))
    ints = [x // g for x in ints]
    lead = next(x for x in ints if x != 0)
    if lead < 0:
        ints = [-x for x in ints]
    return tuple(ints)


def plane_through(u, v):
    """Normal covector of the plane spanned by two independent vectors."""
    n = cross(u, v)
    if is_zero_vec(n):
        raise ParameterError("vectors do not span a plane")
    return primitive(n)


@dataclass(frozen=True)
class Flag:
    line: tuple     # primitive integer direction
    plane: tuple    # primitive integer normal covector, the plane is its kernel


def flag(line, plane):
    """Incident (line, plane) pair in canonical integer form."""
    li, pl = primitive(line), primitive(plane)
    if dot(pl, li) != 0:
        raise ParameterError("line does not lie in the plane")
    return Flag(li, pl)


def flag_span(line, other):
    """Flag whose plane is spanned by the line and a second vector."""
    li = primitive(line)
    return Flag(li, plane_through(li, other))


def plane_basis(n):
    """Two independent integer vectors spanning the plane with normal n."""
    for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
        u = cross(n, e)
        if not is_zero_vec(u):
            return u, cross(n, u)
    raise ParameterError("zero normal has no plane")


def apply_gl_flag(g, f):
    """Image of a flag under g in GL_3(Q).

    The line maps directly; the plane maps by the span of its image, so
    the normal picks up the inverse transpose without ever inverting g.
    """
    u, w = plane_basis(f.plane)
    n = cross(matvec(g, u), matvec(g, w))
    return flag(primitive(matvec(g, f.line)), primitive(n))


@dataclass(frozen=True)
class IdealPoint:
    kind: str       # "nu" | "mu" | "center"
    line: tuple
    plane: tuple


def nu_point(line):
    return IdealPoint("nu", primitive(line), None)


def mu_point(plane):
    return IdealPoint("mu", None, primitive(plane))


def center_point(f):
    return IdealPoint("center", f.line, f.plane)


def opposite(f, g):
    """Whether two flags are opposite (span a flat).

    Equivalent to L_f not in P_g and L_g not in P_f: the three lines
    L_f, P_f ^ P_g, L_g are independent exactly in that case.
    """
    m = cross(f.plane, g.plane)
    return det3(from_cols(f.line, m, g.line)) != 0


def flat(f, g, p):
    """The flat spanned by two opposite flags, for the prime p."""
    if not opposite(f, g):
        raise NotOpposite("flags are not opposite")
    frame = from_cols(f.line, primitive(cross(f.plane, g.plane)), g.line)
    fl = Flat(p, f, g, frame)
    # the six boundary vertices must close up into a hexagon of pi/3 steps
    hexagon = fl.vertex_cycle()
    for a, b in zip(hexagon, hexagon[1:] + hexagon[:1]):
        if tits_angle(a, b).exact != "pi/3":
            raise GeometryError("flat boundary does not close up")
    return fl


@dataclass(frozen=True)
class Flat:
    p: int
    fi: Flag
    fj: Flag
    frame: tuple    # columns (L_i, P_i ^ P_j, L_j)

    @cached_property
    def base(self):
        return lattice_point(self.p, self.frame)

    def point(self, c):
        return norm_point(self.p, self.frame, tuple(fr(v) for v in c))

    def chart(self, x):
        """Chart weights of x in this flat, or None when x is outside."""
        return chart_weights(x, self.frame)

    def contains(self, x):
        return self.chart(x) is not None

    # boundary points, named by their position on the hexagon
    @cached_property
    def nu_i(self):
        return nu_point(col(self.frame, 0))

    @cached_property
    def nu_j(self):
        return nu_point(col(self.frame, 2))

    @cached_property
    def xi_ij(self):
        return nu_point(col(self.frame, 1))

    @cached_property
    def mu_i(self):
        return mu_point(self.fi.plane)

    @cached_property
    def mu_j(self):
        return mu_point(self.fj.plane)

    @cached_property
    def eta_ij(self):
        return mu_point(plane_through(col(self.frame, 0), col(self.frame, 2)))

    @cached_property
    def center_i(self):
        return center_point(self.fi)

    @cached_property
    def center_j(self):
        return center_point(self.fj)

    def vertex_cycle(self):
        """The six singular boundary vertices in cyclic order."""
        return [self.nu_i, self.eta_ij, self.nu_j,
                self.mu_j, self.xi_ij, self.mu_i]


def flat_vertices(fl):
    """Singular vertices of the flat's boundary circle, cyclic order:
    nu_i, eta_ij, nu_j, mu_j, xi_ij, mu_i (consecutive angles pi/3)."""
    return tuple(fl.vertex_cycle())


def adapted_pattern(ideal, frame):
    """Slotted direction pattern of an ideal point in a frame's chart.

    Returns the integer weight-direction toward the point (the chart is
    adapted), or None when the frame's apartment does not see it.
    Patterns have zero sum; squared length 6 for vertices, 2 for centers.
    """
    cols = [col(frame, k) for k in range(3)]
    if ideal.kind == "nu":
        hits = [k for k in range(3) if is_zero_vec(cross(cols[k], ideal.line))]
        if len(hits) != 1:
            return None
        pat = [-1, -1, -1]
        pat[hits[0]] = 2
        return tuple(pat)
    if ideal.kind == "mu":
        hits = [k for k in range(3) if dot(ideal.plane, cols[k]) == 0]
        if len(hits) != 2:
            return None
        pat = [-2, -2, -2]
        for k in hits:
            pat[k] = 1
        return tuple(pat)
    if ideal.kind == "center":
        line_hits = [k for k in range(3)
                     if is_zero_vec(cross(cols[k], ideal.line))]
        plane_hits = [k for k in range(3) if dot(ideal.plane, cols[k]) == 0]
        if len(line_hits) != 1 or len(plane_hits) != 2:
            return None
        k = line_hits[0]
        if k not in plane_hits:
            return None
        pat = [0, 0, 0]
        pat[k] = 1
        pat[3 - k - (plane_hits[0] + plane_hits[1] - k)] = -1
        return tuple(pat)
    raise ParameterError("unknown ideal point kind %r" % (ideal.kind,))


_TAGS = {"0": 0.0, "pi/6": math.pi / 6, "pi/3": math.pi / 3,
         "pi/2": math.pi / 2, "2pi/3": 2 * math.pi / 3,
         "5pi/6": 5 * math.pi / 6, "pi": math.pi}


def _angle(tag):
    return AngleValue(_TAGS[tag], tag)


def tits_angle(a, b):
    """Tits distance between two ideal points, always an exact tag.

    Same-kind vertices sit at 0 or 2pi/3; a nu/mu pair at pi/3 when
    incident, else pi.  Chamber centers: 0, pi/3 across a shared wall,
    pi when the flags are opposite, 2pi/3 otherwise; center-to-vertex
    distances are pi/6, pi/2 or 5pi/6 by the same wall bookkeeping.
    """
    ka, kb = a.kind, b.kind
    if ka > kb:     # orient mixed pairs: "center" < "mu" < "nu"
        a, b, ka, kb = b, a, kb, ka
    if ka == kb == "nu":
        return _angle("0" if a.line == b.line else "2pi/3")
    if ka == kb == "mu":
        return _angle("0" if a.plane == b.plane else "2pi/3")
    if (ka, kb) == ("mu", "nu"):
        return _angle("pi/3" if dot(a.plane, b.line) == 0 else "pi")
    if ka == kb == "center":
        if a == b:
            return _angle("0")
        if a.line == b.line or a.plane == b.plane:
            return _angle("pi/3")
        if opposite(Flag(a.line, a.plane), Flag(b.line, b.plane)):
            return _angle("pi")
        return _angle("2pi/3")
    if (ka, kb) == ("center", "nu"):
        if a.line == b.line:
            return _angle("pi/6")
        return _angle("pi/2" if dot(a.plane, b.line) == 0 else "5pi/6")
    if (ka, kb) == ("center", "mu"):
        if a.plane == b.plane:
            return _angle("pi/6")
        return _angle("pi/2" if dot(b.plane, a.line) == 0 else "5pi/6")
    raise ParameterError("unsupported ideal point kinds")


_EI = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


def _kernel_candidates(p):
    return ((p[1], -p[0], 0), (p[2], 0, -p[0]), (0, p[2], -p[1]))


def _seed_chart(ideal):
    """Deterministic frame containing the ideal point, plus its pattern."""
    if ideal.kind == "nu":
        li = ideal.line
        for a, b in ((0, 1), (0, 2), (1, 2)):
            m = from_cols(li, _EI[a], _EI[b])
            if det3(m) != 0:
                return m, (2, -1, -1)
        raise GeometryError("line cannot be completed to a frame")
    if ideal.kind == "mu":
        cands = [c for c in _kernel_candidates(ideal.plane)
                 if not is_zero_vec(c)]
        k1 = cands[0]
        k2 = next(c for c in cands[1:] if not is_zero_vec(cross(k1, c)))
        w = next(e for e in _EI if dot(ideal.plane, e) != 0)
        return from_cols(k1, k2, w), (1, 1, -2)
    li = ideal.line
    m = next(c for c in _kernel_candidates(ideal.plane)
             if not is_zero_vec(c) and not is_zero_vec(cross(c, li)))
    w = next(e for e in _EI if dot(ideal.plane, e) != 0)
    return from_cols(li, m, w), (1, 0, -1)


class ScaledBusemann:
    """Exact Busemann function of an ideal point in hatted units.

    hat(x) is anchored to 0 at the seed chart's lattice point and equals
    sqrt(|pattern|^2) times the metric Busemann function.

    Evaluation is a closed form: every norm splits along any line or
    flag, so in some adapted apartment the pattern functional holds, and
    its ingredients are frame-invariant.  With D(x) the log-covolume
    (weight sum minus val det of the frame), L0 the primitive line
    vector and w(x) the wedge-norm value of the plane (weights c_i + c_j
    in any adapted frame), the value decreasing toward the ideal point:

        nu(L):        D(x) - 3 nu_x(L0)
        mu(P):        2 D(x) - 3 w(x)
        center(L,P):  D(x) - nu_x(L0) - w(x)
    """

    def __init__(self, ideal, p):
        self.ideal = ideal
        self.p = p
        frame, pat = _seed_chart(ideal)
        self.scale = norm2(pat)     # 6 for vertices, 2 for centers
        self._raw0 = 0
        self._raw0 = self._raw(lattice_point(p, frame))

    def _dvol(self, x):
        # weight sum minus val det is presentation-invariant: rescaling a
        # column shifts its weight and the determinant by the same amount
        return sum(x.weights) - valuation(det3(x.frame), self.p)

    def _wedge(self, x):
        """Wedge-norm value of the plane's wedge line, represented by the
        primitive normal covector n: coordinates of the wedge in x's frame
        are B^T n up to det(B), and the pair weight c_i + c_j is the total
        weight minus the complementary one."""
        n = self.ideal.plane
        b = x.frame
        total = sum(x.weights)
        best = None
        for k in range(3):
            v = valuation(dot(col(b, k), n), self.p)
            if v is INF:
                continue
            cand = v + total - x.weights[k]
            if best is None or cand < best:
                best = cand
        if best is None:
            raise GeometryError("degenerate plane covector")
        return best - valuation(det3(b), self.p)

    def _raw(self, x):
        if x.p != self.p:
            raise ParameterError("point lives over a different prime")
        k = self.ideal.kind
        if k == "nu":
            return self._dvol(x) - 3 * x.nu(self.ideal.line)
        if k == "mu":
            return 2 * self._dvol(x) - 3 * self._wedge(x)
        return self._dvol(x) - x.nu(self.ideal.line) - self._wedge(x)

    def hat(self, x):
        return self._raw(x) - self._raw0

    def pattern_on(self, frame):
        return adapted_pattern(self.ideal, frame)

    def linear_on_flat(self, fl):
        """(pattern, offset) with hat = offset - <pattern, chart weights>
        on the flat, or None when the flat does not see the ideal point."""
        pat = adapted_pattern(self.ideal, fl.frame)
        if pat is None:
            return None
        return pat, self.hat(fl.base)


class BusemannFunction:
    """Busemann function of an ideal point, zero at a chosen origin.

    value() returns the metric quantity as an exact radical; hat() is the
    same number scaled by sqrt(6) (vertex kinds) or sqrt(2) (centers).
    """

    def __init__(self, ideal, p, origin):
        self.ideal = ideal
        self.p = p
        self.origin = origin
        self._sb = _scaled_busemann(ideal, p)
        self._h0 = self._sb.hat(origin)

    @property
    def scale(self):
        return self._sb.scale

    def hat(self, x):
        return self._sb.hat(x) - self._h0

    def value(self, x):
        s = self._sb.scale
        return RadicalValue(self.hat(x) / s, s)


@lru_cache(maxsize=4096)
def _scaled_busemann(ideal, p):
    return ScaledBusemann(ideal, p)


def busemann(ideal, p, origin=None):
    """BusemannFunction of the ideal point, vanishing at origin (default:
    the standard lattice point)."""
    if origin is None:
        from .core import standard_point
        origin = standard_point(p)
    return BusemannFunction(ideal, p, origin)


def busemann_eval(b, x):
    """Exact metric value b(x) as a RadicalValue."""
    return b.value(x)


def _empty_region():
    from .regions import HalfPlane, ConvexRegion
    return ConvexRegion((HalfPlane((-1, 1, 0), Fraction(1)),
                         HalfPlane((1, -1, 0), Fraction(1))))


@lru_cache(maxsize=4096)
def intersect_flats(fa, fb):
    """Region of fa's chart whose points lie in fb's apartment.

    With M the transition matrix, a point with mean-zero chart weights c
    belongs to both apartments iff sum_k min_l (val M_lk + c_l) equals
    val det M; the minimum never exceeds it, so membership is the system
    of linear inequalities over all index maps.  Bijections contribute
    constants and detect empty intersections.
    """
    if fa.p != fb.p:
        raise ParameterError("flats live over different primes")
    from .regions import halfplane, region
    m = matmul(inv3(fa.frame), fb.frame)
    p = fa.p
    a = [[valuation(m[l][k], p) for k in range(3)] for l in range(3)]
    vdet = valuation(det3(m), p)
    hps = []
    for tau in product(range(3), repeat=3):
        s = 0
        for k in range(3):
            v = a[tau[k]][k]
            if v is INF:
                s = None
                break
            s += v
        if s is None:
            continue
        counts = [0, 0, 0]
        for k in range(3):
            counts[tau[k]] += 1
        rhs = vdet - s
        if counts == [1, 1, 1]:
            if rhs > 0:
                return _empty_region()
        else:
            hps.append(halfplane(tuple(c - 1 for c in counts), rhs))
    return region(hps)
