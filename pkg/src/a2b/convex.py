"""Thickened convex sets over an S-set and their verification harness.

The asymptote tree hands every tree point [x] a family of flats; thickening
the strips of those flats by a common margin gives a convex set K, and
trimming K by balls around the clamped class slices gives a smaller set C
whose boundary at infinity is exactly the chamber centers of the S-set.

Everything here is exact: window half-widths, thresholds and radii are
rationals in the hatted (sqrt(6)-scaled) Busemann units, membership of the
basic sets is decided by closed <= comparisons, and ball tests return a
certified three-way verdict (in / out / boundary within the guard).

The sampled verification harness draws member pairs, walks exact rational
parameters along their geodesic and reports every certified violation of
convexity; randomness is derived from (seed, index) so reports reproduce
under a fixed master seed regardless of the thread count.
"""

from __future__ import annotations

import math
import os
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .boundary import (_scaled_busemann, center_point, intersect_flats,
                       tits_angle)
from .core import (common_frame, distance2, geodesic_point, lattice_point,
                   norm_point)
from .exact import INF, GeometryError, ParameterError, valuation
from .mat3 import col, det3, dot, fr, inv_cached, matvec, vadd, vec, vscale, vsub
from .regions import whole_plane
from .tree import (TreePoint, _anchors, _center_line, _locate, build_tree,
                   class_set, membership_pairs, tripod_of)
from .tripods import LEVEL, VERT, SSet, Tripod, _class_hat

__all__ = [
    "Config", "Setting", "SetOracle", "VerificationReport",
    "HypothesisRejected", "SamplerStarved",
    "normalize_sset", "epsilon_from_config",
    "k_oracle", "c_oracle", "horoball_union", "thicken_tripod",
    "two_ball_oracle", "member_sampler",
    "verify_convexity", "verify_rank1", "tree_point_along",
]


class HypothesisRejected(ParameterError):
    """A stated hypothesis of a construction fails; nothing was verified."""


class SamplerStarved(GeometryError):
    """No member produced within the attempt budget."""

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = dict(stats or {})


# ---------------------------------------------------------------------------
# fast Busemann evaluation along a fixed frame

_ZERO3 = (Fraction(0), Fraction(0), Fraction(0))


class _FrameHat:
    """One hatted Busemann function pinned to a fixed frame.

    With the frame fixed, the value at weights w is an explicit min-formula
    in w; the valuations entering it are computed once.  The additive anchor
    is calibrated against the exact evaluator at the frame's lattice point,
    so the formula agrees with hat() on every presentation over this frame.
    """

    __slots__ = ("kind", "us", "vs", "vd", "c0")

    def __init__(self, sb, p, frame):
        ideal = sb.ideal
        self.kind = ideal.kind
        self.vd = valuation(det3(frame), p)
        self.us = self.vs = None
        if self.kind in ("nu", "center"):
            a = matvec(inv_cached(frame), vec(ideal.line))
            self.us = tuple(valuation(a[i], p) for i in range(3))
        if self.kind in ("mu", "center"):
            n = vec(ideal.plane)
            self.vs = tuple(valuation(dot(col(frame, k), n), p)
                            for k in range(3))
        self.c0 = 0
        self.c0 = fr(sb.hat(lattice_point(p, frame))) - self._value(_ZERO3)

    def _value(self, w):
        total = w[0] + w[1] + w[2]
        dv = total - self.vd
        if self.kind == "nu":
            nu = min(self.us[i] + w[i] for i in range(3)
                     if self.us[i] is not INF)
            return dv - 3 * nu
        if self.kind == "mu":
            wg = min(self.vs[k] + total - w[k] for k in range(3)
                     if self.vs[k] is not INF) - self.vd
            return 2 * dv - 3 * wg
        nu = min(self.us[i] + w[i] for i in range(3) if self.us[i] is not INF)
        wg = min(self.vs[k] + total - w[k] for k in range(3)
                 if self.vs[k] is not INF) - self.vd
        return dv - nu - wg

    def __call__(self, w):
        return self._value(w) + self.c0


class SegmentContext:
    """Exact evaluation along the geodesic between two points.

    Both endpoints are split by one common frame, so the point at parameter
    t has weights (1-t) wx + t wy and every hat value is a cached
    frame-formula; no re-stabilization happens per parameter.
    """

    def __init__(self, x, y):
        if x.p != y.p:
            raise ParameterError("segment endpoints over different primes")
        self.p = x.p
        self.x = x
        self.y = y
        frame, wx, wy = common_frame(x, y)
        self.frame = frame
        self.wx = wx
        self.wy = wy
        self._hats = {}
        self._points = {}

    def weights(self, t):
        t = fr(t)
        return tuple(self.wx[i] + t * (self.wy[i] - self.wx[i])
                     for i in range(3))

    def point(self, t):
        t = fr(t)
        got = self._points.get(t)
        if got is None:
            got = norm_point(self.p, self.frame, self.weights(t))
            self._points[t] = got
        return got

    def hat(self, sb, w):
        key = id(sb)
        got = self._hats.get(key)
        if got is None or got[0] is not sb:
            got = (sb, _FrameHat(sb, self.p, self.frame))
            self._hats[key] = got
        return got[1](w)


# ---------------------------------------------------------------------------
# epsilon for local-mode verification

_SIN_HALF_ALPHA_LO = Fraction(13052, 100000)   # below sin(pi/24)


def _check_alpha_constants():
    """Exact inequalities behind the wedge angle pi/12.

    cos(3 pi/4) <= -6/11 and cos(pi/12) > 10/11 make the first grid angle
    work; the second inequality doubles as (11/2) cos(alpha) > 5.  All of
    them, and the stored lower bound for sin(pi/24), reduce to integer
    comparisons.
    """
    # cos(3 pi/4)^2 = 1/2 >= (6/11)^2, both sides negative before squaring
    if not Fraction(1, 2) >= Fraction(36, 121):
        raise GeometryError("wedge angle fails the opening inequality")
    # cos(pi/12)^2 = (2 + sqrt(3))/4 > (10/11)^2  <=>  3 * 121^2 > 158^2
    if not 3 * 121**2 > 158**2:
        raise GeometryError("wedge angle fails the closing inequality")
    # sin(pi/24) >= q  <=>  cos(pi/12) <= 1 - 2 q^2, squared twice
    q = _SIN_HALF_ALPHA_LO
    lhs = 4 * (1 - 2 * q * q) ** 2 - 2
    if not (lhs > 0 and lhs * lhs >= 3):
        raise GeometryError("stored sine bound is not a lower bound")


def _eps_hat_of(s_hat):
    # 127/128 keeps the gate strictly below the geometric threshold
    return 3 * s_hat * _SIN_HALF_ALPHA_LO * Fraction(127, 128)


def epsilon_from_config(s_hat):
    """(epsilon, alpha) for local-mode verification at half-width S.

    alpha is the first grid angle pi/12; epsilon comes from the triangle
    with two sides of length 3S meeting at angle alpha, whose base the
    pair gate must stay under.  epsilon scales linearly with S; alpha
    does not depend on it.
    """
    s_hat = fr(s_hat)
    if s_hat <= 0:
        raise ParameterError("window half-width must be positive")
    _check_alpha_constants()
    return float(_eps_hat_of(s_hat)) / math.sqrt(6.0), math.pi / 12


# ---------------------------------------------------------------------------
# the normalized setting

@dataclass(frozen=True)
class Config:
    """Numeric contract of a normalized S-set, in hatted units."""

    s_hat: Fraction             # window half-width S
    r_hat: Fraction             # ball radius R, > 10 S
    level_hat: Fraction         # membership threshold, 4 S
    eps_hat: Fraction           # pair gate for local-mode verification
    epsilon: float              # eps_hat / sqrt(6), metric units
    alpha_hat: float            # wedge angle used to derive epsilon
    pairs_n: int = 250          # default sampled pairs per verification
    params_n: int = 32          # interior parameters per segment
    seed: object = "a2b"
    guard: Fraction = Fraction(1, 10**9)


@dataclass(frozen=True)
class PairWindows:
    """Per-pair normalization data on the flat of (i, j)."""

    i: int
    j: int
    flat: object
    sb_eta: object          # hatted vertex function, i side
    sb_xi: object           # hatted vertex function, j side
    pat_eta: tuple
    off_eta: Fraction
    pat_xi: tuple
    off_xi: Fraction
    c_hat: Fraction         # eta + xi value on the flat
    sigma: Fraction         # eta normalizer: b = hat - sigma
    sigma_xi: Fraction      # xi normalizer; sigma + sigma_xi == c_hat
    strip: object           # |b| <= S slab in the flat chart


def _interval_gap(v, lo, hi):
    """Distance from v to [lo, hi]; None bounds mean unbounded."""
    if lo is not None and v < lo:
        return lo - v
    if hi is not None and v > hi:
        return v - hi
    return Fraction(0)


class Setting:
    """An S-set with consistently centered vertical windows.

    The class coordinates of the canonical tripodal points are centered by
    one offset per end; zero triple shifts make the per-pair centerings
    agree across flats, which is re-verified exactly.  All windows share
    the half-width S (at least s_min), membership thresholds sit at 4S and
    the trimming radius at r_factor * S.
    """

    def __init__(self, sset, s_min=1, r_factor=11, seed="a2b",
                 pairs_n=250, guard=Fraction(1, 10**9), tree=None):
        if not isinstance(sset, SSet) or not sset.ok:
            raise HypothesisRejected("setting needs a valid S-set")
        if fr(r_factor) <= 10:
            raise HypothesisRejected("trimming radius must exceed 10 S")
        self.sset = sset
        self.p = sset.p
        n = len(sset)
        self.n = n
        self.tree = tree if tree is not None else build_tree(sset, check=False)
        self._center_sbs = tuple(
            _scaled_busemann(center_point(f), self.p) for f in sset.flags)

        self.tripods = {}
        for trip in combinations(range(n), 3):
            self.tripods[trip] = tripod_of(sset, *trip)

        # class coordinates of the tripodal points, one list per end
        vals = {i: [] for i in range(n)}
        for trip, pt in self.tripods.items():
            for i in trip:
                vals[i].append(fr(_class_hat(sset.flags[i], self.p, pt)))

        # raw per-pair constants: b - ch_i, b' + ch_j and b + b' on the flat
        s1 = {}
        s2 = {}
        csum = {}
        raw = {}
        for i, j in combinations(range(n), 2):
            fl = sset.flat(i, j)
            sb_e = _scaled_busemann(fl.eta_ij, self.p)
            sb_x = _scaled_busemann(fl.xi_ij, self.p)
            got_e = sb_e.linear_on_flat(fl)
            got_x = sb_x.linear_on_flat(fl)
            if got_e is None or got_x is None:
                raise GeometryError("flat does not see its own vertices")
            base = fl.base
            he = fr(sb_e.hat(base))
            hx = fr(sb_x.hat(base))
            s1[(i, j)] = he - fr(_class_hat(sset.flags[i], self.p, base))
            s2[(i, j)] = hx + fr(_class_hat(sset.flags[j], self.p, base))
            csum[(i, j)] = he + hx
            raw[(i, j)] = (fl, sb_e, sb_x, got_e, got_x)

        # one offset per end; pairs through end 0 determine the rest and
        # every remaining pair must agree, else some holonomy is nonzero
        o = {0: (min(vals[0]) + max(vals[0])) / 2}
        for j in range(1, n):
            key = (0, j)
            o[j] = s1[key] + o[0] - csum[key] + s2[key]
        for i, j in combinations(range(n), 2):
            if s1[(i, j)] + o[i] != csum[(i, j)] - s2[(i, j)] + o[j]:
                raise GeometryError("class windows do not close up")

        s_hat = fr(s_min)
        for i in range(n):
            for v in vals[i]:
                s_hat = max(s_hat, abs(v - o[i]))
        self.offsets = o
        self.s_hat = s_hat
        self.r_hat = fr(r_factor) * s_hat
        self.level_hat = 4 * s_hat

        self.pairs = {}
        for i, j in combinations(range(n), 2):
            fl, sb_e, sb_x, (pat_e, off_e), (pat_x, off_x) = raw[(i, j)]
            sigma = s1[(i, j)] + o[i]
            sigma_xi = csum[(i, j)] - sigma
            strip = (whole_plane()
                     .cut(pat_e, fr(off_e) - sigma - s_hat)
                     .cut(tuple(-v for v in pat_e), sigma - s_hat - fr(off_e)))
            self.pairs[(i, j)] = PairWindows(
                i, j, fl, sb_e, sb_x, tuple(pat_e), fr(off_e), tuple(pat_x),
                fr(off_x), csum[(i, j)], sigma, sigma_xi, strip)

        # every tripodal point must sit inside its own windows
        for trip, pt in self.tripods.items():
            for i, j in combinations(trip, 2):
                if abs(self.b_norm(i, j, pt)) > s_hat:
                    raise GeometryError("tripodal point escapes its window")

        self.eps_hat = _eps_hat_of(s_hat)
        eps_f, alpha = epsilon_from_config(s_hat)
        self.config = Config(
            s_hat=s_hat, r_hat=self.r_hat, level_hat=self.level_hat,
            eps_hat=self.eps_hat, epsilon=eps_f, alpha_hat=alpha,
            pairs_n=pairs_n, seed=seed, guard=fr(guard))

        self._strata = None
        self._pairs_of = None
        self._k_order = None
        self._c_order = None
        self._balls = {}

    # -- normalized coordinates --------------------------------------------

    def pair(self, i, j):
        return self.pairs[(i, j) if i < j else (j, i)]

    def b_norm(self, i, j, x, ctx=None, w=None):
        """Normalized vertical coordinate of the pair at a point."""
        pd = self.pair(i, j)
        if ctx is None:
            return fr(pd.sb_eta.hat(x)) - pd.sigma
        return ctx.hat(pd.sb_eta, w) - pd.sigma

    def bp_norm(self, i, j, x, ctx=None, w=None):
        """The opposite vertical coordinate; equals -b_norm on the flat."""
        pd = self.pair(i, j)
        if ctx is None:
            return fr(pd.sb_xi.hat(x)) - pd.sigma_xi
        return ctx.hat(pd.sb_xi, w) - pd.sigma_xi

    def level_of(self, k, x, ctx=None, w=None):
        """Tree coordinate B_k of a building point (raw hat units)."""
        sb = self._center_sbs[k]
        if ctx is None:
            return fr(sb.hat(x))
        return ctx.hat(sb, w)

    # -- strata of the tree and their class data ----------------------------

    def strata(self):
        """One representative per constancy stratum of membership pairs.

        Vertices, open edges and the open rays beyond the attach vertex of
        each end cover the tree, and the pair family is constant on each,
        so the union of the per-stratum sets is the full union over tree
        points.
        """
        if self._strata is None:
            tree = self.tree
            reps = []
            for vid, bvec in enumerate(tree.bvecs):
                reps.append(TreePoint(tree, ("vertex", vid), bvec))
            for idx, (u, v, ln) in enumerate(tree.edges):
                cu, cv = tree.bvecs[u], tree.bvecs[v]
                coords = tuple((cu[m] + cv[m]) / 2 for m in range(self.n))
                reps.append(TreePoint(tree, ("edge", idx, fr(ln) / 2), coords))
            for k in range(self.n):
                bv = tree.bvecs[tree.end_vertex[k]]
                coords = tuple(bv[m] - 1 if m == k else bv[m] + 1
                               for m in range(self.n))
                reps.append(TreePoint(tree, ("end", k, Fraction(1)), coords))
            self._strata = tuple(reps)
            self._pairs_of = tuple(tuple(sorted(membership_pairs(t)))
                                   for t in self._strata)
            self._k_order = list(range(len(reps)))
            self._c_order = list(range(len(reps)))
        return self._strata

    def stratum_pairs(self, idx):
        self.strata()
        return self._pairs_of[idx]

    def _level_range(self, idx, k):
        """Range of the coordinate B_k over the stratum (closed)."""
        t = self.strata()[idx]
        kind = t.place[0]
        tree = self.tree
        if kind == "vertex":
            v = t.coords[k]
            return v, v
        if kind == "edge":
            u, v, _ = tree.edges[t.place[1]]
            a, b = tree.bvecs[u][k], tree.bvecs[v][k]
            return (a, b) if a <= b else (b, a)
        e = t.place[1]
        base = tree.bvecs[tree.end_vertex[e]][k]
        if k == e:
            return None, base      # B_e falls without bound along its ray
        return base, None

    def class_ball(self, idx):
        """Ball target of a stratum: the class slab swept over its levels."""
        got = self._balls.get(idx)
        if got is not None:
            return got
        t = self.strata()[idx]
        pairs = self.stratum_pairs(idx)
        i0, j0 = pairs[0]
        pd = self.pair(i0, j0)
        cs = class_set(t, clamp=(pd.sigma_xi - self.s_hat,
                                 pd.sigma_xi + self.s_hat))
        region = (cs.region
                  .cut(pd.pat_eta, pd.off_eta - pd.sigma - self.s_hat)
                  .cut(tuple(-v for v in pd.pat_eta),
                       pd.sigma - self.s_hat - pd.off_eta))
        pat_l, off_l = _center_line(self.sset.flags[i0], pd.flat, self.p)
        pat_l = tuple(pat_l)
        off_l = fr(off_l)
        lo, hi = self._level_range(idx, i0)
        if hi is not None:
            # B_{i0} = off_l - <pat_l, c> <= hi
            region = region.cut(pat_l, off_l - hi)
        if lo is not None:
            region = region.cut(tuple(-v for v in pat_l), lo - off_l)
        region = region.reduced()
        if region.feasible_point() is None:
            raise GeometryError("stratum class slab is empty")
        ranges = tuple(self._level_range(idx, k) for k in range(self.n))
        ball = _BallTarget(
            setting=self, flat=pd.flat, region=region, pair=(i0, j0),
            pat_eta=pd.pat_eta, off_eta=pd.off_eta, sigma=pd.sigma,
            pat_l=pat_l, off_l=off_l, level_ranges=ranges,
            eta_window=(-self.s_hat, self.s_hat))
        self._balls[idx] = ball
        return ball

    # -- membership ----------------------------------------------------------

    def k_class_member(self, t_or_idx, q, ctx=None, w=None):
        """Exact membership in the thickened set of one tree point."""
        if isinstance(t_or_idx, TreePoint):
            pairs = tuple(membership_pairs(t_or_idx))
        else:
            pairs = self.stratum_pairs(t_or_idx)
        lvl = self.level_hat
        for i, j in pairs:
            if self.b_norm(i, j, q, ctx, w) > lvl:
                return False
            if self.bp_norm(i, j, q, ctx, w) > lvl:
                return False
        return True

    def K_member(self, q, ctx=None, w=None):
        """Exact membership in the union over all strata."""
        self.strata()
        order = self._k_order
        for pos, ri in enumerate(order):
            if self.k_class_member(ri, q, ctx, w):
                if pos:
                    order.insert(0, order.pop(pos))
                return True
        return False

    def c_witness(self, q, ctx=None, w=None, t=None, r_hat=None):
        """(verdict, stratum index or None) for the trimmed union."""
        self.strata()
        r = self.r_hat if r_hat is None else fr(r_hat)
        order = self._c_order
        near = None
        for pos, ri in enumerate(order):
            if not self.k_class_member(ri, q, ctx, w):
                continue
            got = self.class_ball(ri).probe(q, r, ctx=ctx, w=w, t=t)
            if got == "in":
                if pos:
                    order.insert(0, order.pop(pos))
                return "in", ri
            if got == "near":
                near = ri
        if near is not None:
            return "near", near
        return "out", None

    def c_member(self, q, ctx=None, w=None, t=None):
        return self.c_witness(q, ctx=ctx, w=w, t=t)[0]


def normalize_sset(sset, **options):
    """(tripodal choices, Config) of the centered-window normalization."""
    s = Setting(sset, **options)
    return dict(s.tripods), s.config


# ---------------------------------------------------------------------------
# certified ball probes against convex pieces of one flat

def _solve_chart(pat_a, rhs_a, pat_b, rhs_b):
    """Chart point with <pat_a, c> = rhs_a and <pat_b, c> = rhs_b.

    Charts live in the plane spanned by the two distinguished directions,
    so two independent functionals pin the point down.
    """
    a1, a2 = dot(pat_a, VERT), dot(pat_a, LEVEL)
    b1, b2 = dot(pat_b, VERT), dot(pat_b, LEVEL)
    det = a1 * b2 - a2 * b1
    if det == 0:
        return None
    alpha = (fr(rhs_a) * b2 - fr(rhs_b) * a2) / det
    beta = (a1 * fr(rhs_b) - b1 * fr(rhs_a)) / det
    return vadd(vscale(alpha, VERT), vscale(beta, LEVEL))


def _region_ball_probe(point, flat, region, r, guard, span_hint=None):
    """Certified verdict on 6 d(point, region)^2 <= r^2, region in a flat.

    The point is assumed off the flat (on-flat queries are decided exactly
    by the caller).  A projected candidate settles most "in" cases; the
    rest walk a shrinking grid whose spacing bounds the distance to the
    nearest grid point, giving a certified "out" or a "near" verdict once
    the slack is below the guard.
    """
    r = fr(r)
    _, cstar = region.nearest(region.feasible_point())
    if 6 * distance2(point, flat.point(cstar)) <= r * r:
        return "in"
    span = 4 * r if span_hint is None else span_hint
    ulo, uhi = region.extent(VERT)
    wlo, whi = region.extent(LEVEL)
    ulo = -span if ulo is None else ulo
    uhi = span if uhi is None else uhi
    wlo = -span if wlo is None else wlo
    whi = span if whi is None else whi
    du = (uhi - ulo) / 4 or Fraction(1)
    dw = (whi - wlo) / 4 or Fraction(1)
    for _ in range(10):
        # every region point is within (du/2, dw/2) of a visited grid
        # point in the two chart functionals, hence within slack in hat
        slack = du / 2 + dw
        out = True
        u = ulo
        while u <= uhi + du / 2:
            wv = wlo
            while wv <= whi + dw / 2:
                c = vadd(vscale(u / 6, VERT), vscale(wv / 2, LEVEL))
                _, cp = region.nearest(c)
                d2 = 6 * distance2(point, flat.point(cp))
                if d2 <= r * r:
                    return "in"
                if d2 <= (r + slack) ** 2:
                    out = False
                wv += dw
            u += du
        if out:
            return "out"
        if slack <= guard:
            break
        du /= 2
        dw /= 2
    return "near"


@dataclass
class _BallTarget:
    """A convex subset of one flat, ready for certified distance tests.

    Distance queries are bracketed: Lipschitz bounds from the vertical and
    level coordinates certify "out" cheaply, on-flat queries are decided
    exactly in the chart, and the remaining shell cases fall through to
    the grid probe.
    """

    setting: object
    flat: object
    region: object
    pair: tuple
    pat_eta: tuple
    off_eta: Fraction
    sigma: Fraction
    pat_l: tuple
    off_l: Fraction
    level_ranges: tuple         # per end k: (lo, hi) of B_k, None = unbounded
    eta_window: tuple           # normalized vertical range on the target

    def probe(self, q, r_hat, ctx=None, w=None, t=None):
        st = self.setting
        r = fr(r_hat)
        i, j = self.pair

        # certified rejections from Lipschitz hat coordinates: the vertical
        # coordinate moves at most d, each level at most d / sqrt(3)
        bq = st.b_norm(i, j, q, ctx, w)
        lo, hi = self.eta_window
        worst = _interval_gap(bq, lo, hi) ** 2
        if worst > r * r:
            return "out"
        for k in range(st.n):
            lk, hk = self.level_ranges[k]
            gap = _interval_gap(st.level_of(k, q, ctx, w), lk, hk)
            worst = max(worst, 3 * gap * gap)
            if worst > r * r:
                return "out"

        point = q if ctx is None else ctx.point(t)
        c = self.flat.chart(point)
        if c is not None:
            return "in" if 6 * self.region.dist2(c) <= r * r else "out"

        # clamp the two defining coordinates toward the target and project
        lq = st.level_of(i, q, ctx, w)
        llo, lhi = self.level_ranges[i]
        if llo is not None and lq < llo:
            lq = llo
        if lhi is not None and lq > lhi:
            lq = lhi
        bq = min(max(bq, lo), hi)
        guess = _solve_chart(self.pat_l, self.off_l - lq,
                             self.pat_eta, self.off_eta - self.sigma - bq)
        if guess is not None:
            _, cstar = self.region.nearest(guess)
            if 6 * distance2(point, self.flat.point(cstar)) <= r * r:
                return "in"

        span = 2 * (r + st.s_hat) + abs(bq) + abs(lq) + abs(self.off_l)
        return _region_ball_probe(point, self.flat, self.region, r,
                                  st.config.guard, span_hint=span)


# ---------------------------------------------------------------------------
# set oracles

@dataclass
class SetOracle:
    """Three-way membership test with provenance and sampling hooks.

    classify returns "in", "out" or "near" (within the guard of the
    boundary); member counts "near" as inside, matching the closed-set
    convention.  seeds are known members; homes are (flat, chart region)
    pools feeding the samplers.
    """

    name: str
    provenance: str
    guard: Fraction
    _classify: object
    _classify_seg: object = None
    seeds: tuple = ()
    homes: tuple = ()
    certificate: object = None

    def classify(self, x):
        return self._classify(x)

    def classify_seg(self, ctx, t):
        if self._classify_seg is None:
            return self._classify(ctx.point(t))
        return self._classify_seg(ctx, t)

    def member(self, x):
        return self.classify(x) != "out"


def k_oracle(setting):
    """Oracle of the union of thickened class sets."""

    def classify(x):
        return "in" if setting.K_member(x) else "out"

    def classify_seg(ctx, t):
        return "in" if setting.K_member(None, ctx, ctx.weights(t)) else "out"

    seeds = []
    homes = []
    for (i, j), pd in sorted(setting.pairs.items()):
        c = pd.strip.feasible_point()
        if c is not None:
            seeds.append(pd.flat.point(c))
        homes.append((pd.flat, pd.strip))
    for trip in sorted(setting.tripods):
        seeds.append(setting.tripods[trip])
    return SetOracle(
        name="K", provenance="union of 4S-thickened class sets",
        guard=setting.config.guard, _classify=classify,
        _classify_seg=classify_seg, seeds=tuple(seeds), homes=tuple(homes))


def c_oracle(setting):
    """Oracle of the trimmed union: thickened sets cut by class balls."""

    def classify(x):
        return setting.c_member(x)

    def classify_seg(ctx, t):
        return setting.c_member(None, ctx, ctx.weights(t), t)

    seeds = []
    homes = []
    for idx in range(len(setting.strata())):
        ball = setting.class_ball(idx)
        c = ball.region.feasible_point()
        if c is not None:
            seeds.append(ball.flat.point(c))
        # a level window around the slab keeps perturbed draws relevant
        pd = setting.pair(*ball.pair)
        lo, hi = setting._level_range(idx, ball.pair[0])
        pad = setting.r_hat / 4
        box = pd.strip
        if hi is not None:
            box = box.cut(ball.pat_l, ball.off_l - hi - pad)
        if lo is not None:
            box = box.cut(tuple(-v for v in ball.pat_l), lo - pad - ball.off_l)
        homes.append((ball.flat, box))
    return SetOracle(
        name="C", provenance="thickened class sets trimmed by class balls",
        guard=setting.config.guard, _classify=classify,
        _classify_seg=classify_seg, seeds=tuple(seeds), homes=tuple(homes))


def two_ball_oracle(p1, p2, r_hat):
    """Union of two balls; deliberately non-convex when the centers are far."""
    r = fr(r_hat)

    def classify(x):
        if 6 * distance2(x, p1) <= r * r or 6 * distance2(x, p2) <= r * r:
            return "in"
        return "out"

    return SetOracle(
        name="two-balls", provenance="planted non-convex union",
        guard=Fraction(0), _classify=classify, seeds=(p1, p2))


def horoball_union(point, r_hat, d_hat, v1, v2, seeds=(), homes=()):
    """Ball around a point cut with a union of two horoballs.

    The two ideal points must be distinct singular vertices of the same
    kind, which pins their angle at 2 pi / 3; the union is convex exactly
    when the horoball depth clears half the radius, so shallower depths
    are rejected.  Depths are measured from the center point.
    """
    r = fr(r_hat)
    d = fr(d_hat)
    if r <= 0:
        raise HypothesisRejected("ball radius must be positive")
    if v1.kind not in ("nu", "mu") or v2.kind != v1.kind:
        raise HypothesisRejected("horoball centers must be same-kind vertices")
    if tits_angle(v1, v2).exact != "2pi/3":
        raise HypothesisRejected("vertex angle must be 2 pi / 3")
    if not d > r / 2:
        raise HypothesisRejected("horoball depth must exceed half the radius")
    p = point.p
    sb1 = _scaled_busemann(v1, p)
    sb2 = _scaled_busemann(v2, p)
    h1 = fr(sb1.hat(point))
    h2 = fr(sb2.hat(point))

    def classify(x):
        if 6 * distance2(x, point) > r * r:
            return "out"
        if fr(sb1.hat(x)) - h1 <= d or fr(sb2.hat(x)) - h2 <= d:
            return "in"
        return "out"

    def classify_seg(ctx, t):
        if 6 * distance2(ctx.point(t), point) > r * r:
            return "out"
        w = ctx.weights(t)
        if ctx.hat(sb1, w) - h1 <= d or ctx.hat(sb2, w) - h2 <= d:
            return "in"
        return "out"

    return SetOracle(
        name="horoball-union", provenance="ball cut by two horoballs",
        guard=Fraction(0), _classify=classify, _classify_seg=classify_seg,
        seeds=tuple(seeds) or (point,), homes=tuple(homes))


# ---------------------------------------------------------------------------
# thickened tripods

def _chart_transport(fl_from, fl_to, overlap):
    """Function rewriting affine chart data of fl_to in fl_from's chart.

    The identification between the two charts is affine on the overlap;
    it is reconstructed from one interior point and two independent
    directions probed inside the overlap region.
    """
    c0 = overlap.feasible_point()
    if c0 is None:
        raise GeometryError("flats do not overlap")
    c20 = fl_to.chart(fl_from.point(c0))
    if c20 is None:
        raise GeometryError("overlap point misses the second flat")
    images = []
    for direction in (VERT, LEVEL):
        step = Fraction(1)
        img = None
        for _ in range(24):
            for sgn in (1, -1):
                cc = vadd(c0, vscale(sgn * step, direction))
                if not overlap.contains(cc):
                    continue
                c2 = fl_to.chart(fl_from.point(cc))
                if c2 is None:
                    continue
                img = vscale(Fraction(sgn) / step, vsub(c2, c20))
                break
            if img is not None:
                break
            step /= 2
        if img is None:
            raise GeometryError("overlap region is too thin to probe")
        images.append(img)
    m_v, m_l = images

    def transport(pat2, off2):
        a = dot(pat2, m_v)
        b = dot(pat2, m_l)
        pat = tuple(a * v / 6 + b * l / 2 for v, l in zip(VERT, LEVEL))
        offset = fr(off2) - dot(pat2, c20) + dot(pat, c0)
        return pat, offset

    return transport


def thicken_tripod(tri, mode="strips", d_hat=None, dp_hat=None,
                   s_hat=None, r_hat=None, guard=Fraction(1, 10**9)):
    """Union of the three corner sets of a tripod, as a set oracle.

    Vertical coordinates are normalized to vanish at the tripodal point.
    In horoball mode each corner keeps the two vertical coordinates of its
    two pairs below (D, D'); the depths must satisfy D > 0 and
    D/2 < D' < 2D strictly.  In strips mode both depths are 4S and each
    corner is additionally trimmed to the R-ball around its pair of
    crossed strips; R must exceed 10S.  The oracle exposes the corner
    test as .corner_member and the two-of-three description of the union
    as .two_of_three.
    """
    if not isinstance(tri, Tripod):
        raise HypothesisRejected("thickening needs a tripod")
    p = tri.point.p
    pair_flat = {(0, 1): 0, (0, 2): 1, (1, 2): 2}
    data = {}
    for (i, j), fi in pair_flat.items():
        fl = tri.flats[fi]
        sb_e = _scaled_busemann(fl.eta_ij, p)
        sb_x = _scaled_busemann(fl.xi_ij, p)
        data[(i, j)] = (fl, sb_e, sb_x, fr(sb_e.hat(tri.point)),
                        fr(sb_x.hat(tri.point)))

    guard = fr(guard)
    trims = None
    r = None
    if mode == "horoball":
        if d_hat is None or dp_hat is None:
            raise HypothesisRejected("horoball mode needs both depths")
        d = fr(d_hat)
        dp = fr(dp_hat)
        if d <= 0:
            raise HypothesisRejected("depth must be positive")
        if not d / 2 < dp < 2 * d:
            raise HypothesisRejected("second depth must lie in (D/2, 2D)")
    elif mode == "strips":
        if s_hat is None or r_hat is None:
            raise HypothesisRejected("strips mode needs a width and a radius")
        s = fr(s_hat)
        r = fr(r_hat)
        if s <= 0:
            raise HypothesisRejected("strip half-width must be positive")
        if not r > 10 * s:
            raise HypothesisRejected("trimming radius must exceed 10 S")
        d = dp = 4 * s
        trims = {}
        for m in range(3):
            a, b = (x for x in range(3) if x != m)
            key_a = tuple(sorted((m, a)))
            key_b = tuple(sorted((m, b)))
            fla = data[key_a][0]
            flb = data[key_b][0]
            overlap = intersect_flats(fla, flb)
            transport = _chart_transport(fla, flb, overlap)
            region = overlap
            for key, own in ((key_a, True), (key_b, False)):
                fl, sb_e, _, h_e, _ = data[key]
                pat, off = sb_e.linear_on_flat(fl)
                if not own:
                    pat, off = transport(pat, off)
                # |hat - value at the tripodal point| <= s
                region = (region
                          .cut(pat, fr(off) - h_e - s)
                          .cut(tuple(-v for v in pat), h_e - s - fr(off)))
            region = region.reduced()
            if region.feasible_point() is None:
                raise GeometryError("corner strips do not cross")
            trims[m] = (fla, region)
    else:
        raise HypothesisRejected(f"unknown thickening mode: {mode}")

    def corner_member(m, x, ctx=None, w=None):
        for other in range(3):
            if other == m:
                continue
            key = tuple(sorted((m, other)))
            _, sb_e, sb_x, h_e, h_x = data[key]
            be = (fr(sb_e.hat(x)) if ctx is None else ctx.hat(sb_e, w)) - h_e
            bx = (fr(sb_x.hat(x)) if ctx is None else ctx.hat(sb_x, w)) - h_x
            if be > d or bx > dp:
                return False
        return True

    def trim_probe(m, x, ctx=None, t=None):
        if trims is None:
            return "in"
        fl, region = trims[m]
        pt = x if ctx is None else ctx.point(t)
        c = fl.chart(pt)
        if c is not None:
            return "in" if 6 * region.dist2(c) <= r * r else "out"
        return _region_ball_probe(pt, fl, region, r, guard)

    def classify(x):
        near = False
        for m in range(3):
            if not corner_member(m, x):
                continue
            got = trim_probe(m, x)
            if got == "in":
                return "in"
            near = near or got == "near"
        return "near" if near else "out"

    def classify_seg(ctx, t):
        w = ctx.weights(t)
        near = False
        for m in range(3):
            if not corner_member(m, None, ctx, w):
                continue
            got = trim_probe(m, None, ctx, t)
            if got == "in":
                return "in"
            near = near or got == "near"
        return "near" if near else "out"

    def two_of_three(x, ctx=None, w=None):
        lows_e = 0
        lows_x = 0
        for _, sb_e, sb_x, h_e, h_x in data.values():
            be = (fr(sb_e.hat(x)) if ctx is None else ctx.hat(sb_e, w)) - h_e
            bx = (fr(sb_x.hat(x)) if ctx is None else ctx.hat(sb_x, w)) - h_x
            lows_e += be <= d
            lows_x += bx <= dp
        return lows_e >= 2 and lows_x >= 2

    seeds = [tri.point]
    homes = []
    if trims is not None:
        for m in range(3):
            fla, region = trims[m]
            homes.append((fla, region))
            c = region.feasible_point()
            if c is not None:
                seeds.append(fla.point(c))
    else:
        for key in sorted(data):
            fl, sb_e, _, h_e, _ = data[key]
            pat, off = sb_e.linear_on_flat(fl)
            slab = (whole_plane()
                    .cut(pat, fr(off) - h_e - d)
                    .cut(tuple(-v for v in pat), h_e - d - fr(off)))
            homes.append((fl, slab))

    oracle = SetOracle(
        name=f"tripod-{mode}",
        provenance="union of thickened tripod corners",
        guard=guard, _classify=classify, _classify_seg=classify_seg,
        seeds=tuple(seeds), homes=tuple(homes))
    oracle.corner_member = corner_member
    oracle.two_of_three = two_of_three
    oracle.depths = (d, dp)
    oracle.center = tri.point
    oracle.trims = trims
    return oracle


# ---------------------------------------------------------------------------
# samplers

def member_sampler(oracle, attempts=64, window=8):
    """Draw function producing verified members of the oracle's set.

    Strategies: chart draws inside a home region, geodesic mixtures of
    members found earlier, and seed reuse; with an anchor the draw stays
    within the given hat radius of it.  Raises SamplerStarved with
    per-strategy statistics when the budget runs out.
    """
    pool = [s for s in oracle.seeds if oracle.classify(s) == "in"]
    stats = {"home": [0, 0], "mix": [0, 0], "anchor": [0, 0],
             "seeded": len(pool)}

    def near_anchor(rng, anchor, radius):
        radius = fr(radius)
        stats["anchor"][0] += 1
        if oracle.homes:
            fl, _ = oracle.homes[rng.randrange(len(oracle.homes))]
            c = fl.chart(anchor)
            if c is not None:
                # 36 du^2 + 12 dw^2 stays below radius^2 at these scales
                du = radius / 12 * Fraction(rng.randint(-16, 16), 16)
                dw = radius / 8 * Fraction(rng.randint(-16, 16), 16)
                cc = vadd(c, vadd(vscale(du, VERT), vscale(dw, LEVEL)))
                cand = fl.point(cc)
                if oracle.classify(cand) == "in":
                    stats["anchor"][1] += 1
                    return cand
        if pool:
            other = pool[rng.randrange(len(pool))]
            d2 = 6 * distance2(anchor, other)
            if d2 > 0:
                t = min(Fraction(1), radius * radius / (4 * d2))
                t = t * Fraction(rng.randint(1, 8), 8)
                cand = geodesic_point(anchor, other, t)
                if oracle.classify(cand) == "in":
                    stats["anchor"][1] += 1
                    return cand
        return None

    def draw(rng, anchor=None, radius=None):
        for _ in range(attempts):
            if anchor is not None:
                got = near_anchor(rng, anchor, radius)
                if got is not None:
                    return got
                continue
            roll = rng.random()
            if roll < 0.5 and oracle.homes:
                stats["home"][0] += 1
                fl, region = oracle.homes[rng.randrange(len(oracle.homes))]
                cs = region.sample(1, rng, window=window)
                if not cs:
                    continue
                cand = fl.point(cs[0])
                if oracle.classify(cand) == "in":
                    stats["home"][1] += 1
                    if len(pool) < 64:
                        pool.append(cand)
                    return cand
            elif len(pool) >= 2:
                stats["mix"][0] += 1
                a = pool[rng.randrange(len(pool))]
                b = pool[rng.randrange(len(pool))]
                cand = geodesic_point(a, b, Fraction(rng.randint(1, 32), 33))
                if oracle.classify(cand) == "in":
                    stats["mix"][1] += 1
                    if len(pool) < 64:
                        pool.append(cand)
                    return cand
            elif pool:
                return pool[rng.randrange(len(pool))]
        raise SamplerStarved(
            f"no member of {oracle.name} drawn in {attempts} attempts", stats)

    draw.stats = stats
    draw.pool = pool
    return draw


# ---------------------------------------------------------------------------
# verification harness

@dataclass
class VerificationReport:
    """Outcome of one sampled verification run."""

    suite: str
    mode: str
    seed: object
    pairs_requested: int
    pairs_checked: int
    params_per_pair: int
    samples_drawn: int
    violations: list
    near_count: int
    starved: bool
    sampler_stats: dict
    runtime: float

    @property
    def ok(self):
        return not self.violations and not self.starved

    @property
    def exit_code(self):
        if self.starved:
            return 3
        return 2 if self.violations else 0

    def to_json_obj(self):
        def point_obj(x):
            return {
                "frame": [[_rat(v) for v in row] for row in x.frame],
                "weights": [_rat(v) for v in x.weights],
            }

        return {
            "suite": self.suite,
            "mode": self.mode,
            "seed": str(self.seed),
            "pairs_requested": self.pairs_requested,
            "pairs_checked": self.pairs_checked,
            "params_per_pair": self.params_per_pair,
            "samples_drawn": self.samples_drawn,
            "violations": [
                {"pair_index": v["pair_index"],
                 "theta": _rat(v["theta"]),
                 "x": point_obj(v["x"]),
                 "y": point_obj(v["y"])}
                for v in self.violations
            ],
            "near_count": self.near_count,
            "starved": self.starved,
            "sampler": {k: (list(v) if isinstance(v, list) else v)
                        for k, v in sorted(self.sampler_stats.items())},
            "ok": self.ok,
        }


def _rat(x):
    x = fr(x)
    return f"{x.numerator}/{x.denominator}"


def _thread_count():
    try:
        return max(1, int(os.environ.get("A2B_THREADS", "1")))
    except ValueError:
        return 1


def verify_convexity(oracle, sampler, n_pairs, mode="global", eps_hat=None,
                     seed="a2b", n_params=32, suite=None):
    """Sampled convexity of the oracle's set.

    Draws member pairs (local mode only accepts pairs closer than eps in
    the hat metric), walks the interior rational parameters k/(n+1) along
    each geodesic and records every certified "out" as a violation with
    its witness pair.  Pair sampling is sequential and derived from
    (seed, index); segment evaluation may spread over A2B_THREADS threads
    without changing the report.
    """
    if mode not in ("global", "local"):
        raise ParameterError(f"unknown verification mode: {mode}")
    if mode == "local":
        if eps_hat is None:
            raise ParameterError("local mode needs the pair gate eps_hat")
        eps_hat = fr(eps_hat)
        if eps_hat <= 0:
            raise ParameterError("pair gate must be positive")
    start = time.monotonic()
    entries = []
    drawn = 0
    starved = False
    for i in range(n_pairs):
        rng = random.Random(f"{seed}:pair:{i}")
        try:
            x = sampler(rng)
            drawn += 1
            if mode == "local":
                y = None
                for _ in range(16):
                    cand = sampler(rng, anchor=x, radius=eps_hat / 2)
                    drawn += 1
                    if 0 < 6 * distance2(x, cand) < eps_hat * eps_hat:
                        y = cand
                        break
                if y is None:
                    continue
            else:
                y = sampler(rng)
                drawn += 1
        except SamplerStarved:
            starved = True
            break
        entries.append((i, x, y))

    thetas = [Fraction(k, n_params + 1) for k in range(1, n_params + 1)]

    def check(entry):
        i, x, y = entry
        bad = []
        near = 0
        ctx = SegmentContext(x, y)
        for t in thetas:
            got = oracle.classify_seg(ctx, t)
            if got == "out":
                bad.append({"pair_index": i, "theta": t, "x": x, "y": y})
            elif got == "near":
                near += 1
        return bad, near

    workers = _thread_count()
    if workers > 1 and len(entries) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(check, entries))
    else:
        results = [check(e) for e in entries]

    violations = []
    near_count = 0
    for bad, near in results:
        violations.extend(bad)
        near_count += near

    return VerificationReport(
        suite=suite or oracle.name, mode=mode, seed=seed,
        pairs_requested=n_pairs, pairs_checked=len(entries),
        params_per_pair=n_params, samples_drawn=drawn,
        violations=violations, near_count=near_count, starved=starved,
        sampler_stats=dict(getattr(sampler, "stats", {})),
        runtime=time.monotonic() - start)


def verify_rank1(setting, n=64, seed="a2b"):
    """Distance profile of the trimmed set against its strips.

    Every sampled member must come within 2R of the strip of its witness
    slab (exact squared comparison in the chart when the point lies on the
    witness flat), and the vertical escape points at S + 2R + 3 eps must
    be certified outside; both kinds of failure are violations.
    """
    start = time.monotonic()
    oracle = c_oracle(setting)
    sampler = member_sampler(oracle)
    r = setting.r_hat
    violations = []
    drawn = 0
    starved = False
    for i in range(n):
        rng = random.Random(f"{seed}:rank1:{i}")
        try:
            x = sampler(rng)
        except SamplerStarved:
            starved = True
            break
        drawn += 1
        verdict, idx = setting.c_witness(x)
        ok = False
        if idx is not None:
            ball = setting.class_ball(idx)
            pd = setting.pair(*ball.pair)
            c = pd.flat.chart(x)
            if c is not None:
                ok = 6 * pd.strip.dist2(c) <= 4 * r * r
            else:
                ok = _region_ball_probe(x, pd.flat, pd.strip, 2 * r,
                                        setting.config.guard) != "out"
        if not ok:
            violations.append({"pair_index": i, "theta": Fraction(0),
                               "x": x, "y": x})

    # escape points far up each vertical window must test outside
    margin = setting.s_hat + 2 * r + 3 * setting.eps_hat
    probes = 0
    for (i, j), pd in sorted(setting.pairs.items()):
        pat_l, off_l = _center_line(setting.sset.flags[i], pd.flat, setting.p)
        for shift in (-4, 0, 4):
            for sign in (1, -1):
                c = _solve_chart(pd.pat_eta,
                                 pd.off_eta - pd.sigma - sign * margin,
                                 pat_l, fr(off_l) + 4 * shift)
                if c is None:
                    raise GeometryError("degenerate window functionals")
                probes += 1
                q = pd.flat.point(c)
                if setting.c_member(q) != "out":
                    violations.append(
                        {"pair_index": -probes, "theta": Fraction(0),
                         "x": q, "y": q})

    return VerificationReport(
        suite="rank1", mode="global", seed=seed,
        pairs_requested=n, pairs_checked=drawn, params_per_pair=1,
        samples_drawn=drawn + probes, violations=violations, near_count=0,
        starved=starved, sampler_stats=dict(sampler.stats),
        runtime=time.monotonic() - start)


# ---------------------------------------------------------------------------
# walking the tree

def tree_point_along(t0, t1, s):
    """TreePoint at hat distance s from t0 on the path toward t1."""
    tree = t0.tree
    if t1.tree is not tree:
        raise ParameterError("points belong to different trees")
    s = fr(s)
    if s < 0:
        raise ParameterError("negative distance along a path")
    n = len(t0.coords)

    def sup(a, b):
        return max(abs(a[m] - b[m]) for m in range(n))

    pa, pb = t0.place, t1.place
    if pa[0] == pb[0] and pa[0] in ("edge", "end") and pa[1] == pb[1]:
        stops = [t0.coords, t1.coords]      # same stratum: one straight hop
    else:
        best = None
        for va, oa in _anchors(tree, pa):
            for vb, ob in _anchors(tree, pb):
                total = oa + tree.vertex_distance(va, vb) + ob
                if best is None or total < best[0]:
                    best = (total, va, vb)
        _, va, vb = best
        stops = [t0.coords]
        for v in tree.vertex_path(va, vb):
            stops.append(tree.bvecs[v])
        stops.append(t1.coords)

    total = sum(sup(x, y) for x, y in zip(stops, stops[1:]))
    if s > total:
        raise ParameterError("distance exceeds the path length")
    acc = Fraction(0)
    for x, y in zip(stops, stops[1:]):
        hop = sup(x, y)
        if hop == 0:
            continue
        if acc + hop >= s:
            lam = (s - acc) / hop
            coords = tuple(x[m] + lam * (y[m] - x[m]) for m in range(n))
            return _locate(tree, coords)
        acc += hop
    return _locate(tree, stops[-1])
