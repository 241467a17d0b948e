"""Boundary and Busemann tests.

The oracle comes first and is independent of the chart machinery: for a
deep point r_T on the seed ray, d(x, r_T)^2 is exactly quadratic in T,
and the linear coefficient recovers the scaled Busemann value.  Only
exact squared distances enter, so the oracle is rational arithmetic.
"""

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from a2b.boundary import (
    BusemannFunction, Flag, IdealPoint, NotOpposite, ScaledBusemann,
    adapted_pattern, busemann, busemann_eval, center_point, flag, flag_span,
    flat, flat_vertices, intersect_flats, mu_point, nu_point, opposite,
    plane_through, primitive, tits_angle, _seed_chart)
from a2b.core import (angle, distance2, geodesic_point, lattice_point,
                      norm_point, standard_point, chart_weights)
from a2b.exact import GeometryError, ParameterError
from a2b.mat3 import dot, from_cols, identity, norm2, tl
from strategies import norm_points, primes

E0, E1, E2 = (1, 0, 0), (0, 1, 0), (0, 0, 1)


def oracle_hat(ideal, p, x, T=2 ** 10):
    """Scaled Busemann value from the quadratic expansion of d^2 to deep
    ray points; checked at two depths to confirm stabilization."""
    frame, pat = _seed_chart(ideal)
    s = norm2(pat)
    vals = []
    for t0 in (T, 2 * T):
        r1 = norm_point(p, frame, tuple(t0 * v for v in pat))
        r2 = norm_point(p, frame, tuple((t0 + 1) * v for v in pat))
        b = distance2(x, r2) - distance2(x, r1) - s * (2 * t0 + 1)
        vals.append(b / 2)
    assert vals[0] == vals[1], "ray expansion did not stabilize"
    return vals[0]


def sample_ideals(p):
    return [
        nu_point(E0), nu_point((1, 1, 0)), nu_point((0, 1, 1)),
        mu_point(E0), mu_point((1, 1, 1)), mu_point((1, 0, p)),
        center_point(flag(E0, E2)), center_point(flag((1, 1, 1), (1, -2, 1))),
        center_point(flag(E2, E0)),
    ]


def sample_points(p):
    branch1 = from_cols(E0, E1, (1, 0, p))
    branch2 = from_cols((1, p, 0), E1, E2)
    return [
        standard_point(p),
        norm_point(p, identity(), (2, 0, -2)),
        norm_point(p, identity(), (Fraction(1, 2), 1, -2)),
        norm_point(p, branch1, (0, 0, 0)),
        norm_point(p, branch1, (1, 0, -1)),
        norm_point(p, branch2, (-1, 2, -1)),
    ]


class TestHatOracle:
    @pytest.mark.parametrize("p", [2, 3])
    def test_marching_matches_ray_expansion(self, p):
        for ideal in sample_ideals(p):
            sb = ScaledBusemann(ideal, p)
            for x in sample_points(p):
                assert sb.hat(x) == oracle_hat(ideal, p, x)

    def test_seed_ray_rate(self):
        ideal = nu_point((1, 1, 0))
        sb = ScaledBusemann(ideal, 3)
        frame, pat = _seed_chart(ideal)
        for t in (1, 5):
            r = norm_point(3, frame, tuple(t * v for v in pat))
            assert sb.hat(r) == -t * sb.scale

    def test_scales_and_value(self):
        p = 2
        o = standard_point(p)
        for ideal, rad in [(nu_point(E0), 6), (mu_point((1, 1, 1)), 6),
                           (center_point(flag(E0, E2)), 2)]:
            b = busemann(ideal, p, o)
            assert b.scale == rad
            assert b.hat(o) == 0
            v = busemann_eval(b, norm_point(p, identity(), (1, 0, -1)))
            assert v.radicand in (1, rad)
            assert v.coef * v.coef * v.radicand == Fraction(b.hat(
                norm_point(p, identity(), (1, 0, -1))) ** 2, rad)


class TestLipschitzAndConvexity:
    @settings(max_examples=50, deadline=None)
    @given(primes, st.integers(0, 8), st.data())
    def test_one_lipschitz(self, p, idx, data):
        ideal = sample_ideals(p)[idx]
        x = data.draw(norm_points(p=p))
        y = data.draw(norm_points(p=p))
        sb = ScaledBusemann(ideal, p)
        diff = sb.hat(x) - sb.hat(y)
        assert diff * diff <= sb.scale * distance2(x, y)

    @settings(max_examples=40, deadline=None)
    @given(primes, st.integers(0, 8), st.data())
    def test_convex_along_geodesics(self, p, idx, data):
        ideal = sample_ideals(p)[idx]
        x = data.draw(norm_points(p=p))
        y = data.draw(norm_points(p=p))
        sb = ScaledBusemann(ideal, p)
        hx, hy = sb.hat(x), sb.hat(y)
        for t in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
            hm = sb.hat(geodesic_point(x, y, t))
            assert hm <= (1 - t) * hx + t * hy


F1 = flag(E0, E2)           # line e0 in plane z=0
F2 = flag(E2, E0)           # line e2 in plane x=0
F3 = flag((1, 1, 1), (1, -2, 1))


class TestFlagsAndOpposition:
    def test_flag_validation(self):
        with pytest.raises(ParameterError):
            flag(E0, E0)    # line not inside the plane
        f = flag_span(E0, (0, 1, 0))
        assert f.plane == E2

    def test_primitive(self):
        assert primitive((Fraction(-2, 3), Fraction(4, 3), 0)) == (1, -2, 0)
        with pytest.raises(ParameterError):
            primitive((0, 0, 0))

    def test_opposite_cases(self):
        assert opposite(F1, F2)
        assert opposite(F1, F3)
        assert opposite(F2, F3)
        # shared plane: never opposite
        assert not opposite(F1, flag(E1, E2))
        # line of one inside the plane of the other
        assert not opposite(F1, flag(E1, E0))

    def test_flat_construction(self):
        fl = flat(F1, F2, 5)
        assert fl.frame == from_cols(E0, E1, E2)
        assert fl.base == standard_point(5)
        with pytest.raises(NotOpposite):
            flat(F1, flag(E1, E2), 5)

    def test_flat_vertices_cycle(self):
        fl = flat(F1, F2, 3)
        cyc = flat_vertices(fl)
        assert len(cyc) == 6
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            assert tits_angle(a, b).exact == "pi/3"
        # across the hexagon: antipodes
        for k in range(3):
            assert tits_angle(cyc[k], cyc[k + 3]).exact == "pi"


class TestAdaptedPatterns:
    def test_std_flat_pattern_table(self):
        fl = flat(F1, F2, 2)
        table = [
            (fl.nu_i, (2, -1, -1)), (fl.eta_ij, (1, -2, 1)),
            (fl.nu_j, (-1, -1, 2)), (fl.mu_j, (-2, 1, 1)),
            (fl.xi_ij, (-1, 2, -1)), (fl.mu_i, (1, 1, -2)),
            (fl.center_i, (1, 0, -1)), (fl.center_j, (-1, 0, 1)),
        ]
        for ideal, pat in table:
            assert adapted_pattern(ideal, fl.frame) == pat

    def test_unseen_ideal_gives_none(self):
        fl = flat(F1, F2, 2)
        assert adapted_pattern(nu_point((1, 1, 1)), fl.frame) is None
        assert adapted_pattern(mu_point((1, 1, 1)), fl.frame) is None

    def test_linear_on_flat_matches_hat(self):
        p = 3
        fl = flat(F1, F3, p)
        sb = ScaledBusemann(center_point(F1), p)
        pat, off = sb.linear_on_flat(fl)
        for c in [(0, 0, 0), (1, 0, -1), (Fraction(1, 2), -1, 2)]:
            x = fl.point(c)
            assert sb.hat(x) == off - dot(pat, chart_weights(x, fl.frame))

    def test_slope_identity_on_flat(self):
        # the two chamber-center functions of a flat sum to a constant there
        p = 2
        fl = flat(F1, F2, p)
        bi = ScaledBusemann(center_point(F1), p)
        bj = ScaledBusemann(center_point(F2), p)
        k = bi.hat(fl.base) + bj.hat(fl.base)
        for c in [(1, 0, -1), (-2, 1, 1), (Fraction(3, 2), 0, 0)]:
            x = fl.point(c)
            assert bi.hat(x) + bj.hat(x) == k


class TestTitsAngles:
    def test_vertex_table(self):
        assert tits_angle(nu_point(E0), nu_point(E0)).exact == "0"
        assert tits_angle(nu_point(E0), nu_point((1, 1, 0))).exact == "2pi/3"
        assert tits_angle(mu_point(E2), mu_point(E0)).exact == "2pi/3"
        assert tits_angle(nu_point(E0), mu_point(E2)).exact == "pi/3"
        assert tits_angle(mu_point(E2), nu_point(E0)).exact == "pi/3"
        assert tits_angle(nu_point(E2), mu_point(E2)).exact == "pi"

    def test_center_table(self):
        c1, c2 = center_point(F1), center_point(F2)
        assert tits_angle(c1, c1).exact == "0"
        assert tits_angle(c1, c2).exact == "pi"
        assert tits_angle(c1, center_point(flag(E0, (0, 1, 0)))).exact == "pi/3"
        assert tits_angle(c1, center_point(flag(E1, E2))).exact == "pi/3"
        # not opposite, nothing shared: gallery distance two
        assert tits_angle(c1, center_point(flag(E1, E0))).exact == "2pi/3"

    def test_center_vertex_distances(self):
        c1 = center_point(F1)
        assert tits_angle(c1, nu_point(E0)).exact == "pi/6"
        assert tits_angle(c1, nu_point(E1)).exact == "pi/2"
        assert tits_angle(c1, nu_point(E2)).exact == "5pi/6"
        assert tits_angle(c1, mu_point(E2)).exact == "pi/6"
        assert tits_angle(mu_point((0, 1, 0)), c1).exact == "pi/2"
        assert tits_angle(c1, mu_point(E0)).exact == "5pi/6"


class TestIntersectFlats:
    def test_self_intersection_is_whole_chart(self):
        fl = flat(F1, F2, 2)
        reg = intersect_flats(fl, fl)
        assert not reg.is_empty()
        for c in [(0, 0, 0), (5, -2, -3), (-4, 4, 0)]:
            assert reg.contains(c)

    @pytest.mark.parametrize("p", [2, 3, 5])
    def test_region_matches_membership_oracle(self, p):
        fa = flat(F1, F2, p)
        pool = [flat(F3, F2, p), flat(F1, F3, p),
                flat(flag((1, p, 0), E2), F2, p),
                flat(F1, flag((0, p, 1), E0), p)]
        grid = [Fraction(v) for v in range(-2, 3)]
        for fb in pool:
            reg = intersect_flats(fa, fb)
            for s in grid:
                for t in grid:
                    c = (s, t - s, -t)
                    x = fa.point(c)
                    inside = chart_weights(x, fb.frame) is not None
                    assert inside == reg.contains(c)

    def test_disjoint_apartments_found_and_verified(self):
        p = 2
        fa = flat(F1, F2, p)
        # two nearly dependent columns make the transition determinant
        # cancel p-adically, and such an apartment misses the standard one
        empties = []
        for k in (2, 3):
            ln = (1, 1, 0)
            mid = (1, 1 + p ** k, 0)
            g = flag(ln, plane_through(ln, mid))
            h = flag((0, 0, 1), plane_through((0, 0, 1), mid))
            assert opposite(g, h)
            fb = flat(g, h, p)
            if intersect_flats(fa, fb).is_empty():
                empties.append(fb)
        assert empties, "expected a disjoint apartment among candidates"
        for fb in empties:
            for s in range(-2, 3):
                for t in range(-2, 3):
                    x = fa.point((s, t - s, -t))
                    assert chart_weights(x, fb.frame) is None


class TestEqualBusemannSetting:
    """Two same-type points with a common antipodal ray at the origin."""

    def setup_method(self):
        self.p = 2
        self.o = standard_point(self.p)
        self.xi = mu_point(E0)              # plane x=0, antipodal to both
        self.b1 = busemann(nu_point(E0), self.p, self.o)
        self.b2 = busemann(nu_point((1, 1, 0)), self.p, self.o)

    def point_at(self, c, scale=1):
        return norm_point(self.p, identity(), tuple(scale * v for v in c))

    def test_equal_within_alpha_cone(self):
        # directions within pi/3 of the antipode direction (-2,1,1)
        cone = [(-2, 1, 1), (-1, 2, -1), (-1, -1, 2), (-1, 0, 1), (-1, 1, 0)]
        for d in cone:
            for t in (1, 2, Fraction(7, 2)):
                x = self.point_at(d, t)
                assert self.b1.hat(x) == self.b2.hat(x)

    def test_differ_beyond_alpha(self):
        outside = [(0, -1, 1), (2, -1, -1), (1, -2, 1)]
        seen = False
        for d in outside:
            for t in (1, 2, 3):
                x = self.point_at(d, t)
                seen = seen or self.b1.hat(x) != self.b2.hat(x)
        assert seen

    def test_tube_horoball_agreement(self):
        # D >= max(R, R/tan(pi/3)) = R; here both thresholds hatted by sqrt6
        rhat = dhat = 6
        r2 = Fraction(rhat * rhat, 6)
        d = (-2, 1, 1)
        pts = []
        rng = random.Random(5)
        for _ in range(120):
            c = tuple(Fraction(rng.randrange(-12, 13), 2) for _ in range(3))
            pts.append(self.point_at(tl(c)))
        ray = [self.point_at(d, t) for t in
               (0, 1, 2, 3, 4, Fraction(1, 2), Fraction(3, 2))]
        for x in pts:
            in_tube = any(distance2(x, r) <= r2 for r in ray)
            if in_tube:
                assert (self.b1.hat(x) <= dhat) == (self.b2.hat(x) <= dhat)


def _ray_point(fl, c, pat, t=8):
    return fl.point(tuple(cc + t * pp for cc, pp in zip(c, pat)))


class TestTriangleLemmas:
    """No random configuration realizes the forbidden angle systems."""

    TOL = 1e-9

    def _configs(self, p, n):
        fl = flat(F1, F2, p)
        rng = random.Random(p * 31 + n)
        out = []
        branch = from_cols(E0, E1, (1, 0, p))
        for _ in range(n):
            cp = tuple(Fraction(rng.randrange(-6, 7), 2) for _ in range(3))
            cq = tuple(Fraction(rng.randrange(-6, 7), 2) for _ in range(3))
            which = rng.randrange(3)
            if which == 0:
                cx = tuple(Fraction(rng.randrange(-8, 9), 2) for _ in range(3))
                x = fl.point(cx)
            elif which == 1:
                x = norm_point(p, branch,
                               tuple(Fraction(rng.randrange(-6, 7), 2)
                                     for _ in range(3)))
            else:
                x = norm_point(p, from_cols((1, p, 0), E1, E2),
                               tuple(Fraction(rng.randrange(-6, 7), 2)
                                     for _ in range(3)))
            out.append((fl, cp, cq, x))
        return out

    def test_first_forbidden_system(self):
        p = 2
        bnu1 = ScaledBusemann(nu_point(E0), p)
        for fl, cp, cq, x in self._configs(p, 25):
            pp, qq = fl.point(cp), fl.point(cq)
            # order so that b_nu1(p') <= b_nu1(p'')
            if bnu1.hat(pp) > bnu1.hat(qq):
                pp, qq, cp, cq = qq, pp, cq, cp
            if pp == x or qq == x:
                continue
            nu1p = _ray_point(fl, cp, (2, -1, -1))
            nu2q = _ray_point(fl, cq, (-1, -1, 2))
            etap = _ray_point(fl, cp, (1, -2, 1))
            etaq = _ray_point(fl, cq, (1, -2, 1))
            a1 = angle(pp, x, nu1p).radians
            a2 = angle(qq, x, nu2q).radians
            a3 = angle(pp, x, etap).radians
            a4 = angle(qq, x, etaq).radians
            for ah in (0.0, math.pi / 12, math.pi / 6, math.pi / 4):
                forbidden = (a1 < math.pi / 3 + ah - self.TOL
                             and a2 < math.pi / 3 + ah - self.TOL
                             and a3 > ah + self.TOL
                             and a4 > ah + self.TOL)
                assert not forbidden

    def test_second_forbidden_system(self):
        p = 3
        bnu1 = ScaledBusemann(nu_point(E0), p)
        checked = 0
        for fl, cp, cq, x in self._configs(p, 30):
            pp, qq = fl.point(cp), fl.point(cq)
            if bnu1.hat(pp) > bnu1.hat(qq):
                pp, qq, cp, cq = qq, pp, cq, cp
            if pp == qq or pp == x or qq == x:
                continue
            etaq = _ray_point(fl, cq, (1, -2, 1))
            # precondition: angle at p'' from p' to eta_12 at least pi/3
            if angle(qq, pp, etaq).radians < math.pi / 3 - self.TOL:
                continue
            checked += 1
            mu1p = _ray_point(fl, cp, (1, 1, -2))
            nu2q = _ray_point(fl, cq, (-1, -1, 2))
            xip = _ray_point(fl, cp, (-1, 2, -1))
            a1 = angle(pp, x, mu1p).radians
            a2 = angle(qq, x, nu2q).radians
            a3 = angle(pp, x, xip).radians
            a4 = angle(qq, x, etaq).radians
            for ah in (0.0, math.pi / 12, math.pi / 6):
                forbidden = (a1 < math.pi / 3 + ah - self.TOL
                             and a2 < math.pi / 3 + ah - self.TOL
                             and a3 > ah + self.TOL
                             and a4 > ah + self.TOL)
                assert not forbidden
        assert checked > 0
