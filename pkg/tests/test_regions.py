"""Half-plane region tests.

The grid oracle comes first: a dense rational grid filtered through
contains() gives inner bounds for extents and distances that the exact
routines must dominate, and equals exactly on bounded polygons whose
corners lie on the grid.
"""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from a2b.exact import GeometryError, ParameterError
from a2b.mat3 import dot, tl
from a2b.regions import (
    SINGULAR_NORMALS, gram2, halfplane, plane_coords, region, singular_hull,
    weight_coords, whole_plane)


def grid(span=4, den=2):
    vals = [Fraction(i, den) for i in range(-span * den, span * den + 1)]
    return [weight_coords((s, t)) for s in vals for t in vals]


GRID = grid()


def oracle_extent(reg, n):
    vals = [dot(n, tl(c)) for c in GRID if reg.contains(c)]
    if not vals:
        return None
    return min(vals), max(vals)


def oracle_dist2(reg, c):
    s0, t0 = plane_coords(c)
    best = None
    for q in GRID:
        if not reg.contains(q):
            continue
        s, t = plane_coords(q)
        d2 = gram2((s0 - s, t0 - t))
        if best is None or d2 < best:
            best = d2
    return best


# unit triangle in (s, t): s >= 0, t >= 0, s + t <= 1
TRIANGLE = region([
    halfplane((1, 0, 0), 0),
    halfplane((0, 0, -1), 0),
    halfplane((-1, 0, 1), -1),
])

# strip 0 <= s <= 2, t free
STRIP = region([halfplane((1, 0, 0), 0), halfplane((-1, 0, 0), -2)])

# cone s >= 1, t >= s
CONE = region([halfplane((1, 0, 0), 1), halfplane((-1, 1, 0), 0)])

EMPTY = region([halfplane((1, 0, 0), 1), halfplane((-1, 0, 0), 0)])

FUNCTIONALS = [(1, 0, 0), (0, 0, -1), (1, -1, 0), (1, 1, -2), (-2, 1, 1)]


class TestGridOracle:
    def test_extents_dominate_grid(self):
        for reg in (TRIANGLE, STRIP, CONE):
            for n in FUNCTIONALS:
                got = oracle_extent(reg, n)
                assert got is not None
                omin, omax = got
                lo, hi = reg.extent(n)
                assert lo is None or lo <= omin
                assert hi is None or hi >= omax

    def test_bounded_extents_attained_at_vertices(self):
        for n in FUNCTIONALS:
            lo, hi = TRIANGLE.extent(n)
            vals = [dot(n, tl(v)) for v in TRIANGLE.vertices()]
            assert lo == min(vals)
            assert hi == max(vals)

    def test_dist2_below_every_grid_member(self):
        pts = [weight_coords((Fraction(2), Fraction(0))),
               weight_coords((Fraction(-1), Fraction(-1))),
               weight_coords((Fraction(3, 2), Fraction(3, 2)))]
        for reg in (TRIANGLE, STRIP, CONE):
            for c in pts:
                d2, q = reg.nearest(c)
                assert reg.contains(q)
                s0, t0 = plane_coords(c)
                s1, t1 = plane_coords(q)
                assert gram2((s0 - s1, t0 - t1)) == d2
                od2 = oracle_dist2(reg, c)
                if od2 is not None:
                    assert d2 <= od2


class TestFrozen:
    def test_triangle_vertices(self):
        vs = {plane_coords(v) for v in TRIANGLE.vertices()}
        assert vs == {(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)),
                      (Fraction(0), Fraction(1))}

    def test_triangle_nearest_foot(self):
        # from (2, 0) the projection is the corner (1, 0); gram2 of (1, 0) is 2
        d2, q = TRIANGLE.nearest(weight_coords((Fraction(2), Fraction(0))))
        assert d2 == 2
        assert plane_coords(q) == (Fraction(1), Fraction(0))

    def test_inside_distance_zero(self):
        c = weight_coords((Fraction(1, 4), Fraction(1, 4)))
        assert TRIANGLE.dist2(c) == 0

    def test_extent_values(self):
        # <(1,0,0), c> = s on the unit triangle
        assert TRIANGLE.extent((1, 0, 0)) == (0, 1)
        lo, hi = CONE.extent((1, 0, 0))
        assert lo == 1 and hi is None

    def test_empty_region(self):
        assert EMPTY.is_empty()
        assert EMPTY.feasible_point() is None
        assert EMPTY.sample(3, random.Random(0)) == []
        with pytest.raises(GeometryError):
            EMPTY.extent((1, 0, 0))
        with pytest.raises(GeometryError):
            EMPTY.nearest((0, 0, 0))

    def test_constant_normal_rejected(self):
        with pytest.raises(ParameterError):
            halfplane((1, 1, 1), 0)

    def test_normal_canonicalization(self):
        # (4,1,1) acts as 3*c0 on mean-zero triples, same as (2,-1,-1)
        assert halfplane((4, 1, 1), 5) == halfplane((2, -1, -1), 5)

    def test_bounded(self):
        assert TRIANGLE.bounded()
        assert not STRIP.bounded()
        assert not whole_plane().bounded()
        assert EMPTY.bounded()

    def test_cut_eq_line(self):
        line = STRIP.cut_eq((1, 0, 0), 1)
        assert line.extent((1, 0, 0)) == (1, 1)
        assert not line.bounded()
        assert line.has_direction((0, 1, -1))


def hp_strategy():
    normal = st.tuples(st.integers(-3, 3), st.integers(-3, 3),
                       st.integers(-3, 3)).filter(lambda n: len(set(n)) > 1)
    return st.builds(halfplane, normal, st.integers(-4, 4))


@st.composite
def regions_strategy(draw):
    hps = draw(st.lists(hp_strategy(), min_size=0, max_size=6))
    return region(hps)


class TestProperties:
    @settings(max_examples=80, deadline=None)
    @given(regions_strategy())
    def test_feasible_point_and_samples_are_members(self, reg):
        fp = reg.feasible_point()
        if reg.is_empty():
            assert fp is None
            return
        assert fp is not None
        assert reg.contains(fp)
        for c in reg.sample(5, random.Random(7)):
            assert reg.contains(c)

    @settings(max_examples=80, deadline=None)
    @given(regions_strategy())
    def test_extent_brackets_members(self, reg):
        if reg.is_empty():
            return
        lo, hi = reg.extent((1, -1, 0))
        for c in reg.sample(6, random.Random(3)) + [reg.feasible_point()]:
            v = dot((1, -1, 0), tl(c))
            assert lo is None or lo <= v
            assert hi is None or v <= hi

    @settings(max_examples=60, deadline=None)
    @given(regions_strategy(), regions_strategy())
    def test_intersection_is_conjunction(self, a, b):
        both = a.intersect(b)
        for c in GRID[::23]:
            assert both.contains(c) == (a.contains(c) and b.contains(c))

    @settings(max_examples=60, deadline=None)
    @given(regions_strategy())
    def test_reduced_is_equal_set(self, reg):
        red = reg.reduced()
        assert len(red.halfplanes) <= len(reg.halfplanes)
        assert red.equals(reg)

    @settings(max_examples=60, deadline=None)
    @given(regions_strategy())
    def test_vertices_are_members(self, reg):
        for v in reg.vertices():
            assert reg.contains(v)

    @settings(max_examples=40, deadline=None)
    @given(regions_strategy(), regions_strategy())
    def test_containment_on_samples(self, a, b):
        if a.contains_region(b) and not b.is_empty():
            for c in b.sample(4, random.Random(11)):
                assert a.contains(c)


class TestSingularHull:
    def test_contains_support(self):
        pts = [(0, 0, 0), tl((2, 1, 0)), tl((0, 3, 1))]
        hull = singular_hull(pts)
        for c in pts:
            assert hull.contains(c)
        assert hull.bounded()

    def test_ray_opens_hull(self):
        pts = [(0, 0, 0)]
        ray = (1, -2, 1)
        hull = singular_hull(pts, rays=[ray])
        assert hull.has_direction(ray)
        far = tuple(100 * v for v in tl(ray))
        assert hull.contains(far)
        closed = singular_hull(pts)
        assert not closed.contains(far)

    def test_is_intersection_of_six_families(self):
        pts = [tl((1, 0, 0)), tl((0, 1, 0))]
        hull = singular_hull(pts)
        for n in SINGULAR_NORMALS:
            rhs = min(dot(n, tl(p)) for p in pts)
            lo, _ = hull.extent(n)
            assert lo == rhs

    def test_needs_points(self):
        with pytest.raises(ParameterError):
            singular_hull([])
