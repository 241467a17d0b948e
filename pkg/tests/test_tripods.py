"""Shift, S-set, tripod and four point structure tests.

The oracle comes first and never touches Busemann functions: it carries a
chart point around the cycle of flats by walking along each flat's center
axis until the next flat's chart accepts the point, and reads the shift
off the net vertical displacement.  Chart membership is the only
primitive it shares with the code under test.
"""

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from a2b.boundary import flag, flat, intersect_flats, opposite, primitive
from a2b.core import distance2, points_equal, standard_point
from a2b.exact import GeometryError, ParameterError, RadicalValue
from a2b.mat3 import dot, matvec
from a2b.regions import whole_plane
from a2b.tripods import (BudgetExhausted, LEVEL, NoTripod, SSet, VERT,
                         apply_gl_sset, asymptote_class, check_endpoint_props,
                         check_flats_identity, find_tripod,
                         four_point_example, four_point_structure, is_sset,
                         kappa_hat, make_sset, on_flat, random_gl,
                         random_sset, region_shape, shift, tripod_point,
                         tripod_segment)
from a2b.tripods import _pairing_shift_hat, _random_flag

E0, E2 = (1, 0, 0), (0, 0, 1)
F1 = flag(E0, E2)
F2 = flag(E2, E0)
F3 = flag((1, 1, 1), (1, -2, 1))


def walk_shift_hat(f1, f2, f3, p):
    """Chart-walk shift oracle.

    Starting at the base chart of F_{1,2}, hop to each next flat by
    moving toward the shared center (the minus-LEVEL axis), doubling the
    step until the next chart picks the point up; rays toward a center
    eventually enter every flat asymptotic to it, so the walk terminates.
    The center axis is class-preserving, hence the vertical offset after
    the full cycle is exactly the holonomy.
    """
    cycle = ((f1, f2), (f2, f3), (f3, f1))
    c = (0, 0, 0)
    for idx in range(3):
        A = flat(*cycle[idx], p)
        B = flat(*cycle[(idx + 1) % 3], p)
        t = 1
        while True:
            assert t <= 2 ** 20, "walk never entered the next flat"
            q = A.point(tuple(c[i] - t * LEVEL[i] for i in range(3)))
            cb = B.chart(q)
            if cb is not None:
                c = cb
                break
            t *= 2
    return -dot(VERT, c)


def random_opposite_triple(rng, height=6):
    while True:
        fs = [_random_flag(rng, height) for _ in range(3)]
        if (fs[0] != fs[1] and fs[1] != fs[2] and fs[0] != fs[2]
                and all(opposite(a, b) for a, b in
                        ((fs[0], fs[1]), (fs[1], fs[2]), (fs[0], fs[2])))):
            return tuple(fs)


# ---------------------------------------------------------------------------
# shift against the oracle


def test_shift_matches_walk_oracle_on_random_triples():
    rng = random.Random(20)
    for trial in range(30):
        p = rng.choice((2, 3, 5))
        fs = random_opposite_triple(rng)
        expect = walk_shift_hat(*fs, p)
        assert _pairing_shift_hat(*fs, p) == expect
        assert shift(*fs, p) == RadicalValue(Fraction(expect, 6), 6)


def test_shift_zero_on_symmetric_triple():
    for p in (2, 3, 5):
        assert walk_shift_hat(F1, F2, F3, p) == 0
        s = shift(F1, F2, F3, p)
        assert s.coef == 0
        ok, cert = is_sset((F1, F2, F3), p)
        assert ok and cert is None


def test_engineered_nearby_flag_shifts_by_half_step():
    # replacing the branch flag by a p-perturbed neighbour moves the
    # holonomy off zero by exactly half a vertex step
    for p in (2, 3, 5):
        bad = flag((1, 1, p), (1, -1 - p, 1))
        assert opposite(F1, bad) and opposite(F2, bad)
        assert walk_shift_hat(F1, F2, bad, p) == 3
        assert shift(F1, F2, bad, p) == RadicalValue(Fraction(1, 2), 6)


@given(st.integers(0, 10 ** 6), st.sampled_from((2, 3, 5)))
@settings(max_examples=25, deadline=None)
def test_shift_alternates_under_all_permutations(seed, p):
    fs = random_opposite_triple(random.Random(seed))
    base = shift(*fs, p)
    even = ((0, 1, 2), (1, 2, 0), (2, 0, 1))
    odd = ((1, 0, 2), (0, 2, 1), (2, 1, 0))
    for perm in even:
        assert shift(*(fs[i] for i in perm), p) == base
    for perm in odd:
        assert shift(*(fs[i] for i in perm), p) == base.scaled(-1)


def test_shift_is_gl_invariant():
    from a2b.tripods import apply_gl_flag
    rng = random.Random(31)
    for trial in range(20):
        p = rng.choice((2, 3, 5))
        fs = random_opposite_triple(rng)
        g = random_gl(rng)
        moved = tuple(apply_gl_flag(g, f) for f in fs)
        assert shift(*moved, p) == shift(*fs, p)


def test_strong_asymptote_class_equality():
    p = 5
    x = standard_point(p)
    F12 = flat(F1, F2, p)
    c = F12.chart(x)
    level = F12.point(tuple(c[i] + 2 * LEVEL[i] for i in range(3)))
    vert = F12.point(tuple(c[i] + VERT[i] for i in range(3)))
    a = asymptote_class(F1, p, x)
    assert a == asymptote_class(F1, p, level)
    assert a != asymptote_class(F1, p, vert)
    assert a != asymptote_class(F2, p, x)
    assert hash(a) == hash(asymptote_class(F1, p, level))


# ---------------------------------------------------------------------------
# S-sets


def test_make_sset_reports_and_certificates():
    p = 5
    good = make_sset((F1, F2, F3), p)
    assert good.ok and good.certificate is None
    assert all(entry[-1] is True for entry in good.report if entry[0] == "pair")
    triples = [e for e in good.report if e[0] == "triple"]
    assert len(triples) == 1 and triples[0][-1].coef == 0

    rep = make_sset((F1, F2, F1), p)
    assert not rep.ok and rep.certificate[0] == "pair"
    assert rep.certificate[3] == "repeated"

    tangent = flag(E0, (0, 1, 0))    # shares its line with F1
    bad = make_sset((F1, F2, tangent), p)
    assert not bad.ok and bad.certificate[3] == "not opposite"

    shifted = make_sset((F1, F2, flag((1, 1, p), (1, -1 - p, 1))), p)
    assert not shifted.ok
    kind, i, j, k, s = shifted.certificate
    assert kind == "triple" and s == RadicalValue(Fraction(1, 2), 6)


def test_is_sset_needs_three_flags():
    with pytest.raises(ParameterError):
        is_sset((F1, F2), 5)


def test_random_sset_is_deterministic_and_valid():
    for p in (2, 3, 5):
        for size in (3, 4, 5, 6):
            a = random_sset(p, size=size, seed=9)
            b = random_sset(p, size=size, seed=9)
            assert a.flags == b.flags
            assert a.ok and len(a) == size
            ok, cert = is_sset(a.flags, p)
            assert ok, cert
    assert random_sset(5, seed=1).flags != random_sset(5, seed=2).flags


def test_random_sset_budget_exhaustion_reports_progress():
    with pytest.raises(BudgetExhausted) as err:
        random_sset(5, size=6, seed=0, budget=3)
    assert err.value.report["target"] == 6
    assert err.value.report["flags"] < 6


def test_apply_gl_keeps_sset_valid():
    rng = random.Random(17)
    s = random_sset(3, size=4, seed=5)
    moved = apply_gl_sset(random_gl(rng), s)
    assert moved.ok


# ---------------------------------------------------------------------------
# tripods


def test_tripod_of_symmetric_triple_is_standard_point():
    for p in (2, 3, 5):
        t = find_tripod(F1, F2, F3, p)
        assert not isinstance(t, NoTripod)
        assert points_equal(t.point, standard_point(p))
        for fa, fb in ((F1, F2), (F1, F3), (F2, F3)):
            assert on_flat(fa, fb, p, t.point)


def test_find_tripod_reports_nonzero_shift():
    p = 5
    bad = flag((1, 1, p), (1, -1 - p, 1))
    verdict = find_tripod(F1, F2, bad, p)
    assert isinstance(verdict, NoTripod)
    assert verdict.shift == RadicalValue(Fraction(1, 2), 6)
    with pytest.raises(NoTripod):
        tripod_segment(F1, F2, bad, p)


def test_tripod_exists_iff_shift_vanishes():
    rng = random.Random(23)
    seen_zero = seen_nonzero = 0
    for trial in range(40):
        p = rng.choice((2, 3, 5))
        fs = random_opposite_triple(rng)
        t = find_tripod(*fs, p)
        if shift(*fs, p).coef == 0:
            assert not isinstance(t, NoTripod)
            seen_zero += 1
        else:
            assert isinstance(t, NoTripod)
            seen_nonzero += 1
    assert seen_zero and seen_nonzero


def test_tripod_point_maximizes_first_busemann():
    from a2b.boundary import center_point, _scaled_busemann
    rng = random.Random(3)
    p = 5
    s = random_sset(p, size=3, seed=21)
    f1, f2, f3 = s.flags
    t = find_tripod(f1, f2, f3, p)
    b1 = _scaled_busemann(center_point(f1), p)
    top = b1.hat(t.point)
    S = intersect_flats(flat(f1, f2, p), flat(f1, f3, p))
    for c in S.sample(60, rng):
        y = flat(f1, f2, p).point(c)
        assert b1.hat(y) <= top


def test_tripod_point_is_gl_equivariant():
    from a2b.core import apply_gl
    from a2b.tripods import apply_gl_flag
    rng = random.Random(41)
    p = 3
    s = random_sset(p, size=3, seed=14)
    t = find_tripod(*s.flags, p)
    for trial in range(5):
        g = random_gl(rng)
        moved = tuple(apply_gl_flag(g, f) for f in s.flags)
        tm = find_tripod(*moved, p)
        assert points_equal(tm.point, apply_gl(g, t.point))


SEGMENT_TRIPLES = {
    "point": (3, (((1, 1, 1), (1, 0, -1)), ((1, 1, -1), (1, 0, 1)),
                  ((1, -1, 3), (1, 1, 0)))),
    "segment": (2, (((1, 1, 1), (1, 0, -1)), ((1, 1, -1), (1, 0, 1)),
                    ((1, -1, 2), (1, 1, 0)))),
    "ray": (2, (((1, 1, 1), (1, 0, -1)), ((1, 1, -1), (1, 0, 1)),
                ((1, 1, 2), (1, 1, -1)))),
    "line": (2, (((1, 1, 1), (1, 0, -1)), ((1, 1, -1), (1, 0, 1)),
                 ((1, 1, 2), (2, 0, -1)))),
}


@pytest.mark.parametrize("kind", sorted(SEGMENT_TRIPLES))
def test_tripod_segment_kinds(kind):
    p, spec_flags = SEGMENT_TRIPLES[kind]
    fs = tuple(flag(l, n) for l, n in spec_flags)
    seg = tripod_segment(*fs, p)
    assert seg.kind == kind
    if kind in ("point", "segment"):
        assert seg.lower is not None and seg.upper is not None
        assert seg.lower_hat <= seg.upper_hat
    if kind == "line":
        assert seg.lower is None and seg.upper is None


def test_segment_points_pass_slope_test_and_outside_fails():
    p, spec_flags = SEGMENT_TRIPLES["segment"]
    fs = tuple(flag(l, n) for l, n in spec_flags)
    seg = tripod_segment(*fs, p)
    rng = random.Random(2)
    F12 = seg.flat
    pairs = ((fs[0], fs[1]), (fs[0], fs[2]), (fs[1], fs[2]))
    for c in seg.region.sample(40, rng):
        q = F12.point(c)
        assert all(on_flat(a, b, p, q) for a, b in pairs)
    lo = F12.chart(seg.lower)
    hi = F12.chart(seg.upper)
    for outside in (tuple(lo[i] + VERT[i] for i in range(3)),
                    tuple(hi[i] - VERT[i] for i in range(3)),
                    tuple(lo[i] + LEVEL[i] for i in range(3)),
                    tuple(lo[i] - LEVEL[i] for i in range(3))):
        q = F12.point(outside)
        assert not all(on_flat(a, b, p, q) for a, b in pairs)


def test_lower_endpoint_minimizes_pair_busemann():
    from a2b.boundary import _scaled_busemann
    p, spec_flags = SEGMENT_TRIPLES["segment"]
    fs = tuple(flag(l, n) for l, n in spec_flags)
    seg = tripod_segment(*fs, p)
    b12 = _scaled_busemann(seg.flat.eta_ij, p)
    low = b12.hat(seg.lower)
    assert low == seg.lower_hat
    rng = random.Random(8)
    for c in seg.region.sample(100, rng):
        assert b12.hat(seg.flat.point(c)) >= low
    assert b12.hat(seg.upper) == seg.upper_hat >= low


def test_tripod_point_accessor_checks_shift():
    p = 5
    s = make_sset((F1, F2, F3), p)
    assert points_equal(tripod_point(s, 0, 1, 2), standard_point(p))
    bad = SSet(p, (F1, F2, flag((1, 1, p), (1, -1 - p, 1))), False, None, ())
    with pytest.raises(NoTripod):
        tripod_point(bad, 0, 1, 2)


# ---------------------------------------------------------------------------
# four point structures


QUADPOD = (flag(E0, E2), flag(E2, E0),
           flag((1, 1, 1), (1, -2, 1)), flag((1, -1, 1), (1, 2, 1)))


def test_four_point_structure_fourpod():
    for p in (3, 5):
        fps = four_point_structure(QUADPOD, p)
        assert fps.kind == "fourpod"
        assert fps.edge_hat == 0
        assert points_equal(fps.point, fps.point_prime)
        assert len(fps.verdicts) == 4


def test_four_point_example_is_generic():
    ex = four_point_example(5)
    assert ex.ok and len(ex) == 4
    fps = four_point_structure(ex.flags, 5)
    assert fps.kind == "generic"
    assert fps.edge_hat > 0
    assert not points_equal(fps.point, fps.point_prime)
    g = fps.flags
    shape = region_shape(intersect_flats(flat(g[0], g[1], 5), flat(g[1], g[2], 5)))
    assert shape == "sector"
    tris = sorted(v[0] for v in fps.verdicts)
    assert tris == [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]


def test_four_point_edge_equals_busemann_gap():
    from a2b.boundary import center_point, _scaled_busemann
    ex = four_point_example(5)
    fps = four_point_structure(ex.flags, 5)
    b1 = _scaled_busemann(center_point(fps.flags[0]), 5)
    gap = abs(b1.hat(fps.point) - b1.hat(fps.point_prime))
    assert gap == fps.edge_hat


def test_bridge_between_p_and_p_prime_stays_in_cyclic_flats():
    ex = four_point_example(5)
    fps = four_point_structure(ex.flags, 5)
    g = fps.flags
    cp, cpp = fps.chart_point, fps.chart_point_prime
    for k in range(11):
        c = tuple(cp[i] + Fraction(k, 10) * (cpp[i] - cp[i]) for i in range(3))
        q = fps.chart_flat.point(c)
        for i, j in ((0, 1), (1, 2), (2, 3), (0, 3)):
            assert on_flat(g[i], g[j], 5, q)


def test_shaped_sampling_hits_requested_kind():
    for shape in ("generic", "tree"):
        s = random_sset(5, size=4, seed=7, shape=shape)
        assert four_point_structure(s.flags, 5).kind == shape
    with pytest.raises(BudgetExhausted) as err:
        random_sset(5, size=4, seed=3, budget=40, shape="tree")
    assert err.value.report["shapes"]["generic"] == 1


def test_random_quadruples_classify_without_error():
    rng = random.Random(29)
    kinds = set()
    for seed in range(8):
        p = rng.choice((2, 3, 5))
        s = random_sset(p, size=4, seed=100 + seed)
        fps = four_point_structure(s.flags, p)
        kinds.add(fps.kind)
        assert len(fps.verdicts) == 4
    assert kinds   # at least one shape classified


def test_four_point_structure_rejects_non_sset():
    p = 5
    bad = (F1, F2, F3, flag((1, 1, p), (1, -1 - p, 1)))
    with pytest.raises(ParameterError):
        four_point_structure(bad, p)


# ---------------------------------------------------------------------------
# flat identities


def test_flats_identity_on_generic_example():
    fps = four_point_structure(four_point_example(5).flags, 5)
    rep = check_flats_identity(fps, samples=250, rng=random.Random(4))
    assert rep.quad_equal
    assert rep.cross_empty is True
    assert rep.strips_contained
    assert rep.separation > 0
    assert rep.skipped == ()
    assert rep.ok


def test_flats_identity_skips_cross_verdict_for_fourpod():
    fps = four_point_structure(QUADPOD, 5)
    rep = check_flats_identity(fps, samples=60, rng=random.Random(4))
    assert rep.cross_empty is None
    assert rep.skipped == ("cross_empty",)
    assert rep.quad_equal and rep.strips_contained and rep.ok


def test_flats_identity_detects_planted_violation():
    fps = four_point_structure(four_point_example(5).flags, 5)

    def liar(fa, fb, p, x):
        return False

    rep = check_flats_identity(fps, samples=30, rng=random.Random(4), member=liar)
    assert not rep.quad_equal
    assert not rep.strips_contained
    assert not rep.ok


# ---------------------------------------------------------------------------
# endpoint geometry


def test_endpoint_properties_at_probes():
    p, spec_flags = SEGMENT_TRIPLES["segment"]
    fs = tuple(flag(l, n) for l, n in spec_flags)
    seg = tripod_segment(*fs, p)
    F12 = seg.flat
    c0 = F12.chart(seg.lower)
    rng = random.Random(6)
    probes = [c0,
              tuple(c0[i] + VERT[i] for i in range(3)),
              tuple(c0[i] - 2 * VERT[i] for i in range(3)),
              tuple(c0[i] + 3 * LEVEL[i] for i in range(3)),
              tuple(c0[i] - VERT[i] + LEVEL[i] for i in range(3))]
    probes.extend(whole_plane().sample(8, rng, window=3))
    for c in probes:
        rep = check_endpoint_props(seg, F12.point(c))
        assert rep.ok, (c, rep.items)


def test_endpoint_report_marks_vacuous_items_at_the_endpoint():
    p, spec_flags = SEGMENT_TRIPLES["segment"]
    fs = tuple(flag(l, n) for l, n in spec_flags)
    seg = tripod_segment(*fs, p)
    rep = check_endpoint_props(seg, seg.lower)
    assert rep.ok
    assert rep.items["dominant_pair"] is None
    assert rep.items["halfplane_split"] is None
    assert rep.items["distance_bound"] is True


def test_endpoint_props_need_a_lower_endpoint():
    p, spec_flags = SEGMENT_TRIPLES["line"]
    fs = tuple(flag(l, n) for l, n in spec_flags)
    seg = tripod_segment(*fs, p)
    with pytest.raises(ParameterError):
        check_endpoint_props(seg, standard_point(p))


# ---------------------------------------------------------------------------
# exactness regressions


def test_intersections_survive_awkward_determinants():
    # frames with determinants that are not powers of two once forced
    # float contamination through the inverse; the shared base point of
    # these two flats was reported missing
    fa = (flag((7, -3, -2), (40, 46, 71)), flag((7, 5, 7), (4, 21, -19)))
    fb = (flag((7, 5, 7), (4, 21, -19)), flag((3, -4, 3), (26, 9, -14)))
    A = flat(*fa, 5)
    B = flat(*fb, 5)
    R = intersect_flats(A, B)
    assert not R.is_empty()
    q = A.point(R.feasible_point())
    assert B.chart(q) is not None
    assert on_flat(*fb, 5, q)


def test_inverse_of_integer_frame_is_exact():
    from a2b.mat3 import inv3, matmul, identity
    frame = ((7, 2365, 7), (-3, -1044, 5), (-2, -656, 7))
    inv = inv3(frame)
    assert all(isinstance(e, Fraction) for row in inv for e in row)
    assert matmul(frame, inv) == identity()


def test_kappa_is_attained_and_minimal():
    p = 5
    ex = four_point_example(p)
    f1, f2 = ex.flags[0], ex.flags[1]
    kap = kappa_hat(f1, f2, p)
    F12 = flat(f1, f2, p)
    rng = random.Random(12)
    from a2b.boundary import center_point, _scaled_busemann
    b1 = _scaled_busemann(center_point(f1), p)
    b2 = _scaled_busemann(center_point(f2), p)
    for c in whole_plane().sample(40, rng):
        q = F12.point(c)
        assert b1.hat(q) + b2.hat(q) == kap
    other = flat(ex.flags[1], ex.flags[2], p)
    off = [b1.hat(other.point(c)) + b2.hat(other.point(c))
           for c in whole_plane().sample(40, rng)]
    assert all(v >= kap for v in off)
    assert any(v > kap for v in off)
