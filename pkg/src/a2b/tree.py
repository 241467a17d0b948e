"""The asymptote tree of an S-set.

Every flat F_{i,j} collapses along vertical lines to a copy of the
reals; gluing the collapsed lines over shared strong asymptote classes
yields a metric tree whose ends are the chamber centers.  Coordinates
on the tree are the center Busemann values B_k, extended off their own
flats through the tripod of each triple; the sup of coordinate
differences is the tree metric D and the quotient map is 1-Lipschitz
(2 D^2 <= ... == 2 d^2 in the hat scale used here, see tree_distance).

All values are sqrt(2)-scaled hats, so edge lengths, offsets, and
distances stay exact rationals.
"""

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

from .boundary import _scaled_busemann, center_point, intersect_flats
from .core import NormPoint, distance2
from .exact import GeometryError, ParameterError
from .mat3 import dot, fr
from .regions import whole_plane
from .tripods import LEVEL, NoTripod, center_hat, find_tripod, on_flat


def _pairs(n):
    return tuple(combinations(range(n), 2))


def locate_flat(sset, x):
    """First pair (i, j) whose flat contains x, or None."""
    for i, j in _pairs(len(sset)):
        if on_flat(sset.flags[i], sset.flags[j], sset.p, x):
            return (i, j)
    return None


@lru_cache(maxsize=4096)
def _tripod_pt(flags, p, i, j, k):
    t = find_tripod(flags[i], flags[j], flags[k], p)
    if isinstance(t, NoTripod):
        raise t
    return t.point


def tripod_of(sset, i, j, k):
    """Canonical tripodal point of a triple; order-insensitive, cached."""
    i, j, k = sorted((i, j, k))
    return _tripod_pt(sset.flags, sset.p, i, j, k)


def _center_line(f, fl, p):
    # (pattern, offset) of the center Busemann of f on the chart of fl
    got = _scaled_busemann(center_point(f), p).linear_on_flat(fl)
    if got is None:
        raise GeometryError("flat does not see the chamber center")
    return got


def _side_value(sset, base_pair, shared, k, level):
    """b_k at a representative of the given b_shared level in
    F_base cap F_{shared,k}, or None when the level cut is empty."""
    p = sset.p
    fb = sset.flat(*base_pair)
    fs = sset.flat(shared, k)
    pat, off = _center_line(sset.flags[shared], fb, p)
    cut = intersect_flats(fb, fs).cut_eq(pat, off - level)
    c = cut.feasible_point()
    if c is None:
        return None
    return center_hat(sset.flags[k], p, fb.point(c))


def b_coordinate(sset, k, x, pair=None):
    """B_k(x), the k-th center Busemann of the class of x (hat scale).

    x must lie in the flat of the given pair; pair=None locates the
    first containing flat.  For k outside the pair the value is b_k at
    a representative on x's vertical level: in F_{i,j} cap F_{i,k} at
    or below the tripod level, in F_{i,j} cap F_{j,k} at or above it.
    On the tripod level itself both charts apply and must agree.
    """
    p = sset.p
    if pair is None:
        pair = locate_flat(sset, x)
        if pair is None:
            raise ParameterError("point lies in no flat of the S-set")
    i, j = pair
    if not on_flat(sset.flags[i], sset.flags[j], p, x):
        raise ParameterError("point is not in the named flat")
    if k == i or k == j:
        return center_hat(sset.flags[k], p, x)
    pt = tripod_of(sset, i, j, k)
    li = center_hat(sset.flags[i], p, x)
    lp = center_hat(sset.flags[i], p, pt)
    vals = []
    if li <= lp:
        vals.append(_side_value(sset, pair, i, k, li))
    if li >= lp:
        lj = center_hat(sset.flags[j], p, x)
        vals.append(_side_value(sset, pair, j, k, lj))
    vals = [v for v in vals if v is not None]
    if not vals:
        raise GeometryError("no representative at the requested level")
    if len(vals) == 2 and vals[0] != vals[1]:
        raise GeometryError("side charts disagree at the tripod level")
    return vals[0]


def b_vector(sset, x, pair=None):
    """All coordinates B_k(x) as a tuple (hat scale)."""
    if pair is None:
        pair = locate_flat(sset, x)
        if pair is None:
            raise ParameterError("point lies in no flat of the S-set")
    return tuple(b_coordinate(sset, k, x, pair) for k in range(len(sset)))


@dataclass(frozen=True)
class TreeDistance:
    """D(x, y) together with a pair realizing it inside one flat."""

    value: object       # Fraction, hat scale
    k: int              # coordinate attaining the sup
    pair: tuple         # indices (a, b) of the common flat
    x_rep: NormPoint
    y_rep: NormPoint


def tree_distance(sset, x, y, x_pair=None, y_pair=None):
    """max_k |B_k(x) - B_k(y)| with a realizing pair.

    The representatives sit on the level axis of a common flat,
    horizontally aligned, so their building distance realizes the
    value: 2 d^2(x', y') == value^2 in the hat scale.
    """
    if x_pair is None:
        x_pair = locate_flat(sset, x)
    if y_pair is None:
        y_pair = locate_flat(sset, y)
    if x_pair is None or y_pair is None:
        raise ParameterError("point lies in no flat of the S-set")
    vx = b_vector(sset, x, x_pair)
    vy = b_vector(sset, y, y_pair)
    gaps = [abs(a - b) for a, b in zip(vx, vy)]
    value = max(gaps)
    k_star = gaps.index(value)
    for a, b in combinations(sorted(set(x_pair) | set(y_pair)), 2):
        kap = sset.kappa(a, b)
        if vx[a] + vx[b] != kap or vy[a] + vy[b] != kap:
            continue
        if gaps[a] != value and gaps[b] != value:
            continue
        lead = a if gaps[a] == value else b
        flt = sset.flat(a, b)
        pat, off = _center_line(sset.flags[lead], flt, sset.p)
        s = dot(pat, LEVEL)
        xr = flt.point(tuple((fr(off) - vx[lead]) / s * t for t in LEVEL))
        yr = flt.point(tuple((fr(off) - vy[lead]) / s * t for t in LEVEL))
        assert 2 * distance2(xr, yr) == value * value
        return TreeDistance(value, k_star, (a, b), xr, yr)
    raise GeometryError("no common flat realizes the tree distance")


@dataclass(frozen=True, eq=False)
class MetricTree:
    """Combinatorial asymptote tree with exact edge lengths (hat scale).

    Vertices are identified with their B-coordinate vectors; end k
    enters by a pendant ray at end_vertex[k].
    """

    sset: object
    bvecs: tuple        # vertex id -> B-vector
    edges: tuple        # (u, v, length), ids with u < v
    end_vertex: tuple   # end k -> id of the vertex its ray leaves
    medians: dict = field(repr=False)

    @property
    def p(self):
        return self.sset.p

    def ends(self):
        return range(len(self.end_vertex))

    def median(self, i, j, k):
        """B-vector of the median of the three ends."""
        return self.medians[tuple(sorted((i, j, k)))]

    def _adjacency(self):
        adj = {v: [] for v in range(len(self.bvecs))}
        for u, w, ln in self.edges:
            adj[u].append((w, ln))
            adj[w].append((u, ln))
        return adj

    def vertex_path(self, u, w):
        """Vertex ids along the path from u to w."""
        prev = {u: None}
        queue = deque((u,))
        adj = self._adjacency()
        while queue:
            v = queue.popleft()
            if v == w:
                break
            for nb, _ in adj[v]:
                if nb not in prev:
                    prev[nb] = v
                    queue.append(nb)
        if w not in prev:
            raise GeometryError("tree is not connected")
        path = [w]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        return path[::-1]

    def vertex_distance(self, u, w):
        path = self.vertex_path(u, w)
        lens = {frozenset((a, b)): ln for a, b, ln in self.edges}
        return sum((lens[frozenset(e)] for e in zip(path, path[1:])),
                   Fraction(0))


def _sup_diff(a, b):
    return max(abs(s - t) for s, t in zip(a, b))


def _line_sum(tree, a, b):
    # B_a + B_b is constant on the tree line between the two ends;
    # any median involving the pair sits on it
    others = [m for m in tree.ends() if m not in (a, b)]
    vec = tree.median(a, b, others[0])
    return vec[a] + vec[b]


def _assert_four_point(tree):
    for quad in combinations(tree.ends(), 4):
        sums = []
        for (a, b), (c, d) in (((0, 1), (2, 3)), ((0, 2), (1, 3)),
                               ((0, 3), (1, 2))):
            sums.append(_line_sum(tree, quad[a], quad[b])
                        + _line_sum(tree, quad[c], quad[d]))
        ordered = sorted(sums)
        if ordered[1] != ordered[2]:
            raise GeometryError(f"four point condition fails on ends {quad}")


def _self_check(tree, samples, seed):
    # D between sampled flat points must equal the combinatorial path
    # length between their projections
    sset = tree.sset
    rng = random.Random(f"treecheck:{sset.p}:{seed}")
    pairs = _pairs(len(sset))
    per = max(2, -(-samples // len(pairs)))
    vecs = []
    for pair in pairs:
        flt = sset.flat(*pair)
        for c in whole_plane().sample(per, rng, window=6):
            vecs.append(b_vector(sset, flt.point(c), pair))
    spots = [_locate(tree, v) for v in vecs]
    for _ in range(samples):
        i = rng.randrange(len(vecs))
        j = rng.randrange(len(vecs))
        if _sup_diff(vecs[i], vecs[j]) != path_distance(spots[i], spots[j]):
            raise GeometryError("tree metric disagrees with D on a sample")


def build_tree(sset, check=True, samples=102, seed=0):
    """The metric tree spanned by the ends of an S-set.

    Ends are inserted incrementally: the attachment point of end k is
    the median of smallest B_k among the tripod points p_{i,j,k} over
    already inserted pairs, located on the i-to-j path by its strictly
    monotone B_i coordinate.  Vertices carry full B-vectors and edge
    lengths are exact.  With check=True the construction is verified
    against D on sampled flat points.
    """
    if not getattr(sset, "ok", False):
        raise ParameterError("flags do not form an S-set")
    n = len(sset)
    med = {}

    def median(i, j, k):
        key = tuple(sorted((i, j, k)))
        if key not in med:
            vec = b_vector(sset, tripod_of(sset, *key), (key[0], key[1]))
            for a, b in combinations(key, 2):
                assert vec[a] + vec[b] == sset.kappa(a, b)
            med[key] = vec
        return med[key]

    verts = []
    index = {}
    adj = {}

    def vid(vec):
        if vec not in index:
            index[vec] = len(verts)
            verts.append(vec)
            adj[index[vec]] = set()
        return index[vec]

    def connect(u, w):
        adj[u].add(w)
        adj[w].add(u)

    def disconnect(u, w):
        adj[u].discard(w)
        adj[w].discard(u)

    def bfs(u, w):
        prev = {u: None}
        queue = deque((u,))
        while queue:
            v = queue.popleft()
            for nb in adj[v]:
                if nb not in prev:
                    prev[nb] = v
                    queue.append(nb)
        path = [w]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        return path[::-1]

    c0 = vid(median(0, 1, 2))
    end_vertex = {0: c0, 1: c0, 2: c0}
    for k in range(3, n):
        best = None
        ties = []
        for i, j in combinations(sorted(end_vertex), 2):
            vec = median(i, j, k)
            if best is None or vec[k] < best[0][k]:
                best = (vec, (i, j))
                ties = [vec]
            elif vec[k] == best[0][k]:
                ties.append(vec)
        avec, (i_s, j_s) = best
        assert all(t == avec for t in ties), "attachment is not unique"
        path = bfs(end_vertex[i_s], end_vertex[j_s])
        levels = [verts[v][i_s] for v in path]
        assert all(levels[m] < levels[m + 1] for m in range(len(levels) - 1))
        t = avec[i_s]
        if t < levels[0]:
            # deeper toward eta_i than any branch point: split its ray
            assert avec not in index
            a = vid(avec)
            connect(a, path[0])
            end_vertex[i_s] = a
        elif t > levels[-1]:
            assert avec not in index
            a = vid(avec)
            connect(a, path[-1])
            end_vertex[j_s] = a
        elif t in levels:
            a = path[levels.index(t)]
            assert verts[a] == avec, "level collision off the tree"
        else:
            m = max(i for i, lv in enumerate(levels) if lv < t)
            assert avec not in index
            a = vid(avec)
            disconnect(path[m], path[m + 1])
            connect(path[m], a)
            connect(a, path[m + 1])
        end_vertex[k] = a
    edges = []
    for u in adj:
        for w in adj[u]:
            if u < w:
                ln = _sup_diff(verts[u], verts[w])
                # unit slopes: every coordinate crosses the whole edge
                assert all(abs(verts[u][m] - verts[w][m]) == ln
                           for m in range(n))
                edges.append((u, w, ln))
    edges.sort()
    tree = MetricTree(sset=sset, bvecs=tuple(verts), edges=tuple(edges),
                      end_vertex=tuple(end_vertex[k] for k in range(n)),
                      medians=med)
    assert len(tree.edges) == len(tree.bvecs) - 1
    assert len(tree.vertex_path(0, len(tree.bvecs) - 1)) >= 1
    for k in range(n):
        attach = tree.bvecs[tree.end_vertex[k]][k]
        assert all(vec[k] > attach for i, vec in enumerate(tree.bvecs)
                   if i != tree.end_vertex[k])
    _assert_four_point(tree)
    if check:
        _self_check(tree, samples, seed)
    return tree


@dataclass(frozen=True, eq=False)
class TreePoint:
    """A point of the asymptote tree, addressed combinatorially.

    place is ("vertex", id), ("edge", index, offset from the first
    endpoint), or ("end", k, depth beyond the attach vertex).
    """

    tree: MetricTree
    place: tuple
    coords: tuple

    def __eq__(self, other):
        if not isinstance(other, TreePoint):
            return NotImplemented
        return self.tree is other.tree and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)


def _locate(tree, vec):
    vec = tuple(vec)
    n = len(vec)
    for i, bv in enumerate(tree.bvecs):
        if bv == vec:
            return TreePoint(tree, ("vertex", i), vec)
    for eidx, (u, w, ln) in enumerate(tree.edges):
        bu, bw = tree.bvecs[u], tree.bvecs[w]
        t = vec[0] - bu[0] if bw[0] > bu[0] else bu[0] - vec[0]
        if not 0 < t < ln:
            continue
        if all(vec[m] - bu[m] == (t if bw[m] > bu[m] else -t)
               for m in range(n)):
            return TreePoint(tree, ("edge", eidx, t), vec)
    for k in range(n):
        bv = tree.bvecs[tree.end_vertex[k]]
        t = bv[k] - vec[k]
        if t > 0 and all(vec[m] - bv[m] == t for m in range(n) if m != k):
            return TreePoint(tree, ("end", k, t), vec)
    raise GeometryError("coordinates do not land on the tree")


def project(tree, x, pair=None):
    """pi(x): the TreePoint carrying the B-coordinates of x."""
    if pair is None:
        pair = locate_flat(tree.sset, x)
        if pair is None:
            raise ParameterError("point lies in no flat of the S-set")
    return _locate(tree, b_vector(tree.sset, x, pair))


def _anchors(tree, place):
    kind = place[0]
    if kind == "vertex":
        return ((place[1], Fraction(0)),)
    if kind == "edge":
        u, w, ln = tree.edges[place[1]]
        return ((u, place[2]), (w, ln - place[2]))
    return ((tree.end_vertex[place[1]], place[2]),)


def path_distance(t1, t2):
    """Length of the tree path between two TreePoints (hat scale)."""
    tree = t1.tree
    if t2.tree is not tree:
        raise ParameterError("points belong to different trees")
    a, b = t1.place, t2.place
    if a[0] == b[0] and a[0] in ("edge", "end") and a[1] == b[1]:
        return abs(a[2] - b[2])
    best = None
    for va, oa in _anchors(tree, a):
        for vb, ob in _anchors(tree, b):
            d = oa + tree.vertex_distance(va, vb) + ob
            if best is None or d < best:
                best = d
    return best


def membership_pairs(t):
    """T_[x]: pairs whose tree line passes through the point.

    The closed criterion B_i + B_j == kappa_{i,j} is used, so branch
    vertices collect every line touching them; along an open edge the
    answer is constant.
    """
    s = t.tree.sset
    out = set()
    for i, j in _pairs(len(s)):
        if t.coords[i] + t.coords[j] == s.kappa(i, j):
            out.add((i, j))
    return out


@dataclass(frozen=True, eq=False)
class ClassSet:
    """C_[x] and its clamped vertical slice, in one flat's chart."""

    point: TreePoint
    pairs: tuple            # T_[x], sorted
    chart_pair: tuple       # pair whose flat carries the chart
    region: object          # ConvexRegion for C_[x]
    core_pairs: tuple       # at most three pairs already cutting C_[x]
    member: NormPoint
    level: object           # B_{i0} of the class
    clamp: tuple            # (lo, hi) window of the vertical coordinate
    hat_region: object      # C_[x] at the level, clamped


def _default_clamp(sset, pair, pat_v, off_v):
    # window spanning the vertical coordinates of the pair's tripod
    # points, padded to half-width at least 1
    i0, j0 = pair
    f0 = sset.flat(i0, j0)
    hats = []
    for k in range(len(sset)):
        if k in pair:
            continue
        c = f0.chart(tripod_of(sset, i0, j0, k))
        assert c is not None
        hats.append(fr(off_v) - dot(pat_v, c))
    mid = (min(hats) + max(hats)) / 2
    half = max((max(hats) - min(hats)) / 2, Fraction(1))
    return (mid - half, mid + half)


def class_set(t, clamp=None):
    """The convex set of flat points over a tree point.

    C_[x] is the intersection of all flats whose tree line passes the
    point, described in the chart of the first pair and reproduced by
    at most three of them; the hat region is its vertical-level slice
    clamped to the given (lo, hi) window of the xi-vertex coordinate
    (default: the window spanned by the chart pair's tripod points).
    """
    sset = t.tree.sset
    p = sset.p
    pairs = tuple(sorted(membership_pairs(t)))
    if not pairs:
        raise GeometryError("tree point sees no flat")
    i0, j0 = pairs[0]
    f0 = sset.flat(i0, j0)
    region = whole_plane()
    for pr in pairs:
        if pr != (i0, j0):
            region = region.intersect(intersect_flats(f0, sset.flat(*pr)))
    region = region.reduced()
    c = region.feasible_point()
    if c is None:
        raise GeometryError("class flats have empty intersection")
    member = f0.point(c)
    core = None
    for size in (1, 2, 3):
        for combo in combinations(pairs, size):
            cand = whole_plane()
            for pr in combo:
                if pr != (i0, j0):
                    cand = cand.intersect(intersect_flats(f0, sset.flat(*pr)))
            if cand.equals(region):
                core = combo
                break
        if core is not None:
            break
    if core is None:
        raise GeometryError("no three flats cut the class set")
    level = t.coords[i0]
    pat_l, off_l = _center_line(sset.flags[i0], f0, p)
    sliced = region.cut_eq(pat_l, fr(off_l) - level)
    pat_v, off_v = _scaled_busemann(f0.xi_ij, p).linear_on_flat(f0)
    if clamp is None:
        clamp = _default_clamp(sset, (i0, j0), pat_v, off_v)
    lo, hi = clamp
    hat_region = sliced.cut(pat_v, fr(off_v) - hi)
    hat_region = hat_region.cut(tuple(-v for v in pat_v), lo - fr(off_v))
    hat_region = hat_region.reduced()
    if hat_region.feasible_point() is None:
        raise GeometryError("clamped class slice is empty")
    return ClassSet(t, pairs, (i0, j0), region, core, member, level,
                    (lo, hi), hat_region)


def _rat(q):
    q = fr(q)
    return f"{q.numerator}/{q.denominator}"


def to_dot(tree):
    """GraphViz text: point vertices, exact lengths, labeled end rays."""
    out = ["graph asymptote_tree {"]
    for i in range(len(tree.bvecs)):
        out.append(f"  v{i} [shape=point];")
    for u, w, ln in tree.edges:
        out.append(f'  v{u} -- v{w} [label="{ln}"];')
    for k, v in enumerate(tree.end_vertex):
        out.append(f'  end{k} [shape=plaintext, label="eta_{k}"];')
        out.append(f"  v{v} -- end{k} [style=dashed];")
    out.append("}")
    return "\n".join(out) + "\n"


def to_json_obj(tree):
    """JSON-ready dict: vertices with B-vectors, edges, labeled ends."""
    return {
        "p": tree.sset.p,
        "vertices": [{"id": i, "B": [_rat(v) for v in vec]}
                     for i, vec in enumerate(tree.bvecs)],
        "edges": [{"u": u, "v": w, "length": _rat(ln)}
                  for u, w, ln in tree.edges],
        "ends": [{"flag": k, "vertex": v}
                 for k, v in enumerate(tree.end_vertex)],
    }
