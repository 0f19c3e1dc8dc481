"""Geometry of the integer lattice Z^d: regions, word metric, invariance,
separated sets and short spanning trees.

Points are plain tuples of ints.  A Region is an immutable, deduplicated
point set that knows its dimension.  All ratios are Fractions.
"""
from collections import deque
from fractions import Fraction
from itertools import product


class Region:
    __slots__ = ("dim", "points", "_order")

    def __init__(self, points, dim=None):
        pts = frozenset(tuple(int(c) for c in p) for p in points)
        if dim is None:
            if not pts:
                raise ValueError("cannot infer the dimension of an empty region")
            dim = len(next(iter(pts)))
        for p in pts:
            if len(p) != dim:
                raise ValueError(f"point {p} does not have dimension {dim}")
        self.dim = dim
        self.points = pts
        self._order = None

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.sorted())

    def __contains__(self, p):
        return tuple(p) in self.points

    def __eq__(self, other):
        return isinstance(other, Region) and self.dim == other.dim and self.points == other.points

    def __hash__(self):
        return hash((self.dim, self.points))

    def __repr__(self):
        if len(self.points) <= 6:
            return f"Region({self.sorted()})"
        return f"Region(<{len(self.points)} points in Z^{self.dim}>)"

    def sorted(self):
        # row-major: last coordinate is the slow one, so (x, y) sorts by y then x
        if self._order is None:
            self._order = tuple(sorted(self.points, key=lambda p: p[::-1]))
        return list(self._order)

    def shift(self, v):
        return Region((add(p, v) for p in self.points), self.dim)

    def union(self, other):
        return Region(self.points | other.points, self.dim)

    def intersection(self, other):
        return Region(self.points & other.points, self.dim)

    def difference(self, other):
        return Region(self.points - other.points, self.dim)

    def minkowski(self, other):
        return Region((add(p, q) for p in self.points for q in other.points), self.dim)

    def bounds(self):
        """Per-axis (lo, hi) inclusive bounds."""
        return [(min(p[i] for p in self.points), max(p[i] for p in self.points))
                for i in range(self.dim)]

    def to_json(self):
        return {"version": 1, "dim": self.dim, "points": [list(p) for p in self.sorted()]}

    @classmethod
    def from_json(cls, doc):
        return cls((tuple(p) for p in doc["points"]), doc["dim"])


def add(p, q):
    return tuple(a + b for a, b in zip(p, q))


def sub(p, q):
    return tuple(a - b for a, b in zip(p, q))


def neg(p):
    return tuple(-a for a in p)


def zero(d):
    return (0,) * d


def box(lo, hi):
    """Half-open box [lo_1, hi_1) x ... x [lo_d, hi_d)."""
    return Region(product(*(range(a, b) for a, b in zip(lo, hi))), len(lo))


def rect(*dims):
    return box((0,) * len(dims), dims)


def cube(r, d=2):
    """Closed cube [-r, r]^d."""
    return box((-r,) * d, (r + 1,) * d)


class MetricContext:
    """Symmetric generating set of Z^d, default the unit vectors and their negatives."""

    def __init__(self, d=2, generators=None):
        if generators is None:
            generators = []
            for i in range(d):
                e = [0] * d
                e[i] = 1
                generators.append(tuple(e))
                generators.append(neg(tuple(e)))
        gens = frozenset(tuple(g) for g in generators)
        if any(neg(g) not in gens for g in gens):
            raise ValueError("generating set is not symmetric")
        self.d = d
        self.generators = gens
        self._check_generates()

    def _check_generates(self):
        # Each unit vector must be a word in the generators; BFS in a box suffices
        # since every generator has bounded length.
        radius = max((max(abs(c) for c in g) for g in self.generators), default=0) + 2
        targets = set()
        for i in range(self.d):
            e = [0] * self.d
            e[i] = 1
            targets.add(tuple(e))
        seen = {zero(self.d)}
        frontier = [zero(self.d)]
        bound = 4 * radius
        while frontier and not targets <= seen:
            nxt = []
            for p in frontier:
                for g in self.generators:
                    q = add(p, g)
                    if q not in seen and max(abs(c) for c in q) <= bound:
                        seen.add(q)
                        nxt.append(q)
            frontier = nxt
        if not targets <= seen:
            raise ValueError("generators do not generate Z^d")

    def is_default(self):
        return self.generators == MetricContext(self.d).generators

    def distance(self, p, q):
        diff = sub(p, q)
        if self.is_default():
            return sum(abs(c) for c in diff)
        return self._bfs_distance(diff)

    def _bfs_distance(self, target):
        target = tuple(target)
        dist = {zero(self.d): 0}
        queue = deque([zero(self.d)])
        while queue:
            p = queue.popleft()
            if p == target:
                return dist[p]
            for g in self.generators:
                q = add(p, g)
                if q not in dist:
                    dist[q] = dist[p] + 1
                    queue.append(q)
        raise AssertionError("unreachable")


def ball(ctx, r):
    """S^r: all products of at most r generators."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    pts = {zero(ctx.d)}
    frontier = set(pts)
    for _ in range(r):
        frontier = {add(p, g) for p in frontier for g in ctx.generators} - pts
        pts |= frontier
    return Region(pts, ctx.d)


def core(E, K):
    """E ∩ ⋂_{s∈K} (E − s): points t of E with t + s ∈ E for every s in K."""
    pts = E.points
    return Region((t for t in pts if all(add(t, s) in pts for s in K.points)), E.dim)


def is_invariant(E, K, delta):
    """Return (is (K, delta)-invariant, exact ratio |core| / |E|)."""
    if len(E) == 0:
        raise ValueError("E must be nonempty")
    delta = Fraction(delta)
    ratio = Fraction(len(core(E, K)), len(E))
    return ratio >= 1 - delta, ratio


def _components(V, r, ctx):
    pts = V.sorted()
    remaining = set(pts)
    comps = []
    default = ctx.is_default()
    if default:
        offsets = [p for p in product(range(-r, r + 1), repeat=V.dim) if sum(map(abs, p)) <= r]
    else:
        offsets = list(ball(ctx, r).points)
    for p in pts:
        if p not in remaining:
            continue
        remaining.discard(p)
        comp = [p]
        queue = deque([p])
        while queue:
            a = queue.popleft()
            for o in offsets:
                b = add(a, o)
                if b in remaining:
                    remaining.discard(b)
                    comp.append(b)
                    queue.append(b)
        comps.append(comp)
    return comps


def is_r_connected(V, r, ctx):
    if len(V) == 0:
        raise ValueError("V must be nonempty")
    return len(_components(V, r, ctx)) == 1


def maximal_r_separated(V, r, ctx):
    """Lexicographic greedy: keep a point if it is farther than r from all kept points."""
    if len(V) == 0:
        raise ValueError("V must be nonempty")
    kept = []
    near = set()
    nbhd = ball(ctx, r).points
    for p in V.sorted():
        if p in near:
            continue
        kept.append(p)
        near.update(add(p, o) for o in nbhd)
    return Region(kept, V.dim)


def is_spanning(C, V, r, ctx):
    """Every point of V within distance r of C."""
    nbhd = ball(ctx, r).points
    cover = {add(c, o) for c in C.points for o in nbhd}
    return V.points <= cover


def _path_in(F, a, b, ctx):
    """Shortest generator path from a to b staying inside F (BFS), as a point list."""
    pts = F.points
    prev = {a: None}
    queue = deque([a])
    while queue:
        p = queue.popleft()
        if p == b:
            break
        for g in sorted(ctx.generators):
            q = add(p, g)
            if q in pts and q not in prev:
                prev[q] = p
                queue.append(q)
    if b not in prev:
        return None
    path = [b]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


# |S^r| >= 2 r^2 for the standard generators of Z^2 (checked in the tests for
# r <= 64), so a tree built by spanning_tree_2r has at most
# |V| + 5r|V| <= 10|F| / (2r) points, i.e. b = 10 / c = 5.
BALL_CONSTANT_C = 2
TREE_B = Fraction(10, BALL_CONSTANT_C)


class SpanningTree:
    def __init__(self, vertices, edges, dim):
        self.vertices = vertices    # list of points
        self.edges = edges          # list of (i, j, path)
        self.dim = dim

    def path_edge_count(self):
        return sum(len(path) - 1 for _, _, path in self.edges)

    def to_json(self):
        return {"version": 1, "dim": self.dim,
                "vertices": [list(v) for v in self.vertices],
                "edges": [[i, j, [list(p) for p in path]] for i, j, path in self.edges]}


def spanning_tree_2r(F, r, ctx):
    """A tree on a maximal separated subset V of F whose edges are paths in F
    of length at most 4r+1.  Raises ValueError if F is not 1-connected or if
    |S^r F| > 2|F|.

    V is taken 2r-separated: that is what makes the balls S^r v pairwise
    disjoint, which the counting bound |V||S^r| <= |S^r F| relies on.  It is
    still 2r-spanning by maximality.
    """
    if r < 1:
        raise ValueError("r must be positive")
    if not is_r_connected(F, 1, ctx):
        raise ValueError("F is not connected")
    Sr = ball(ctx, r)
    grown = len(Sr.minkowski(F))
    if grown > 2 * len(F):
        raise ValueError(f"invariance precondition fails: |S^{r}F| = {grown} > {2 * len(F)}")
    V = maximal_r_separated(F, 2 * r, ctx)
    verts = V.sorted()
    index = {v: i for i, v in enumerate(verts)}

    # Voronoi cells by multi-source BFS inside F; adjacent cells give candidate
    # edges whose connecting path has length <= 2r + 1 + 2r.
    owner = {v: v for v in verts}
    dist = {v: 0 for v in verts}
    queue = deque(verts)
    while queue:
        p = queue.popleft()
        for g in sorted(ctx.generators):
            q = add(p, g)
            if q in F.points and q not in owner:
                owner[q] = owner[p]
                dist[q] = dist[p] + 1
                queue.append(q)
    candidates = set()
    for p in F.points:
        for g in ctx.generators:
            q = add(p, g)
            if q in owner and owner[q] != owner[p]:
                a, b = sorted((index[owner[p]], index[owner[q]]))
                candidates.add((a, b))

    # Kruskal on candidate edges weighted by path length (union-find).
    parent = list(range(len(verts)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    weighted = []
    for a, b in candidates:
        path = _path_in(F, verts[a], verts[b], ctx)
        weighted.append((len(path) - 1, a, b, path))
    weighted.sort(key=lambda e: e[:3])
    edges = []
    for length, a, b, path in weighted:
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        if length > 4 * r + 1:
            raise AssertionError(f"edge {a}-{b} needs a path of length {length} > {4 * r + 1}")
        parent[ra] = rb
        edges.append((a, b, path))
    if len(edges) != len(verts) - 1:
        raise AssertionError("candidate graph is disconnected")
    tree = SpanningTree(verts, edges, F.dim)
    on_paths = {p for _, _, path in edges for p in path} | set(verts)
    tree.certificate = {
        "vertex_bound": len(verts) * len(Sr) <= 2 * len(F),
        "edge_bound": tree.path_edge_count() <= 5 * r * (len(verts) - 1),
        "size_bound": Fraction(len(on_paths)) <= Fraction(TREE_B) * len(F) / r,
        "grown_size": grown,
    }
    return tree


def connected_invariant_set(K, delta, ctx):
    """Smallest square [0, n)^d, n a power of two, that is (K, delta)-invariant."""
    delta = Fraction(delta)
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    n = 1
    while True:
        E = box(zero(ctx.d), (n,) * ctx.d)
        if is_invariant(E, K, delta)[0]:
            return E
        n *= 2
