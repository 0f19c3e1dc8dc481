"""Tilings of Z^d by finitely many shapes with diagonal center lattices.

Level numbers in a NestedTilingSequence start at 1, so `seq.level(1)` is the
base tiling.  Shapes are either explicit Regions or axis-parallel Rects; the
latter keep the huge box shapes of the entropy builder cheap to verify.
"""
import math
from fractions import Fraction
from itertools import product

from .lattice import Region, add, box, sub, zero
from .subshift import PointOracle, entropy_estimate


class Rect:
    """Half-open box [lo, hi)."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        self.lo = tuple(lo)
        self.hi = tuple(hi)
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError(f"empty rectangle [{self.lo}, {self.hi})")

    @property
    def dim(self):
        return len(self.lo)

    @property
    def dims(self):
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    def __len__(self):
        return math.prod(self.dims)

    def __contains__(self, t):
        return all(a <= c < b for a, c, b in zip(self.lo, t, self.hi))

    def __eq__(self, other):
        return isinstance(other, Rect) and (self.lo, self.hi) == (other.lo, other.hi)

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"Rect({self.lo}, {self.hi})"

    def bounds(self):
        return [(a, b - 1) for a, b in zip(self.lo, self.hi)]

    def shift(self, v):
        return Rect(add(self.lo, v), add(self.hi, v))

    def to_region(self):
        return box(self.lo, self.hi)

    def contains_rect(self, other):
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def meets(self, other):
        return all(max(a, c) < min(b, d) for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def core(self, K):
        """Rect ∩ ⋂_{s∈K}(Rect − s), or None when empty."""
        lo, hi = [], []
        for i in range(self.dim):
            coords = [s[i] for s in K.points]
            lo.append(self.lo[i] - min(0, min(coords)))
            hi.append(self.hi[i] - max(0, max(coords)))
        if any(a >= b for a, b in zip(lo, hi)):
            return None
        return Rect(lo, hi)

    def to_json(self):
        return {"rect": {"lo": list(self.lo), "hi": list(self.hi)}}


def shape_from_json(doc):
    if "rect" in doc:
        return Rect(doc["rect"]["lo"], doc["rect"]["hi"])
    return Region.from_json(doc)


def _shape_bounds(S):
    return S.bounds()


def _shape_cells(S):
    return S.to_region().points if isinstance(S, Rect) else S.points


class CenterLattice:
    """The coset offset + diag(moduli) Z^d."""

    __slots__ = ("offset", "moduli")

    def __init__(self, offset, moduli):
        self.offset = tuple(offset)
        self.moduli = tuple(moduli)
        if any(m < 1 for m in self.moduli):
            raise ValueError("moduli must be positive")

    @property
    def dim(self):
        return len(self.moduli)

    def __contains__(self, t):
        return all((c - o) % m == 0 for c, o, m in zip(t, self.offset, self.moduli))

    def __eq__(self, other):
        return isinstance(other, CenterLattice) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def _key(self):
        return tuple(o % m for o, m in zip(self.offset, self.moduli)), self.moduli

    def __repr__(self):
        return f"CenterLattice({self.offset} + diag{self.moduli})"

    def axis_values(self, i, lo, hi):
        """Lattice coordinates along axis i in the closed range [lo, hi]."""
        m, o = self.moduli[i], self.offset[i]
        first = lo + (o - lo) % m
        return range(first, hi + 1, m)

    def points_in_box(self, lo, hi):
        """Centers in the closed box [lo, hi]."""
        return list(product(*(self.axis_values(i, lo[i], hi[i]) for i in range(self.dim))))

    def count_in(self, i, lo, hi):
        return len(self.axis_values(i, lo, hi))

    def to_json(self):
        return {"offset": list(self.offset), "moduli": list(self.moduli)}


class Tiling:
    def __init__(self, pairs):
        self.pairs = [(S, L) for S, L in pairs]
        if not self.pairs:
            raise ValueError("a tiling needs at least one shape")
        self.dim = self.pairs[0][1].dim
        # symbols for the tiling point: equal shapes share a symbol
        self._symbol = {}
        for S, _ in self.pairs:
            self._symbol.setdefault(S, len(self._symbol) + 1)

    def shapes(self):
        return [S for S, _ in self.pairs]

    def tiles_meeting(self, lo, hi):
        """(pair index, center) for every translate meeting the closed box [lo, hi]."""
        out = []
        for idx, (S, L) in enumerate(self.pairs):
            sb = _shape_bounds(S)
            clo = [lo[i] - sb[i][1] for i in range(self.dim)]
            chi = [hi[i] - sb[i][0] for i in range(self.dim)]
            for c in L.points_in_box(clo, chi):
                out.append((idx, c))
        return out

    def tiles_inside(self, window):
        """Translates lying entirely inside `window`."""
        wb = window.bounds()
        lo = [a for a, _ in wb]
        hi = [b for _, b in wb]
        pts = window.points
        out = []
        for idx, c in self.tiles_meeting(lo, hi):
            S = self.pairs[idx][0]
            if isinstance(S, Rect) and isinstance(window, Rect):
                if window.contains_rect(S.shift(c)):
                    out.append((idx, c))
            elif all(add(p, c) in pts for p in _shape_cells(S)):
                out.append((idx, c))
        return out

    def covers_at(self, t):
        """All (pair index, center) whose tile contains t."""
        hits = []
        for idx, (S, L) in enumerate(self.pairs):
            if isinstance(S, Rect):
                ranges = [L.axis_values(i, t[i] - S.hi[i] + 1, t[i] - S.lo[i]) for i in range(self.dim)]
                hits.extend((idx, c) for c in product(*ranges))
            else:
                hits.extend((idx, sub(t, p)) for p in S.points if sub(t, p) in L)
        return hits

    def point(self):
        """x_t = symbol of S_i when t is a center of S_i, and 0 otherwise."""
        table = [(self._symbol[S], L) for S, L in self.pairs]

        def rule(t):
            for sym, L in table:
                if t in L:
                    return sym
            return 0

        period = tuple(math.lcm(*(L.moduli[i] for _, L in self.pairs)) for i in range(self.dim))
        return PointOracle(rule, self.dim, tag="tiling", period=period)

    def to_json(self):
        return {"version": 1,
                "shapes": [S.to_json() for S, _ in self.pairs],
                "centers": [L.to_json() for _, L in self.pairs]}

    @classmethod
    def from_json(cls, doc):
        return cls([(shape_from_json(s), CenterLattice(c["offset"], c["moduli"]))
                    for s, c in zip(doc["shapes"], doc["centers"])])


def rectangle_monotiling(dims, offset=None):
    if any(n < 1 for n in dims):
        raise ValueError("rectangle sides must be positive")
    d = len(dims)
    return Tiling([(Rect(zero(d), dims), CenterLattice(offset or zero(d), dims))])


def verify_tiling(t, window):
    """Every window point lies in exactly one tile.  Returns (ok, defects)."""
    if len(window) == 0:
        raise ValueError("window must be nonempty")
    defects = []
    for p in window.sorted() if isinstance(window, Region) else window.to_region().sorted():
        hits = t.covers_at(p)
        if not hits:
            defects.append(("gap", p))
        elif len(hits) > 1:
            defects.append(("overlap", p, hits))
    return not defects, defects


class NestedTilingSequence:
    """levels[n-1] is level n.  refinements[n] (n >= 2) maps each pair index i
    of level n to a list of (j, g): level-(n-1) pair j placed at offset g."""

    def __init__(self, levels, refinements=None):
        self.levels = list(levels)
        self.refinements = dict(refinements or {})

    def level(self, n):
        return self.levels[n - 1]

    def __len__(self):
        return len(self.levels)

    def to_json(self):
        return {"version": 1, "levels": [t.to_json() for t in self.levels],
                "refinements": {str(n): {str(i): [[j, list(g)] for j, g in parts]
                                         for i, parts in ref.items()}
                                for n, ref in self.refinements.items()}}


def nested_rectangles(dims_list):
    """Rectangle monotilings at the origin, each refined by a grid of the previous."""
    levels = [rectangle_monotiling(d) for d in dims_list]
    refs = {}
    for n in range(2, len(levels) + 1):
        big, small = dims_list[n - 1], dims_list[n - 2]
        steps = [range(0, B, b) for B, b in zip(big, small)]
        refs[n] = {0: [(0, g) for g in product(*steps)]}
    return NestedTilingSequence(levels, refs)


def _partition_defects(S, parts, lower):
    """Check that the placed lower shapes partition S exactly."""
    placed = [lower.pairs[j][0].shift(g) for j, g in parts]
    if isinstance(S, Rect) and all(isinstance(P, Rect) for P in placed):
        bad = [("outside", k) for k, P in enumerate(placed) if not S.contains_rect(P)]
        for a in range(len(placed)):
            for b in range(a + 1, len(placed)):
                if placed[a].meets(placed[b]):
                    bad.append(("overlap", a, b))
        if not bad and sum(len(P) for P in placed) != len(S):
            bad.append(("gap", None))
        return bad
    cells = {}
    for k, P in enumerate(placed):
        for p in _shape_cells(P):
            cells.setdefault(p, []).append(k)
    target = _shape_cells(S)
    bad = [("overlap", p) for p, ks in cells.items() if len(ks) > 1]
    bad += [("outside", p) for p in cells if p not in target]
    bad += [("gap", p) for p in target if p not in cells]
    return bad


def verify_tightly_nested(seq, level_idx, window):
    """Returns (ok, defects).  Defects are ("partition", i, detail) or
    ("not-a-center", j, c) with c the offending center g_j + c."""
    if level_idx < 2 or level_idx > len(seq):
        raise ValueError("level index must name a refined level (2..len)")
    upper, lower = seq.level(level_idx), seq.level(level_idx - 1)
    ref = seq.refinements.get(level_idx)
    if ref is None:
        return False, [("missing-refinement", level_idx)]
    defects = []
    for i, (S, _) in enumerate(upper.pairs):
        for d in _partition_defects(S, ref[i], lower):
            defects.append(("partition", i, d))
    if defects:
        return False, defects
    wb = window.bounds()
    for i, c in upper.tiles_meeting([a for a, _ in wb], [b for _, b in wb]):
        for j, g in ref[i]:
            if add(g, c) not in lower.pairs[j][1]:
                defects.append(("not-a-center", j, add(g, c)))
    return not defects, defects


def tiling_entropy_estimate(t, windows, scan):
    return entropy_estimate(t.point(), windows, scan)


def syndeticity_bound(centers, window):
    """Smallest box F = [-(g_1), 0] x ... containing 0 with F + centers ⊇ window."""
    wb = window.bounds()
    lo = [a - m for (a, _), m in zip(wb, centers.moduli)]
    hi = [b for _, b in wb]
    gaps = []
    for i in range(centers.dim):
        vals = list(centers.axis_values(i, lo[i], hi[i]))
        if not vals:
            raise ValueError("no centers in the dilated window")
        g = 0
        k = 0
        for x in range(wb[i][0], wb[i][1] + 1):
            while k + 1 < len(vals) and vals[k + 1] <= x:
                k += 1
            if vals[k] > x:
                raise ValueError("no centers in the dilated window")
            g = max(g, x - vals[k])
        gaps.append(g)
    return box([-g for g in gaps], [1] * centers.dim)


def _line_count(S, c, h):
    """|{j : j h ∈ S + c}|."""
    if isinstance(S, Rect):
        lo_j, hi_j = -math.inf, math.inf
        for i, hi_ in enumerate(h):
            a, b = S.lo[i] + c[i], S.hi[i] + c[i] - 1
            if hi_ == 0:
                if not a <= 0 <= b:
                    return 0
                continue
            x, y = sorted((Fraction(a, hi_), Fraction(b, hi_)))
            lo_j, hi_j = max(lo_j, math.ceil(x)), min(hi_j, math.floor(y))
        return max(0, hi_j - lo_j + 1)
    count = 0
    nz = next(i for i, v in enumerate(h) if v)
    for p in S.points:
        q = add(p, c)
        if q[nz] % h[nz] == 0:
            j = q[nz] // h[nz]
            if all(q[i] == j * h[i] for i in range(len(h))):
                count += 1
    return count


class PropertyIDReport:
    def __init__(self, H):
        self.H = H
        self.containment = []     # (F_test, level or None)
        self.density = []         # (delta, level or None, worst ratio per level)
        self.column = None        # dict or None
        self.entropy = []         # (level, [EntropyEstimate], analytic bound or None)

    @property
    def inconclusive(self):
        return (any(n is None for _, n in self.containment)
                or any(n is None for _, n, _ in self.density)
                or self.column is None)

    def to_json(self):
        def frac(x):
            return [x.numerator, x.denominator]
        return {
            "H": list(self.H),
            "containment": [{"F": F.to_json(), "level": n} for F, n in self.containment],
            "density": [{"delta": frac(d), "level": n, "worst": [frac(r) for r in ws]}
                        for d, n, ws in self.density],
            "column": self.column,
            "entropy": [{"level": n, "estimates": [[e.count, e.size] for e in es], "bound": b}
                        for n, es, b in self.entropy],
            "inconclusive": self.inconclusive,
        }


def check_property_id(seq, H, F_tests=(), deltas=(), window=None, entropy_windows=None):
    if not len(seq):
        raise ValueError("empty sequence")
    if not any(H):
        raise ValueError("H must be a nonzero vector")
    d = len(H)
    window = window or box((-16,) * d, (16,) * d)
    wb = window.bounds()
    wlo, whi = [a for a, _ in wb], [b for _, b in wb]
    report = PropertyIDReport(tuple(H))

    # (1) the test set sits inside a single tile
    for F in F_tests:
        found = None
        fb = F.bounds()
        for n in range(1, len(seq) + 1):
            T = seq.level(n)
            for idx, c in T.tiles_meeting([a for a, _ in fb], [b for _, b in fb]):
                S = T.pairs[idx][0]
                if all(sub(p, c) in S for p in F.points):
                    found = n
                    break
            if found:
                break
        report.containment.append((F, found))

    # (2) exact density of the cyclic direction in every visible tile
    worst = []
    for n in range(1, len(seq) + 1):
        T = seq.level(n)
        ratios = [Fraction(_line_count(T.pairs[i][0], c, H), len(T.pairs[i][0]))
                  for i, c in T.tiles_meeting(wlo, whi)]
        worst.append(max(ratios))
    for delta in deltas:
        delta = Fraction(delta)
        n0 = next((n for n, w in enumerate(worst, 1) if w <= delta), None)
        report.density.append((delta, n0, worst))

    # (3) one shape stacked along H covers H ∩ window
    line = [p for p in window.to_region().points if _on_line(p, H)] if isinstance(window, Rect) \
        else [p for p in window.points if _on_line(p, H)]
    for n in range(1, len(seq) + 1):
        T = seq.level(n)
        for idx, (S, L) in enumerate(T.pairs):
            m = 1
            for i in range(d):
                m = math.lcm(m, L.moduli[i] // math.gcd(L.moduli[i], H[i]))
            step = tuple(m * v for v in H)
            for c in L.points_in_box(wlo, whi):
                if all(any(sub(sub(p, c), tuple(j * s for s in step)) in S
                                        for j in _j_range(p, c, step, S)) for p in line):
                    report.column = {"level": n, "pair": idx, "step": m, "center": list(c)}
                    break
            if report.column:
                break
        if report.column:
            break

    # entropy trend, with the analytic monotiling bound log|S| / |F| when it applies
    windows = entropy_windows or [box(zero(d), (k,) * d) for k in (2, 4)]
    scan = box(zero(d), (4 * max(max(b - a + 1 for a, b in w.bounds()) for w in windows),) * d)
    for n in range(1, len(seq) + 1):
        T = seq.level(n)
        ests = tiling_entropy_estimate(T, windows, scan)
        bound = None
        if len(T.pairs) == 1:
            bound = math.log(len(T.pairs[0][0])) / len(T.pairs[0][0]) if len(T.pairs[0][0]) > 1 else 0.0
        report.entropy.append((n, ests, bound))
    return report


def _on_line(p, h):
    nz = next(i for i, v in enumerate(h) if v)
    if p[nz] % h[nz]:
        return False
    j = p[nz] // h[nz]
    return all(p[i] == j * h[i] for i in range(len(h)))


def _j_range(p, c, step, S):
    """Candidate multiples j with p ∈ S + c + j*step (bounded by the shape's extent)."""
    nz = next(i for i, v in enumerate(step) if v)
    sb = _shape_bounds(S)
    x = p[nz] - c[nz]
    a, b = sorted(((x - sb[nz][1]) / step[nz], (x - sb[nz][0]) / step[nz]))
    return range(math.floor(a), math.ceil(b) + 1)


class LevelCertificate:
    def __init__(self, level, side, fields):
        self.level = level
        self.side = side
        self.fields = fields

    @property
    def ok(self):
        return all(v["ok"] for v in self.fields.values())

    def to_json(self):
        def enc(x):
            if isinstance(x, Fraction):
                return [x.numerator, x.denominator]
            return x
        return {"level": self.level, "side": self.side,
                "checks": {k: {kk: enc(vv) for kk, vv in v.items()} for k, v in self.fields.items()}}


def _square(lo, m, d=2):
    return Rect((lo,) * d, (lo + m,) * d)


def resfinite_monotiling_recursion(E, eps, depth, H=(0, 1), max_side=4096):
    """Monotilings (S_k, (m_k Z)^2) with S_k = S_{k-1} + (F ∩ (m_{k-1} Z)^2).

    F is the square of side m_k made of whole S_{k-1}-tiles around the
    origin, so it contains E_k once m_k is large enough.  m_k starts at
    2 m_{k-1} and doubles until every target holds."""
    if depth < 1 or len(E) < depth or len(eps) < depth:
        raise ValueError("need E and eps for every level up to depth")
    eps = [Fraction(e) for e in eps]
    if E[0].points != {(0, 0)} or eps[0] != 1:
        raise ValueError("level 1 needs E = {0} and eps = 1")
    if any(b >= a for a, b in zip(eps, eps[1:depth])) or any(e <= 0 for e in eps):
        raise ValueError("eps must be strictly decreasing and positive")
    if any(not a.points <= b.points for a, b in zip(E, E[1:depth])):
        raise ValueError("E must be increasing")

    sides, los = [1], [0]
    levels = [Tiling([(_square(0, 1), CenterLattice((0, 0), (1, 1)))])]
    refs = {}
    certs = [LevelCertificate(1, 1, {"contains_E": {"ok": True}})]
    for k in range(2, depth + 1):
        mp, lop = sides[-1], los[-1]
        Ek, ek = E[k - 1], eps[k - 1]
        delta = ek / 2
        m = 2 * mp
        best = None
        while m <= max_side:
            lo = lop - m // 2
            fields = _level_checks(Ek, ek, delta, H, m, lo, mp, lop)
            if all(v["ok"] for v in fields.values()):
                break
            ratio = fields["invariance"]["ratio"]
            best = ratio if best is None else max(best, ratio)
            m *= 2
        else:
            raise ValueError(f"no side <= {max_side} meets the level-{k} targets; best invariance ratio {best}")
        sides.append(m)
        los.append(lo)
        S = _square(lo, m)
        levels.append(Tiling([(S, CenterLattice((0, 0), (m, m)))]))
        offs = range(-(m // 2), m // 2, mp)
        refs[k] = {0: [(0, (a, b)) for b in offs for a in offs]}
        certs.append(LevelCertificate(k, m, fields))
    return NestedTilingSequence(levels, refs), certs


def _level_checks(Ek, ek, delta, H, m, lo, mp, lop):
    F = _square(lo, m)
    size = m * m
    offs = range(-(m // 2), m // 2, mp)
    placed = [Rect((lop + a, lop + b), (lop + a + mp, lop + b + mp)) for b in offs for a in offs]
    fields = {}
    fields["contains_E"] = {"ok": all(any(p in T for T in placed) for p in Ek.points)}
    # S_k = F here (checked by shape2 below), so the rectangle core is exact
    c = F.core(Ek)
    ratio = Fraction(len(c) if c else 0, size)
    fields["invariance"] = {"ok": ratio >= 1 - ek, "ratio": ratio, "bound": 1 - ek}
    # F is a transversal of (mZ)^2, so |H N_k ∩ F| is the order of H in (Z/m)^2
    order = m // math.gcd(m, *H)
    fields["shape1"] = {"ok": Fraction(order, size) <= delta, "ratio": Fraction(order, size), "bound": delta}
    # |H ∩ S_k c| <= |H N_k ∩ S_k| = order for every center c
    hd = Fraction(order, size)
    fields["h_density"] = {"ok": hd <= ek, "ratio": hd, "bound": ek}
    # S_{k-1}-tiles with centers in N_{k-1} that straddle F
    straddle = 0
    first = ((lo - lop) // mp - 1) * mp
    cs = range(first, first + m + 3 * mp, mp)
    for a in cs:
        for b in cs:
            T = Rect((lop + a, lop + b), (lop + a + mp, lop + b + mp))
            if T.meets(F) and not F.contains_rect(T):
                straddle += 1
    bound = delta * size / (mp * mp)
    fields["boundary"] = {"ok": straddle <= bound, "count": straddle, "bound": bound}
    inter = sum(_overlap(T, F) for T in placed)
    fields["shape2"] = {"ok": inter >= (1 - delta) * size and len(placed) * mp * mp == size,
                        "ratio": Fraction(inter, size), "bound": 1 - delta}
    return fields


def _overlap(A, B):
    return math.prod(max(0, min(b, d) - max(a, c)) for a, b, c, d in zip(A.lo, A.hi, B.lo, B.hi))
