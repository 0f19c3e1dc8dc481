"""Points, patterns and language samples for Z^d subshifts.

A point is an oracle: a pure rule from lattice coordinates to symbol indices.
Translation follows the shift (v.x)_t = x_{t+v}, so translates compose by
adding offsets.  Windows are materialized only when asked for.
"""
import math
from fractions import Fraction
from itertools import product

import numpy as np

from .lattice import Region, add, box, zero


class PointOracle:
    __slots__ = ("rule", "offset", "tag", "dim", "period")

    def __init__(self, rule, dim=2, offset=None, tag="", period=None):
        self.rule = rule
        self.dim = dim
        self.offset = tuple(offset) if offset is not None else zero(dim)
        self.tag = tag
        # a period lattice diag(period) certifies the whole orbit is finite
        self.period = tuple(period) if period is not None else None

    def __call__(self, t):
        return self.rule(tuple(a + b for a, b in zip(t, self.offset)))

    evaluate = __call__

    def translate(self, v):
        return PointOracle(self.rule, self.dim, add(self.offset, v), self.tag, self.period)

    def __repr__(self):
        return f"PointOracle({self.tag!r}, offset={self.offset})"


def constant_point(symbol, dim=2):
    return PointOracle(lambda t: symbol, dim, tag=f"const:{symbol}", period=(1,) * dim)


def periodic_point(values, dim=2):
    """Point with x_t = values[t mod shape] for an integer numpy array `values`."""
    arr = np.asarray(values)
    shape = arr.shape
    if len(shape) != dim:
        raise ValueError("array rank must match the dimension")
    # array index order is (x, y, ...) so shape[i] is the period along axis i
    table = arr.tolist()

    def rule(t):
        cell = table
        for c, n in zip(t, shape):
            cell = cell[c % n]
        return cell

    return PointOracle(rule, dim, tag=f"periodic:{shape}", period=shape)


class Pattern:
    __slots__ = ("window", "values", "_key")

    def __init__(self, window, values):
        values = tuple(int(v) for v in values)
        if len(values) != len(window):
            raise ValueError("pattern must be total on its window")
        self.window = window
        self.values = values
        self._key = (window.points, values)

    def __eq__(self, other):
        return isinstance(other, Pattern) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __getitem__(self, t):
        return dict(zip(self.window.sorted(), self.values))[tuple(t)]

    def as_dict(self):
        return dict(zip(self.window.sorted(), self.values))

    def restrict(self, sub):
        d = self.as_dict()
        return Pattern(sub, [d[t] for t in sub.sorted()])

    def to_json(self):
        return {"version": 1, "window": self.window.to_json(), "rowMajorValues": list(self.values)}

    @classmethod
    def from_json(cls, doc):
        return cls(Region.from_json(doc["window"]), doc["rowMajorValues"])

    def __repr__(self):
        return f"Pattern({len(self.window)} cells, {self.values[:8]}{'...' if len(self.values) > 8 else ''})"


def restrict(x, F):
    return Pattern(F, [x(t) for t in F.sorted()])


class LanguageSample:
    """Patterns of x seen on `window` at every translate fitting in `scan`.

    `points` keeps the translated oracles themselves when requested, which
    the full-group calculus needs for language-relative checks."""

    def __init__(self, window, patterns, scan, complete, points=None, source=""):
        self.window = window
        self.patterns = frozenset(patterns)
        self.scan = scan
        self.complete = complete
        self.points = list(points) if points is not None else []
        self.source = source

    def __len__(self):
        return len(self.patterns)

    def identity(self):
        return (self.source, len(self.window), len(self.scan) if self.scan is not None else 0,
                len(self.patterns), len(self.points))

    def to_json(self):
        return {"version": 1, "window": self.window.to_json(),
                "patterns": sorted(list(p.values) for p in self.patterns),
                "scan": self.scan.to_json() if self.scan is not None else None,
                "complete": self.complete}


def translations_inside(window, scan):
    """All v with window + v ⊆ scan (scan assumed a box)."""
    wb = window.bounds()
    sb = scan.bounds()
    ranges = [range(s[0] - w[0], s[1] - w[1] + 1) for w, s in zip(wb, sb)]
    if len(scan) == math.prod(b - a + 1 for a, b in sb):
        # a full box: the bounding-box test is exact
        out = list(product(*ranges))
    else:
        pts = scan.points
        out = [v for v in product(*ranges) if all(add(t, v) in pts for t in window.points)]
    out.sort(key=lambda p: p[::-1])
    return out


def _covers_period(vs, period):
    residues = {tuple(c % p for c, p in zip(v, period)) for v in vs}
    return len(residues) == math.prod(period)


def sample_language(x, window, scan, keep_points=False):
    vs = translations_inside(window, scan)
    pats = set()
    pts = []
    for v in vs:
        y = x.translate(v)
        pats.add(restrict(y, window))
        if keep_points:
            pts.append(y)
    complete = x.period is not None and _covers_period(vs, x.period)
    return LanguageSample(window, pats, scan, complete, pts, source=x.tag)


def merge_samples(samples, window):
    pats, pts = set(), []
    for s in samples:
        if s.window != window:
            raise ValueError("samples must share the window")
        pats |= s.patterns
        pts.extend(s.points)
    return LanguageSample(window, pats, None, all(s.complete for s in samples), pts,
                          source="+".join(s.source for s in samples))


def language_from_points(points, window, source="points"):
    pats = {restrict(y, window) for y in points}
    return LanguageSample(window, pats, None, False, points, source=source)


class EntropyEstimate:
    """(1/|F|) log(count), kept as the exact pair (count, |F|)."""

    direction = "lower"   # sampling can only miss patterns

    def __init__(self, count, size):
        self.count = count
        self.size = size

    @property
    def value(self):
        return math.log(self.count) / self.size

    def __repr__(self):
        return f"EntropyEstimate(log {self.count} / {self.size} = {self.value:.6f})"


def entropy_estimate(x, windows, scan):
    """Per-window estimate (1/|F|) log #{patterns of x on F seen inside scan}."""
    out = []
    for F in windows:
        vs = translations_inside(F, scan)
        if not vs:
            raise ValueError("scan is too small for the window")
        out.append(EntropyEstimate(len(sample_language(x, F, scan)), len(F)))
    return out


def epsilon_radius(eps):
    """ε = 2^{-R}  ->  R."""
    eps = Fraction(eps)
    if eps <= 0 or eps > 1 or eps.numerator != 1 or eps.denominator & (eps.denominator - 1):
        raise ValueError("ε must be 2^{-R} for an integer R >= 0")
    return eps.denominator.bit_length() - 1


def separated_set_estimate(points, F, eps):
    """Greedy maximal subset pairwise disagreeing somewhere on F + [-R, R]^d."""
    if not points:
        raise ValueError("empty sample")
    R = epsilon_radius(eps)
    W = F.minkowski(box((-R,) * F.dim, (R + 1,) * F.dim))
    kept = set()
    for x in points:
        kept.add(restrict(x, W))
    return len(kept)


class MinimalityResult:
    def __init__(self, gap, status, patterns):
        self.gap = gap
        self.status = status          # "bounded" or "inconclusive"
        self.patterns = patterns

    def __repr__(self):
        return f"MinimalityResult({self.status}, gap={self.gap}, patterns={self.patterns})"


def _box_counts(ind, G):
    """For each index v, number of True entries in ind[v : v + G] along every axis."""
    S = ind.astype(np.int64)
    for ax in range(S.ndim):
        S = np.cumsum(S, axis=ax)
        pad = [(0, 0)] * S.ndim
        pad[ax] = (1, 0)
        S = np.pad(S, pad)
    out_shape = tuple(n - G + 1 for n in ind.shape)
    if min(out_shape) <= 0:
        return None
    total = np.zeros(out_shape, dtype=np.int64)
    d = ind.ndim
    for corner in product((0, 1), repeat=d):
        sl = tuple(slice(G, G + n) if c else slice(0, n) for c, n in zip(corner, out_shape))
        sign = (-1) ** (d - sum(corner))
        total += sign * S[sl]
    return total


def minimality_certificate(x, window, scan):
    """Largest forward gap G such that every pattern of x on `window` seen in
    `scan` reappears in every box v + [0, G)^d of translates (inner half of
    the scan).  Inconclusive if some gap reaches the inner scan size."""
    wb = window.bounds()
    sb = scan.bounds()
    wlen = max(b - a + 1 for a, b in wb)
    slen = min(b - a + 1 for a, b in sb)
    if slen < 8 * wlen:
        raise ValueError("scan must be at least 8x the window's linear size")
    vs = translations_inside(window, scan)
    lo = [min(v[i] for v in vs) for i in range(x.dim)]
    shape = tuple(max(v[i] for v in vs) - lo[i] + 1 for i in range(x.dim))
    ids = {}
    grid = np.full(shape, -1, dtype=np.int64)
    for v in vs:
        p = restrict(x.translate(v), window)
        grid[tuple(c - l for c, l in zip(v, lo))] = ids.setdefault(p, len(ids))
    limit = min(shape) // 2
    worst = 1
    for pid in range(len(ids)):
        ind = grid == pid
        G = 1
        while True:
            counts = _box_counts(ind, G)
            if counts is None or G > limit:
                return MinimalityResult(None, "inconclusive", len(ids))
            inner = counts[tuple(slice(0, max(1, n - limit + 1)) for n in shape)]
            if (inner > 0).all():
                break
            G *= 2
        # binary search between G/2 and G
        lo_g, hi_g = G // 2, G
        while hi_g - lo_g > 1:
            mid = (lo_g + hi_g) // 2
            counts = _box_counts(ind, mid)
            inner = counts[tuple(slice(0, max(1, n - limit + 1)) for n in shape)]
            if (inner > 0).all():
                hi_g = mid
            else:
                lo_g = mid
        worst = max(worst, hi_g)
    return MinimalityResult(worst, "bounded", len(ids))


def toeplitz_certificate(x, coords, max_period_exp, odd_factors=(1,), reps=4):
    """For each t, the least lattice diag(p_1, ..., p_d) with p_i = f * 2^a
    (f in odd_factors, a <= max_period_exp) on which x is constant around t,
    checked at t + k * p for k in [-reps, reps]^d.  None marks a failure."""
    cands = sorted({f << a for f in odd_factors for a in range(max_period_exp + 1)})
    lattices = sorted(product(cands, repeat=x.dim), key=lambda p: (math.prod(p), p))
    steps = list(product(range(-reps, reps + 1), repeat=x.dim))
    result = {}
    for t in coords:
        t = tuple(t)
        v = x(t)
        found = None
        for per in lattices:
            if all(x(tuple(a + k * p for a, k, p in zip(t, ks, per))) == v for ks in steps):
                found = per
                break
        result[t] = found
    return result
