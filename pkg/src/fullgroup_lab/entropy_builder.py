"""Recursive box construction on Z^2 with prescribed entropy lambda.

Level k is a box A_k over {1..q}^(Z^2), stored as one period: a uint
bitmask array `labels[x, y]` on R_k = [0, A_k) x [0, B_k) (bit s-1 set iff
symbol s is admitted).  Tiles of level k are the translates of R_k by the
lattice A_k Z x B_k Z, the infinite cyclic direction is H = {0} x Z, and
theta = lambda / log q is carried as a rational interval so every strict
inequality is checked against the endpoint that makes a pass a proof.
"""
import hashlib
import math
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product

import numpy as np

from .fullgroup import (
    Cyl, GroupWord, InvalidElement, TableElement, Union, compose,
    free_product_certificate, is_identity, make_element,
)
from .lattice import Region
from .subshift import PointOracle, minimality_certificate
from .tilings import Rect

DEFAULT_BASE = (1, 16)
DEFAULT_LEVELS = [(32, 32), (2048, 64), (262144, 64)]


class InfeasibleSchedule(ValueError):
    def __init__(self, k, condition, detail):
        super().__init__(f"level {k}: condition ({condition}) fails: {detail}")
        self.k = k
        self.condition = condition


def _atanh2_bounds(y, eps):
    """Rationals enclosing 2 atanh(y) for 0 <= y <= 1/3, width below eps.

    The tail after N terms is at most 2 y^{2N+1} / ((2N+1)(1 - y^2))."""
    y2 = y * y
    s = Fraction(0)
    term = y
    n = 0
    while True:
        s += 2 * term / (2 * n + 1)
        term *= y2
        n += 1
        tail = 2 * term / ((2 * n + 1) * (1 - y2))
        if tail < eps:
            return s, s + tail


@lru_cache(maxsize=None)
def log_bounds(q, bits=128):
    """Rationals lo < log q < hi with hi - lo <= 2^{1-bits}.

    q = 2^e r with 1 <= r < 2, so both series run at ratio at most 1/9."""
    if q < 2:
        raise ValueError("q must be >= 2")
    e = q.bit_length() - 1
    r = Fraction(q, 2 ** e)
    eps = Fraction(1, 2 ** (bits + e.bit_length() + 2))
    l2_lo, l2_hi = _atanh2_bounds(Fraction(1, 3), eps)
    lr_lo, lr_hi = _atanh2_bounds((r - 1) / (r + 1), eps)
    scale = 2 ** bits
    lo = Fraction(math.floor((e * l2_lo + lr_lo) * scale), scale)
    hi = Fraction(math.ceil((e * l2_hi + lr_hi) * scale), scale)
    return lo, hi


def choose_q(lam):
    """Least integer q > 3 with q > e^{2 lambda}, certified by log q > 2 lambda."""
    lam = Fraction(lam)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    q = max(4, int(math.exp(min(float(2 * lam), 700.0))) - 2)
    while True:
        bits = 64
        while True:
            lo, hi = log_bounds(q, bits)
            if lo > 2 * lam:
                return q
            if hi < 2 * lam:
                break
            bits *= 2      # e^{2 lambda} is never an integer, so refinement ends
        q += 1


def theta_interval(lam, q, bits=128):
    lo, hi = log_bounds(q, bits)
    lam = Fraction(lam)
    return lam / hi, lam / lo


class BuilderParams:
    def __init__(self, lam, q=None, schedule=None, budget=3, seed=0, base=DEFAULT_BASE):
        self.lam = Fraction(lam)
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        self.q = choose_q(self.lam) if q is None else int(q)
        lo, hi = log_bounds(self.q)
        if self.q <= 3 or not lo > 2 * self.lam:
            raise ValueError(f"q = {self.q} must exceed 3 and e^(2 lambda)")
        self.theta = theta_interval(self.lam, self.q)
        if not self.theta[1] < Fraction(1, 2):
            raise ValueError("theta must be below 1/2")
        self.base = tuple(base)
        self.schedule = [tuple(d) for d in (DEFAULT_LEVELS if schedule is None else schedule)]
        self.budget = int(budget)
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        self.seed = int(seed)

    def dims(self, k):
        return self.base if k == 0 else self.schedule[k - 1]

    def to_json(self):
        return {"lambda": str(self.lam), "q": self.q,
                "theta": [str(self.theta[0]), str(self.theta[1])],
                "base": list(self.base), "schedule": [list(d) for d in self.schedule],
                "budget": self.budget, "seed": self.seed}


def _dtype(q):
    if q <= 8:
        return np.uint8
    if q <= 16:
        return np.uint16
    if q <= 32:
        return np.uint32
    if q <= 64:
        return np.uint64
    raise ValueError("q > 64 is not supported by the bitmask labels")


def lowest_bit(a):
    return a & (~a + 1)


class LevelData:
    def __init__(self, k, dims, labels, q, classes=None, coverage=None):
        self.k = k
        self.dims = tuple(dims)
        self.labels = labels
        self.q = q
        self.full = (1 << q) - 1
        self.classes = classes or {}
        self.coverage = coverage or {}
        self.d_count = int(np.count_nonzero(labels == self.full))

    @property
    def size(self):
        return self.dims[0] * self.dims[1]

    def shape(self):
        return Rect((0, 0), self.dims)

    def free_cells(self):
        """Free coordinates of R_k in row-major order."""
        xs, ys = np.nonzero(self.labels == self.full)
        order = np.lexsort((xs, ys))
        return list(zip(xs[order].tolist(), ys[order].tolist()))

    def mask_at(self, t):
        return int(self.labels[t[0] % self.dims[0], t[1] % self.dims[1]])

    def allowed(self, t):
        m = self.mask_at(t)
        return [s + 1 for s in range(self.q) if m >> s & 1]

    def to_json(self):
        flat = np.ascontiguousarray(self.labels.T).ravel()
        if flat.size:
            cut = np.flatnonzero(flat[1:] != flat[:-1]) + 1
            starts = np.concatenate(([0], cut))
            lengths = np.diff(np.concatenate((starts, [flat.size])))
            runs = [[int(flat[s]), int(n)] for s, n in zip(starts, lengths)]
        else:
            runs = []
        return {"version": 1, "k": self.k, "dims": list(self.dims), "q": self.q,
                "labelRuns": runs, "classes": self.classes, "coverage": self.coverage}

    @classmethod
    def from_json(cls, doc):
        A, B = doc["dims"]
        q = doc["q"]
        vals = np.concatenate([np.full(n, v, dtype=_dtype(q)) for v, n in doc["labelRuns"]]) \
            if doc["labelRuns"] else np.zeros(0, dtype=_dtype(q))
        if vals.size != A * B:
            raise ValueError(f"label runs cover {vals.size} cells, expected {A * B}")
        return cls(doc["k"], (A, B), vals.reshape(B, A).T.copy(), q, doc.get("classes"), doc.get("coverage"))


def base_level(params):
    A, B = params.base
    full = (1 << params.q) - 1
    return LevelData(0, (A, B), np.full((A, B), full, dtype=_dtype(params.q)), params.q)


def pattern_masks(prev, index):
    """The index-th pattern (lex order, mixed radix over the free cells) of the
    box W on prev's tile, as singleton masks."""
    out = lowest_bit(prev.labels.copy())
    cells = prev.free_cells()
    digits = []
    n = index
    for _ in cells:
        n, d = divmod(n, prev.q)
        digits.append(d)
    if n:
        raise ValueError("pattern index exceeds the box size")
    for (x, y), d in zip(reversed(cells), digits):
        out[x, y] = 1 << d
    return out


def build_level(prev, params):
    """Level k = prev.k + 1 from level k - 1, following steps (a)-(f)."""
    k = prev.k + 1
    A, B = params.dims(k)
    Ap, Bp = prev.dims
    T = A * B
    th_lo, th_hi = params.theta
    e = Fraction(1, 2 ** (k + 3))
    if not T > 2 ** (k + 4):
        raise InfeasibleSchedule(k, "ii", f"|T| = {T} <= {2 ** (k + 4)} = 2^{k + 4}")
    if A % Ap or B % Bp:
        raise InfeasibleSchedule(k, "nesting", f"{A}x{B} is not a multiple of {Ap}x{Bp}")
    nA, nB = A // Ap, B // Bp
    sub = Ap * Bp
    column = nB * sub
    if not column < e * T:
        raise InfeasibleSchedule(k, "b", f"subtiles meeting H cover {column} >= |T|/2^{k + 3} = {e * T}")
    ratio = (th_hi + 4 * e) / (th_hi + 5 * e)
    need = math.floor(ratio * T / sub) + 1
    available = nA * nB - nB
    if need > available:
        raise InfeasibleSchedule(k, "a", f"needs {need} subtiles of {sub} cells, only {available} are off H")
    keep_n = math.floor((th_hi + 5 * e) * sub) + 1
    if not keep_n < (th_lo + 6 * e) * sub:
        raise InfeasibleSchedule(k, "f", f"no integer strictly inside ((theta+5/2^{k + 3})|T_i|, "
                                         f"(theta+6/2^{k + 3})|T_i|) with |T_i| = {sub}")
    if keep_n > prev.d_count:
        raise InfeasibleSchedule(k, "f", f"|T_i'| = {keep_n} exceeds the {prev.d_count} free cells")
    space_exp = prev.d_count
    space = prev.q ** space_exp if space_exp <= 64 else None
    n_j = min(params.budget, available - need)
    if space is not None:
        n_j = min(n_j, space)

    labels = np.tile(prev.labels, (nA, nB))
    L4 = labels.reshape(nA, Ap, nB, Bp)
    free = prev.free_cells()
    keep = np.zeros((Ap, Bp), dtype=bool)
    for x, y in free[:keep_n]:
        keep[x, y] = True
    collapsed = np.where(keep, prev.labels, lowest_bit(prev.labels))

    off_h = [(ia, ib) for ib in range(nB) for ia in range(1, nA)]
    pattern_tiles = off_h[:n_j]
    kind = np.ones((nA, nB), dtype=bool)        # True: I'
    kind[0, :] = False
    for ia, ib in pattern_tiles:
        kind[ia, ib] = False
    L4[...] = np.where(kind[:, None, :, None], collapsed[None, :, None, :], L4)
    for p, (ia, ib) in enumerate(pattern_tiles):
        L4[ia, :, ib, :] = pattern_masks(prev, p)

    classes = {"I2": [[0, ib] for ib in range(nB)], "Ij": [[ia, ib, p] for p, (ia, ib) in enumerate(pattern_tiles)],
               "I1": int(kind.sum()), "I1min": need, "keep": keep_n, "subtile": [Ap, Bp]}
    coverage = {"assigned": n_j, "spaceExponent": space_exp, "complete": space is not None and n_j >= space}
    return LevelData(k, (A, B), labels, prev.q, classes, coverage)


def verify_densities(level, params):
    """Condition (i) as exact rationals: theta + 2^-(k+1) < |D_T|/|T| < theta + 2^-k."""
    k = level.k
    ratio = Fraction(level.d_count, level.size)
    if k == 0:
        return {"k": 0, "ratio": str(ratio), "lower": True, "upper": True, "ok": True}
    th_lo, th_hi = params.theta
    lower = th_hi + Fraction(1, 2 ** (k + 1)) < ratio
    upper = ratio < th_lo + Fraction(1, 2 ** k)
    return {"k": k, "ratio": str(ratio), "count": level.d_count, "size": level.size,
            "lower": lower, "upper": upper, "ok": lower and upper}


def verify_level(level, prev, params):
    """All five conditions plus the nesting A_k ⊆ A_{k-1}, each exact."""
    k = level.k
    A, B = level.dims
    Ap, Bp = prev.dims
    out = {"k": k, "i": verify_densities(level, params)["ok"],
           "ii": level.size > 2 ** (k + 4)}
    out["iii"] = bool(np.all(level.labels[0, :] == level.full))
    nested = A % Ap == 0 and B % Bp == 0
    out["iv"] = nested      # one label array per period is (iv) by construction
    if nested:
        tiled = np.tile(prev.labels, (A // Ap, B // Bp))
        out["subset"] = bool(np.all(level.labels & ~tiled == 0)) and bool(np.all(level.labels != 0))
        out["v"] = bool(np.array_equal(level.labels[:Ap, :Bp], prev.labels))
    else:
        out["subset"] = out["v"] = False
    out["ok"] = all(out[c] for c in ("i", "ii", "iii", "iv", "v", "subset"))
    return out


def build_levels(params, depth=None):
    depth = len(params.schedule) if depth is None else depth
    levels = [base_level(params)]
    for _ in range(depth):
        levels.append(build_level(levels[-1], params))
    return levels


def _choice(seed, t, options):
    h = hashlib.blake2b(f"{seed}:{t[0]}:{t[1]}".encode(), digest_size=8).digest()
    return options[int.from_bytes(h, "little") % len(options)]


def point_from_box(levels, seed=None, choices=None):
    """A point of the deepest box: forced symbols at singletons, a seeded
    choice at free cells (seed None: the least symbol, the canonical point).
    `choices` pins symbols at given coordinates; each must be admitted."""
    level = levels[-1]
    A, B = level.dims
    labels = level.labels
    q = level.q
    pinned = dict(choices or {})
    for t, s in pinned.items():
        if not level.mask_at(t) >> (s - 1) & 1:
            raise ValueError(f"symbol {s} is not admitted at {t}")

    def rule(t):
        if t in pinned:
            return pinned[t]
        m = int(labels[t[0] % A, t[1] % B])
        if m & (m - 1) == 0 or seed is None:
            return (m & -m).bit_length()
        return _choice(seed, t, [s + 1 for s in range(q) if m >> s & 1])

    period = (A, B) if seed is None and not pinned else None
    return PointOracle(rule, tag=f"box:k={level.k}:seed={seed}", period=period)


def box_pattern_count(level, F):
    return math.prod(len(level.allowed(t)) for t in F.sorted())


def box_patterns(level, F, limit=1 << 20):
    if box_pattern_count(level, F) > limit:
        raise ValueError("too many patterns to enumerate")
    return {vals for vals in product(*(level.allowed(t) for t in F.sorted()))}


def entropy_report(levels, params):
    """Per-level bounds as exact coefficients of log q plus a tiling term.

    lower  = (|D_F|/|F|) log q          (F = F_k, the tile at the origin)
    upper  = (|D_T|/|T|) log q + tiling (density of free cells in the
             periodic box; tiling = log|R_k| / |R_k| for the monotiling)
    The theta-form bound (theta + 2^-k) log q + tiling is reported too."""
    lq_lo, lq_hi = log_bounds(params.q)
    logq = float((lq_lo + lq_hi) / 2)
    th_lo, th_hi = params.theta
    rows = []
    for lev in levels[1:]:
        k = lev.k
        coef = Fraction(lev.d_count, lev.size)
        tiling = math.log(lev.size) / lev.size
        rows.append({
            "k": k, "coefficient": str(coef),
            "lower": float(coef) * logq, "upper": float(coef) * logq + tiling,
            "tiling": tiling, "thetaBound": float(th_hi + Fraction(1, 2 ** k)) * logq + tiling,
            "lowerExceedsLambda": coef > th_hi,
            "upperWithinBound": coef < th_lo + Fraction(1, 2 ** k),
        })
    return rows


# ---- C*-simplicity generators ------------------------------------------------

def _column(m, j):
    return (0, j * m)


def v_set(l, z, S_cells, m):
    """V_l as a union of six cylinders, one per arrangement at a^m, a^3m, a^5m."""
    rest = [s for s in (1, 2, 3, 4) if s != l]
    zs = [(s, z(s)) for s in S_cells]
    parts = []
    for perm in permutations(rest):
        allowed = {_column(m, -1): [l]}
        for j, v in zip((1, 3, 5), perm):
            allowed[_column(m, j)] = [v]
        for j in range(4):
            for (sx, sy), val in zs:
                allowed[(sx, sy + 2 * j * m)] = [val]
        parts.append(Cyl(allowed))
    return Union(parts)


def _union_disjoint(U1, U2):
    return all(a.conflicts(b) for a in U1.parts for b in U2.parts)


class Generators:
    def __init__(self, elements, m, S, disjoint, involution):
        self.elements = elements
        self.m = m
        self.S = S
        self.disjoint = disjoint
        self.involution = involution


def csimplicity_generators(levels, k, lang=None):
    """g_1, g_2, g_3 built on the level-k tile S = R_k with m = B_k, a = (0, 1)."""
    level = levels[k]
    if level.q < 4:
        raise ValueError("need at least four symbols")
    A, B = level.dims
    m = B
    S_cells = Region(product(range(A), range(B))).sorted()
    z = point_from_box(levels)
    elements, disjoint, invol = {}, {}, {}
    for l in (1, 2, 3):
        V = v_set(l, z, S_cells, m)
        shifted = [V.translate((0, 2 * j * m)) for j in range(4)]
        ok = all(_union_disjoint(shifted[i], shifted[j]) for i in range(4) for j in range(i + 1, 4))
        if not ok:
            raise InvalidElement("not-disjoint", None, f"translates of V_{l} overlap")
        disjoint[l] = ok
        pieces = [(shifted[0], (0, 6 * m)), (shifted[3], (0, -6 * m)),
                  (shifted[1], (0, 2 * m)), (shifted[2], (0, -2 * m))]
        g = make_element(pieces, lang) if lang else TableElement(pieces)
        if lang:
            invol[l] = is_identity(compose(g, g, lang), lang)
            if not invol[l]:
                raise InvalidElement("not-involution", None, f"g_{l}^2 is not the identity on the sample")
        elements[l] = g
    return Generators(elements, m, Rect((0, 0), (A, B)), disjoint, invol)


def free_product_witness(word, levels, k):
    """A point moved by the word (generator ids, rightmost applied first) by
    exactly (0, 6 r m).  The reading order of the construction is reversed:
    l_1 is the rightmost letter."""
    ids = list(word.ids() if isinstance(word, GroupWord) else word)
    if not ids or any(a not in (1, 2, 3) for a in ids):
        raise ValueError("words use the generators 1, 2, 3")
    if any(a == b for a, b in zip(ids, ids[1:])):
        raise ValueError(f"word {ids} is not alternating")
    ls = ids[::-1]
    r = len(ls)
    m = levels[k].dims[1]
    deep = levels[-1]
    over = {}
    for j, l in enumerate(ls):
        over[(0, (6 * j - 1) * m)] = l
        nxt = ls[j + 1] if j + 1 < r else min(s for s in (1, 2, 3, 4) if s not in (l, ls[0]))
        others = [s for s in (1, 2, 3, 4) if s not in (l, nxt)]
        over[(0, (6 * j + 1) * m)] = others[0]
        over[(0, (6 * j + 3) * m)] = others[1]
        over[(0, (6 * j + 5) * m)] = nxt
    for t in over:
        if deep.mask_at(t) != deep.full:
            raise ValueError(f"override coordinate {t} is not free")
    z = point_from_box(levels)
    return PointOracle(lambda t: over.get(t, z(t)) if t[0] == 0 else z(t),
                       tag=f"witness:{'-'.join(map(str, ids))}")


def sample_language(levels, k, extra=(), reach=2, seeds=(1, 2)):
    """Canonical and seeded translates near the generator windows."""
    m = levels[k].dims[1]
    z = point_from_box(levels)
    pts = [z.translate((0, j * m)) for j in range(-reach * 6, reach * 6 + 1)]
    pts += [point_from_box(levels, s).translate((0, j)) for s in seeds for j in range(-4, 5)]
    pts += list(extra)
    return pts


def run_construction(params, depth=None, max_len=3, gen_level=0, min_window=(2, 2), min_scan=64):
    levels = build_levels(params, depth)
    cert_levels = [verify_level(levels[i], levels[i - 1], params) for i in range(1, len(levels))]
    densities = [verify_densities(lev, params) for lev in levels[1:]]
    entropy = entropy_report(levels, params)
    z = point_from_box(levels)
    W = Region(product(range(min_window[0]), range(min_window[1])))
    scan = Region(product(range(min_scan), range(min_scan)))
    mres = minimality_certificate(z, W, scan)
    words = [w for w in _words(max_len)]
    witnesses = {tuple(w.ids()): free_product_witness(w, levels, gen_level) for w in words}
    lang = sample_language(levels, gen_level, extra=witnesses.values())
    gens = csimplicity_generators(levels, gen_level, lang)

    def factory(w):
        yield "witness", witnesses.get(tuple(w.ids())) or free_product_witness(w, levels, gen_level)
        yield "canonical", z

    fp = free_product_certificate(gens.elements, max_len, factory, lang, budget=2)
    m = gens.m
    exact = all(tuple(r.displacement) == (0, 6 * len(r.word) * m) for r in fp.rows)
    weakened = any(not lev.coverage.get("complete", True) for lev in levels[1:])
    report = {
        "params": params.to_json(),
        "levels": cert_levels, "densities": densities, "entropy": entropy,
        "coverage": [dict(lev.coverage, k=lev.k) for lev in levels[1:]],
        "minimalityWeakened": weakened,
        "minimality": {"gap": mres.gap, "status": mres.status, "patterns": mres.patterns,
                       "window": list(min_window), "scan": min_scan},
        "generators": {"level": gen_level, "m": m, "disjoint": gens.disjoint, "involution": gens.involution},
        "freeProduct": dict(fp.to_json(), exactDisplacement=exact),
    }
    report["ok"] = (all(c["ok"] for c in cert_levels) and all(d["ok"] for d in densities)
                    and all(e["lowerExceedsLambda"] and e["upperWithinBound"] for e in entropy)
                    and fp.complete and exact)
    return levels, report, gens


def _words(max_len):
    from .fullgroup import alternating_words
    return alternating_words(3, max_len)
