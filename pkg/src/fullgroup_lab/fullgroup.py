"""Elements of the topological full group of a Z^d subshift, as finite tables.

An element is a list of (clopen piece, shift) pairs; on a piece A with shift v
it acts by x -> translate(x, v).  The identity piece (complement of the moving
pieces) is implicit.  Clopen sets are boolean combinations of cylinders, and
`v·C` is the image {translate(x, v) : x in C}, which moves every constraint
from coordinate c to c - v.

Validity, equality and identity are decided relative to a sample of points
(a LanguageSample carrying `points`), never globally.
"""
from fractions import Fraction
from itertools import product
from math import comb

from .lattice import Region, add, neg, sub, zero
from .subshift import restrict


class ClopenSet:
    """Base class; subclasses Cyl, Union, Meet, Complement."""

    def __contains__(self, x):
        return self.contains(x)

    def __and__(self, other):
        return Meet([self, other])

    def __or__(self, other):
        return Union([self, other])

    def __invert__(self):
        return Complement(self)

    def coords(self):
        raise NotImplementedError

    def window(self, dim=2):
        cs = self.coords()
        return Region(cs, dim) if cs else Region([], dim)


class Cyl(ClopenSet):
    """{x : x(c) in allowed[c] for every constrained c}.  No constraints = everything."""

    __slots__ = ("allowed",)

    def __init__(self, allowed):
        self.allowed = {tuple(c): frozenset(v) for c, v in dict(allowed).items()}

    @classmethod
    def at(cls, x, window):
        """The cylinder of x on `window`."""
        return cls({t: (x(t),) for t in window})

    def contains(self, x):
        return all(x(c) in vals for c, vals in self.allowed.items())

    def translate(self, v):
        return Cyl({sub(c, v): vals for c, vals in self.allowed.items()})

    def coords(self):
        return set(self.allowed)

    def conflicts(self, other):
        """True when self ∩ other is empty for a syntactic reason."""
        for c, vals in self.allowed.items():
            if c in other.allowed and not vals & other.allowed[c]:
                return True
            if not vals:
                return True
        return False

    def to_json(self):
        return {"cyl": [[list(c), sorted(v)] for c, v in sorted(self.allowed.items(), key=lambda kv: kv[0][::-1])]}

    def __repr__(self):
        return f"Cyl({len(self.allowed)} coords)"


class Union(ClopenSet):
    __slots__ = ("parts",)

    def __init__(self, parts):
        self.parts = list(parts)

    def contains(self, x):
        return any(p.contains(x) for p in self.parts)

    def translate(self, v):
        return Union([p.translate(v) for p in self.parts])

    def coords(self):
        return set().union(*(p.coords() for p in self.parts)) if self.parts else set()

    def to_json(self):
        return {"or": [p.to_json() for p in self.parts]}


class Meet(ClopenSet):
    __slots__ = ("parts",)

    def __init__(self, parts):
        self.parts = list(parts)

    def contains(self, x):
        return all(p.contains(x) for p in self.parts)

    def translate(self, v):
        return Meet([p.translate(v) for p in self.parts])

    def coords(self):
        return set().union(*(p.coords() for p in self.parts)) if self.parts else set()

    def to_json(self):
        return {"and": [p.to_json() for p in self.parts]}


class Complement(ClopenSet):
    __slots__ = ("part",)

    def __init__(self, part):
        self.part = part

    def contains(self, x):
        return not self.part.contains(x)

    def translate(self, v):
        return Complement(self.part.translate(v))

    def coords(self):
        return self.part.coords()

    def to_json(self):
        return {"not": self.part.to_json()}


EMPTY = Union([])
EVERYTHING = Cyl({})


def clopen_from_json(doc):
    if "cyl" in doc:
        return Cyl({tuple(c): v for c, v in doc["cyl"]})
    if "or" in doc:
        return Union([clopen_from_json(p) for p in doc["or"]])
    if "and" in doc:
        return Meet([clopen_from_json(p) for p in doc["and"]])
    return Complement(clopen_from_json(doc["not"]))


def _points(lang):
    pts = getattr(lang, "points", lang)
    if not pts:
        raise ValueError("the language sample carries no points to validate against")
    return pts


def lang_identity(lang):
    ident = getattr(lang, "identity", None)
    return ident() if callable(ident) else ("points", len(lang))


class InvalidElement(ValueError):
    def __init__(self, kind, witness, detail=""):
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.witness = witness


class TableElement:
    """Moving pieces [(A_i, v_i)] plus the implicit identity piece."""

    def __init__(self, pieces, dim=2, checked_against=None):
        self.dim = dim
        merged = []
        for A, v in pieces:
            v = tuple(v)
            if any(v):
                merged.append((A, v))
        self.pieces = merged
        self.checked_against = checked_against

    def domain(self):
        return Union([A for A, _ in self.pieces])

    def images(self):
        return [(A.translate(v), v) for A, v in self.pieces]

    def piece_of(self, x):
        """Index of the moving piece containing x, or None for the identity piece."""
        hit = None
        for i, (A, _) in enumerate(self.pieces):
            if A.contains(x):
                if hit is not None:
                    raise InvalidElement("overlap", x, f"pieces {hit} and {i}")
                hit = i
        return hit

    def shift_at(self, x):
        i = self.piece_of(x)
        return zero(self.dim) if i is None else self.pieces[i][1]

    def apply(self, x):
        v = self.shift_at(x)
        return x.translate(v), v

    def __call__(self, x):
        return self.apply(x)[0]

    def inverse(self):
        return TableElement([(A.translate(v), neg(v)) for A, v in self.pieces], self.dim, self.checked_against)

    def support(self):
        return self.domain()

    def window(self):
        return self.domain().window(self.dim)

    def to_json(self):
        return {"version": 1,
                "window": [list(c) for c in sorted(self.domain().coords(), key=lambda c: c[::-1])],
                "pieces": [{"patterns": A.to_json(), "shift": list(v)} for A, v in self.pieces]}

    @classmethod
    def from_json(cls, doc, dim=2):
        return cls([(clopen_from_json(p["patterns"]), tuple(p["shift"])) for p in doc["pieces"]], dim)

    def __repr__(self):
        return f"TableElement({len(self.pieces)} moving pieces)"


def validate(g, lang):
    """Domain and image partition checks on every sampled point."""
    pts = _points(lang)
    images = g.images()
    for y in pts:
        g.piece_of(y)
        hits = [i for i, (B, _) in enumerate(images) if B.contains(y)]
        if len(hits) > 1:
            raise InvalidElement("image-overlap", y, f"images of pieces {hits[0]} and {hits[1]}")
        in_domain = any(A.contains(y) for A, _ in g.pieces)
        # y lies in the identity image iff it is outside every moving domain
        if bool(hits) == (not in_domain):
            kind = "not-surjective" if not hits else "not-injective"
            raise InvalidElement(kind, y, "the image pieces do not partition the sample")
    return True


def make_element(pieces, lang, dim=2):
    g = TableElement(pieces, dim, lang_identity(lang))
    validate(g, lang)
    return g


def global_shift(v):
    return TableElement([(EVERYTHING, v)], len(v))


def identity_element(dim=2):
    return TableElement([], dim)


def compose(g, h, lang=None):
    """g ∘ h: first h, then g.  Pieces with zero total shift fold into the identity."""
    d = g.dim
    g_parts = g.pieces + [(Complement(g.domain()), zero(d))]
    h_parts = h.pieces + [(Complement(h.domain()), zero(d))]
    pieces = []
    for B, w in h_parts:
        for A, v in g_parts:
            shift = add(v, w)
            if any(shift):
                pieces.append((Meet([B, A.translate(neg(w))]), shift))
    out = TableElement(pieces, d)
    if lang is not None:
        pts = _points(lang)
        out.pieces = [(A, v) for A, v in out.pieces if any(A.contains(y) for y in pts)]
        out.checked_against = lang_identity(lang)
    return out


def is_identity(g, lang):
    return all(not any(g.shift_at(y)) for y in _points(lang))


def agree_on(g, h, lang):
    return all(g.shift_at(y) == h.shift_at(y) for y in _points(lang))


def multisection_3cycle(A1, A2, A3, v12, v23, lang, dim=2):
    """A1 -> A2 -> A3 -> A1 by the shifts v12, v23 and -(v12 + v23)."""
    pts = _points(lang)
    v31 = neg(add(v12, v23))
    moved2, moved3 = A1.translate(v12), A2.translate(v23)
    for y in pts:
        a = [A1.contains(y), A2.contains(y), A3.contains(y)]
        if sum(a) > 1:
            raise InvalidElement("not-disjoint", y, "the three sets overlap")
        if moved2.contains(y) != a[1] or moved3.contains(y) != a[2]:
            raise InvalidElement("incoherent", y, "translates do not match the given sets")
    g = make_element([(A1, v12), (A2, v23), (A3, v31)], lang, dim)
    g3 = compose(g, compose(g, g))
    if not is_identity(g3, lang):
        raise InvalidElement("order", None, "g^3 is not the identity on the sample")
    return g


class GroupWord:
    """letters: list of (generator id, +1 or -1), read as a product left to right."""

    def __init__(self, letters):
        self.letters = [(g, int(e)) for g, e in letters]

    @classmethod
    def of(cls, ids):
        return cls([(g, 1) for g in ids])

    def reduced(self, involutions=False):
        out = []
        for g, e in self.letters:
            if out and out[-1][0] == g and (involutions or out[-1][1] == -e):
                out.pop()
            else:
                out.append((g, e))
        return GroupWord(out)

    def inverse(self):
        return GroupWord([(g, -e) for g, e in reversed(self.letters)])

    def __len__(self):
        return len(self.letters)

    def __eq__(self, other):
        return isinstance(other, GroupWord) and self.letters == other.letters

    def __hash__(self):
        return hash(tuple(self.letters))

    def ids(self):
        return [g for g, _ in self.letters]

    def __repr__(self):
        return "·".join(f"g{g}" + ("⁻¹" if e < 0 else "") for g, e in self.letters) or "1"


def evaluate_word(w, generators, x):
    """Apply w to x, rightmost letter first.  Returns (image, per-letter shifts)."""
    inverses = {}
    trace = []
    y = x
    for g, e in reversed(w.letters):
        el = generators[g]
        if e < 0:
            el = inverses.setdefault(g, el.inverse())
        y, v = el.apply(y)
        trace.append(v)
    return y, trace


def total_shift(trace, dim=2):
    s = zero(dim)
    for v in trace:
        s = add(s, v)
    return s


class WitnessReport:
    def __init__(self, word, witness_id, point, displacement, spent):
        self.word = word
        self.witness_id = witness_id
        self.point = point
        self.displacement = displacement
        self.spent = spent

    def replay(self, generators):
        _, trace = evaluate_word(self.word, generators, self.point)
        return total_shift(trace, len(self.displacement))

    def to_json(self):
        return {"word": [g for g, _ in self.word.letters], "witnessId": self.witness_id,
                "displacement": list(self.displacement), "spent": self.spent}


def nontriviality_witness(w, generators, factory, budget=64, check_window=None):
    """First factory point moved by w, or None (unknown, never 'trivial').

    factory(w) yields (witness id, point).  A point counts as moved when the
    total displacement is nonzero, or (when check_window is given) the image
    pattern differs from x there."""
    spent = 0
    for wid, x in factory(w):
        if spent >= budget:
            break
        spent += 1
        y, trace = evaluate_word(w, generators, x)
        disp = total_shift(trace, x.dim)
        if any(disp):
            return WitnessReport(w, wid, x, disp, spent)
        if check_window is not None and restrict(y, check_window) != restrict(x, check_window):
            return WitnessReport(w, wid, x, disp, spent)
    return None


def alternating_words(n_generators, max_len):
    """Reduced words in involutions 1..n (adjacent letters distinct), by length then lex."""
    out = []
    layer = [()]
    for _ in range(max_len):
        layer = [t + (g,) for t in layer for g in range(1, n_generators + 1) if not t or t[-1] != g]
        out.extend(layer)
    return [GroupWord.of(t) for t in out]


class FreeProductCertificate:
    def __init__(self, rows, missing, involutions):
        self.rows = rows
        self.missing = missing
        self.involutions = involutions

    @property
    def complete(self):
        return not self.missing and all(self.involutions.values())

    def to_json(self):
        return {"version": 1, "complete": self.complete,
                "involutions": {str(k): v for k, v in self.involutions.items()},
                "rows": [r.to_json() for r in self.rows],
                "missing": [w.ids() for w in self.missing]}


def free_product_certificate(generators, max_len, factory, lang, budget=64):
    """Witness table for every alternating word of length <= max_len in three involutions."""
    ids = sorted(generators)
    if len(ids) != 3:
        raise ValueError("expects exactly three generators")
    invol = {g: is_identity(compose(generators[g], generators[g], lang), lang) for g in ids}
    if not all(invol.values()):
        bad = [g for g, ok in invol.items() if not ok]
        raise InvalidElement("not-involution", None, f"generators {bad} do not square to 1")
    rows, missing = [], []
    for w in alternating_words(3, max_len):
        w = GroupWord.of([ids[i - 1] for i in w.ids()])
        rep = nontriviality_witness(w, generators, factory, budget)
        (rows if rep else missing).append(rep or w)
    return FreeProductCertificate(rows, missing, invol)


def disjoint_translates_neighborhood(x, F, lang=None, partition=None, max_radius=64):
    """A cylinder B around x with the sets t·B (t in F) pairwise disjoint.

    t·B is the cylinder of translate(x, t) on W - t, so disjointness means the
    translates' patterns clash on a shared coordinate.  With a partition, each
    t·B must also sit inside one part (parts must be cylinders).  Returns None
    when no window up to max_radius separates them."""
    offs = list(F.sorted())
    base = None
    if partition:
        cs = set().union(*(P.coords() for P in partition)) or {zero(x.dim)}
        base = Region(cs, x.dim)
    W, parts = cycle_cylinders(x, offs, base=base, max_radius=max_radius)
    if W is None:
        return None
    if partition and not all(any(_cyl_inside(m, P) for P in partition) for m in parts):
        return None
    return Cyl.at(x, W.sorted())


def _cyl_inside(C, P):
    """Sufficient test for C ⊆ P when both are cylinders."""
    if not isinstance(P, Cyl):
        raise ValueError("partition parts must be cylinders")
    return all(c in C.allowed and C.allowed[c] <= vals for c, vals in P.allowed.items())


def _orbit_points(x, scan, predicate):
    return [t for t in scan.sorted() if predicate(x.translate(t))]


def cycle_cylinders(y, shifts, base=None, avoid=(), max_radius=64):
    """Cylinder B of y with the sets s·B (s in shifts) pairwise disjoint, each
    constraining at least `base`, and none containing a point of `avoid`.
    Returns (window, [s·B])."""
    d = y.dim
    if base is not None:
        need = Region({add(p, s) for p in base.points for s in shifts}, d)
    R = 0
    while R <= max_radius:
        W = Region(product(range(-R, R + 1), repeat=d), d)
        if base is not None:
            W = W.union(need)
        B = Cyl.at(y, W.sorted())
        parts = [B.translate(s) for s in shifts]
        clash = all(parts[i].conflicts(parts[j]) for i in range(len(parts)) for j in range(i + 1, len(parts)))
        if clash and not any(P.contains(p) for P in parts for p in avoid):
            return W, parts
        R = 1 if R == 0 else 2 * R
    return None, None


class CentralPair:
    def __init__(self, n, c, d, orbit, witness):
        self.n = n
        self.c = c
        self.d = d
        self.orbit = orbit         # the four orbit offsets used
        self.witness = witness     # (point, shift of cd, shift of dc)


def asymptotically_central_pair(x0, radii, lang, scan, extra=None):
    """Noncommuting 3-cycles c_n, d_n supported in U_n ∖ U_{n+1}, where U_n is the
    cylinder of x0 on [-r_n, r_n]^d.

    c_n cycles the cylinders around the first three orbit points found in the
    annulus and d_n the last three, so they share two sets and do not commute."""
    d = x0.dim
    boxes = [Region(product(range(-r, r + 1), repeat=d), d) for r in radii]
    U = [Cyl.at(x0, W.sorted()) for W in boxes]
    pairs = []
    for n in range(len(radii) - 1):
        inside = _orbit_points(x0, scan, lambda y: U[n].contains(y) and not U[n + 1].contains(y))
        if len(inside) < 4:
            raise ValueError(f"annulus {n} has only {len(inside)} orbit points in the scan")
        ts = inside[:4]
        ys = [x0.translate(t) for t in ts]
        shifts = [sub(t, ts[0]) for t in ts]
        # every part constrains the annulus window, so the supports sit in U_n ∖ U_{n+1}
        W, parts = cycle_cylinders(ys[0], shifts, base=boxes[n + 1])
        if W is None:
            raise ValueError(f"no separating window for annulus {n}")
        sample = list(_points(lang)) + ys + [x0] + list(extra or [])
        c = multisection_3cycle(parts[0], parts[1], parts[2], shifts[1], sub(shifts[2], shifts[1]), sample, d)
        d_el = multisection_3cycle(parts[1], parts[2], parts[3], sub(shifts[2], shifts[1]),
                                   sub(shifts[3], shifts[2]), sample, d)
        cd, dc = compose(c, d_el), compose(d_el, c)
        wit = next(((y, cd.shift_at(y), dc.shift_at(y)) for y in ys if cd.shift_at(y) != dc.shift_at(y)), None)
        if wit is None:
            raise ValueError(f"c_{n} and d_{n} commute on the sample")
        pairs.append(CentralPair(n, c, d_el, ts, wit))
    return pairs


def commute_on(g, h, lang):
    return agree_on(compose(g, h), compose(h, g), lang)


class ICCWitness:
    def __init__(self, conjugates, points, h_elements):
        self.conjugates = conjugates
        self.points = points
        self.h = h_elements


def icc_witness(g, direction, count, lang, step=1, max_radius=64):
    """count pairwise distinct conjugates h_n g h_n^{-1}, following the ICC argument.

    x_n runs over sampled points moved by g, spread along `direction`.  h_n is a
    3-cycle of small cylinders that moves g x_n and fixes every x_i (i <= n) and
    g x_i (i < n); then h_i g h_i^{-1} x_i != g x_i while h_n g h_n^{-1} x_i = g x_i."""
    pts = _points(lang)
    moved = [y for y in pts if any(g.shift_at(y))]
    if not moved:
        raise ValueError("g acts as the identity on the sample")
    d = g.dim
    xs = []
    k = 0
    while len(xs) < count and k < 64 * count:
        y = moved[0].translate(tuple(k * step * c for c in direction))
        if any(g.shift_at(y)):
            xs.append(y)
        k += 1
    if len(xs) < count:
        raise ValueError("not enough moved orbit points along the direction")
    gx = [g(y) for y in xs]
    conjugates, hs = [], []
    shifts = [zero(d), tuple(2 * c for c in direction), tuple(3 * c for c in direction)]
    for n in range(count):
        protected = xs[:n + 1] + gx[:n]
        W, parts = cycle_cylinders(gx[n], shifts, avoid=protected, max_radius=max_radius)
        if W is None:
            raise ValueError(f"no separating window for conjugate {n}")
        sample = list(pts) + protected + [gx[n].translate(s) for s in shifts]
        h = multisection_3cycle(parts[0], parts[1], parts[2], shifts[1], sub(shifts[2], shifts[1]), sample, d)
        conjugates.append(compose(compose(h, g), h.inverse()))
        hs.append(h)
    return ICCWitness(conjugates, xs, hs)


def inner_amenability_ratio(size_f, size_fp):
    """|W'|/|W| for the 3-cycle sets, and the bound 2(1 - |W'|/|W|) on |hWh^{-1} Δ W|/|W|."""
    if size_f < 3:
        raise ValueError("|F| must be at least 3")
    if not 3 <= size_fp <= size_f:
        raise ValueError("need 3 <= |F'| <= |F|")
    ratio = Fraction(comb(size_fp, 3), comb(size_f, 3))
    return ratio, 2 * (1 - ratio)
