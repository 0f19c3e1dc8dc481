"""Edge labelings of the Z^2 Cayley graph carrying a faithful action of
Delta = Z/2 * Z/2 * Z/2, packed into Toeplitz points over 36 symbols.

Vertex (n, m) owns its up-edge {(n,m),(n,m+1)} and right-edge
{(n,m),(n+1,m)}; the packed symbol is 6 * up + right with labels indexed by
SIGMA.  The horizontal rows copy a binary Toeplitz sequence built from a
parameter z by a 2-adic valuation rule; the vertical line over column n
spells ...w d w d... for the word w = g(n).
"""
import hashlib

from .coe import cocycle_at, conjugate_by_blockcode, path_independence
from .fullgroup import Cyl, GroupWord, TableElement, evaluate_word, total_shift
from .lattice import add
from .subshift import PointOracle, toeplitz_certificate

SIGMA = ("a0", "a1", "a2", "d", "0", "1")
D = 3
ZERO, ONE = 4, 5


class DeltaWord(tuple):
    """Reduced word in the involutions a0, a1, a2, as letter indices 0..2."""

    def __new__(cls, letters):
        letters = tuple(int(a) for a in letters)
        if any(a not in (0, 1, 2) for a in letters):
            raise ValueError("letters must be 0, 1 or 2")
        if any(a == b for a, b in zip(letters, letters[1:])):
            raise ValueError(f"word {letters} is not reduced")
        return super().__new__(cls, letters)

    def __str__(self):
        return "".join(SIGMA[a] for a in self) or "1"


def count_of_length(L):
    return 3 * 2 ** (L - 1) if L >= 1 else 1


def enumerate_delta(max_len):
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    out = []
    layer = [()]
    for _ in range(max_len):
        layer = [w + (a,) for w in layer for a in range(3) if not w or w[-1] != a]
        out.extend(DeltaWord(w) for w in layer)
    return out


def word_at(j):
    """w_j in the length-then-lex enumeration (j >= 1)."""
    if j < 1:
        raise ValueError("words are numbered from 1")
    L, r = 1, j - 1
    while r >= count_of_length(L):
        r -= count_of_length(L)
        L += 1
    # first letter has 3 choices, each later one 2 (the letters != previous, in order)
    first, r = divmod(r, 2 ** (L - 1))
    letters = [first]
    for pos in range(L - 2, -1, -1):
        bit = (r >> pos) & 1
        choices = [a for a in range(3) if a != letters[-1]]
        letters.append(choices[bit])
    return DeltaWord(letters)


def _first_mismatch(n, odd_ones):
    """Least bit where n differs from the 2-adic integer with 1s at the even
    (odd_ones=False, -1/3) or odd (odd_ones=True, -2/3) positions."""
    i = 0
    while ((n >> i) & 1) == ((i & 1) == odd_ones):
        i += 1
    return i


def j_alpha(n):
    return _first_mismatch(n, False)


def k_beta(n):
    return _first_mismatch(n, True)


def profinite_g(n):
    return word_at(j_alpha(n) + 1)


def fiber_class(j):
    """(residue, modulus) of {n : j_alpha(n) = j}; g is constant on it."""
    M = 1 << (j + 1)
    alpha = sum(1 << i for i in range(0, j + 1, 2))
    return (alpha ^ (1 << j)) % M, M


def fiber_representative(j):
    r, M = fiber_class(j)
    return r if r <= M // 2 else r - M


class ZParameter:
    """z in 2^N: explicit prefix bits, then a tail rule.

    Tail rules: "0", "1", "periodic:<bits>", "seed:<int>"."""

    def __init__(self, prefix=(), tail="0"):
        self.prefix = tuple(int(b) & 1 for b in prefix)
        self.tail = tail
        if tail in ("0", "1"):
            self._tail = lambda i, c=int(tail): c
        elif tail.startswith("periodic:"):
            bits = [int(b) for b in tail.split(":", 1)[1]]
            if not bits or any(b not in (0, 1) for b in bits):
                raise ValueError(f"bad periodic tail {tail!r}")
            self._tail = lambda i: bits[i % len(bits)]
        elif tail.startswith("seed:"):
            seed = int(tail.split(":", 1)[1])
            self._tail = lambda i: hashlib.blake2b(f"{seed}:{i}".encode(), digest_size=1).digest()[0] & 1
        else:
            raise ValueError(f"unknown tail rule {tail!r}")

    def __call__(self, i):
        if i < 0:
            raise ValueError("z is indexed by N")
        return self.prefix[i] if i < len(self.prefix) else self._tail(i - len(self.prefix))

    def to_json(self):
        return {"prefixBits": list(self.prefix), "tailRule": self.tail}

    @classmethod
    def from_json(cls, doc):
        return cls(doc["prefixBits"], doc["tailRule"])

    @classmethod
    def parse(cls, text):
        """'0110+periodic:01', '1+0', or just a tail rule."""
        if "+" in text:
            prefix, tail = text.split("+", 1)
        elif set(text) <= {"0", "1"} and len(text) > 1:
            prefix, tail = text, "0"
        else:
            prefix, tail = "", text
        return cls([int(b) for b in prefix], tail)


def thomas_like_map(z):
    """z~(n) = z(k(n)); coordinate n is 2^{k(n)+1}-periodic."""
    return PointOracle(lambda t: z(k_beta(t[0])), dim=1, tag="ztilde")


def vertical_labeling(n, m):
    w = profinite_g(n)
    W = (D,) + tuple(w)
    return W[(-1 - m) % len(W)]


class EdgeLabeling:
    """Labels of the up-edge and right-edge at each vertex, seen from offset."""

    def __init__(self, vertical, horizontal, offset=(0, 0)):
        self.vertical = vertical
        self.horizontal = horizontal
        self.offset = tuple(offset)

    def up(self, n, m):
        return self.vertical(n + self.offset[0], m + self.offset[1])

    def right(self, n, m):
        return self.horizontal(n + self.offset[0], m + self.offset[1])

    def translate(self, v):
        return EdgeLabeling(self.vertical, self.horizontal, add(self.offset, v))

    def matrices(self, window):
        """(vertical, horizontal) label rows over a box window, row-major."""
        (x0, x1), (y0, y1) = window.bounds()
        V = [[self.up(n, m) for n in range(x0, x1 + 1)] for m in range(y0, y1 + 1)]
        H = [[self.right(n, m) for n in range(x0, x1 + 1)] for m in range(y0, y1 + 1)]
        return V, H


def membership_defects(lam, window):
    """Violations of the space constraints on the edges owned by window vertices."""
    out = []
    for n, m in window.sorted():
        v, h = lam.up(n, m), lam.right(n, m)
        if v not in (0, 1, 2, D):
            out.append(("vertical-alphabet", (n, m), v))
        if h not in (ZERO, ONE):
            out.append(("horizontal-alphabet", (n, m), h))
        if v == lam.up(n, m + 1):
            out.append(("adjacent-equal", (n, m), v))
    return out


def build_labeling(z):
    zt = thomas_like_map(z)
    return EdgeLabeling(vertical_labeling, lambda n, m: ZERO + zt((n,)))


def pack_phi(lam):
    return PointOracle(lambda t: 6 * lam.up(*t) + lam.right(*t), tag="packed")


def unpack(symbol):
    return divmod(symbol, 6)


def realizable_symbols():
    return sorted(6 * v + h for v in range(4) for h in (ZERO, ONE))


def psi_projection(lam):
    return PointOracle(lambda t: lam.right(t[0], 0) - ZERO, dim=1, tag="psi")


def delta_action(i, lam):
    """phi_{a_i}: step onto the neighbour across the incident a_i edge, if any."""
    upper = lam.up(0, 0) == i
    lower = lam.up(0, -1) == i
    if upper and lower:
        raise ValueError(f"both vertical edges at the origin carry a{i}")
    if upper:
        return lam.translate((0, 1))
    if lower:
        return lam.translate((0, -1))
    return lam


def apply_delta_word(w, lam):
    for a in reversed(w):
        lam = delta_action(a, lam)
    return lam


def delta_generators():
    """phi_{a_0}, phi_{a_1}, phi_{a_2} as full-group elements on packed points."""
    gens = {}
    for i in range(3):
        syms = [6 * i + h for h in range(6)]
        gens[i] = TableElement([(Cyl({(0, 0): syms}), (0, 1)), (Cyl({(0, -1): syms}), (0, -1))])
    return gens


def faithfulness_table(lam, max_len):
    """For each reduced w, the translate (-n, 0).lam with n in g^{-1}(w) and
    the labels of the edge {(0,0),(0,1)} before and after phi_w."""
    gens = delta_generators()
    rows = []
    for j, w in enumerate(enumerate_delta(max_len), start=1):
        n = fiber_representative(j - 1)
        if profinite_g(n) != w:
            raise AssertionError(f"fiber representative {n} does not map to {w}")
        start = lam.translate((n, 0))
        image = apply_delta_word(w, start)
        before, after = start.up(0, 0), image.up(0, 0)
        _, trace = evaluate_word(GroupWord.of(list(w)), gens, pack_phi(start))
        rows.append({"word": str(w), "index": j, "n": n, "before": SIGMA[before], "after": SIGMA[after],
                     "displacement": list(total_shift(trace)),
                     "ok": before == w[-1] and after == D and image.offset != start.offset})
    return rows


def involution_defects(lam, translates):
    bad = []
    for t in translates:
        y = lam.translate(t)
        for i in range(3):
            if delta_action(i, delta_action(i, y)).offset != y.offset:
                bad.append((t, i))
    return bad


def locality_defects(z1, z2, k, window):
    """If z1, z2 agree from bit k on, the packed points may differ only in
    columns n with k_beta(n) < k."""
    if any(z1(i) != z2(i) for i in range(k, k + 64)):
        raise ValueError(f"the parameters differ beyond bit {k} (checked 64 bits)")
    p1, p2 = pack_phi(build_labeling(z1)), pack_phi(build_labeling(z2))
    return [t for t in window.sorted() if p1(t) != p2(t) and k_beta(t[0]) >= k]


def odd_parts(max_word_len):
    return sorted({(l >> ((l & -l).bit_length() - 1)) for l in range(2, max_word_len + 2)})


def toeplitz_report(point, window, max_period_exp=8, max_word_len=None):
    """Per-coordinate least periods of the packed point; vertical periods are
    |w| + 1, so odd factors up to the longest word met are allowed."""
    coords = window.sorted()
    if max_word_len is None:
        max_word_len = max(len(profinite_g(n)) for n in range(window.bounds()[0][0], window.bounds()[0][1] + 1))
    cert = toeplitz_certificate(point, coords, max_period_exp, odd_factors=odd_parts(max_word_len))
    failures = [t for t, p in cert.items() if p is None]
    return {"checked": len(coords), "failures": [list(t) for t in failures],
            "maxPeriod": max((max(p) for p in cert.values() if p), default=0), "ok": not failures}


class ClaimReport:
    def __init__(self, ok, checks, witness=None):
        self.ok = ok
        self.checks = checks
        self.witness = witness

    def to_json(self):
        return {"ok": self.ok, "checks": self.checks, "witness": self.witness}


def orbit_image(u, f, x, source):
    """phi_{(u,f)}(x) on the targets u0(s, x), s in source: phi(x)(u0(s,x)) = f(s.x).

    Returns (dict target -> symbol, collision or None)."""
    out = {}
    for s in source.sorted():
        t = cocycle_at(u, s, x)
        val = f(tuple(x(add(s, w)) for w in f.cells))
        if t in out and out[t][1] != val:
            return out, (s, out[t][0], t)
        out[t] = (s, val)
    return {t: v for t, (_, v) in out.items()}, None


def _dict_point(table, tag):
    def rule(t):
        try:
            return table[t]
        except KeyError:
            raise ValueError(f"coordinate {t} outside the computed image window") from None
    return PointOracle(rule, tag=tag)


def check_claim_toe(phi_code, u, v, f, g, samples, word_pairs, source, target):
    """Finite checks of the orbit-equivalence data (u, f), (v, g) on samples.

    path: u_bar is path independent over word_pairs at every sample;
    code: phi_{(u,f)} agrees with the block code phi_code on `target`;
    intertwine: phi(s.x) = u0(s,x).phi(x) on `target` for unit s;
    roundtrip: phi_{(v,g)}(phi_{(u,f)}(x)) = x on `target`."""
    checks = {"path": 0, "code": 0, "intertwine": 0, "roundtrip": 0}
    for idx, x in enumerate(samples):
        bad = path_independence(u, x, word_pairs)
        if bad is not None:
            w1, w2, a, b = bad
            return ClaimReport(False, checks, {"check": "path", "sample": idx, "words": [w1, w2],
                                               "values": [list(a), list(b)]})
        checks["path"] += 1
        img, coll = orbit_image(u, f, x, source)
        if coll is not None:
            return ClaimReport(False, checks, {"check": "bijective", "sample": idx, "collision": repr(coll)})
        if phi_code is not None:
            ref = conjugate_by_blockcode(x, phi_code)
            for t in target.sorted():
                if img.get(t) != ref(t):
                    return ClaimReport(False, checks, {"check": "code", "sample": idx, "at": list(t)})
            checks["code"] += 1
        for s in [(1, 0), (0, 1), (-1, 0), (0, -1)]:
            shifted, _ = orbit_image(u, f, x.translate(s), source)
            h = cocycle_at(u, s, x)
            for t in target.sorted():
                if t in shifted and add(t, h) in img and shifted[t] != img[add(t, h)]:
                    return ClaimReport(False, checks, {"check": "intertwine", "sample": idx, "s": list(s),
                                                       "at": list(t)})
        checks["intertwine"] += 1
        y = _dict_point(img, "image")
        back, coll = orbit_image(v, g, y, target)
        if coll is not None:
            return ClaimReport(False, checks, {"check": "bijective-back", "sample": idx})
        inner = [t for t in target.sorted() if t in back]
        for t in inner:
            if back[t] != x(t):
                return ClaimReport(False, checks, {"check": "roundtrip", "sample": idx, "at": list(t)})
        checks["roundtrip"] += 1
    return ClaimReport(True, checks)
