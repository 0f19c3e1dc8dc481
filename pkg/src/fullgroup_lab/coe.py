"""Cocycles, block codes and the entropy-invariance harness.

Group elements and cocycle values live in Z^d and compose additively.  A
generator s acts on points by x -> translate(x, s), and a word
(s_n, ..., s_0) is applied right to left, so

    u_bar((s_n, ..., s_0), x) = u(s_n, s_{n-1}...s_0 x) + ... + u(s_0, x).
"""
import math

from .fullgroup import EVERYTHING, Cyl, clopen_from_json
from .lattice import Region, add, is_invariant, zero
from .subshift import PointOracle, sample_language


def unit_generators(dim):
    out = []
    for i in range(dim):
        for sign in (1, -1):
            out.append(tuple(sign if j == i else 0 for j in range(dim)))
    return out


def word_for(g):
    """A canonical generator word for g: axis 0 moves happen first."""
    word = []
    for i in reversed(range(len(g))):
        step = tuple((1 if g[i] > 0 else -1) if j == i else 0 for j in range(len(g)))
        word.extend([step] * abs(g[i]))
    return word


def word_sum(word, dim):
    s = zero(dim)
    for v in word:
        s = add(s, v)
    return s


class CocycleError(ValueError):
    pass


class CocycleTable:
    """For each generator s, pieces [(ClopenSet, value)] partitioning the sample."""

    def __init__(self, entries, dim=2):
        self.dim = dim
        self.entries = {tuple(s): [(A, tuple(v)) for A, v in pieces] for s, pieces in entries.items()}

    def value(self, s, x):
        s = tuple(s)
        if s not in self.entries:
            raise CocycleError(f"no table entry for generator {s}")
        hits = [v for A, v in self.entries[s] if A.contains(x)]
        if len(hits) != 1:
            raise CocycleError(f"{len(hits)} pieces of generator {s} contain {x!r}")
        return hits[0]

    def values(self):
        return {v for pieces in self.entries.values() for _, v in pieces}

    def with_entry(self, s, index, value):
        """Copy with one piece value replaced (fault injection)."""
        entries = {k: list(p) for k, p in self.entries.items()}
        A, _ = entries[tuple(s)][index]
        entries[tuple(s)][index] = (A, tuple(value))
        return CocycleTable(entries, self.dim)

    def to_json(self):
        return [{"generator": list(s), "pieces": [{"patterns": A.to_json(), "value": list(v)}
                                                  for A, v in pieces]}
                for s, pieces in self.entries.items()]

    @classmethod
    def from_json(cls, doc, dim=2):
        return cls({tuple(e["generator"]): [(clopen_from_json(p["patterns"]), tuple(p["value"]))
                                            for p in e["pieces"]] for e in doc}, dim)


def identity_cocycle(dim=2):
    return CocycleTable({s: [(EVERYTHING, s)] for s in unit_generators(dim)}, dim)


def extend_cocycle(u, word, x):
    total = zero(u.dim)
    y = x
    for s in reversed(word):
        total = add(total, u.value(s, y))
        y = y.translate(s)
    return total


def cocycle_at(u, g, x):
    return extend_cocycle(u, word_for(g), x)


class CocycleReport:
    def __init__(self, ok, checked, witness=None, inconclusive=0):
        self.ok = ok
        self.checked = checked
        self.witness = witness
        self.inconclusive = inconclusive

    def to_json(self):
        w = None
        if self.witness is not None:
            r, s, x, lhs, rhs = self.witness
            w = {"r": list(r), "s": list(s), "x": repr(x), "lhs": list(lhs), "rhs": list(rhs)}
        return {"ok": self.ok, "checked": self.checked, "witness": w, "inconclusive": self.inconclusive}


def check_cocycle_identity(kappa, samples, pairs):
    """kappa(r + s, x) == kappa(r, s.x) + kappa(s, x) for every x and (r, s)."""
    checked = 0
    for x in samples:
        for r, s in pairs:
            lhs = cocycle_at(kappa, add(r, s), x)
            rhs = add(cocycle_at(kappa, r, x.translate(s)), cocycle_at(kappa, s, x))
            checked += 1
            if lhs != rhs:
                return CocycleReport(False, checked, (r, s, x, lhs, rhs))
    return CocycleReport(True, checked)


def path_independence(u, x, word_pairs):
    """First pair of equal-sum words with different extended values at x, or None."""
    for w1, w2 in word_pairs:
        if word_sum(w1, u.dim) != word_sum(w2, u.dim):
            raise ValueError("paired words must have the same product")
        a, b = extend_cocycle(u, w1, x), extend_cocycle(u, w2, x)
        if a != b:
            return (w1, w2, a, b)
    return None


class InvarianceTransfer:
    def __init__(self, ok, ratio, image, status, source_ratio=None, maps=None):
        self.ok = ok
        self.ratio = ratio
        self.image = image
        self.status = status            # "checked" or "not-injective"
        self.source_ratio = source_ratio
        self.maps = maps


def invariance_transfer_check(kappa, E, L, delta, x, K=None, samples=None):
    """Is {kappa(g, x) : g in E} (L, delta)-invariant?

    With K (the value set of the reverse cocycle on L) the ratio of E under K
    is reported alongside.  With `samples` and verbose use, the number of
    distinct maps v -> kappa(v, y) on E over the samples is also counted."""
    seen = {}
    for g in E.sorted():
        h = cocycle_at(kappa, g, x)
        if h in seen:
            return InvarianceTransfer(False, None, None, "not-injective")
        seen[h] = g
    F = Region(seen, E.dim)
    ok, ratio = is_invariant(F, L, delta)
    src = is_invariant(E, Region(K, E.dim), delta)[1] if K is not None else None
    maps = None
    if samples is not None:
        pts = E.sorted()
        maps = len({tuple(cocycle_at(kappa, g, y) for g in pts) for y in samples})
    return InvarianceTransfer(ok, ratio, F, "checked", src, maps)


class BlockCode:
    """Sliding block code: symbol at t is rule(values of x on t + window)."""

    def __init__(self, window, rule):
        self.window = window
        self.cells = window.sorted()
        self.rule = rule

    def __call__(self, values):
        if callable(self.rule):
            return self.rule(values)
        try:
            return self.rule[values]
        except KeyError:
            raise ValueError(f"block code undefined on pattern {values}") from None


def conjugate_by_blockcode(x, code):
    cells = code.cells

    def rule(t):
        return code(tuple(x(add(t, w)) for w in cells))

    return PointOracle(rule, x.dim, tag=f"{x.tag}|code", period=x.period)


def higher_block_code(window, q, first=1):
    """Injective recoding of window patterns over {first, ..., first+q-1}
    as base-q integers."""
    def rule(values):
        n = 0
        for v in values:
            if not first <= v < first + q:
                raise ValueError(f"symbol {v} outside the alphabet")
            n = n * q + (v - first)
        return n

    return BlockCode(window, rule)


def first_cell_decoder(q, length, first=1):
    """Inverse of higher_block_code when the window's least cell is the origin."""
    return BlockCode(Region([(0, 0)]), lambda values: values[0] // q ** (length - 1) + first)


def cocycle_from_blockcode(code, patterns, dim=2):
    """The conjugacy cocycle u(s, .) = s, tabulated over the code's window
    cylinders so that single entries can be altered."""
    cells = code.cells
    entries = {}
    for s in unit_generators(dim):
        entries[s] = [(Cyl(dict(zip(cells, ([v] for v in p)))), s) for p in sorted(patterns)]
    return CocycleTable(entries, dim)


def entropy_compare(systems, windows, scan):
    """systems: name -> list of points.  One row per window with the pooled
    pattern counts, per-system estimates (1/|F|) log count and the spread."""
    rows = []
    for F in windows:
        est = {}
        for name, pts in systems.items():
            pats = set()
            for p in pts:
                pats |= sample_language(p, F, scan).patterns
            est[name] = math.log(len(pats)) / len(F)
        vals = list(est.values())
        rows.append({"size": len(F), "estimates": est, "gap": max(vals) - min(vals)})
    return rows
