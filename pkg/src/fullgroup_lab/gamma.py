"""Exact finite probability behind property Gamma.

Distributions are finitely supported, centered, rational laws on [-1, 1].
Sums of i.i.d. copies are computed by exact convolution; the events of the
central-limit and half-set lemmas are then finite sums of Fractions.
"""
from bisect import bisect_right
from fractions import Fraction
from itertools import accumulate

from .lattice import Region, add, is_invariant, zero


class FiniteDistribution:
    def __init__(self, atoms):
        law = {}
        for value, mass in atoms:
            value, mass = Fraction(value), Fraction(mass)
            if mass <= 0:
                raise ValueError("masses must be positive")
            if not -1 <= value <= 1:
                raise ValueError(f"atom {value} outside [-1, 1]")
            law[value] = law.get(value, 0) + mass
        if sum(law.values()) != 1:
            raise ValueError("masses do not sum to 1")
        if sum(v * m for v, m in law.items()) != 0:
            raise ValueError("law is not centered at 0")
        if set(law) == {0}:
            raise ValueError("law is concentrated at 0")
        self.law = dict(sorted(law.items()))
        self._sums = {0: {Fraction(0): Fraction(1)}}

    @classmethod
    def uniform(cls, values):
        values = [Fraction(v) for v in values]
        return cls((v, Fraction(1, len(values))) for v in values)

    def to_json(self):
        return {"version": 1, "atoms": [[v.numerator, v.denominator, m.numerator, m.denominator]
                                        for v, m in self.law.items()]}

    @classmethod
    def from_json(cls, doc):
        return cls((Fraction(a, b), Fraction(c, d)) for a, b, c, d in doc["atoms"])


UNIFORM2 = FiniteDistribution.uniform([-1, 1])
UNIFORM4 = FiniteDistribution.uniform([-1, Fraction(-1, 2), Fraction(1, 2), 1])
UNIFORM_THIRDS = FiniteDistribution.uniform([-1, Fraction(-1, 3), Fraction(1, 3), 1])

NAMED = {"uniform2": UNIFORM2, "uniform4": UNIFORM4, "thirds": UNIFORM_THIRDS}


def convolve(a, b):
    out = {}
    for x, p in a.items():
        for y, q in b.items():
            out[x + y] = out.get(x + y, 0) + p * q
    return out


def iid_sum_law(nu, n):
    """Law of the sum of n independent copies, as a sorted dict value -> mass."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    cache = nu._sums
    k = max(j for j in cache if j <= n)
    law = cache[k]
    while k < n:
        law = dict(sorted(convolve(law, nu.law).items()))
        k += 1
        assert sum(law.values()) == 1
        assert sum(v * m for v, m in law.items()) == 0
        cache[k] = law
    return dict(law)


class _Cdf:
    """Prefix sums for P(S <= t) and P(S > t) lookups."""

    def __init__(self, law):
        self.values = list(law)
        self.prefix = [Fraction(0)] + list(accumulate(law.values()))

    def at_most(self, t):
        return self.prefix[bisect_right(self.values, t)]

    def greater(self, t):
        return 1 - self.at_most(t)


def prob_event(nu, J, K, L):
    """P(W <= -U < V) with U, V, W sums of J, K, L independent copies of nu."""
    U = iid_sum_law(nu, J)
    V = _Cdf(iid_sum_law(nu, K))
    W = _Cdf(iid_sum_law(nu, L))
    return sum((p * W.at_most(-u) * V.greater(-u) for u, p in U.items()), Fraction(0))


def prob_positive(nu, n):
    return sum((p for v, p in iid_sum_law(nu, n).items() if v > 0), Fraction(0))


def half_set_discrepancy(nu, sizeF, sizeE, overlap):
    """(nu^F(A), nu^F(σA Δ A)) for A = {Σ_{s∈E} y_s > 0}, given |σE ∩ E| = overlap."""
    if not 0 <= overlap <= sizeE <= sizeF:
        raise ValueError("need 0 <= overlap <= sizeE <= sizeF")
    rest = sizeE - overlap
    return prob_positive(nu, sizeE), 2 * prob_event(nu, overlap, rest, rest)


def delta_curve(nu, eps, max_size, grid=None):
    """For each |F| <= max_size, the largest grid delta such that every E with
    |E| >= (1 - delta)|F| gives discrepancy < eps and |nu(A) - 1/2| < eps.

    The worst permutation has |σE ∩ E| = |F| - 2|F \\ E| (clamped at 0).
    Rows with no certified delta carry None.
    """
    eps = Fraction(eps)
    if grid is None:
        grid = [Fraction(i, 20) for i in range(20, 0, -1)]
    grid = sorted((Fraction(g) for g in grid), reverse=True)
    rows = []
    for n in range(1, max_size + 1):
        cache = {}

        def ok(e):
            if e not in cache:
                overlap = max(0, n - 2 * (n - e))
                measure, disc = half_set_discrepancy(nu, n, e, overlap)
                cache[e] = disc < eps and abs(measure - Fraction(1, 2)) < eps
            return cache[e]

        best = None
        for d in grid:
            lo = max(1, _ceil((1 - d) * n))
            if all(ok(e) for e in range(lo, n + 1)):
                best = d
                break
        rows.append((n, best))
    return rows


def _ceil(q):
    q = Fraction(q)
    return -((-q.numerator) // q.denominator)


def greedy_disjoint_translates(T, F):
    """Lex-greedy C ⊆ F' = ⋂_{s∈T}(F − s) with the translates T + c pairwise
    disjoint.  Requires 0 ∈ T and F (T, 1/2)-invariant."""
    if zero(T.dim) not in T:
        raise ValueError("T must contain the origin")
    ok, ratio = is_invariant(F, T, Fraction(1, 2))
    if not ok:
        raise ValueError(f"F is not (T, 1/2)-invariant: ratio {ratio}")
    Fp = [t for t in F.sorted() if all(add(t, s) in F.points for s in T.points)]
    used = set()
    C = []
    tpts = T.sorted()
    for c in Fp:
        cells = [add(s, c) for s in tpts]
        if any(p in used for p in cells):
            continue
        used.update(cells)
        C.append(c)
    C = Region(C, F.dim)
    assert all(p in F.points for p in used)
    bound = Fraction(len(F), 2 * len(T) ** 2)
    if len(C) < bound:
        raise AssertionError(f"|C| = {len(C)} below |F|/(2|T|^2) = {bound}")
    return C, {"core_ratio": ratio, "bound": bound, "size": len(C)}
