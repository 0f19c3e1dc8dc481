from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from fullgroup_lab.fullgroup import (
    Cyl, GroupWord, InvalidElement, alternating_words,
    asymptotically_central_pair, agree_on, commute_on, compose,
    disjoint_translates_neighborhood, evaluate_word, free_product_certificate,
    global_shift, icc_witness, identity_element, inner_amenability_ratio,
    is_identity, make_element, multisection_3cycle, nontriviality_witness,
    total_shift,
)
from fullgroup_lab.lattice import Region, box, rect
from fullgroup_lab.subshift import PointOracle, restrict


def k_beta(n):
    """Least bit where n differs from the 2-adic ...1010 (bits 1 at odd places)."""
    i = 0
    while ((n >> i) & 1) == (i & 1):
        i += 1
    return i


def toeplitz_point():
    return PointOracle(lambda t: (k_beta(t[0]) + 2 * k_beta(t[1])) % 3, tag="toeplitz-test")


X0 = toeplitz_point()
LANG = [X0.translate((a, b)) for a in range(-12, 13) for b in range(-12, 13)]


def test_sample_points_are_distinct():
    pats = {restrict(y, box((-8, -8), (9, 9))) for y in LANG}
    assert len(pats) == len(LANG)


def test_identity_and_global_shift():
    e = make_element([], LANG)
    assert is_identity(e, LANG)
    g = make_element([(Cyl({}), (2, -1))], LANG)
    y, v = g.apply(X0)
    assert v == (2, -1) and restrict(y, rect(3, 3)) == restrict(X0.translate((2, -1)), rect(3, 3))
    assert agree_on(compose(global_shift((1, 0)), global_shift((0, 3))), global_shift((1, 3)), LANG)


def swap(A, v):
    return [(A, v), (A.translate(v), (-v[0], -v[1]))]


def test_swap_is_involution():
    A = Cyl({(0, 0): [0], (1, 0): [1]})
    assert A.conflicts(A.translate((1, 0)))
    g = make_element(swap(A, (1, 0)), LANG)
    assert is_identity(compose(g, g), LANG)
    assert not is_identity(g, LANG)
    assert any(A.contains(y) for y in LANG)


def test_invalid_elements_have_witnesses():
    A = Cyl({(0, 0): [0]})
    with pytest.raises(InvalidElement) as err:
        make_element([(A, (1, 0)), (Cyl({(1, 1): [0]}), (0, 1))], LANG)
    assert err.value.kind == "overlap" and A.contains(err.value.witness)
    with pytest.raises(InvalidElement) as err:
        make_element([(A, (1, 0))], LANG)
    assert err.value.kind in ("not-injective", "not-surjective")


def elements():
    A = Cyl({(0, 0): [0], (1, 0): [1]})
    B = Cyl({(0, 0): [2], (0, 1): [0]})
    g = make_element(swap(A, (1, 0)), LANG)
    h = make_element(swap(B, (0, 1)), LANG)
    return g, h


def test_group_laws_on_sample():
    g, h = elements()
    s = global_shift((1, 1))
    assert is_identity(compose(g, g.inverse()), LANG)
    lhs = compose(compose(g, h), s)
    rhs = compose(g, compose(h, s))
    assert agree_on(lhs, rhs, LANG)
    assert agree_on(compose(g, h).inverse(), compose(h.inverse(), g.inverse()), LANG)


def test_disjoint_supports_commute():
    A = Cyl({(0, 0): [0], (1, 0): [1], (0, 5): [0]})
    B = Cyl({(0, 0): [0], (1, 0): [1], (0, 5): [1]})
    g = make_element(swap(A, (1, 0)), LANG)
    h = make_element(swap(B, (1, 0)), LANG)
    assert commute_on(g, h, LANG)


def three_sets():
    B = Cyl.at(X0, box((-2, -2), (3, 3)).sorted())
    return B, B.translate((5, 0)), B.translate((5, 4))


def test_three_cycle():
    A1, A2, A3 = three_sets()
    g = multisection_3cycle(A1, A2, A3, (5, 0), (0, 4), LANG)
    assert len(g.pieces) == 3
    assert is_identity(compose(g, compose(g, g)), LANG)
    assert agree_on(g.inverse(), compose(g, g), LANG)
    supp = [y for y in LANG if any(g.shift_at(y))]
    assert {id(y) for y in supp} == {id(y) for y in LANG if A1.contains(y) or A2.contains(y) or A3.contains(y)}
    with pytest.raises(InvalidElement):
        multisection_3cycle(A1, A1, A3, (0, 0), (5, 4), LANG)


def test_evaluate_word_and_witness():
    A1, A2, A3 = three_sets()
    g = multisection_3cycle(A1, A2, A3, (5, 0), (0, 4), LANG)
    gens = {1: g, 2: global_shift((1, 0))}
    y, trace = evaluate_word(GroupWord([]), gens, X0)
    assert trace == [] and y is X0
    y, trace = evaluate_word(GroupWord.of([2]), gens, X0)
    assert trace == [(1, 0)]
    w = GroupWord([(1, 1), (2, 1), (1, -1)])
    y, trace = evaluate_word(w, gens, X0)
    assert total_shift(trace) == tuple(map(sum, zip(*trace)))
    assert restrict(y, rect(4, 4)) == restrict(X0.translate(total_shift(trace)), rect(4, 4))

    def factory(word):
        yield "x0", X0
        yield from enumerate(LANG)

    trivial = GroupWord([(1, 1), (1, -1)])
    assert nontriviality_witness(trivial, gens, factory, budget=len(LANG)) is None
    rep = nontriviality_witness(GroupWord.of([1]), gens, factory, budget=len(LANG))
    assert rep.witness_id == "x0" and rep.displacement == (5, 0) and A1.contains(rep.point)
    assert rep.replay(gens) == rep.displacement


def test_alternating_word_counts():
    assert [len(alternating_words(3, n)) for n in range(1, 5)] == [3, 9, 21, 45]
    assert [w.ids() for w in alternating_words(3, 1)] == [[1], [2], [3]]
    assert GroupWord([(1, 1), (2, 1), (2, -1), (1, -1)]).reduced() == GroupWord([])
    assert GroupWord.of([1, 1, 2]).reduced(involutions=True) == GroupWord.of([2])


def test_free_product_certificate_reports_relations():
    g, h = elements()
    gens = {1: g, 2: h, 3: g}

    def factory(word):
        yield from enumerate(LANG)

    cert = free_product_certificate(gens, 2, factory, LANG, budget=len(LANG))
    assert not cert.complete
    assert [1, 3] in [w.ids() for w in cert.missing] and [3, 1] in [w.ids() for w in cert.missing]
    not_inv = {1: g, 2: h, 3: global_shift((1, 0))}
    with pytest.raises(InvalidElement):
        free_product_certificate(not_inv, 1, factory, LANG)


def test_asymptotically_central_pairs():
    pairs = asymptotically_central_pair(X0, [0, 1, 2, 8], LANG, box((-40, -40), (41, 41)))
    assert len(pairs) == 3
    for p in pairs:
        assert not commute_on(p.c, p.d, LANG + [X0.translate(t) for t in p.orbit])
    sample = LANG + [X0.translate(t) for p in pairs for t in p.orbit]
    for a in pairs:
        for b in pairs:
            if a.n != b.n:
                assert commute_on(a.c, b.d, sample)
    # the supports avoid x0 itself
    assert all(not any(p.c.shift_at(X0)) for p in pairs)


def test_icc_witness():
    A1, A2, A3 = three_sets()
    g = multisection_3cycle(A1, A2, A3, (5, 0), (0, 4), LANG)
    big = [X0.translate((a, b)) for a in range(-6, 30) for b in range(-6, 30)]
    wit = icc_witness(g, (0, 1), 3, big, step=7)
    xs, cs = wit.points, wit.conjugates
    gx = [g(x) for x in xs]
    win = box((-3, -3), (4, 4))
    for n, c in enumerate(cs):
        assert restrict(c(xs[n]), win) != restrict(gx[n], win)
        for i in range(n):
            assert restrict(c(xs[i]), win) == restrict(gx[i], win)
    with pytest.raises(ValueError):
        icc_witness(identity_element(), (0, 1), 1, LANG)


def test_disjoint_translates_neighborhood():
    assert disjoint_translates_neighborhood(X0, Region([(0, 0)])).contains(X0)
    B = disjoint_translates_neighborhood(X0, rect(3, 3))
    assert B.contains(X0)
    parts = [B.translate(t) for t in rect(3, 3).sorted()]
    assert all(parts[i].conflicts(parts[j]) for i in range(9) for j in range(i + 1, 9))
    for t in rect(3, 3).sorted():
        assert B.translate(t).contains(X0.translate(t))
    # with a partition by the symbol at the origin
    partition = [Cyl({(0, 0): [s]}) for s in range(3)]
    B = disjoint_translates_neighborhood(X0, rect(3, 3), partition=partition)
    for t in rect(3, 3).sorted():
        P = B.translate(t)
        assert sum(all(c in P.allowed and P.allowed[c] <= v for c, v in Q.allowed.items()) for Q in partition) == 1
    constant = PointOracle(lambda t: 0)
    assert disjoint_translates_neighborhood(constant, rect(2, 1), max_radius=4) is None


def test_inner_amenability_examples():
    assert inner_amenability_ratio(5, 4) == (Fraction(2, 5), Fraction(6, 5))
    assert inner_amenability_ratio(7, 7) == (1, 0)
    assert inner_amenability_ratio(100, 99) == (Fraction(97, 100), Fraction(3, 50))
    with pytest.raises(ValueError):
        inner_amenability_ratio(2, 2)
    with pytest.raises(ValueError):
        inner_amenability_ratio(5, 6)


def test_inner_amenability_against_counting():
    # direct count of 3-cycles in Alt(n) supported in the first n' points
    for n, npr in [(5, 4), (6, 3), (7, 5)]:
        def cycles(k):
            pts = range(k)
            return {(a, b, c) for a, b, c in product(pts, repeat=3)
                    if len({a, b, c}) == 3 and a == min(a, b, c)}
        assert inner_amenability_ratio(n, npr)[0] == Fraction(len(cycles(npr)), len(cycles(n)))


@settings(max_examples=40, deadline=None)
@given(st.integers(10, 1000))
def test_inner_amenability_bound(n):
    assert inner_amenability_ratio(n, n - 3)[0] >= 1 - Fraction(9, n)
    a, b = inner_amenability_ratio(n, n - 2)[0], inner_amenability_ratio(n + 1, n - 1)[0]
    assert a <= b
