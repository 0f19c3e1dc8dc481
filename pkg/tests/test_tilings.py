import math
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from fullgroup_lab.lattice import Region, box, cube, is_invariant, rect
from fullgroup_lab.tilings import (
    CenterLattice, NestedTilingSequence, Rect, Tiling, check_property_id,
    nested_rectangles, rectangle_monotiling, resfinite_monotiling_recursion,
    syndeticity_bound, tiling_entropy_estimate, verify_tightly_nested,
    verify_tiling,
)


def brute_cover_counts(tiling, window, reach=40):
    """Count tiles over every window point by listing all centers in a big box."""
    counts = {p: 0 for p in window.points}
    for S, L in tiling.pairs:
        cells = S.to_region().points if isinstance(S, Rect) else S.points
        for c in product(range(-reach, reach), repeat=2):
            if c in L:
                for p in cells:
                    q = (p[0] + c[0], p[1] + c[1])
                    if q in counts:
                        counts[q] += 1
    return counts


def test_monotiling_examples():
    t = rectangle_monotiling((1, 1))
    assert verify_tiling(t, rect(5, 5))[0]
    assert len(rectangle_monotiling((4, 2)).tiles_inside(rect(8, 8))) == 8
    t = rectangle_monotiling((3, 5))
    assert len(t.tiles_inside(rect(15, 15))) == 15
    assert verify_tiling(t, rect(15, 15))[0]
    assert verify_tiling(rectangle_monotiling((4, 4)), rect(32, 32))[0]
    assert verify_tiling(rectangle_monotiling((4, 4), offset=(1, 0)), rect(32, 32))[0]


def test_overlap_and_gap_witnesses():
    S = Rect((0, 0), (2, 2))
    t = Tiling([(S, CenterLattice((0, 0), (2, 2))), (S, CenterLattice((1, 0), (2, 2)))])
    ok, defects = verify_tiling(t, rect(4, 4))
    assert not ok and defects[0][0] == "overlap"
    counts = brute_cover_counts(t, rect(4, 4))
    assert {d[1] for d in defects} == {p for p, n in counts.items() if n != 1}
    gappy = Tiling([(Rect((0, 0), (1, 1)), CenterLattice((0, 0), (2, 1)))])
    ok, defects = verify_tiling(gappy, rect(4, 1))
    assert not ok and defects[0] == ("gap", (1, 0))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(-4, 4), st.integers(-4, 4),
       st.integers(1, 5), st.integers(1, 5))
def test_verify_tiling_matches_brute_counts(a, b, ox, oy, ma, mb):
    t = Tiling([(Rect((0, 0), (a, b)), CenterLattice((ox, oy), (ma, mb)))])
    W = rect(9, 9)
    ok, defects = verify_tiling(t, W)
    counts = brute_cover_counts(t, W)
    assert ok == all(n == 1 for n in counts.values())
    assert len(defects) == sum(1 for n in counts.values() if n != 1)
    # the rectangle tiles exactly when the lattice equals its side lengths
    assert ok == ((a, b) == (ma, mb))


def test_region_shapes():
    L_shape = Region([(0, 0), (1, 0), (0, 1)])
    # one L and its point-reflection fill a 2x2 block with the corner cell
    rest = Region([(1, 1)])
    t = Tiling([(L_shape, CenterLattice((0, 0), (2, 2))), (rest, CenterLattice((0, 0), (2, 2)))])
    assert verify_tiling(t, rect(8, 8))[0]
    assert Tiling.from_json(t.to_json()).pairs[0][0] == L_shape


def test_tightly_nested_examples():
    seq = nested_rectangles([(2, 2), (4, 4)])
    assert verify_tightly_nested(seq, 2, rect(32, 32)) == (True, [])
    bad = nested_rectangles([(2, 2), (5, 5)])
    ok, defects = verify_tightly_nested(bad, 2, rect(32, 32))
    assert not ok and defects[0][0] == "partition"
    with pytest.raises(ValueError):
        verify_tightly_nested(seq, 1, rect(4, 4))


def test_tightly_nested_center_defect():
    # the partition is fine but level 1 centers are shifted by one
    levels = [Tiling([(Rect((0, 0), (2, 2)), CenterLattice((1, 0), (2, 2)))]),
              rectangle_monotiling((4, 4))]
    seq = NestedTilingSequence(levels, {2: {0: [(0, g) for g in product((0, 2), repeat=2)]}})
    ok, defects = verify_tightly_nested(seq, 2, rect(8, 8))
    assert not ok and defects[0][0] == "not-a-center"


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 3), st.integers(1, 3)), min_size=1, max_size=3))
def test_divisible_rectangles_are_nested(factors):
    dims = [(1, 1)]
    for fa, fb in factors:
        dims.append((dims[-1][0] * fa, dims[-1][1] * fb))
    seq = nested_rectangles(dims)
    for n in range(2, len(dims) + 1):
        assert verify_tightly_nested(seq, n, box((-7, -7), (9, 9)))[0]


def test_tiling_entropy():
    est = tiling_entropy_estimate(rectangle_monotiling((4, 4)), [rect(16, 16)], rect(64, 64))[0]
    assert est.count <= 16 and est.value <= math.log(16) / 256 < 0.011
    assert all(e.count == 1 for e in tiling_entropy_estimate(rectangle_monotiling((1, 1)), [rect(4, 4)], rect(16, 16)))
    # horizontal dominoes in even block columns, vertical ones in odd block columns
    H = Rect((0, 0), (2, 1))
    V = Rect((0, 0), (1, 2))
    t = Tiling([(H, CenterLattice((0, 0), (4, 1))),
                (V, CenterLattice((2, 0), (4, 2))), (V, CenterLattice((3, 0), (4, 2)))])
    assert verify_tiling(t, rect(16, 16))[0]
    ests = tiling_entropy_estimate(t, [rect(4, 4), rect(8, 8)], rect(48, 48))
    for e in ests:
        assert e.count <= 8 and e.value <= math.log(8) / e.size
    vals = [e.value for e in tiling_entropy_estimate(rectangle_monotiling((4, 4)),
                                                     [rect(k, k) for k in (2, 4, 8, 16)], rect(64, 64))]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_syndeticity():
    assert syndeticity_bound(CenterLattice((0, 0), (4, 4)), rect(16, 16)) == box((-3, -3), (1, 1))
    assert syndeticity_bound(CenterLattice((0, 0), (1, 1)), rect(8, 8)) == Region([(0, 0)])
    F = syndeticity_bound(CenterLattice((0, 0), (2, 6)), rect(24, 24))
    assert len(F) == 12 and F.bounds() == [(-1, 0), (-5, 0)]
    # brute check: F + centers covers the window and no smaller box does
    L = CenterLattice((1, 2), (3, 5))
    F = syndeticity_bound(L, rect(20, 20))
    for t in rect(20, 20).points:
        assert any((t[0] - f[0], t[1] - f[1]) in L for f in F.points)
    assert len(F) == 15


def test_property_id_rectangles():
    seq = nested_rectangles([(2 ** k, 2 ** k) for k in range(1, 6)])
    rep = check_property_id(seq, (0, 1), F_tests=[Region([(0, 0)]), rect(3, 3)],
                            deltas=[Fraction(1, 8), Fraction(1, 2)], window=rect(32, 32))
    assert rep.containment[0][1] == 1
    assert rep.containment[1][1] == 2
    assert rep.density[0][1] == 3 and rep.density[1][1] == 1
    assert rep.density[0][2] == [Fraction(1, 2 ** k) for k in range(1, 6)]
    assert rep.column == {"level": 1, "pair": 0, "step": 2, "center": [0, 0]}
    assert not rep.inconclusive
    for n, ests, bound in rep.entropy:
        assert bound == pytest.approx(math.log(4 ** n) / 4 ** n)


def test_property_id_inconclusive():
    seq = nested_rectangles([(2, 2)])
    rep = check_property_id(seq, (0, 1), F_tests=[rect(5, 5)], deltas=[Fraction(1, 100)], window=rect(8, 8))
    assert rep.containment[0][1] is None and rep.density[0][1] is None
    assert rep.inconclusive


def E_list(n):
    return [Region([(0, 0)])] + [cube(k) for k in range(1, n)]


def test_resfinite_base_and_depth2():
    seq, certs = resfinite_monotiling_recursion(E_list(1), [1], 1)
    assert seq.level(1).pairs[0][0] == Rect((0, 0), (1, 1))
    assert seq.level(1).pairs[0][1].moduli == (1, 1)
    seq, certs = resfinite_monotiling_recursion(E_list(2), [1, Fraction(1, 2)], 2)
    assert certs[1].side == 8 and certs[1].ok
    S = seq.level(2).pairs[0][0]
    assert len(S) == 64 and all(p in S for p in cube(1).points)


@pytest.mark.parametrize("depth", [4, 5])
def test_resfinite_certificates_recomputed(depth):
    eps = [Fraction(1, 2 ** k) for k in range(depth)]
    seq, certs = resfinite_monotiling_recursion(E_list(depth), eps, depth)
    assert all(c.ok for c in certs)
    sides = [c.side for c in certs]
    assert all(b % a == 0 for a, b in zip(sides, sides[1:]))
    for k in range(2, depth + 1):
        S = seq.level(k).pairs[0][0]
        m = sides[k - 1]
        assert len(S) == m * m
        assert verify_tightly_nested(seq, k, box((-40, -40), (40, 40)))[0]
        assert all(p in S for p in E_list(depth)[k - 1].points)
        if m <= 128:
            ok, ratio = is_invariant(S.to_region(), E_list(depth)[k - 1], eps[k - 1])
            assert ok and ratio == certs[k - 1].fields["invariance"]["ratio"]
        # H-density over every center offset by direct column counting
        worst = max(sum(1 for y in range(S.lo[1], S.hi[1]) if (x, y) in S)
                    for x in range(S.lo[0], S.hi[0]))
        assert Fraction(worst, m * m) <= eps[k - 1]


def test_resfinite_validation():
    with pytest.raises(ValueError):
        resfinite_monotiling_recursion([cube(1)], [1], 1)
    with pytest.raises(ValueError):
        resfinite_monotiling_recursion(E_list(2), [1, 1], 2)
    with pytest.raises(ValueError, match="best invariance ratio"):
        resfinite_monotiling_recursion(E_list(3), [1, Fraction(1, 2), Fraction(1, 10 ** 6)], 3, max_side=64)
