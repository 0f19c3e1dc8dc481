from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from fullgroup_lab.lattice import (
    MetricContext, Region, ball, box, connected_invariant_set, core, cube,
    is_invariant, is_r_connected, is_spanning, maximal_r_separated, rect,
    spanning_tree_2r,
)

CTX = MetricContext(2)


def l1(p, q):
    return sum(abs(a - b) for a, b in zip(p, q))


def brute_ball(r):
    return {(x, y) for x in range(-r, r + 1) for y in range(-r, r + 1) if abs(x) + abs(y) <= r}


def test_ball_sizes():
    assert ball(CTX, 0).points == {(0, 0)}
    assert len(ball(CTX, 1)) == 5
    for r in range(8):
        assert ball(CTX, r).points == brute_ball(r)
        assert len(ball(CTX, r)) == 2 * r * r + 2 * r + 1


def test_ball_constant_c_is_two():
    # |S^r| >= 2 r^2 for every r <= 64, and the infimum ratio stays above 2
    ratios = [Fraction(2 * r * r + 2 * r + 1, r * r) for r in range(1, 65)]
    assert min(ratios) > 2
    assert all(len(ball(CTX, r)) >= 2 * r * r for r in range(1, 20))


@pytest.mark.parametrize("r1,r2", [(0, 3), (1, 1), (2, 3)])
def test_ball_minkowski(r1, r2):
    assert ball(CTX, r1).minkowski(ball(CTX, r2)) == ball(CTX, r1 + r2)


def test_invariance_examples():
    E = rect(10, 10)
    K = Region([(1, 0), (0, 1)])
    ok, ratio = is_invariant(E, K, Fraction(19, 100))
    assert ratio == Fraction(81, 100) and ok
    assert not is_invariant(E, K, Fraction(18, 100))[0]
    assert is_invariant(E, Region([(0, 0)]), 0) == (True, 1)
    assert is_invariant(rect(4, 4), Region([(2, 0)]), 0)[1] == Fraction(1, 2)
    with pytest.raises(ValueError):
        is_invariant(Region([], 2), K, 0)


def test_core_matches_set_intersection():
    E = Region([(0, 0), (1, 0), (2, 0), (1, 1), (5, 5)])
    K = Region([(1, 0), (0, 0)])
    direct = set(E.points)
    for s in K.points:
        direct &= {(p[0] - s[0], p[1] - s[1]) for p in E.points}
    assert core(E, K).points == direct


def test_r_connected():
    assert is_r_connected(Region([(3, 3)]), 1, CTX)
    V = Region([(0, 0), (3, 0)])
    assert not is_r_connected(V, 1, CTX)
    assert is_r_connected(V, 3, CTX)
    assert is_r_connected(rect(8, 8), 1, CTX)


def test_separated_examples():
    V = rect(16, 16)
    S = maximal_r_separated(V, 3, CTX)
    assert all(l1(p, q) > 3 for p, q in combinations(S.points, 2))
    assert is_spanning(S, V, 6, CTX)
    assert len(S) == 36     # frozen from the lex-greedy run
    assert maximal_r_separated(Region([(0, 0), (1, 0)]), 1, CTX).points == {(0, 0)}
    assert len(maximal_r_separated(rect(5, 5), 8, CTX)) == 1


@settings(max_examples=40, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 9), st.integers(0, 9)), min_size=1, max_size=40),
       st.integers(1, 4))
def test_separated_is_separated_and_spanning(pts, r):
    V = Region(pts)
    S = maximal_r_separated(V, r, CTX)
    assert all(l1(p, q) > r for p, q in combinations(S.points, 2))
    # maximal: every point of V is within r of the selection
    assert all(any(l1(p, c) <= r for c in S.points) for p in V.points)


def test_spanning_tree_square():
    F = rect(16, 16)
    assert len(ball(CTX, 3).minkowski(F)) == 460
    tree = spanning_tree_2r(F, 3, CTX)
    V = tree.vertices
    assert len(V) * 25 <= 512
    assert tree.path_edge_count() <= 5 * 3 * (len(V) - 1)
    assert all(tree.certificate[k] for k in ("vertex_bound", "edge_bound", "size_bound"))
    # the tree spans V and every path lies in F with length <= 4r+1
    assert len(tree.edges) == len(V) - 1
    for i, j, path in tree.edges:
        assert path[0] == V[i] and path[-1] == V[j]
        assert len(path) - 1 <= 13
        assert all(p in F for p in path)
        assert all(l1(a, b) == 1 for a, b in zip(path, path[1:]))
    seen, stack = {0}, [0]
    adj = {}
    for i, j, _ in tree.edges:
        adj.setdefault(i, []).append(j)
        adj.setdefault(j, []).append(i)
    while stack:
        for n in adj.get(stack.pop(), []):
            if n not in seen:
                seen.add(n)
                stack.append(n)
    assert seen == set(range(len(V)))


def test_spanning_tree_rejections():
    with pytest.raises(ValueError, match="536 > 512"):
        spanning_tree_2r(rect(16, 16), 4, CTX)
    with pytest.raises(ValueError, match="not connected"):
        spanning_tree_2r(Region([(0, 0), (5, 5)]), 1, CTX)


def test_spanning_tree_singleton():
    # |S^1 {0}| = 5 > 2, so a singleton fails the precondition for r >= 1
    with pytest.raises(ValueError):
        spanning_tree_2r(Region([(0, 0)]), 1, CTX)


def test_connected_invariant_set():
    K = Region([(1, 0), (0, 1)])
    assert connected_invariant_set(K, Fraction(1, 5), CTX) == rect(16, 16)
    assert connected_invariant_set(Region([(0, 0)]), Fraction(1, 2), CTX) == rect(1, 1)
    assert connected_invariant_set(ball(CTX, 1), Fraction(1, 2), CTX) == rect(8, 8)


def test_region_json_roundtrip():
    R = cube(2)
    assert Region.from_json(R.to_json()) == R
    assert R.to_json()["points"][0] == [-2, -2]
    assert box((0, 0), (2, 1)).sorted() == [(0, 0), (1, 0)]


def test_custom_generators():
    ctx = MetricContext(2, [(1, 0), (-1, 0), (1, 1), (-1, -1)])
    assert ctx.distance((0, 0), (0, 1)) == 2
    with pytest.raises(ValueError):
        MetricContext(2, [(1, 0), (-1, 0)])
    with pytest.raises(ValueError):
        MetricContext(2, [(1, 0), (0, 1)])
