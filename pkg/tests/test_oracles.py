import itertools
from collections import deque
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sanbench.bsttree import BstTree, build_balanced, build_median_tree, build_optimal, serve_sequence
from sanbench.demand import DemandSequence, make_tau_workload
from sanbench.oracles import (
    OracleLimitError,
    off_enumerate_small,
    off_exhaustive,
    off_oracle,
    off_schedule,
    rotation_distance,
    shape_space,
    stat_oracle,
)
from sanbench.topo import SelfAdjustingTreeNetwork


# Trees as nested tuples (key, left, right); rotations written out by hand.

def nested_trees(lo, hi):
    if lo > hi:
        return [None]
    return [(r, a, b) for r in range(lo, hi + 1)
            for a in nested_trees(lo, r - 1) for b in nested_trees(r + 1, hi)]


def rotations_of(t):
    if t is None:
        return []
    key, left, right = t
    out = []
    if left is not None:  # right rotation at the root
        lk, ll, lr = left
        out.append((lk, ll, (key, lr, right)))
    if right is not None:  # left rotation at the root
        rk, rl, rr = right
        out.append((rk, (key, left, rl), rr))
    out += [(key, x, right) for x in rotations_of(left)]
    out += [(key, left, x) for x in rotations_of(right)]
    return out


def preorder(t):
    return () if t is None else (t[0],) + preorder(t[1]) + preorder(t[2])


def nested_distances(n):
    trees = nested_trees(1, n)
    ids = {preorder(t): i for i, t in enumerate(trees)}
    dist = {}
    for t in trees:
        src = preorder(t)
        seen = {src: 0}
        q = deque([t])
        while q:
            x = q.popleft()
            for y in rotations_of(x):
                p = preorder(y)
                if p not in seen:
                    seen[p] = seen[preorder(x)] + 1
                    q.append(y)
        dist[src] = seen
    return ids, dist


def depth_in(preorder_ids, key):
    return BstTree.from_preorder(preorder_ids).depth(key)


class TestRotationDistance:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_matches_independent_bfs(self, n):
        shapes, index, _, dist = shape_space(n)
        ids, ref = nested_distances(n)
        assert set(ids) == set(shapes)
        for a in shapes:
            for b in shapes:
                assert dist[index[a], index[b]] == ref[a][b]

    def test_n3_pentagon(self):
        _, _, _, dist = shape_space(3)
        assert dist.max() == 2
        assert all((row == 1).sum() == 2 for row in dist)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_metric(self, n):
        _, _, _, d = shape_space(n)
        assert np.array_equal(d, d.T)
        assert np.all((d == 0) == np.eye(len(d), dtype=bool))
        # triangle inequality, vectorised: d[a,c] <= d[a,b] + d[b,c]
        assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :])

    def test_tree_api(self):
        a = build_balanced(3)
        b = BstTree.from_preorder((1, 2, 3))
        assert rotation_distance(a, b) == 1
        assert rotation_distance(a, a) == 0
        assert rotation_distance(BstTree.from_preorder((1, 2, 3)), BstTree.from_preorder((3, 2, 1))) == 2


class TestOff:
    def test_single_request(self):
        for key in (1, 2, 3):
            assert off_oracle(DemandSequence.from_keys(3, [key])) == 1

    def test_single_request_from_start(self):
        seq = DemandSequence.from_keys(3, [1])
        assert off_oracle(seq, start=build_balanced(3)) == 2

    def test_repeated_key(self):
        seq = DemandSequence.from_keys(3, [1, 1, 1, 1])
        assert off_oracle(seq, start=build_balanced(3)) == 6
        assert off_exhaustive(seq, start=build_balanced(3)) == 6

    def test_schedule_cost(self):
        seq = DemandSequence.from_keys(4, [1, 4, 4, 2, 3, 1, 1, 4])
        start = build_median_tree(4)
        total, path = off_schedule(seq, start=start)
        shapes, index, depth, dist = shape_space(4)
        assert path[0] == index[start.preorder()]
        cost = 0
        for t, key in enumerate(seq.dst.tolist()):
            cost += depth[path[t], key]
            if t + 1 < len(path):
                cost += dist[path[t], path[t + 1]]
        assert cost == total

    @given(st.integers(1, 4), st.lists(st.integers(1, 4), min_size=1, max_size=6), st.booleans())
    def test_dp_equals_enumeration(self, n, keys, fixed_start):
        seq = DemandSequence.from_keys(n, [(k - 1) % n + 1 for k in keys])
        start = build_median_tree(n) if fixed_start else None
        dp = off_oracle(seq, start=start)
        assert dp == off_exhaustive(seq, start=start)
        if seq.m <= 4:
            assert dp == off_enumerate_small(seq, n, start=start)

    @given(st.lists(st.integers(1, 5), min_size=1, max_size=12))
    def test_off_below_fixed_and_splay(self, keys):
        seq = DemandSequence.from_keys(5, keys)
        start = build_median_tree(5)
        off = off_oracle(seq, start=start)
        assert off <= serve_sequence(start.copy(), "fixed", seq).total
        assert off <= serve_sequence(start.copy(), "splay", seq).total
        _, stat = stat_oracle(seq)
        assert off_oracle(seq) <= stat * seq.m

    def test_limits(self):
        with pytest.raises(OracleLimitError):
            off_oracle(DemandSequence.from_keys(6, [1]))
        with pytest.raises(OracleLimitError):
            off_oracle(DemandSequence.from_keys(3, [1] * 13))
        with pytest.raises(OracleLimitError):
            off_exhaustive(DemandSequence.from_keys(5, [1]))
        with pytest.raises(OracleLimitError):
            off_exhaustive(DemandSequence.from_keys(3, [1] * 7))
        with pytest.raises(ValueError):
            off_oracle(DemandSequence.from_pairs(3, [(0, 1)]))


class TestStat:
    def test_tau_matches_knuth(self):
        seq = make_tau_workload(10, 1000)
        tree, cost = stat_oracle(seq)
        assert tree == build_optimal(seq.key_counts(), n=1023)
        assert cost == Fraction(int(tree.depths()[seq.dst].sum()), seq.m)

    def test_single_destination(self):
        tree, cost = stat_oracle(DemandSequence.from_keys(6, [4] * 9))
        assert tree.root == 4 and cost == 1

    def test_uniform_seven(self):
        tree, cost = stat_oracle(DemandSequence.from_keys(7, range(1, 8)))
        assert cost == Fraction(17, 7)

    @pytest.mark.parametrize("n", [3, 6, 10])
    def test_against_enumeration(self, n):
        rng = np.random.default_rng(n)
        keys = rng.integers(1, n + 1, 40)
        seq = DemandSequence.from_keys(n, keys)
        _, cost = stat_oracle(seq)
        counts = np.bincount(keys, minlength=n + 1)
        best = min(
            int(np.dot(BstTree.from_preorder(preorder(t)).depths(), counts))
            for t in nested_trees(1, n)
        )
        assert cost == Fraction(best, seq.m)

    def test_tree_network(self):
        seq = DemandSequence.from_pairs(4, [(0, 1)] * 5 + [(2, 3)] * 3)
        sat, cost = stat_oracle(seq, "tree-network")
        assert isinstance(sat, SelfAdjustingTreeNetwork)
        assert cost == 1
        assert sat.distance(0, 1) == 1 and sat.distance(2, 3) == 1

    def test_tree_network_enumeration(self):
        rng = np.random.default_rng(0)
        n = 5
        pairs = [tuple(rng.choice(n, 2, replace=False).tolist()) for _ in range(30)]
        seq = DemandSequence.from_pairs(n, pairs)
        _, cost = stat_oracle(seq, "tree-network")
        best = None
        for t in nested_trees(1, n):
            net = SelfAdjustingTreeNetwork(BstTree.from_preorder(preorder(t)))
            total = sum(net.distance(u, v) for u, v in pairs)
            best = total if best is None else min(best, total)
        assert cost == Fraction(best, 30)

    def test_tree_network_limit(self):
        with pytest.raises(OracleLimitError):
            stat_oracle(DemandSequence.from_pairs(9, [(0, 8)]), "tree-network")

    def test_class_mismatch(self):
        with pytest.raises(ValueError):
            stat_oracle(DemandSequence.from_pairs(3, [(0, 1)]), "bst")
        with pytest.raises(ValueError):
            stat_oracle(make_tau_workload(2, 1), "tree-network")
