"""Exact baselines for small instances: best fixed configuration and best offline schedule."""
from __future__ import annotations

from collections import deque
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np

from .bsttree import BstTree, build_optimal, enumerate_shapes
from .demand import DemandSequence
from .topo import SelfAdjustingTreeNetwork, tree_distance_matrix

MAX_TREE_NETWORK_N = 8
MAX_OFF_N = 5
MAX_OFF_M = 12
MAX_EXHAUSTIVE_N = 4
MAX_EXHAUSTIVE_M = 6


class OracleLimitError(ValueError):
    """Instance too large for an exact oracle."""


@lru_cache(maxsize=None)
def shape_space(n: int):
    """All BST shapes on keys 1..n with their depth table and rotation distances.

    Returns ``(shapes, index, depth, dist)`` where ``depth[s, key]`` is the
    node depth of ``key`` in shape ``s`` and ``dist`` is the all-pairs
    rotation distance from breadth-first search on the rotation graph.
    """
    shapes = enumerate_shapes(n)
    index = {s: i for i, s in enumerate(shapes)}
    size = len(shapes)
    depth = np.zeros((size, n + 1), dtype=np.int64)
    nbrs: list[list[int]] = []
    for i, s in enumerate(shapes):
        tree = BstTree.from_preorder(s)
        depth[i] = tree.depths()
        row = []
        for key in range(1, n + 1):
            if tree.parent[key]:
                t = tree.copy()
                t.rotate_up(key)
                row.append(index[t.preorder()])
        nbrs.append(row)
    dist = np.full((size, size), -1, dtype=np.int64)
    for i in range(size):
        dist[i, i] = 0
        q = deque([i])
        while q:
            x = q.popleft()
            for y in nbrs[x]:
                if dist[i, y] < 0:
                    dist[i, y] = dist[i, x] + 1
                    q.append(y)
    depth.setflags(write=False)
    dist.setflags(write=False)
    return shapes, index, depth, dist


def rotation_distance(a: BstTree, b: BstTree) -> int:
    if a.n != b.n:
        raise ValueError("trees over different key sets")
    if a.n > MAX_OFF_N + 2:
        raise OracleLimitError(f"rotation distance table limited to n <= {MAX_OFF_N + 2}")
    _, index, _, dist = shape_space(a.n)
    return int(dist[index[a.preorder()], index[b.preorder()]])


def stat_oracle(seq: DemandSequence, cls: str = "bst"):
    """Best fixed configuration for the whole sequence in hindsight.

    Returns ``(config, cost)`` where ``cost`` is the exact average cost
    per request as a ``Fraction``.  ``cls="bst"`` solves rooted searches
    with the Knuth DP for any n; ``cls="tree-network"`` enumerates every
    BST-ordered tree network for node-to-node requests (n <= 8).
    """
    if seq.m == 0:
        raise ValueError("empty demand")
    if cls == "bst":
        if not seq.rooted:
            raise ValueError("the bst class serves rooted search sequences")
        counts = seq.key_counts()
        tree = build_optimal(counts, seq.n)
        total = int(tree.depths()[seq.dst].sum())
        return tree, Fraction(total, seq.m)
    if cls == "tree-network":
        if seq.rooted:
            raise ValueError("the tree-network class serves node-to-node requests")
        if seq.n > MAX_TREE_NETWORK_N:
            raise OracleLimitError(f"tree-network stat oracle limited to n <= {MAX_TREE_NETWORK_N}")
        pair_counts = np.zeros((seq.n, seq.n), dtype=np.int64)
        np.add.at(pair_counts, (seq.src, seq.dst), 1)
        best, best_total = None, None
        for shape in enumerate_shapes(seq.n):
            tree = BstTree.from_preorder(shape)
            total = int((tree_distance_matrix(tree) * pair_counts).sum())
            if best_total is None or total < best_total:
                best, best_total = tree, total
        return SelfAdjustingTreeNetwork(best), Fraction(best_total, seq.m)
    raise ValueError(f"unknown configuration class {cls!r}")


def _check_off(seq: DemandSequence, n: int | None, limit_n: int, limit_m: int) -> int:
    if not seq.rooted:
        raise ValueError("the offline oracle serves rooted search sequences")
    n = seq.n if n is None else n
    if n != seq.n:
        raise ValueError("n does not match the sequence")
    if n > limit_n or seq.m > limit_m:
        raise OracleLimitError(f"offline oracle limited to n <= {limit_n}, m <= {limit_m}")
    if seq.m == 0:
        raise ValueError("empty demand")
    return n


def _start_index(n: int, start) -> int | None:
    if start is None:
        return None
    _, index, _, _ = shape_space(n)
    if isinstance(start, BstTree):
        return index[start.preorder()]
    return index[tuple(start)]


def off_schedule(seq: DemandSequence, n: int | None = None, start=None) -> tuple[int, list[int]]:
    """Optimal offline configurations by DP over (time, shape).

    Request i is served on configuration ``schedule[i]`` and the network
    then moves to ``schedule[i + 1]`` at rotation-distance cost.  With
    ``start=None`` the initial shape is free.  Returns (total cost, shape
    indices into ``shape_space(n)[0]``).
    """
    n = _check_off(seq, n, MAX_OFF_N, MAX_OFF_M)
    _, _, depth, dist = shape_space(n)
    size = depth.shape[0]
    s0 = _start_index(n, start)
    keys = seq.dst.tolist()
    # best[s]: cheapest way to stand in shape s before serving request t
    best = np.zeros(size, dtype=np.int64)
    if s0 is not None:
        best[:] = np.iinfo(np.int64).max // 4
        best[s0] = 0
    back = []
    for t, key in enumerate(keys):
        served = best + depth[:, key]
        if t == len(keys) - 1:
            break
        cand = served[:, None] + dist
        arg = np.argmin(cand, axis=0)
        back.append(arg)
        best = cand[arg, np.arange(size)]
    last = int(np.argmin(served))
    total = int(served[last])
    path = [last]
    for arg in reversed(back):
        path.append(int(arg[path[-1]]))
    return total, path[::-1]


def off_oracle(seq: DemandSequence, n: int | None = None, cls: str = "bst", start=None) -> int:
    """Minimum total service + rotation cost of any offline schedule (n <= 5, m <= 12)."""
    if cls != "bst":
        raise ValueError("the offline oracle only covers BST-shaped configurations")
    return off_schedule(seq, n, start)[0]


@lru_cache(maxsize=8)
def _config_grid(size: int, length: int) -> np.ndarray:
    if length == 0:
        return np.zeros((1, 0), dtype=np.int32)
    idx = np.unravel_index(np.arange(size**length, dtype=np.int64), (size,) * length)
    return np.stack(idx, axis=1).astype(np.int32)


def off_exhaustive(seq: DemandSequence, n: int | None = None, start=None) -> int:
    """Same optimum by brute force over every configuration sequence (n <= 4, m <= 6)."""
    n = _check_off(seq, n, MAX_EXHAUSTIVE_N, MAX_EXHAUSTIVE_M)
    _, _, depth, dist = shape_space(n)
    size = depth.shape[0]
    keys = seq.dst.tolist()
    m = len(keys)
    s0 = _start_index(n, start)
    firsts = range(size) if s0 is None else [s0]
    rest = _config_grid(size, m - 1)
    best = None
    for first in firsts:
        configs = np.concatenate([np.full((rest.shape[0], 1), first, dtype=np.int32), rest], axis=1)
        cost = np.zeros(configs.shape[0], dtype=np.int64)
        for t, key in enumerate(keys):
            cost += depth[configs[:, t], key]
            if t + 1 < m:
                cost += dist[configs[:, t], configs[:, t + 1]]
        low = int(cost.min())
        best = low if best is None else min(best, low)
    return best


def off_enumerate_small(seq: DemandSequence, n: int, start=None) -> int:
    """Pure-Python enumeration used to spot-check the vectorised brute force."""
    _, _, depth, dist = shape_space(n)
    size = depth.shape[0]
    keys = seq.dst.tolist()
    firsts = range(size) if start is None else [_start_index(n, start)]
    best = None
    for first in firsts:
        for tail in product(range(size), repeat=len(keys) - 1):
            configs = (first,) + tail
            c = sum(int(depth[s, k]) for s, k in zip(configs, keys))
            c += sum(int(dist[a, b]) for a, b in zip(configs, configs[1:]))
            best = c if best is None else min(best, c)
    return best
