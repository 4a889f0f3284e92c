"""Binary search trees over keys 1..n: balanced, optimal, weight-balanced and splay.

Trees are stored as parent/left/right arrays indexed by key, with 0 for
an absent link.  Access cost counts the nodes on the root-to-key path,
so the root costs 1; every single rotation is charged 1.
"""
from __future__ import annotations

import bisect
from collections.abc import Iterable
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from ._validation import InvariantError, check_positive_int, check_weights
from .demand import DemandSequence
from .ledger import CostLedger


class AccessResult(NamedTuple):
    service_cost: int
    rotations: int


class BstTree:
    __slots__ = ("n", "left", "right", "parent", "root")

    def __init__(self, n: int, left, right, parent, root: int):
        self.n = n
        self.left = list(left)
        self.right = list(right)
        self.parent = list(parent)
        self.root = root

    @classmethod
    def empty(cls, n: int) -> "BstTree":
        z = [0] * (n + 1)
        return cls(n, z, z, z, 0)

    def copy(self) -> "BstTree":
        return BstTree(self.n, self.left, self.right, self.parent, self.root)

    def __eq__(self, other):
        if not isinstance(other, BstTree):
            return NotImplemented
        return self.root == other.root and self.left == other.left and self.right == other.right

    __hash__ = None

    def __repr__(self) -> str:
        return f"BstTree(n={self.n}, root={self.root})"

    # -- queries -------------------------------------------------------------

    def depth(self, key: int) -> int:
        """Nodes on the root-to-key path."""
        if not 1 <= key <= self.n:
            raise KeyError(key)
        d = 1
        parent = self.parent
        while parent[key]:
            key = parent[key]
            d += 1
        return d

    def depths(self) -> np.ndarray:
        """Depth (in nodes) of every key; entry 0 is unused."""
        out = np.zeros(self.n + 1, dtype=np.int64)
        stack = [(self.root, 1)]
        while stack:
            x, d = stack.pop()
            out[x] = d
            if self.left[x]:
                stack.append((self.left[x], d + 1))
            if self.right[x]:
                stack.append((self.right[x], d + 1))
        return out

    def inorder(self) -> list[int]:
        out, stack, x = [], [], self.root
        while stack or x:
            while x:
                stack.append(x)
                x = self.left[x]
            x = stack.pop()
            out.append(x)
            x = self.right[x]
        return out

    def preorder(self) -> tuple[int, ...]:
        """Canonical shape id: for fixed keys the preorder determines the tree."""
        out, stack = [], [self.root]
        while stack:
            x = stack.pop()
            out.append(x)
            if self.right[x]:
                stack.append(self.right[x])
            if self.left[x]:
                stack.append(self.left[x])
        return tuple(out)

    def edges(self) -> list[tuple[int, int]]:
        return [(self.parent[k], k) for k in range(1, self.n + 1) if self.parent[k]]

    def check(self) -> None:
        """Raise InvariantError unless links are consistent and in-order is 1..n."""
        if self.n == 0:
            return
        if not self.root or self.parent[self.root]:
            raise InvariantError("root must exist and have no parent")
        for k in range(1, self.n + 1):
            for child in (self.left[k], self.right[k]):
                if child and self.parent[child] != k:
                    raise InvariantError(f"parent link of {child} does not point to {k}")
        if self.inorder() != list(range(1, self.n + 1)):
            raise InvariantError("in-order traversal is not 1..n")

    def path(self, key: int) -> list[int]:
        """Keys from the root down to ``key``."""
        out = [key]
        while self.parent[key]:
            key = self.parent[key]
            out.append(key)
        return out[::-1]

    # -- restructuring -------------------------------------------------------

    def rotate_up(self, x: int) -> None:
        """Single rotation lifting ``x`` above its parent."""
        left, right, parent = self.left, self.right, self.parent
        p = parent[x]
        if not p:
            raise ValueError(f"key {x} is the root")
        g = parent[p]
        if left[p] == x:
            b = right[x]
            left[p] = b
            right[x] = p
        else:
            b = left[x]
            right[p] = b
            left[x] = p
        if b:
            parent[b] = p
        parent[p] = x
        parent[x] = g
        if not g:
            self.root = x
        elif left[g] == p:
            left[g] = x
        else:
            right[g] = x

    def splay_until(self, x: int, stop: int = 0) -> int:
        """Splay ``x`` upward until its parent is ``stop``; return rotations used."""
        parent, left = self.parent, self.left
        rotations = 0
        while parent[x] != stop:
            p = parent[x]
            g = parent[p]
            if g == stop:
                self.rotate_up(x)
                rotations += 1
            elif (left[p] == x) == (left[g] == p):
                self.rotate_up(p)
                self.rotate_up(x)
                rotations += 2
            else:
                self.rotate_up(x)
                self.rotate_up(x)
                rotations += 2
        return rotations

    # -- serialisation -------------------------------------------------------

    def dump(self) -> str:
        return "".join(
            f"{k} {self.parent[k]} {self.left[k]} {self.right[k]}\n" for k in range(1, self.n + 1)
        )

    @classmethod
    def from_dump(cls, text: str) -> "BstTree":
        rows = [tuple(int(t) for t in line.split()) for line in text.splitlines() if line.strip()]
        n = len(rows)
        tree = cls.empty(n)
        for k, p, lft, rgt in rows:
            tree.parent[k], tree.left[k], tree.right[k] = p, lft, rgt
            if not p:
                tree.root = k
        tree.check()
        return tree

    @classmethod
    def from_preorder(cls, preorder: Iterable[int]) -> "BstTree":
        keys = list(preorder)
        n = len(keys)
        tree = cls.empty(n)
        tree.root = keys[0]
        stack = [keys[0]]
        for k in keys[1:]:
            last = None
            while stack and stack[-1] < k:
                last = stack.pop()
            if last is not None:
                tree.right[last] = k
                tree.parent[k] = last
            else:
                tree.left[stack[-1]] = k
                tree.parent[k] = stack[-1]
            stack.append(k)
        return tree


def _build(n: int, choose_root) -> BstTree:
    """Assemble a tree top-down; ``choose_root(lo, hi)`` picks the root of keys lo..hi."""
    tree = BstTree.empty(n)
    if n == 0:
        return tree
    stack = [(1, n, 0, False)]
    while stack:
        lo, hi, par, is_right = stack.pop()
        r = choose_root(lo, hi)
        tree.parent[r] = par
        if not par:
            tree.root = r
        elif is_right:
            tree.right[par] = r
        else:
            tree.left[par] = r
        if r < hi:
            stack.append((r + 1, hi, r, True))
        if lo < r:
            stack.append((lo, r - 1, r, False))
    return tree


def build_median_tree(n: int) -> BstTree:
    """Height-balanced tree on any n, rooting every range at its (lower) median."""
    n = check_positive_int(n, "n")
    return _build(n, lambda lo, hi: (lo + hi) // 2)


def build_balanced(n: int) -> BstTree:
    """Complete BST on n = 2**k - 1 keys."""
    n = check_positive_int(n, "n")
    if (n + 1) & n:
        raise ValueError(f"n={n} is not of the form 2**k - 1")
    return build_median_tree(n)


def _knuth_roots(w: list, tol: float = 0.0) -> list[list[int]]:
    """Smallest optimal root for every key range, with Knuth's monotone window.

    A candidate replaces the current best only if it is cheaper by more
    than ``tol``, so float rounding does not break ties.
    """
    n = len(w)
    prefix = [0] * (n + 1)
    for i, x in enumerate(w):
        prefix[i + 1] = prefix[i] + x
    # cost[i][j] over keys i..j (1-based); cost[i][i-1] == 0
    cost = [[0] * (n + 2) for _ in range(n + 2)]
    root = [[0] * (n + 2) for _ in range(n + 2)]
    for i in range(1, n + 1):
        cost[i][i] = w[i - 1]
        root[i][i] = i
    for length in range(2, n + 1):
        for i in range(1, n - length + 2):
            j = i + length - 1
            row_i = cost[i]
            best_r = lo = root[i][j - 1]
            hi = root[i + 1][j]
            best = row_i[lo - 1] + cost[lo + 1][j]
            for r in range(lo + 1, hi + 1):
                c = row_i[r - 1] + cost[r + 1][j]
                if c < best - tol:
                    best, best_r = c, r
            row_i[j] = best + prefix[j] - prefix[i - 1]
            root[i][j] = best_r
    return root


def build_optimal(weights, n: int | None = None) -> BstTree:
    """Exactly optimal BST for the key weights (Knuth's interval DP, O(n^2)).

    Minimises the weighted number of nodes on search paths; among optimal
    roots of a range the smallest key wins.  Keys up to ``n`` missing from
    a weight mapping are placed with weight zero.
    """
    w = check_weights(weights, n)
    if np.all(w == np.round(w)):
        w_list, tol = [int(x) for x in w], 0
    else:
        w_list, tol = w.tolist(), 1e-12 * float(w.sum())
    root = _knuth_roots(w_list, tol)
    return _build(len(w_list), lambda lo, hi: root[lo][hi])


def build_weight_balanced(weights, n: int | None = None) -> BstTree:
    """Approximately optimal BST: root each range at the key minimising the heavier side.

    Ties go to the smaller key; ranges carrying no weight are built as
    median trees.
    """
    w = check_weights(weights, n)
    prefix = [0.0]
    for x in w.tolist():
        prefix.append(prefix[-1] + x)

    def choose(lo: int, hi: int) -> int:
        base, top = prefix[lo - 1], prefix[hi]
        if top == base:
            return (lo + hi) // 2
        # left(r) = P[r-1]-base grows with r, right(r) = top-P[r] shrinks;
        # first r with left >= right is where the two curves cross
        lft = lambda r: prefix[r - 1] - base  # noqa: E731
        rgt = lambda r: top - prefix[r]  # noqa: E731
        a, b = lo, hi
        while a < b:
            mid = (a + b) // 2
            if lft(mid) >= rgt(mid):
                b = mid
            else:
                a = mid + 1
        cross = a
        if cross > lo and rgt(cross - 1) <= lft(cross):
            # plateau of equal right-weights: take its smallest key
            target = prefix[cross - 1]
            return max(lo, bisect.bisect_left(prefix, target, lo, cross))
        return cross

    return _build(len(w), choose)


def expected_cost(tree: BstTree, weights) -> float:
    """Weighted mean search cost (nodes on path) under the key weights."""
    w = check_weights(weights, tree.n)
    d = tree.depths()[1:]
    return float(np.dot(w, d) / w.sum())


def splay_access(tree: BstTree, key: int) -> AccessResult:
    """Search ``key`` then splay it to the root (zig, zig-zig, zig-zag)."""
    if not 1 <= key <= tree.n:
        raise KeyError(f"key {key} not in tree")
    service = tree.depth(key)
    rotations = tree.splay_until(key, 0)
    return AccessResult(service, rotations)


def _keys_of(seq) -> list[int]:
    if isinstance(seq, DemandSequence):
        return seq.dst.tolist()
    return [int(k) for k in seq]


def serve_sequence(tree: BstTree, policy: str, seq, check: bool = False) -> CostLedger:
    """Serve searches on ``tree`` (mutated in place under the splay policy)."""
    keys = _keys_of(seq)
    if keys and (min(keys) < 1 or max(keys) > tree.n):
        raise KeyError("sequence references keys outside the tree")
    if policy == "fixed":
        depth = tree.depths()
        service = depth[np.asarray(keys, dtype=np.int64)] if keys else []
        return CostLedger(service)
    if policy != "splay":
        raise ValueError(f"unknown policy {policy!r}")
    service = np.empty(len(keys), dtype=np.int64)
    adjust = np.empty(len(keys), dtype=np.int64)
    for i, k in enumerate(keys):
        service[i] = tree.depth(k)
        adjust[i] = tree.splay_until(k, 0)
        if check:
            tree.check()
    return CostLedger(service, adjust)


@lru_cache(maxsize=None)
def _shapes(lo: int, hi: int) -> tuple[tuple[int, ...], ...]:
    if lo > hi:
        return ((),)
    out = []
    for r in range(lo, hi + 1):
        for left in _shapes(lo, r - 1):
            for right in _shapes(r + 1, hi):
                out.append((r,) + left + right)
    return tuple(out)


def enumerate_shapes(n: int) -> tuple[tuple[int, ...], ...]:
    """Preorder ids of every BST on keys 1..n (Catalan(n) of them)."""
    return _shapes(1, n)
