"""Network topologies: random regular expanders, ego-tree compositions and a splay tree network."""
from __future__ import annotations

import os
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from ._validation import InvariantError, check_positive_int, check_random_state
from .bsttree import BstTree, build_median_tree, build_weight_balanced
from .demand import CommRequest, DemandGraph, TraceFormatError

FAMILIES = ("bounded_degree", "tree", "unconstrained")


class ConstraintBreach(InvariantError):
    """A network left its declared family or became disconnected."""


def _norm(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, eq=False)
class Network:
    """Undirected simple connected graph on nodes 0..n-1 within a declared family."""

    n: int
    edges: frozenset
    family: str = "unconstrained"
    max_degree: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        check_positive_int(self.n, "n")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "bounded_degree" and self.max_degree is None:
            raise ValueError("bounded_degree family needs max_degree")
        edges = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ConstraintBreach(f"constraint breach: self-loop at {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ConstraintBreach(f"constraint breach: edge ({u}, {v}) out of range")
            edges.add(_norm(u, v))
        object.__setattr__(self, "edges", frozenset(edges))
        adj = [[] for _ in range(self.n)]
        for u, v in sorted(edges):
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "_adj", adj)
        self.validate()

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (self.n, self.edges, self.family, self.max_degree) == (
            other.n, other.edges, other.family, other.max_degree,
        )

    __hash__ = None

    @property
    def adjacency(self) -> list[list[int]]:
        return self._adj

    def degree(self, u: int) -> int:
        return len(self._adj[u])

    @property
    def degree_max(self) -> int:
        return max((len(a) for a in self._adj), default=0)

    def validate(self) -> None:
        if self.n > 1 and not is_connected(self.n, self.edges):
            raise ConstraintBreach("constraint breach: network is disconnected")
        if self.family == "bounded_degree" and self.degree_max > self.max_degree:
            raise ConstraintBreach(
                f"constraint breach: degree {self.degree_max} exceeds bound {self.max_degree}"
            )
        if self.family == "tree" and len(self.edges) != self.n - 1:
            raise ConstraintBreach("constraint breach: a tree needs exactly n - 1 edges")

    def csr(self) -> csr_matrix:
        if not self.edges:
            return csr_matrix((self.n, self.n), dtype=np.int8)
        e = np.array(sorted(self.edges), dtype=np.int64)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(self.n, self.n))

    def write(self, path_or_buf) -> None:
        owned = isinstance(path_or_buf, (str, os.PathLike))
        fh = open(path_or_buf, "w", encoding="utf-8", newline="\n") if owned else path_or_buf
        try:
            fh.write(f"n={self.n}\n")
            for u, v in sorted(self.edges):
                fh.write(f"{u} {v}\n")
        finally:
            if owned:
                fh.close()


def is_connected(n: int, edges) -> bool:
    if n <= 1:
        return True
    e = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
    g = csr_matrix((np.ones(len(e), dtype=np.int8), (e[:, 0], e[:, 1])), shape=(n, n))
    ncomp, _ = connected_components(g, directed=False)
    return ncomp == 1


def read_network(path_or_buf, family: str = "unconstrained", max_degree: int | None = None) -> Network:
    owned = isinstance(path_or_buf, (str, os.PathLike))
    fh = open(path_or_buf, encoding="utf-8") if owned else path_or_buf
    try:
        n, edges = None, []
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if n is None:
                try:
                    n = int(line.removeprefix("n="))
                except ValueError:
                    raise TraceFormatError(f"bad network header {line!r}", lineno) from None
                continue
            parts = line.split()
            if len(parts) != 2:
                raise TraceFormatError(f"expected 'u v', got {line!r}", lineno)
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise TraceFormatError(f"non-integer node in {line!r}", lineno) from None
        if n is None:
            raise TraceFormatError("empty network file")
        return Network(n, frozenset(edges), family, max_degree)
    finally:
        if owned:
            fh.close()


# -- constructors -------------------------------------------------------------

def build_random_regular(n: int, d: int, seed: int, max_tries: int = 10_000) -> Network:
    """Uniform simple connected d-regular graph: configuration pairing with rejection."""
    n = check_positive_int(n, "n")
    d = check_positive_int(d, "d")
    if (n * d) % 2:
        raise ValueError(f"no {d}-regular graph on {n} nodes: n*d is odd")
    if d < 3 or n <= d:
        raise ValueError("need d >= 3 and n > d")
    rng = check_random_state(seed)
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    for _ in range(max_tries):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        codes = lo * n + hi
        if np.unique(codes).size != codes.size:
            continue
        edges = frozenset(zip(lo.tolist(), hi.tolist()))
        if not is_connected(n, edges):
            continue
        return Network(n, edges, "bounded_degree", d, meta={"seed": int(seed)})
    raise RuntimeError(f"no simple connected pairing after {max_tries} draws")


def grid_network(side: int, width: int | None = None) -> Network:
    side = check_positive_int(side, "side", minimum=2)
    width = side if width is None else check_positive_int(width, "width", minimum=2)
    edges = set()
    for r in range(side):
        for c in range(width):
            u = r * width + c
            if c + 1 < width:
                edges.add((u, u + 1))
            if r + 1 < side:
                edges.add((u, u + width))
    return Network(side * width, frozenset(edges), "bounded_degree", 4)


def path_network(n: int) -> Network:
    n = check_positive_int(n, "n")
    return Network(n, frozenset((i, i + 1) for i in range(n - 1)), "tree")


# -- routing -------------------------------------------------------------------

def bfs_distances(net: Network, src: int) -> list[int]:
    """Hop counts from ``src``; -1 for unreachable nodes."""
    dist = [-1] * net.n
    dist[src] = 0
    q = deque([src])
    adj = net.adjacency
    while q:
        x = q.popleft()
        for y in adj[x]:
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                q.append(y)
    return dist


def route_length(net: Network, req) -> int:
    """Shortest-path hop count from req.src to req.dst."""
    src, dst = int(req[0]), int(req[1])
    if src == dst:
        return 0
    dist = {src: 0}
    q = deque([src])
    adj = net.adjacency
    while q:
        x = q.popleft()
        for y in adj[x]:
            if y not in dist:
                if y == dst:
                    return dist[x] + 1
                dist[y] = dist[x] + 1
                q.append(y)
    raise ConstraintBreach(f"constraint breach: no route from {src} to {dst}")


def _distance_rows(net: Network, sources) -> np.ndarray:
    return shortest_path(net.csr(), method="D", directed=False, unweighted=True, indices=sources)


def avg_route_length(net: Network, g: DemandGraph, embedding=None) -> float:
    """Demand-weighted mean route length; ``embedding[u]`` places demand node u."""
    if not g.edges:
        raise ValueError("empty demand graph")
    place = np.arange(g.n) if embedding is None else np.asarray(embedding, dtype=np.int64)
    if place.shape != (g.n,) or place.max() >= net.n:
        raise ValueError("embedding must map every demand node to a network node")
    items = sorted(g.edges.items())
    srcs = sorted({int(place[u]) for (u, _), _ in items})
    rows = _distance_rows(net, srcs)
    row_of = {s: i for i, s in enumerate(srcs)}
    dist = np.array([rows[row_of[int(place[u])], place[v]] for (u, v), _ in items])
    if not np.all(np.isfinite(dist)):
        raise ConstraintBreach("constraint breach: demand pair is disconnected")
    w = np.array([float(wt) for _, wt in items])
    return float(np.dot(dist, w) / w.sum())


def all_pairs_distances(net: Network) -> np.ndarray:
    return _distance_rows(net, None)


def diameter(net: Network) -> int:
    return int(all_pairs_distances(net).max())


def average_pairwise_distance(net: Network) -> float:
    d = all_pairs_distances(net)
    return float(d.sum() / (net.n * (net.n - 1)))


def random_embedding(n: int, seed: int) -> np.ndarray:
    """Oblivious placement: a uniformly random bijection of demand nodes onto network nodes."""
    return check_random_state(seed).permutation(n)


# -- ego-tree composition --------------------------------------------------------

def build_ego_tree(root: int, dest_weights: dict) -> tuple[list[tuple[int, int]], dict[int, int]]:
    """Weight-balanced tree over ``root``'s destinations hung below ``root``.

    Returns the tree edges and, for each destination, its hop distance
    from ``root`` inside the tree.
    """
    dests = sorted(dest_weights)
    wb = build_weight_balanced([dest_weights[v] for v in dests])
    label = [None] + dests
    edges = [(root, label[wb.root])]
    edges += [(label[p], label[c]) for p, c in wb.edges()]
    depths = wb.depths()
    return edges, {label[k]: int(depths[k]) for k in range(1, wb.n + 1)}


def build_ego_tree_network(g: DemandGraph, max_degree: int | None = None) -> Network:
    """Union of every source's ego-tree; disconnected parts are chained by their smallest nodes.

    No degree reduction is attempted: if ``max_degree`` is exceeded a
    warning is emitted and recorded in ``meta["warnings"]``.
    """
    if not g.edges:
        raise ValueError("empty demand graph")
    edges = set()
    for u, row in sorted(g.out_weights().items()):
        tree_edges, _ = build_ego_tree(u, row)
        edges.update(_norm(a, b) for a, b in tree_edges)
    if g.n > 1:
        e = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
        mat = csr_matrix((np.ones(len(e), dtype=np.int8), (e[:, 0], e[:, 1])), shape=(g.n, g.n))
        ncomp, labels = connected_components(mat, directed=False)
        reps = [int(np.flatnonzero(labels == c)[0]) for c in range(ncomp)]
        reps.sort()
        edges.update(zip(reps, reps[1:]))
    net = Network(g.n, frozenset(edges), "unconstrained")
    notes = []
    if max_degree is not None and net.degree_max > max_degree:
        msg = f"ego-tree network has degree {net.degree_max} > cap {max_degree}"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    net.meta.update(max_degree_observed=net.degree_max, warnings=notes)
    return net


# -- self-adjusting tree network -----------------------------------------------------

class SelfAdjustingTreeNetwork:
    """Tree network kept in BST order over node ids (node i carries key i + 1).

    A request (u, v) is routed along the tree path, then u is splayed into
    the position of the pair's lowest common ancestor and v is splayed
    until it hangs directly below u.
    """

    def __init__(self, tree: BstTree):
        self.tree = tree

    @property
    def n(self) -> int:
        return self.tree.n

    def copy(self) -> "SelfAdjustingTreeNetwork":
        return SelfAdjustingTreeNetwork(self.tree.copy())

    def lca(self, a: int, b: int) -> int:
        """Lowest common ancestor of keys a and b."""
        lo, hi = (a, b) if a < b else (b, a)
        x = self.tree.root
        while not lo <= x <= hi:
            x = self.tree.left[x] if x > hi else self.tree.right[x]
        return x

    def distance(self, u: int, v: int) -> int:
        a, b = u + 1, v + 1
        w = self.lca(a, b)
        t = self.tree
        return t.depth(a) + t.depth(b) - 2 * t.depth(w)

    def route_and_adjust(self, u: int, v: int) -> tuple[int, int]:
        if u == v:
            raise ValueError("source equals destination")
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise KeyError(f"request ({u}, {v}) outside the network")
        a, b = u + 1, v + 1
        t = self.tree
        w = self.lca(a, b)
        service = t.depth(a) + t.depth(b) - 2 * t.depth(w)
        rotations = t.splay_until(a, t.parent[w])
        rotations += t.splay_until(b, a)
        return service, rotations

    def to_network(self) -> Network:
        edges = frozenset((p - 1, c - 1) for p, c in self.tree.edges())
        return Network(self.n, edges, "tree")


def build_selfadjusting_tree(n: int) -> SelfAdjustingTreeNetwork:
    return SelfAdjustingTreeNetwork(build_median_tree(n))


def sat_route_and_adjust(net: SelfAdjustingTreeNetwork, req) -> tuple[int, int]:
    return net.route_and_adjust(int(req[0]), int(req[1]))


# -- reconfiguration -------------------------------------------------------------------

@dataclass(frozen=True)
class EdgeEdit:
    additions: frozenset = frozenset()
    removals: frozenset = frozenset()

    def __post_init__(self):
        add = frozenset(_norm(int(u), int(v)) for u, v in self.additions)
        rem = frozenset(_norm(int(u), int(v)) for u, v in self.removals)
        if add & rem:
            raise ValueError("an edge cannot be both added and removed")
        object.__setattr__(self, "additions", add)
        object.__setattr__(self, "removals", rem)

    @property
    def size(self) -> int:
        return len(self.additions) + len(self.removals)


def apply_edit(net: Network, edit: EdgeEdit) -> tuple[Network, int]:
    """Apply link changes; the charge is the number of links touched."""
    missing = edit.removals - net.edges
    if missing:
        raise ValueError(f"cannot remove absent edges {sorted(missing)}")
    present = edit.additions & net.edges
    if present:
        raise ValueError(f"cannot add existing edges {sorted(present)}")
    edges = (net.edges - edit.removals) | edit.additions
    new = Network(net.n, edges, net.family, net.max_degree)
    return new, edit.size


def tree_distance_matrix(tree: BstTree) -> np.ndarray:
    """Hop distances between all keys of a BST viewed as a tree network (index key - 1)."""
    edges = frozenset((p - 1, c - 1) for p, c in tree.edges())
    return all_pairs_distances(Network(tree.n, edges, "tree")).astype(np.int64)


__all__ = [
    "CommRequest", "ConstraintBreach", "EdgeEdit", "Network", "SelfAdjustingTreeNetwork",
    "all_pairs_distances", "apply_edit", "average_pairwise_distance", "avg_route_length",
    "bfs_distances", "build_ego_tree", "build_ego_tree_network", "build_random_regular",
    "build_selfadjusting_tree", "diameter", "grid_network", "path_network", "random_embedding",
    "read_network", "route_length", "sat_route_and_adjust", "tree_distance_matrix",
]
