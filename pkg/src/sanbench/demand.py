"""Communication demand: traces, demand graphs, canonical workloads and generators.

A trace (``DemandSequence``) is an ordered list of source/destination
requests over nodes ``0..n-1``.  BST-style workloads, where every search
starts at the tree root, are *rooted*: the source column holds the
sentinel ``ROOT`` and destinations are keys ``1..n``.
"""
from __future__ import annotations

import bisect
import io
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from ._validation import check_positive_int, check_random_state, check_stochastic

ROOT = 0
PRNG_ID = "numpy.PCG64"


class CommRequest(NamedTuple):
    src: int
    dst: int


class TraceFormatError(ValueError):
    """Malformed trace or demand-graph file."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class DemandSequence:
    """Ordered requests; ``src`` and ``dst`` are parallel int64 arrays."""

    n: int
    src: np.ndarray
    dst: np.ndarray
    rooted: bool = False

    def __post_init__(self):
        check_positive_int(self.n, "n")
        src = np.asarray(self.src, dtype=np.int64).reshape(-1)
        dst = np.asarray(self.dst, dtype=np.int64).reshape(-1)
        if src.shape != dst.shape:
            raise ValueError("src and dst must have the same length")
        if self.rooted:
            if np.any(src != ROOT):
                raise ValueError("rooted sequences must use the ROOT source")
            if dst.size and (dst.min() < 1 or dst.max() > self.n):
                raise ValueError(f"keys must lie in [1, {self.n}]")
        elif src.size:
            lo = min(src.min(), dst.min())
            hi = max(src.max(), dst.max())
            if lo < 0 or hi >= self.n:
                raise ValueError(f"node ids must lie in [0, {self.n})")
            if np.any(src == dst):
                i = int(np.argmax(src == dst))
                raise ValueError(f"request {i} has src == dst")
        src.setflags(write=False)
        dst.setflags(write=False)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable, rooted: bool = False) -> "DemandSequence":
        pairs = list(pairs)
        if not pairs:
            return cls(n, np.empty(0, np.int64), np.empty(0, np.int64), rooted)
        arr = np.asarray(pairs, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("pairs must be (src, dst) tuples")
        return cls(n, arr[:, 0], arr[:, 1], rooted)

    @classmethod
    def from_keys(cls, n: int, keys: Iterable[int]) -> "DemandSequence":
        """Rooted search sequence over keys ``1..n``."""
        dst = np.asarray(list(keys), dtype=np.int64)
        return cls(n, np.full(dst.shape, ROOT, dtype=np.int64), dst, rooted=True)

    @property
    def m(self) -> int:
        return int(self.src.size)

    def __len__(self) -> int:
        return self.m

    def __iter__(self):
        for s, d in zip(self.src.tolist(), self.dst.tolist()):
            yield CommRequest(s, d)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return DemandSequence(self.n, self.src[idx], self.dst[idx], self.rooted)
        return CommRequest(int(self.src[idx]), int(self.dst[idx]))

    def __eq__(self, other):
        if not isinstance(other, DemandSequence):
            return NotImplemented
        return (
            self.n == other.n
            and self.rooted == other.rooted
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
        )

    __hash__ = None

    @property
    def requests(self) -> list[CommRequest]:
        return list(self)

    def concat(self, other: "DemandSequence") -> "DemandSequence":
        if self.n != other.n or self.rooted != other.rooted:
            raise ValueError("cannot concatenate sequences over different node sets")
        return DemandSequence(
            self.n,
            np.concatenate([self.src, other.src]),
            np.concatenate([self.dst, other.dst]),
            self.rooted,
        )

    def key_counts(self) -> dict[int, int]:
        """Destination frequencies, the empirical distribution seen by a BST."""
        keys, counts = np.unique(self.dst, return_counts=True)
        return dict(zip(keys.tolist(), counts.tolist()))


@dataclass(frozen=True)
class DemandGraph:
    """Directed weighted aggregation of a trace; weights are counts or frequencies."""

    n: int
    edges: dict = field(default_factory=dict)

    def __post_init__(self):
        check_positive_int(self.n, "n")
        clean = {}
        for (u, v), w in self.edges.items():
            u, v = int(u), int(v)
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) outside [0, {self.n})")
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not w > 0:
                raise ValueError(f"edge ({u}, {v}) has non-positive weight {w}")
            clean[(u, v)] = w
        object.__setattr__(self, "edges", clean)

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self):
        return sum(self.edges.values())

    def out_weights(self) -> dict[int, dict[int, float]]:
        out: dict[int, dict[int, float]] = {}
        for (u, v), w in self.edges.items():
            out.setdefault(u, {})[v] = w
        return out

    def in_weights(self) -> dict[int, dict[int, float]]:
        inn: dict[int, dict[int, float]] = {}
        for (u, v), w in self.edges.items():
            inn.setdefault(v, {})[u] = w
        return inn

    def out_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, _ in self.edges:
            deg[u] += 1
        return deg

    @property
    def average_degree(self) -> float:
        """Mean number of distinct partners (in or out) per node."""
        partners = [set() for _ in range(self.n)]
        for u, v in self.edges:
            partners[u].add(v)
            partners[v].add(u)
        return float(np.mean([len(p) for p in partners]))

    def normalized(self) -> "DemandGraph":
        total = float(self.total_weight)
        return DemandGraph(self.n, {e: w / total for e, w in self.edges.items()})

    def relabel(self, mapping) -> "DemandGraph":
        mapping = np.asarray(mapping)
        return DemandGraph(
            self.n, {(int(mapping[u]), int(mapping[v])): w for (u, v), w in self.edges.items()}
        )


def build_demand_graph(seq: DemandSequence) -> DemandGraph:
    if seq.m == 0:
        raise ValueError("empty demand")
    if seq.rooted:
        raise ValueError("rooted search sequences have no node-to-node demand graph")
    counts = Counter(zip(seq.src.tolist(), seq.dst.tolist()))
    return DemandGraph(seq.n, dict(sorted(counts.items())))


def make_tau_workload(k: int, r: int) -> DemandSequence:
    """Keys 1, 3, ..., 2k-1 each searched ``r`` times in a row, over n = 2**k - 1 keys."""
    k = check_positive_int(k, "k", minimum=2)
    r = check_positive_int(r, "r")
    n = 2**k - 1
    keys = np.repeat(np.arange(1, 2 * k, 2, dtype=np.int64), r)
    return DemandSequence.from_keys(n, keys)


def grid_node(row: int, col: int, width: int) -> int:
    return row * width + col


def _grid_edges(side: int, width: int):
    for r in range(side):
        for c in range(width):
            u = grid_node(r, c, width)
            for dr, dc in ((-1, 0), (0, -1), (0, 1), (1, 0)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < side and 0 <= cc < width:
                    yield u, grid_node(rr, cc, width)


def make_grid_demand(side: int, weight: int = 1, width: int | None = None) -> DemandGraph:
    """4-neighbour grid demand, both directions; ``width`` defaults to a square grid."""
    side = check_positive_int(side, "side", minimum=2)
    width = side if width is None else check_positive_int(width, "width", minimum=2)
    weight = check_positive_int(weight, "weight")
    return DemandGraph(side * width, {e: weight for e in _grid_edges(side, width)})


def grid_trace(side: int, passes: int = 1, width: int | None = None) -> DemandSequence:
    """Every directed grid adjacency once per pass, in row-major order."""
    side = check_positive_int(side, "side", minimum=2)
    width = side if width is None else check_positive_int(width, "width", minimum=2)
    passes = check_positive_int(passes, "passes")
    pairs = list(_grid_edges(side, width)) * passes
    return DemandSequence.from_pairs(side * width, pairs)


def make_star_demand(n: int, weights) -> DemandGraph:
    n = check_positive_int(n, "n", minimum=2)
    weights = list(weights)
    if len(weights) != n - 1:
        raise ValueError(f"expected {n - 1} leaf weights, got {len(weights)}")
    if any(not w > 0 for w in weights):
        raise ValueError("star weights must be positive")
    return DemandGraph(n, {(0, i + 1): w for i, w in enumerate(weights)})


@dataclass(frozen=True, eq=False)
class Generator:
    """Request generator: i.i.d. over pairs, or a Markov chain whose states are pairs.

    For ``kind="iid"`` ``probs`` is the pair distribution; for
    ``kind="markov"`` ``transition`` is row-stochastic over the pairs and
    ``initial`` the distribution of the first request.
    """

    kind: str
    n: int
    pairs: np.ndarray
    probs: np.ndarray | None = None
    transition: np.ndarray | None = None
    initial: np.ndarray | None = None
    seed: int = 0
    rooted: bool = False

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64)
        if pairs.ndim != 2 or pairs.shape[1] != 2 or len(pairs) == 0:
            raise ValueError("pairs must be a non-empty (S, 2) array")
        # reuse the sequence checks for range and self-loops
        DemandSequence(self.n, pairs[:, 0], pairs[:, 1], self.rooted)
        object.__setattr__(self, "pairs", pairs)
        s = len(pairs)
        if self.kind == "iid":
            probs = check_stochastic(self.probs, "probs")
            if probs.shape != (s,):
                raise ValueError("probs must have one entry per pair")
            object.__setattr__(self, "probs", probs)
        elif self.kind == "markov":
            trans = check_stochastic(self.transition, "transition")
            if trans.shape != (s, s):
                raise ValueError("transition must be S x S over the pairs")
            init = np.full(s, 1.0 / s) if self.initial is None else self.initial
            init = check_stochastic(init, "initial")
            if init.shape != (s,):
                raise ValueError("initial must have one entry per pair")
            object.__setattr__(self, "transition", trans)
            object.__setattr__(self, "initial", init)
        else:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def params(self) -> dict:
        if self.kind == "iid":
            return {"pairs": self.pairs, "probs": self.probs}
        return {"pairs": self.pairs, "transition": self.transition, "initial": self.initial}

    def with_seed(self, seed: int) -> "Generator":
        return Generator(
            self.kind, self.n, self.pairs, self.probs, self.transition, self.initial,
            seed, self.rooted,
        )

    def stationary(self) -> np.ndarray:
        """Long-run pair frequencies (the distribution a GEN algorithm designs for)."""
        if self.kind == "iid":
            return self.probs.copy()
        vals, vecs = np.linalg.eig(self.transition.T)
        i = int(np.argmin(np.abs(vals - 1.0)))
        pi = np.abs(np.real(vecs[:, i]))
        return pi / pi.sum()

    def key_distribution(self) -> dict[int, float]:
        """Stationary destination marginal, keyed by destination."""
        out: dict[int, float] = {}
        for (_, d), p in zip(self.pairs.tolist(), self.stationary().tolist()):
            if p > 0:
                out[d] = out.get(d, 0.0) + p
        return out


def sample(gen: Generator, m: int) -> DemandSequence:
    m = check_positive_int(m, "m")
    rng = check_random_state(gen.seed)
    if gen.kind == "iid":
        idx = rng.choice(len(gen.pairs), size=m, p=gen.probs)
    else:
        cum = [np.cumsum(row).tolist() for row in gen.transition]
        for row in cum:
            row[-1] = 1.0
        init = np.cumsum(gen.initial).tolist()
        init[-1] = 1.0
        u = rng.random(m).tolist()
        idx = np.empty(m, dtype=np.int64)
        state = bisect.bisect_right(init, u[0])
        idx[0] = state
        for t in range(1, m):
            state = bisect.bisect_right(cum[state], u[t])
            idx[t] = state
    chosen = gen.pairs[idx]
    return DemandSequence(gen.n, chosen[:, 0], chosen[:, 1], gen.rooted)


def iid_generator(n: int, pairs, probs, seed: int = 0, rooted: bool = False) -> Generator:
    return Generator("iid", n, np.asarray(pairs), probs=np.asarray(probs, float), seed=seed, rooted=rooted)


def markov_generator(n: int, pairs, transition, initial=None, seed: int = 0,
                     rooted: bool = False) -> Generator:
    return Generator(
        "markov", n, np.asarray(pairs), transition=np.asarray(transition, float),
        initial=None if initial is None else np.asarray(initial, float), seed=seed, rooted=rooted,
    )


def zipf_probs(n: int, exponent: float) -> np.ndarray:
    ranks = np.arange(1, n + 1, dtype=float)
    w = ranks ** (-float(exponent))
    return w / w.sum()


def key_generator(n: int, probs, seed: int = 0) -> Generator:
    """i.i.d. rooted searches: key ``i + 1`` drawn with probability ``probs[i]``."""
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (n,):
        raise ValueError("need one probability per key")
    keys = np.flatnonzero(probs > 0) + 1
    pairs = np.column_stack([np.full(keys.size, ROOT), keys])
    p = probs[keys - 1]
    return iid_generator(n, pairs, p / p.sum(), seed=seed, rooted=True)


def product_generator(src_probs, dst_probs, seed: int = 0) -> Generator:
    """i.i.d. pairs with independent source and destination marginals, self-pairs removed."""
    ps = np.asarray(src_probs, dtype=float)
    pd = np.asarray(dst_probs, dtype=float)
    if ps.shape != pd.shape:
        raise ValueError("marginals must cover the same node set")
    n = ps.size
    joint = np.outer(ps, pd)
    np.fill_diagonal(joint, 0.0)
    u, v = np.nonzero(joint > 0)
    p = joint[u, v]
    return iid_generator(n, np.column_stack([u, v]), p / p.sum(), seed=seed)


# -- file formats ------------------------------------------------------------

def _open_text(path_or_buf, mode):
    if isinstance(path_or_buf, (str, os.PathLike)):
        return open(path_or_buf, mode, encoding="utf-8", newline="\n"), True
    return path_or_buf, False


def _parse_header(line: str, lineno: int) -> dict[str, int]:
    out = {}
    for tok in line.split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise TraceFormatError(f"expected key=value in header, got {tok!r}", lineno)
        try:
            out[key] = int(val)
        except ValueError:
            raise TraceFormatError(f"non-integer header value {tok!r}", lineno) from None
    return out


def write_trace(seq: DemandSequence, path_or_buf) -> None:
    fh, owned = _open_text(path_or_buf, "w")
    try:
        header = f"n={seq.n} m={seq.m}"
        if seq.rooted:
            header += " rooted=1"
        fh.write(header + "\n")
        for s, d in zip(seq.src.tolist(), seq.dst.tolist()):
            fh.write(f"{s} {d}\n")
    finally:
        if owned:
            fh.close()


def _data_lines(fh):
    for lineno, raw in enumerate(fh, start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def read_trace(path_or_buf) -> DemandSequence:
    fh, owned = _open_text(path_or_buf, "r")
    try:
        lines = _data_lines(fh)
        try:
            lineno, first = next(lines)
        except StopIteration:
            raise TraceFormatError("empty trace file") from None
        header = _parse_header(first, lineno)
        if "n" not in header or "m" not in header:
            raise TraceFormatError("header must read 'n=<int> m=<int>'", lineno)
        pairs = []
        for lineno, line in lines:
            parts = line.split()
            if len(parts) != 2:
                raise TraceFormatError(f"expected 'src dst', got {line!r}", lineno)
            try:
                pairs.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise TraceFormatError(f"non-integer node id in {line!r}", lineno) from None
        if len(pairs) != header["m"]:
            raise TraceFormatError(f"header says m={header['m']} but found {len(pairs)} requests")
        try:
            return DemandSequence.from_pairs(header["n"], pairs, rooted=bool(header.get("rooted", 0)))
        except ValueError as exc:
            raise TraceFormatError(str(exc)) from None
    finally:
        if owned:
            fh.close()


def write_graph(g: DemandGraph, path_or_buf) -> None:
    fh, owned = _open_text(path_or_buf, "w")
    try:
        fh.write(f"n={g.n}\n")
        for (u, v), w in sorted(g.edges.items()):
            fh.write(f"{u} {v} {w!r}\n" if isinstance(w, float) else f"{u} {v} {w}\n")
    finally:
        if owned:
            fh.close()


def _number(tok: str):
    try:
        return int(tok)
    except ValueError:
        return float(tok)


def read_graph(path_or_buf) -> DemandGraph:
    """Read ``src dst weight`` triplets; a leading ``n=<int>`` header is optional."""
    fh, owned = _open_text(path_or_buf, "r")
    try:
        n = None
        edges = {}
        for lineno, line in _data_lines(fh):
            if "=" in line:
                if n is not None or edges:
                    raise TraceFormatError("header must be the first line", lineno)
                n = _parse_header(line, lineno).get("n")
                continue
            parts = line.split()
            if len(parts) != 3:
                raise TraceFormatError(f"expected 'src dst weight', got {line!r}", lineno)
            try:
                u, v, w = int(parts[0]), int(parts[1]), _number(parts[2])
            except ValueError:
                raise TraceFormatError(f"malformed triplet {line!r}", lineno) from None
            if not w > 0:
                raise TraceFormatError(f"non-positive weight {parts[2]}", lineno)
            edges[(u, v)] = edges.get((u, v), 0) + w
        if not edges:
            raise TraceFormatError("demand graph has no edges")
        if n is None:
            n = 1 + max(max(e) for e in edges)
        try:
            return DemandGraph(n, edges)
        except ValueError as exc:
            raise TraceFormatError(str(exc)) from None
    finally:
        if owned:
            fh.close()


def sniff_kind(path) -> str:
    """'trace' or 'graph', judged from the header of a file."""
    with open(path, encoding="utf-8") as fh:
        for _, line in _data_lines(fh):
            return "trace" if "m=" in line else "graph"
    raise TraceFormatError("empty file")


def dumps_trace(seq: DemandSequence) -> str:
    buf = io.StringIO()
    write_trace(seq, buf)
    return buf.getvalue()
