"""Network-design algorithms as scikit-learn style estimators.

Every algorithm is fitted on a demand (``fit``), then serves a request
sequence and returns its ``CostLedger`` (``serve``).  ``transform``
gives the same charges as an ``(m, 2)`` array of (service, adjust), and
``score`` is the negated amortized cost so that higher is better, as
scikit-learn model selection expects.

``kind`` places each class in the taxonomy: OBL (demand-oblivious), STAT
(fixed, optimised for the observed demand), GEN (fixed, optimised for a
known generator), ON (online self-adjusting) and OFF (offline dynamic).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import InvariantError
from .bsttree import BstTree, build_median_tree, build_optimal, build_weight_balanced, serve_sequence
from .demand import DemandSequence, Generator, build_demand_graph
from .ledger import CostLedger
from .oracles import off_schedule, shape_space, stat_oracle
from .topo import (
    Network,
    SelfAdjustingTreeNetwork,
    _distance_rows,
    build_ego_tree_network,
    build_random_regular,
    random_embedding,
)

KINDS = ("OBL", "STAT", "GEN", "ON", "OFF")


def check_demand(X, rooted: bool | None = None, n: int | None = None) -> DemandSequence:
    """Coerce ``X`` to a DemandSequence.

    Accepts a DemandSequence, a 1-d array of keys (rooted searches) or an
    ``(m, 2)`` array of (src, dst) node ids.  For arrays the node count is
    ``n`` when given, else the smallest one that fits the data.
    """
    if isinstance(X, DemandSequence):
        seq = X
    else:
        arr = np.asarray(X)
        if arr.size == 0:
            raise ValueError("empty demand")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(arr == np.round(arr)):
                raise ValueError("requests must be integer node ids")
            arr = arr.astype(np.int64)
        if arr.ndim == 1:
            seq = DemandSequence.from_keys(n or int(arr.max()), arr)
        elif arr.ndim == 2 and arr.shape[1] == 2:
            seq = DemandSequence.from_pairs(n or int(arr.max()) + 1, arr)
        else:
            raise ValueError(f"expected keys or (m, 2) pairs, got shape {arr.shape}")
    if seq.m == 0:
        raise ValueError("empty demand")
    if rooted is not None and seq.rooted != rooted:
        want = "rooted key searches" if rooted else "node-to-node requests"
        raise ValueError(f"this algorithm serves {want}")
    return seq


class SANAlgorithm(BaseEstimator):
    kind = "ON"
    topology = "bst"

    def fit(self, X, y=None):
        raise NotImplementedError

    def serve(self, X) -> CostLedger:
        raise NotImplementedError

    def _check_fitted(self):
        if not hasattr(self, "n_nodes_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")

    def _check_X(self, X) -> DemandSequence:
        seq = check_demand(X, rooted=self.topology == "bst", n=getattr(self, "n_nodes_", None))
        if hasattr(self, "n_nodes_") and seq.n != self.n_nodes_:
            raise ValueError(f"fitted for n={self.n_nodes_}, got a sequence over n={seq.n}")
        return seq

    def transform(self, X) -> np.ndarray:
        ledger = self.serve(X)
        return np.column_stack([ledger.service, ledger.adjust])

    def fit_serve(self, X) -> CostLedger:
        return self.fit(X).serve(X)

    def score(self, X, y=None) -> float:
        return -self.serve(X).average


# -- binary search trees ------------------------------------------------------------

class _FixedBST(SANAlgorithm):
    topology = "bst"

    def serve(self, X) -> CostLedger:
        self._check_fitted()
        seq = self._check_X(X)
        return serve_sequence(self.tree_, "fixed", seq)


class ObliviousBST(_FixedBST):
    """Balanced tree chosen without looking at the demand."""

    kind = "OBL"

    def __init__(self, initial: BstTree | None = None):
        self.initial = initial

    def fit(self, X, y=None):
        seq = check_demand(X, rooted=True)
        self.tree_ = self.initial.copy() if self.initial is not None else build_median_tree(seq.n)
        if self.tree_.n != seq.n:
            raise ValueError("initial tree and demand disagree on n")
        self.n_nodes_ = seq.n
        return self


class StaticOptimalBST(_FixedBST):
    """Fixed tree built in hindsight for the empirical key frequencies.

    ``method="knuth"`` is exactly optimal; ``method="weight_balanced"``
    is the faster approximation.
    """

    kind = "STAT"

    def __init__(self, method: str = "knuth"):
        self.method = method

    def fit(self, X, y=None):
        seq = check_demand(X, rooted=True)
        builders = {"knuth": build_optimal, "weight_balanced": build_weight_balanced}
        if self.method not in builders:
            raise ValueError(f"unknown method {self.method!r}")
        self.tree_ = builders[self.method](seq.key_counts(), seq.n)
        self.n_nodes_ = seq.n
        return self


class GeneratorOptimalBST(_FixedBST):
    """Fixed optimal tree for the stationary key distribution of a known generator."""

    kind = "GEN"

    def __init__(self, generator: Generator | None = None):
        self.generator = generator

    def fit(self, X=None, y=None):
        if self.generator is None:
            raise ValueError("GeneratorOptimalBST needs the generator")
        if not self.generator.rooted:
            raise ValueError("generator must produce rooted key searches")
        self.tree_ = build_optimal(self.generator.key_distribution(), self.generator.n)
        self.n_nodes_ = self.generator.n
        return self


class SplayBST(SANAlgorithm):
    """Online splay tree: every accessed key is rotated to the root."""

    kind = "ON"
    topology = "bst"

    def __init__(self, initial: BstTree | None = None):
        self.initial = initial

    def fit(self, X, y=None):
        seq = check_demand(X, rooted=True)
        self.initial_ = self.initial.copy() if self.initial is not None else build_median_tree(seq.n)
        if self.initial_.n != seq.n:
            raise ValueError("initial tree and demand disagree on n")
        self.n_nodes_ = seq.n
        return self

    def serve(self, X) -> CostLedger:
        self._check_fitted()
        seq = self._check_X(X)
        tree = self.initial_.copy()
        ledger = serve_sequence(tree, "splay", seq)
        self.final_tree_ = tree
        return ledger


class OfflineOptimalBST(SANAlgorithm):
    """Offline optimum over all rotation schedules (small instances only)."""

    kind = "OFF"
    topology = "bst"

    def __init__(self, initial: BstTree | None = None):
        self.initial = initial

    def fit(self, X, y=None):
        seq = check_demand(X, rooted=True)
        self.initial_ = self.initial.copy() if self.initial is not None else build_median_tree(seq.n)
        self.n_nodes_ = seq.n
        return self

    def serve(self, X) -> CostLedger:
        self._check_fitted()
        seq = self._check_X(X)
        total, path = off_schedule(seq, seq.n, self.initial_)
        _, _, depth, dist = shape_space(seq.n)
        keys = seq.dst.tolist()
        service = [int(depth[s, k]) for s, k in zip(path, keys)]
        adjust = [int(dist[a, b]) for a, b in zip(path, path[1:])] + [0]
        ledger = CostLedger(service, adjust)
        if ledger.total != total:
            raise InvariantError("offline schedule does not reproduce its own cost")
        self.schedule_ = path
        return ledger


# -- general networks -------------------------------------------------------------------

class _FixedNetwork(SANAlgorithm):
    topology = "network"

    def serve(self, X) -> CostLedger:
        self._check_fitted()
        seq = self._check_X(X)
        src = self.embedding_[seq.src]
        dst = self.embedding_[seq.dst]
        sources, inverse = np.unique(src, return_inverse=True)
        rows = _distance_rows(self.network_, sources)
        hops = rows[inverse, dst]
        if not np.all(np.isfinite(hops)):
            raise ValueError("demand pair is disconnected in the network")
        return CostLedger(hops.astype(np.int64))


class ObliviousExpander(_FixedNetwork):
    """Random d-regular expander with demand nodes placed by a random bijection."""

    kind = "OBL"

    def __init__(self, degree: int = 3, seed: int = 0, initial: Network | None = None):
        self.degree = degree
        self.seed = seed
        self.initial = initial

    def fit(self, X, y=None):
        seq = check_demand(X, rooted=False)
        ss = np.random.SeedSequence(self.seed)
        net_seed, embed_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
        if self.initial is not None:
            self.network_ = self.initial
        else:
            self.network_ = build_random_regular(seq.n, self.degree, net_seed)
        if self.network_.n != seq.n:
            raise ValueError("network and demand disagree on n")
        self.embedding_ = random_embedding(seq.n, embed_seed)
        self.n_nodes_ = seq.n
        return self


class EgoTreeNetwork(_FixedNetwork):
    """Fixed demand-aware network: union of per-source weight-balanced ego-trees."""

    kind = "STAT"

    def __init__(self, max_degree: int | None = None):
        self.max_degree = max_degree

    def fit(self, X, y=None):
        seq = check_demand(X, rooted=False)
        self.network_ = build_ego_tree_network(build_demand_graph(seq), self.max_degree)
        self.embedding_ = np.arange(seq.n)
        self.n_nodes_ = seq.n
        return self


class StaticOptimalTreeNetwork(_FixedNetwork):
    """Best BST-ordered tree network in hindsight, by enumeration (n <= 8)."""

    kind = "STAT"

    def fit(self, X, y=None):
        seq = check_demand(X, rooted=False)
        sat, _ = stat_oracle(seq, "tree-network")
        self.network_ = sat.to_network()
        self.embedding_ = np.arange(seq.n)
        self.n_nodes_ = seq.n
        return self


class SplayTreeNetwork(SANAlgorithm):
    """Online self-adjusting tree network (double splay towards the pair's common ancestor)."""

    kind = "ON"
    topology = "network"

    def __init__(self, initial: SelfAdjustingTreeNetwork | None = None):
        self.initial = initial

    def fit(self, X, y=None):
        seq = check_demand(X, rooted=False)
        if self.initial is None:
            self.initial_ = SelfAdjustingTreeNetwork(build_median_tree(seq.n))
        else:
            self.initial_ = self.initial.copy()
        if self.initial_.n != seq.n:
            raise ValueError("initial network and demand disagree on n")
        self.n_nodes_ = seq.n
        return self

    def serve(self, X) -> CostLedger:
        self._check_fitted()
        seq = self._check_X(X)
        net = self.initial_.copy()
        service = np.empty(seq.m, dtype=np.int64)
        adjust = np.empty(seq.m, dtype=np.int64)
        for i, (u, v) in enumerate(zip(seq.src.tolist(), seq.dst.tolist())):
            service[i], adjust[i] = net.route_and_adjust(u, v)
        self.final_network_ = net
        return CostLedger(service, adjust)


REGISTRY = {
    "oblivious-bst": ObliviousBST,
    "knuth-bst": StaticOptimalBST,
    "weight-balanced-bst": lambda **kw: StaticOptimalBST(method="weight_balanced", **kw),
    "generator-bst": GeneratorOptimalBST,
    "splay-bst": SplayBST,
    "offline-bst": OfflineOptimalBST,
    "expander": ObliviousExpander,
    "ego-tree": EgoTreeNetwork,
    "static-tree-network": StaticOptimalTreeNetwork,
    "splaynet": SplayTreeNetwork,
}


def make_algorithm(name: str, **params) -> SANAlgorithm:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(REGISTRY)}") from None
    return factory(**params)


__all__ = [
    "KINDS", "REGISTRY", "EgoTreeNetwork", "GeneratorOptimalBST", "ObliviousBST",
    "ObliviousExpander", "OfflineOptimalBST", "SANAlgorithm", "SplayBST", "SplayTreeNetwork",
    "StaticOptimalBST", "StaticOptimalTreeNetwork", "check_demand", "make_algorithm",
]
