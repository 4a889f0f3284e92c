import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sanbench import demand
from sanbench.bsttree import build_balanced, build_optimal
from sanbench.demand import DemandSequence, make_tau_workload
from sanbench.estimators import (
    KINDS,
    REGISTRY,
    EgoTreeNetwork,
    GeneratorOptimalBST,
    ObliviousBST,
    ObliviousExpander,
    OfflineOptimalBST,
    SplayBST,
    SplayTreeNetwork,
    StaticOptimalBST,
    StaticOptimalTreeNetwork,
    check_demand,
    make_algorithm,
)

BST_ALGS = [ObliviousBST(), StaticOptimalBST(), StaticOptimalBST(method="weight_balanced"),
            SplayBST(), OfflineOptimalBST()]
NET_ALGS = [ObliviousExpander(), EgoTreeNetwork(), StaticOptimalTreeNetwork(), SplayTreeNetwork()]


@pytest.mark.parametrize("alg", BST_ALGS + NET_ALGS + [GeneratorOptimalBST()], ids=repr)
def test_params_roundtrip(alg):
    params = alg.get_params()
    twin = clone(alg)
    assert twin.get_params() == params
    assert twin.set_params(**params) is twin
    assert alg.kind in KINDS


@pytest.mark.parametrize("alg", BST_ALGS, ids=repr)
def test_bst_estimators(alg):
    keys = np.array([1, 3, 3, 2, 4, 4, 4, 1])
    with pytest.raises(NotFittedError):
        clone(alg).serve(keys)
    est = clone(alg).fit(keys)
    out = est.transform(keys)
    assert out.shape == (8, 2)
    assert est.n_nodes_ == 4
    assert est.score(keys) == -out.sum() / 8
    assert est.fit_serve(keys).total == out.sum()


@pytest.mark.parametrize("alg", NET_ALGS, ids=repr)
def test_network_estimators(alg):
    pairs = np.array([[0, 1], [1, 2], [2, 3], [3, 0], [0, 2], [0, 1]])
    est = clone(alg).fit(pairs)
    out = est.transform(pairs)
    assert out.shape == (6, 2)
    assert (out[:, 0] >= 1).all()
    if alg.kind != "ON":
        assert (out[:, 1] == 0).all()


def test_fitted_n_is_kept():
    est = SplayBST().fit(DemandSequence.from_keys(10, [1, 2]))
    assert est.serve(np.array([1, 2])).m == 2
    with pytest.raises(ValueError):
        est.serve(DemandSequence.from_keys(12, [1]))


def test_oblivious_matches_balanced():
    seq = make_tau_workload(10, 1000)
    est = ObliviousBST().fit(seq)
    assert est.tree_ == build_balanced(1023)
    assert est.serve(seq).average == 10.0


def test_generator_baseline():
    gen = demand.key_generator(6, [0.5, 0.1, 0.1, 0.1, 0.1, 0.1], seed=0)
    est = GeneratorOptimalBST(generator=gen).fit()
    assert est.tree_ == build_optimal([0.5, 0.1, 0.1, 0.1, 0.1, 0.1])
    with pytest.raises(ValueError):
        GeneratorOptimalBST().fit()


def test_offline_schedule_is_feasible():
    seq = DemandSequence.from_keys(4, [4, 4, 1, 1, 4, 2])
    off = OfflineOptimalBST().fit(seq)
    led = off.serve(seq)
    spl = SplayBST().fit(seq).serve(seq)
    assert led.total <= spl.total
    assert len(off.schedule_) == seq.m


def test_expander_seed_changes_placement():
    seq = demand.grid_trace(4)
    a = ObliviousExpander(seed=1).fit(seq)
    b = ObliviousExpander(seed=2).fit(seq)
    assert a.network_ != b.network_ or not np.array_equal(a.embedding_, b.embedding_)
    assert ObliviousExpander(seed=1).fit(seq).serve(seq) == a.serve(seq)


def test_check_demand():
    with pytest.raises(ValueError):
        check_demand([])
    with pytest.raises(ValueError):
        check_demand(np.zeros((2, 3), dtype=int))
    with pytest.raises(ValueError):
        check_demand([1.5, 2.0])
    seq = check_demand(np.array([[0, 1], [2, 0]]))
    assert seq.n == 3 and not seq.rooted
    with pytest.raises(ValueError):
        check_demand(seq, rooted=True)


def test_registry():
    for name in REGISTRY:
        alg = make_algorithm(name)
        assert alg.topology in ("bst", "network")
    assert make_algorithm("weight-balanced-bst").method == "weight_balanced"
    with pytest.raises(ValueError):
        make_algorithm("nope")
