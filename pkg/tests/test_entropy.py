import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from sanbench.demand import (
    DemandGraph,
    DemandSequence,
    grid_trace,
    make_grid_demand,
    make_star_demand,
    make_tau_workload,
)
from sanbench.entropy import (
    EntropyReport,
    conditional_entropy,
    empirical_entropy,
    graph_entropies,
    sequence_entropies,
)


def grid_closed_form(side):
    """Sum over degree classes: corners (2), border (3), interior (4); p(u) proportional to degree."""
    corners, border, inner = 4, 4 * (side - 2), (side - 2) ** 2
    total = 2 * corners + 3 * border + 4 * inner
    return (2 * corners * 1 + 3 * border * math.log2(3) + 4 * inner * 2) / total


def exact_bits(weights):
    """Entropy with exact rational probabilities; logs are the only inexact step."""
    total = sum(weights)
    return sum(float(Fraction(w, total)) * math.log2(Fraction(total, w)) for w in weights)


class TestEmpirical:
    def test_single_symbol(self):
        assert empirical_entropy({"a": 7}) == 0.0

    def test_uniform_eight(self):
        assert empirical_entropy({c: 1 for c in "abcdefgh"}) == 3.0

    def test_two_one_one(self):
        assert empirical_entropy({"a": 2, "b": 1, "c": 1}) == 1.5

    def test_empty(self):
        with pytest.raises(ValueError):
            empirical_entropy({})

    def test_iterable_of_counts(self):
        assert empirical_entropy([2, 2]) == 1.0
        assert empirical_entropy([3, 0, 1]) == empirical_entropy([3, 1])

    def test_negative(self):
        with pytest.raises(ValueError):
            empirical_entropy([1, -1])

    @given(st.lists(st.integers(1, 1000), min_size=1, max_size=40))
    def test_at_most_log_k(self, counts):
        h = empirical_entropy(dict(enumerate(counts)))
        assert h <= math.log2(len(counts)) + 1e-12
        assert h == pytest.approx(exact_bits(counts), abs=1e-12)
        if len(set(counts)) == 1:
            assert h == pytest.approx(math.log2(len(counts)), abs=1e-12)
        else:
            assert h < math.log2(len(counts)) - 1e-12

    @given(st.lists(st.integers(1, 50), min_size=1, max_size=20), st.integers(2, 9))
    def test_scale_invariant(self, counts, c):
        a = empirical_entropy(dict(enumerate(counts)))
        b = empirical_entropy({k: c * v for k, v in enumerate(counts)})
        assert a == pytest.approx(b, abs=1e-12)


class TestConditional:
    def test_grid_side4(self):
        h = conditional_entropy(make_grid_demand(4, 1))
        assert abs(h - 1.6258) < 1e-4
        assert h == pytest.approx(grid_closed_form(4), abs=1e-12)

    @pytest.mark.parametrize("side", range(2, 33))
    def test_grid_below_two(self, side):
        h = conditional_entropy(make_grid_demand(side, 1))
        assert h < 2.0
        assert h == pytest.approx(grid_closed_form(side), abs=1e-12)

    def test_uniform_star(self):
        assert conditional_entropy(make_star_demand(9, [1] * 8)) == pytest.approx(3.0, abs=1e-12)

    def test_skewed_star(self):
        weights = [64, 32, 16, 8, 4, 2, 1, 1]
        h = conditional_entropy(make_star_demand(9, weights))
        assert h == pytest.approx(exact_bits(weights), abs=1e-12)
        assert h == 127 / 64

    def test_normalised_graph_agrees(self):
        g = make_grid_demand(5, 3)
        assert conditional_entropy(g.normalized()) == pytest.approx(conditional_entropy(g), abs=1e-12)


graphs = st.dictionaries(
    st.tuples(st.integers(0, 6), st.integers(0, 6)).filter(lambda e: e[0] != e[1]),
    st.integers(1, 40), min_size=1, max_size=25,
)


@given(graphs)
def test_chain_rule_bound(edges):
    rep = graph_entropies(DemandGraph(7, edges))
    assert rep.conditional_yx_bits <= rep.dest_entropy_bits + 1e-12
    assert rep.conditional_xy_bits <= rep.source_entropy_bits + 1e-12
    for v in (rep.entropy_bits, rep.source_entropy_bits, rep.dest_entropy_bits,
              rep.conditional_yx_bits, rep.conditional_xy_bits):
        assert -1e-12 <= v <= math.log2(7) * 2 + 1e-12
    assert rep.source_entropy_bits <= math.log2(7) + 1e-12
    assert rep.dest_entropy_bits <= math.log2(7) + 1e-12
    # H(X,Y) = H(X) + H(Y|X)
    assert rep.entropy_bits == pytest.approx(rep.source_entropy_bits + rep.conditional_yx_bits, abs=1e-9)


@given(graphs, st.permutations(range(7)), st.integers(2, 7))
def test_relabel_and_scale_invariance(edges, perm, c):
    g = DemandGraph(7, edges)
    base = graph_entropies(g)
    moved = graph_entropies(g.relabel(perm))
    scaled = graph_entropies(DemandGraph(7, {e: c * w for e, w in edges.items()}))
    for other in (moved, scaled):
        for name in ("entropy_bits", "source_entropy_bits", "dest_entropy_bits",
                     "conditional_yx_bits", "conditional_xy_bits"):
            assert getattr(other, name) == pytest.approx(getattr(base, name), abs=1e-12)


class TestSequence:
    def test_single_pair(self):
        rep = sequence_entropies(DemandSequence.from_pairs(2, [(0, 1)] * 5))
        assert rep.csv_row()[2:] == ["0"] * 5

    def test_tau_destinations(self):
        rep = sequence_entropies(make_tau_workload(4, 10))
        assert rep.dest_entropy_bits == 2.0
        assert rep.source_entropy_bits == 0.0

    def test_grid_trace(self):
        rep = sequence_entropies(grid_trace(4))
        assert rep.conditional_yx_bits == pytest.approx(1.6258145836939113, abs=1e-6)

    def test_empty(self):
        with pytest.raises(ValueError):
            sequence_entropies(DemandSequence.from_pairs(2, []))

    def test_csv_header(self):
        assert EntropyReport.CSV_HEADER == (
            "n", "m", "H_pair", "H_src", "H_dst", "H_dst_given_src", "H_src_given_dst"
        )

    def test_large_graph_sum_is_stable(self):
        rng = np.random.default_rng(0)
        n = 800
        edges = {}
        while len(edges) < 120_000:
            u, v = rng.integers(0, n, 2)
            if u != v:
                edges[(int(u), int(v))] = 1
        h = graph_entropies(DemandGraph(n, edges)).entropy_bits
        assert h == pytest.approx(math.log2(len(edges)), abs=1e-9)
