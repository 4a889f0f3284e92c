import io
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sanbench import demand
from sanbench.demand import (
    ROOT,
    DemandSequence,
    TraceFormatError,
    build_demand_graph,
    grid_trace,
    make_grid_demand,
    make_star_demand,
    make_tau_workload,
    sample,
)


def _manhattan_adjacencies(side):
    """Independent count: ordered pairs of cells at Manhattan distance one."""
    cells = [(r, c) for r in range(side) for c in range(side)]
    return {
        (r1 * side + c1, r2 * side + c2)
        for r1, c1 in cells for r2, c2 in cells
        if abs(r1 - r2) + abs(c1 - c2) == 1
    }


class TestDemandGraph:
    def test_single_request(self):
        g = build_demand_graph(DemandSequence.from_pairs(2, [(0, 1)]))
        assert g.edges == {(0, 1): 1}

    def test_counts(self):
        g = build_demand_graph(DemandSequence.from_pairs(3, [(0, 1), (0, 1), (2, 0)]))
        assert g.edges == {(0, 1): 2, (2, 0): 1}

    def test_grid_trace_4x4(self):
        g = build_demand_graph(grid_trace(4))
        assert len(g) == 48
        assert set(g.edges) == _manhattan_adjacencies(4)
        assert set(g.edges.values()) == {1}

    def test_empty(self):
        with pytest.raises(ValueError, match="empty demand"):
            build_demand_graph(DemandSequence.from_pairs(3, []))

    def test_rooted_rejected(self):
        with pytest.raises(ValueError):
            build_demand_graph(make_tau_workload(2, 1))

    @given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)).filter(lambda p: p[0] != p[1]),
                    min_size=1, max_size=60))
    def test_weights_sum_to_m(self, pairs):
        seq = DemandSequence.from_pairs(6, pairs)
        g = build_demand_graph(seq)
        assert g.total_weight == seq.m
        assert g.edges == dict(Counter(pairs))
        assert all(w > 0 for w in g.edges.values())


class TestRequests:
    def test_self_request_rejected(self):
        with pytest.raises(ValueError, match="src == dst"):
            DemandSequence.from_pairs(3, [(1, 1)])

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            DemandSequence.from_pairs(3, [(0, 3)])

    def test_rooted_keys_range(self):
        with pytest.raises(ValueError):
            DemandSequence.from_keys(3, [0])
        with pytest.raises(ValueError):
            DemandSequence.from_keys(3, [4])

    def test_slice_and_concat(self):
        seq = DemandSequence.from_pairs(4, [(0, 1), (1, 2), (2, 3)])
        assert seq[:2].concat(seq[2:]) == seq
        assert seq[1] == (1, 2)


class TestTau:
    def test_small(self):
        seq = make_tau_workload(2, 3)
        assert seq.dst.tolist() == [1, 1, 1, 3, 3, 3]
        assert seq.n == 3 and seq.rooted
        assert set(seq.src.tolist()) == {ROOT}

    def test_k4(self):
        seq = make_tau_workload(4, 1)
        assert seq.dst.tolist() == [1, 3, 5, 7]
        assert seq.n == 15

    def test_k10(self):
        seq = make_tau_workload(10, 1000)
        assert (seq.m, seq.n) == (10_000, 1023)

    def test_k_too_small(self):
        with pytest.raises(ValueError):
            make_tau_workload(1, 5)

    @given(st.integers(2, 9), st.integers(1, 30))
    def test_block_structure(self, k, r):
        dst = make_tau_workload(k, r).dst
        assert int(np.count_nonzero(np.diff(dst))) == k - 1
        assert sorted(set(dst.tolist())) == list(range(1, 2 * k, 2))
        assert len(dst) == k * r


class TestGrid:
    def test_side2(self):
        g = make_grid_demand(2, 1)
        assert (g.n, len(g)) == (4, 8)

    def test_side4(self):
        g = make_grid_demand(4, 1)
        assert (g.n, len(g)) == (16, 48)

    def test_side16_partners(self):
        g = make_grid_demand(16, 1)
        assert g.out_degrees().max() == 4
        assert g.average_degree <= 4

    def test_side_too_small(self):
        with pytest.raises(ValueError):
            make_grid_demand(1, 1)

    def test_rectangular(self):
        g = make_grid_demand(2, 1, width=3)
        assert g.n == 6
        assert len(g) == 2 * (2 * 2 + 3)

    @given(st.integers(2, 12), st.integers(1, 5))
    def test_edge_count(self, side, weight):
        g = make_grid_demand(side, weight)
        assert len(g) == 2 * (2 * side * (side - 1))
        assert g.out_degrees().max() <= 4
        assert set(g.edges.values()) == {weight}
        if side <= 6:
            assert set(g.edges) == _manhattan_adjacencies(side)


class TestStar:
    def test_n3(self):
        g = make_star_demand(3, [1, 1])
        assert g.edges == {(0, 1): 1, (0, 2): 1}

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            make_star_demand(4, [1, 1])


class TestSample:
    def test_point_mass(self):
        gen = demand.iid_generator(2, [(0, 1)], [1.0], seed=3)
        assert sample(gen, 5).requests == [(0, 1)] * 5

    def test_same_seed(self):
        gen = demand.iid_generator(4, [(0, 1), (1, 2), (3, 0)], [0.2, 0.5, 0.3], seed=11)
        a, b = sample(gen, 500), sample(gen, 500)
        assert a == b
        assert demand.dumps_trace(a) == demand.dumps_trace(b)
        assert sample(gen.with_seed(12), 500) != a

    def test_markov_self_transition(self):
        pairs = [(0, 1), (1, 0)]
        gen = demand.markov_generator(2, pairs, [[0.9, 0.1], [0.1, 0.9]], seed=5)
        seq = sample(gen, 10_000)
        states = seq.src
        stay = np.mean(states[1:] == states[:-1])
        assert abs(stay - 0.9) <= 0.02

    def test_iid_frequencies(self):
        gen = demand.iid_generator(3, [(0, 1), (1, 2)], [0.25, 0.75], seed=1)
        seq = sample(gen, 20_000)
        assert abs(np.mean(seq.src == 1) - 0.75) < 0.02

    def test_bad_matrix(self):
        with pytest.raises(ValueError):
            demand.markov_generator(2, [(0, 1), (1, 0)], [[0.9, 0.2], [0.1, 0.9]])
        with pytest.raises(ValueError):
            demand.iid_generator(2, [(0, 1)], [0.5])
        with pytest.raises(ValueError):
            demand.iid_generator(3, [(0, 1), (1, 2)], [1.5, -0.5])

    def test_stationary(self):
        gen = demand.markov_generator(2, [(0, 1), (1, 0)], [[0.5, 0.5], [0.25, 0.75]])
        np.testing.assert_allclose(gen.stationary(), [1 / 3, 2 / 3])

    def test_key_generator_rooted(self):
        seq = sample(demand.key_generator(5, demand.zipf_probs(5, 1.0), seed=2), 100)
        assert seq.rooted and seq.dst.min() >= 1 and seq.dst.max() <= 5

    @given(st.integers(0, 2**63 - 1), st.integers(1, 200))
    def test_determinism(self, seed, m):
        gen = demand.product_generator([0.5, 0.3, 0.2], [0.1, 0.1, 0.8], seed=seed)
        assert demand.dumps_trace(sample(gen, m)) == demand.dumps_trace(sample(gen, m))


class TestFiles:
    def test_trace_roundtrip(self):
        seq = DemandSequence.from_pairs(5, [(0, 1), (4, 2), (3, 0)])
        buf = io.StringIO()
        demand.write_trace(seq, buf)
        assert buf.getvalue().splitlines()[0] == "n=5 m=3"
        assert demand.read_trace(io.StringIO(buf.getvalue())) == seq

    def test_rooted_roundtrip(self):
        seq = make_tau_workload(3, 2)
        buf = io.StringIO()
        demand.write_trace(seq, buf)
        assert demand.read_trace(io.StringIO(buf.getvalue())) == seq

    def test_graph_roundtrip(self):
        g = make_star_demand(4, [3, 2, 1])
        buf = io.StringIO()
        demand.write_graph(g, buf)
        assert demand.read_graph(io.StringIO(buf.getvalue())) == g

    def test_malformed_line_number(self):
        text = "n=4 m=2\n0 1\n2 x\n"
        with pytest.raises(TraceFormatError) as info:
            demand.read_trace(io.StringIO(text))
        assert info.value.lineno == 3
        assert "line 3" in str(info.value)

    def test_count_mismatch(self):
        with pytest.raises(TraceFormatError):
            demand.read_trace(io.StringIO("n=4 m=3\n0 1\n"))
