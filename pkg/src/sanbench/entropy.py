"""Empirical and conditional entropies of demand, in bits."""
from __future__ import annotations

import math
from collections import Counter
from collections.abc import Mapping
from dataclasses import astuple, dataclass

from .demand import DemandGraph, DemandSequence, build_demand_graph


@dataclass(frozen=True)
class EntropyReport:
    n: int
    m: float
    entropy_bits: float
    source_entropy_bits: float
    dest_entropy_bits: float
    conditional_yx_bits: float
    conditional_xy_bits: float

    CSV_HEADER = ("n", "m", "H_pair", "H_src", "H_dst", "H_dst_given_src", "H_src_given_dst")

    def csv_row(self) -> list[str]:
        return [_fmt(v) for v in astuple(self)]


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10f}".rstrip("0").rstrip(".") or "0"
    return str(v)


def empirical_entropy(counts) -> float:
    """Shannon entropy of a frequency table; accepts a mapping or an iterable of counts."""
    values = list(counts.values()) if isinstance(counts, Mapping) else list(counts)
    if not values:
        raise ValueError("empirical entropy of an empty distribution")
    if any(c < 0 for c in values):
        raise ValueError("counts must be non-negative")
    total = math.fsum(values)
    if total <= 0:
        raise ValueError("counts sum to zero")
    terms = [c / total * math.log2(total / c) for c in values if c > 0]
    return max(0.0, math.fsum(terms))


def _conditional(groups: Mapping, total: float) -> float:
    terms = []
    for row in groups.values():
        weight = math.fsum(row.values())
        terms.append(weight / total * empirical_entropy(row))
    return max(0.0, math.fsum(terms))


def conditional_entropy(g: DemandGraph) -> float:
    """Entropy of the destination given the source, weighted by source activity."""
    if not g.edges:
        raise ValueError("empty demand graph")
    return _conditional(g.out_weights(), math.fsum(g.edges.values()))


def graph_entropies(g: DemandGraph) -> EntropyReport:
    if not g.edges:
        raise ValueError("empty demand graph")
    total = math.fsum(g.edges.values())
    out_w, in_w = g.out_weights(), g.in_weights()
    src = {u: math.fsum(r.values()) for u, r in out_w.items()}
    dst = {v: math.fsum(r.values()) for v, r in in_w.items()}
    m = g.total_weight
    return EntropyReport(
        n=g.n,
        m=m,
        entropy_bits=empirical_entropy(g.edges),
        source_entropy_bits=empirical_entropy(src),
        dest_entropy_bits=empirical_entropy(dst),
        conditional_yx_bits=_conditional(out_w, total),
        conditional_xy_bits=_conditional(in_w, total),
    )


def sequence_entropies(seq: DemandSequence) -> EntropyReport:
    if seq.m == 0:
        raise ValueError("empty demand")
    if not seq.rooted:
        return graph_entropies(build_demand_graph(seq))
    # rooted searches: one source, so pair entropy collapses to the key entropy
    h_dst = empirical_entropy(Counter(seq.dst.tolist()))
    return EntropyReport(seq.n, seq.m, h_dst, 0.0, h_dst, h_dst, 0.0)
