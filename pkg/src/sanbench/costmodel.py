"""Running algorithms on demands and measuring optimality ratios against baselines."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone

from .bsttree import BstTree
from .demand import DemandSequence, Generator, sample
from .estimators import SANAlgorithm, check_demand
from .ledger import CostLedger
from .oracles import off_oracle, stat_oracle
from .topo import Network, SelfAdjustingTreeNetwork

RATIO_KINDS = ("static", "dynamic", "learning")
DEFAULT_LENGTHS = (100, 1000, 10_000)

__all__ = [
    "CostLedger", "IncompatibleAlgorithm", "RatioReport", "evaluate_ratio", "off_oracle",
    "run_algorithm", "stat_oracle",
]


class IncompatibleAlgorithm(ValueError):
    """Algorithm, topology class and demand do not fit together."""


def _topology_of(config) -> str | None:
    if config is None:
        return None
    if isinstance(config, BstTree):
        return "bst"
    if isinstance(config, (Network, SelfAdjustingTreeNetwork)):
        return "network"
    raise IncompatibleAlgorithm(f"unsupported initial configuration {type(config).__name__}")


def run_algorithm(alg: SANAlgorithm, N0, seq) -> CostLedger:
    """Serve ``seq`` with a fresh copy of ``alg`` starting from configuration ``N0``.

    OBL serves on ``N0`` unchanged, ON and OFF start from it, STAT and GEN
    pick their own fixed configuration (``N0`` is only checked for class).
    """
    topo = _topology_of(N0)
    if topo is not None and topo != alg.topology:
        raise IncompatibleAlgorithm(f"{type(alg).__name__} runs on {alg.topology} topologies, not {topo}")
    try:
        seq = check_demand(seq, rooted=alg.topology == "bst")
    except ValueError as exc:
        raise IncompatibleAlgorithm(str(exc)) from None
    est = clone(alg)
    if N0 is not None and alg.kind in ("OBL", "ON", "OFF"):
        if "initial" not in est.get_params():
            raise IncompatibleAlgorithm(f"{type(alg).__name__} has no initial configuration")
        init = N0
        if alg.kind == "ON" and alg.topology == "network" and not isinstance(N0, SelfAdjustingTreeNetwork):
            raise IncompatibleAlgorithm("the self-adjusting tree network must start from a BST-ordered tree")
        if alg.kind == "OBL" and isinstance(N0, SelfAdjustingTreeNetwork):
            init = N0.to_network()
        est.set_params(initial=init)
    return est.fit(seq).serve(seq)


@dataclass(frozen=True)
class RatioReport:
    kind: str
    scenario: str
    rho: float
    beta: float
    numerator_cost: float
    denominator_cost: float
    m: int
    n: int
    seed: int
    ratios: tuple = field(default=(), compare=False)
    ci: tuple | None = field(default=None, compare=False)

    CSV_HEADER = ("kind", "scenario", "rho", "beta", "numerator", "denominator", "m", "n", "seed")

    def csv_row(self) -> list[str]:
        return [
            self.kind, self.scenario, _num(self.rho), _num(self.beta), _num(self.numerator_cost),
            _num(self.denominator_cost), str(self.m), str(self.n), str(self.seed),
        ]


def _num(x) -> str:
    x = float(x)
    return f"{x:.10f}".rstrip("0").rstrip(".") if x != int(x) else str(int(x))


def _lengths_for(m: int, lengths) -> list[int]:
    return sorted({L for L in lengths if L < m} | {m})


def _prefix_costs(alg: SANAlgorithm, seq: DemandSequence, lengths: list[int]) -> list[int]:
    """Total cost of ``alg`` on each prefix; hindsight algorithms are refitted per prefix."""
    if alg.kind in ("STAT", "OFF"):
        return [clone(alg).fit(seq[:L]).serve(seq[:L]).total for L in lengths]
    ledger = clone(alg).fit(seq).serve(seq)
    return [ledger.prefix_total(L) for L in lengths]


def _instance_points(args):
    on_alg, baseline, seq, lengths = args
    Ls = _lengths_for(seq.m, lengths)
    num = _prefix_costs(on_alg, seq, Ls)
    den = _prefix_costs(baseline, seq, Ls)
    return Ls, num, den


def _learning_points(args):
    on_alg, baseline, gen, seed, lengths = args
    g = gen.with_seed(seed)
    seq = sample(g, max(lengths))
    base = clone(baseline)
    if "generator" in base.get_params():
        base.set_params(generator=g)
    Ls = sorted(lengths)
    return Ls, _prefix_costs(on_alg, seq, Ls), _prefix_costs(base, seq, Ls)


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def fit_additive_term(num, den, groups=None) -> tuple[np.ndarray, float]:
    """Least-squares fit ``num = slope[group] * den + beta`` with one shared intercept.

    Each instance (group) keeps its own slope, so beta only absorbs the
    part of the on-line cost that does not grow with sequence length.
    Returns (slopes per group, beta).
    """
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    groups = np.zeros(num.size, dtype=np.int64) if groups is None else np.asarray(groups)
    labels, col = np.unique(groups, return_inverse=True)
    if np.array_equal(num, den):
        return np.ones(labels.size), 0.0
    A = np.zeros((num.size, labels.size + 1))
    A[np.arange(num.size), col] = den
    A[:, -1] = 1.0
    if num.size <= labels.size or np.linalg.matrix_rank(A) < A.shape[1]:
        slopes = np.array([num[col == g].sum() / den[col == g].sum() for g in range(labels.size)])
        return slopes, 0.0
    coef, *_ = np.linalg.lstsq(A, num, rcond=None)
    return coef[:-1], float(coef[-1])


def evaluate_ratio(kind: str, on_alg: SANAlgorithm, baseline: SANAlgorithm, instances, *,
                   lengths=DEFAULT_LENGTHS, seeds=range(30), scenario: str = "", seed: int = 0,
                   workers: int = 1, n_boot: int = 2000) -> RatioReport:
    """Measured competitive ratio of ``on_alg`` against ``baseline``.

    ``static`` and ``dynamic`` take a list of DemandSequences; ``learning``
    takes a list of Generators and compares expected costs over ``seeds``.
    The additive term beta is the intercept of a least-squares fit of
    on-cost against baseline cost across prefix lengths (static, learning)
    and zero for ``dynamic``.  rho is the largest per-instance ratio
    ``(on - beta) / baseline`` at full length.
    """
    if kind not in RATIO_KINDS:
        raise ValueError(f"kind must be one of {RATIO_KINDS}")
    if on_alg.topology != baseline.topology:
        raise IncompatibleAlgorithm("on-line algorithm and baseline use different topology classes")
    instances = list(instances)
    if not instances:
        raise ValueError("no instances to evaluate")

    if kind == "learning":
        if not all(isinstance(g, Generator) for g in instances):
            raise IncompatibleAlgorithm("learning ratios are taken over generators")
        seeds = list(seeds)
        jobs = [(on_alg, baseline, g, s, tuple(lengths)) for g in instances for s in seeds]
        results = _map(_learning_points, jobs, workers)
        Ls = results[0][0]
        per_gen = []
        for i in range(len(instances)):
            block = results[i * len(seeds):(i + 1) * len(seeds)]
            num = np.array([r[1] for r in block], dtype=float)  # seeds x lengths
            den = np.array([r[2] for r in block], dtype=float)
            per_gen.append((num, den))
        pts_num = np.concatenate([num.mean(axis=0) for num, _ in per_gen])
        pts_den = np.concatenate([den.mean(axis=0) for _, den in per_gen])
        pts_grp = np.repeat(np.arange(len(per_gen)), len(Ls))
        _, beta = fit_additive_term(pts_num, pts_den, pts_grp)
        full_num = np.array([num[:, -1].mean() for num, _ in per_gen])
        full_den = np.array([den[:, -1].mean() for _, den in per_gen])
        if np.any(full_den == 0):
            raise ValueError("zero baseline cost")
        ratios = (full_num - beta) / full_den
        worst = int(np.argmax(ratios))
        num_w, den_w = per_gen[worst][0][:, -1], per_gen[worst][1][:, -1]
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, len(seeds), size=(n_boot, len(seeds)))
        boot = (num_w[idx].mean(axis=1) - beta) / den_w[idx].mean(axis=1)
        ci = (float(np.quantile(boot, 0.025)), float(np.quantile(boot, 0.975)))
        return RatioReport(
            kind, scenario, float(ratios[worst]), beta, float(full_num[worst]), float(full_den[worst]),
            Ls[-1], instances[worst].n, seed, tuple(float(r) for r in ratios), ci,
        )

    if not all(isinstance(s, DemandSequence) for s in instances):
        raise IncompatibleAlgorithm(f"{kind} ratios are taken over demand sequences")
    use_lengths = tuple(lengths) if kind == "static" else ()
    jobs = [(on_alg, baseline, s, use_lengths) for s in instances]
    results = _map(_instance_points, jobs, workers)
    full_num = np.array([r[1][-1] for r in results], dtype=float)
    full_den = np.array([r[2][-1] for r in results], dtype=float)
    if np.any(full_den == 0):
        raise ValueError("zero baseline cost")
    if kind == "static":
        _, beta = fit_additive_term(
            [c for r in results for c in r[1]],
            [c for r in results for c in r[2]],
            [i for i, r in enumerate(results) for _ in r[0]],
        )
    else:
        beta = 0.0
    ratios = (full_num - beta) / full_den
    worst = int(np.argmax(ratios))
    return RatioReport(
        kind, scenario, float(ratios[worst]), beta, float(full_num[worst]), float(full_den[worst]),
        instances[worst].m, instances[worst].n, seed, tuple(float(r) for r in ratios),
    )
