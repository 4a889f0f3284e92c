"""Workbench for demand-oblivious, demand-aware and self-adjusting network designs."""

__version__ = "0.1.0"

from .bsttree import (  # noqa: E402
    AccessResult,
    BstTree,
    build_balanced,
    build_median_tree,
    build_optimal,
    build_weight_balanced,
    serve_sequence,
    splay_access,
)
from .costmodel import RatioReport, evaluate_ratio, run_algorithm  # noqa: E402
from .demand import (  # noqa: E402
    CommRequest,
    DemandGraph,
    DemandSequence,
    Generator,
    build_demand_graph,
    make_grid_demand,
    make_star_demand,
    make_tau_workload,
    sample,
)
from .entropy import EntropyReport, conditional_entropy, empirical_entropy, sequence_entropies  # noqa: E402
from .estimators import (  # noqa: E402
    EgoTreeNetwork,
    GeneratorOptimalBST,
    ObliviousBST,
    ObliviousExpander,
    OfflineOptimalBST,
    SplayBST,
    SplayTreeNetwork,
    StaticOptimalBST,
    StaticOptimalTreeNetwork,
)
from .ledger import CostLedger  # noqa: E402
from .oracles import off_oracle, stat_oracle  # noqa: E402
from .topo import (  # noqa: E402
    EdgeEdit,
    Network,
    apply_edit,
    avg_route_length,
    build_ego_tree_network,
    build_random_regular,
    build_selfadjusting_tree,
    route_length,
    sat_route_and_adjust,
)
