"""Maximal amplification factors of directed multihypergraphs."""

from hyperamp.classify import (
    NodeTaxonomy,
    UnclassifiableNode,
    classify_nodes,
    format_taxonomy,
    taxonomy_to_json,
)
from hyperamp.datasets import (
    CORES,
    CoreDefinition,
    core_subnet,
    dataset_path,
    list_datasets,
    load_dataset,
)
from hyperamp.hypergraph import (
    Hypergraph,
    IntensityVector,
    NodeSet,
    SelfSufficiencyReport,
    Subhypergraph,
    apply_intensity,
    check_self_sufficiency,
    net_matrix,
    restrict,
)
from hyperamp.io import (
    NetworkDocument,
    ParseError,
    RunRecord,
    detect_format,
    document_from_payload,
    document_to_payload,
    format_reaction,
    load_network,
    network_digest,
    parse_reaction,
    record_run,
    replay,
    save_network,
)
from hyperamp.lp import (
    LinearProgram,
    MixedIntegerProgram,
    NodeLimitError,
    NumericalError,
    SimplexStallError,
    SolveResult,
    SolveStatus,
    SolverError,
    solve_lp,
    solve_milp,
    to_lp_text,
)
from hyperamp.maf import (
    AmplificationClass,
    IterationRecord,
    MafConfig,
    MafResult,
    NotSelfSufficient,
    ZeroDenominator,
    amplification_factor,
    bisection_maf,
    classify_amplification,
    compute_maf,
    write_trace,
)
from hyperamp.preprocess import (
    Component,
    ComponentSet,
    ReductionReport,
    component_hypergraph,
    components,
    reduce,
    reduce_protected,
    solve_by_components,
)
from hyperamp.subnet import (
    FeatureSpec,
    NoSelfSufficientSubnet,
    SubnetSolution,
    build_master,
    find_max_subnet,
    first_self_amplifying,
    lift_solution,
)

__all__ = [
    "AmplificationClass",
    "CORES",
    "Component",
    "ComponentSet",
    "CoreDefinition",
    "FeatureSpec",
    "Hypergraph",
    "IntensityVector",
    "IterationRecord",
    "LinearProgram",
    "MafConfig",
    "MafResult",
    "MixedIntegerProgram",
    "NetworkDocument",
    "NoSelfSufficientSubnet",
    "NodeLimitError",
    "NodeSet",
    "NodeTaxonomy",
    "NotSelfSufficient",
    "NumericalError",
    "ParseError",
    "ReductionReport",
    "RunRecord",
    "SelfSufficiencyReport",
    "SimplexStallError",
    "SolveResult",
    "SolveStatus",
    "SolverError",
    "Subhypergraph",
    "SubnetSolution",
    "UnclassifiableNode",
    "ZeroDenominator",
    "amplification_factor",
    "apply_intensity",
    "bisection_maf",
    "build_master",
    "check_self_sufficiency",
    "classify_amplification",
    "classify_nodes",
    "component_hypergraph",
    "components",
    "compute_maf",
    "core_subnet",
    "dataset_path",
    "detect_format",
    "document_from_payload",
    "document_to_payload",
    "find_max_subnet",
    "first_self_amplifying",
    "format_reaction",
    "format_taxonomy",
    "lift_solution",
    "list_datasets",
    "load_dataset",
    "load_network",
    "net_matrix",
    "network_digest",
    "parse_reaction",
    "record_run",
    "reduce",
    "reduce_protected",
    "replay",
    "restrict",
    "save_network",
    "solve_by_components",
    "solve_lp",
    "solve_milp",
    "taxonomy_to_json",
    "to_lp_text",
    "write_trace",
]

__version__ = "0.1.0"
