"""Marginal evidence probabilities in categorical Bayesian networks.

The core operation is ``marginal(bn, evidence)``: it prunes the network to
the part that matters, splits the remaining hidden nodes into conditionally
independent subsets given the evidence, sums small subsets exactly with a
junction tree, and estimates large ones by importance sampling guided by
loopy belief propagation.  Whole-graph baselines, random-network generators,
a benchmark harness, an incomplete-record classifier, and a text file format
sit on top.
"""

from .decompose import SubsetBoundary, SubsetDecomposition, decompose, find_subsets
from .engine import (
    METHODS,
    MarginalEstimate,
    SgsConfig,
    SubsetReport,
    marginal,
    marginal_sgs,
)
from .errors import (
    ArgumentError,
    BnmargError,
    CapacityError,
    ClassificationError,
    CycleError,
    DataFormatError,
    DomainError,
    InvalidAssignmentError,
    NetworkFormatError,
    ParameterError,
    UnknownNodeError,
)
from .graphs import Dag, UndirectedGraph, d_separated, markov_blanket, moralize
from .junction import build_junction_tree, subset_marginal_exact
from .netformat import parse_dataset, parse_network, serialize_dataset, serialize_network
from .network import (
    CategoricalBN,
    enumerate_marginal,
    sample_forward,
    validate,
    validate_evidence,
)
from .randnet import GenSpec, gen_cpts, gen_dag, gen_network, nrmse, pick_evidence
from .bench import BenchResult, BenchRow, run_benchmark
from .classify import PartialRecord, classify, classify_drop_missing, roc_auc
from .sampling import ImportanceDistribution, SamplerConfig, gibbs_estimate, lbp_is_estimate, loopy_bp

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "BenchResult",
    "BenchRow",
    "BnmargError",
    "CapacityError",
    "CategoricalBN",
    "ClassificationError",
    "CycleError",
    "Dag",
    "DataFormatError",
    "DomainError",
    "GenSpec",
    "ImportanceDistribution",
    "InvalidAssignmentError",
    "METHODS",
    "MarginalEstimate",
    "NetworkFormatError",
    "ParameterError",
    "PartialRecord",
    "SamplerConfig",
    "SgsConfig",
    "SubsetBoundary",
    "SubsetDecomposition",
    "SubsetReport",
    "UndirectedGraph",
    "UnknownNodeError",
    "build_junction_tree",
    "classify",
    "classify_drop_missing",
    "d_separated",
    "decompose",
    "enumerate_marginal",
    "find_subsets",
    "gen_cpts",
    "gen_dag",
    "gen_network",
    "gibbs_estimate",
    "lbp_is_estimate",
    "loopy_bp",
    "marginal",
    "marginal_sgs",
    "markov_blanket",
    "moralize",
    "nrmse",
    "parse_dataset",
    "parse_network",
    "pick_evidence",
    "roc_auc",
    "sample_forward",
    "serialize_dataset",
    "serialize_network",
    "subset_marginal_exact",
    "validate",
    "validate_evidence",
]
