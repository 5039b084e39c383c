"""Graph summarization with approximate regular partitions and spectral search."""

__version__ = "0.1.0"

from .graph import (
    ContractError,
    EdgeListError,
    Graph,
    bipartite_degrees,
    edge_density,
    internal_density,
    load_edge_list,
    save_edge_list,
)
from .reconstruction import blow_up, density_matrix, reconstruction_error
from .regularity import EquitablePartition, PairVerdict, check_all_pairs, check_pair, sze_idx
from .search import (
    SpectralSignature,
    SummaryStore,
    db_add,
    db_query,
    one_stage_query,
    spectral_distance,
    spectrum,
)
from .summarizer import ReducedGraph, SummaryConfig, SummaryFailed, summarize
from .synthetic import GeneratorConfig, generate, perturb

__all__ = [
    "ContractError", "EdgeListError", "Graph", "bipartite_degrees", "edge_density",
    "internal_density", "load_edge_list", "save_edge_list", "blow_up", "density_matrix",
    "reconstruction_error", "EquitablePartition", "PairVerdict", "check_all_pairs",
    "check_pair", "sze_idx", "SpectralSignature", "SummaryStore", "db_add", "db_query",
    "one_stage_query", "spectral_distance", "spectrum", "ReducedGraph", "SummaryConfig",
    "SummaryFailed", "summarize", "GeneratorConfig", "generate", "perturb",
]
