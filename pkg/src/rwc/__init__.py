"""Random walk centrality: exact oracle, pivot reformulation and two fast engines."""

__version__ = "0.1.0"

from .apprwc import DiagEstimates, app_rwc
from .exact import exact_diag_Lv_inv, exact_hitting_time, exact_rwc
from .fastchol import FastCholParams, fastchol, ichol
from .fastwalk import fastwalk, sample_size, spectral_radius_Pv, theta_for, wilson_sample
from .graph import Graph, from_edges, largest_connected_component, load_edge_list, max_degree_node
from .linalg import SolverError, lap_solve
from .metrics import compare, kendall_tau, mean_relative_error
from .result import CentralityResult

__all__ = [
    "CentralityResult",
    "DiagEstimates",
    "FastCholParams",
    "Graph",
    "SolverError",
    "app_rwc",
    "compare",
    "exact_diag_Lv_inv",
    "exact_hitting_time",
    "exact_rwc",
    "fastchol",
    "fastwalk",
    "from_edges",
    "ichol",
    "kendall_tau",
    "lap_solve",
    "largest_connected_component",
    "load_edge_list",
    "max_degree_node",
    "mean_relative_error",
    "sample_size",
    "spectral_radius_Pv",
    "theta_for",
    "wilson_sample",
]
