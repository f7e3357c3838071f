"""Spectral and spherical spectral clustering of summed multi-layer networks."""

from .cluster import RowClustering, approx_kmeans, approx_kmedian, normalize_rows
from .eigensolve import Embedding, leading_eigenpairs, scree_values
from .errors import SumSpecError
from .estimate import estimate_B, estimate_pi
from .evaluate import (
    EvalReport,
    TheoremDiagnostics,
    gamma_n,
    heterogeneity_tau,
    misclassification,
    spectral_norm_deviation,
    theorem_diagnostics,
)
from .genmodel import (
    ModelParams,
    check_sum_nonsingular,
    expected_sum_matrix,
    normalize_psi,
    sample_ddcbm_layer,
    sample_dsbm_layer,
    sample_memberships,
    sample_stack,
)
from .membership import GroundTruth, MembershipMatrix, extend_membership
from .netcore import (
    LayerStack,
    SparseSymGraph,
    TruncationResult,
    aggregate_sum,
    average_degree,
    from_edge_list,
    load_manifest,
    read_edge_list,
    truncate_by_degree,
)
from .pipeline import Options, algorithm1, algorithm2, detect, detect_matrix

__version__ = "0.1.0"
