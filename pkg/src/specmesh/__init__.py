"""Spectral convolutional networks on triangle meshes.

Core pieces: cotan Laplace-Beltrami / graph-Laplacian operators, polynomial
spectral filters (Chebyshev, Laguerre, normalized Hermite), an exact dense
spectral oracle, multilevel coarsening with binary-tree pooling, and a
manually differentiated spectral CNN.
"""

from .coarsen import (
    CoarseningHierarchy,
    Matching,
    build_hierarchy,
    coarsen_operator,
    greedy_match,
    normalized_cut_weight,
    pool_signal,
    unpool_signal,
)
from .data import LabeledSignals, generate_bump_dataset, load_signals_csv, split_grouped
from .errors import NumericalError, SpecmeshError, UserError
from .kernels import backend_name
from .mesh import (
    UNREACHABLE,
    TriMesh,
    ValidationReport,
    generate_icosphere,
    load_off,
    ring_distance,
    ring_distances,
    save_off,
    validate,
)
from .network import (
    LayerSpec,
    Metrics,
    SpectralMeshModel,
    TrainConfig,
    evaluate,
    train,
)
from .operators import (
    LBOperator,
    NormalizedOperator,
    StiffnessAndMass,
    assemble_cotan,
    assemble_graph_laplacian,
    estimate_lambda_max,
    lb_operator,
    normalize,
)
from .oracle import EigenSystem, eig_decompose, forward_coeffs, spectral_filter
from .poly import (
    FilterCoefficients,
    eval_poly_recurrence,
    eval_poly_scalar,
    filter_apply,
    impulse_response,
    poly_basis_apply,
)

__version__ = "0.1.0"
