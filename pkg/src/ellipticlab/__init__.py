"""Elliptic random matrices: sampling, limit laws, outliers and block transforms."""

from .atoms import AtomPairSpec, TruncatedAtomSpec, atom_moments, sample_atom_pair, truncate_atoms
from .blockstieltjes import BlockPoint, BlockTransform, density_nu, solve_gamma, support_gap
from .ensemble import EllipticMatrix, LowRankFactors, PerturbationSpec, build_perturbation, factor_low_rank, hermitize, sample_elliptic
from .errors import (
    BranchError,
    ConditioningError,
    ConfigurationError,
    DimensionError,
    DomainError,
    EllipticLabError,
    NoOutlierPreimageError,
    RankError,
    SolverError,
    TruncationLevelError,
)
from .experiments import EXPERIMENTS, ExperimentConfig, ExperimentReport
from .limitlaw import EllipseGeometry, dist_to_ellipse, in_ellipse, inverse_outlier_map, m_of_z, outlier_map, predict_outliers
from .spectra import eigenvalues, epsilon_net, least_singular, resolvent_bilinear, singular_values

__version__ = "0.1.0"
