"""Reconstruction of weighted directed networks from their row and column sums."""

from .core import (BinaryStructure, CovariateMatrix, DensityTarget, MarginalVector,
                   ReconstructionResult, TimeSeriesDataset, WeightedNetwork, binarize,
                   binary_degrees, compute_marginals, covariate_gdp_pair, covariate_lag_log,
                   density, routing_matrix, threshold_binarize)
from .entropy import (IpfpResult, estimate_covariate_coefficient, ipfp_covariate_fit, ipfp_fit,
                      poisson_edge_probabilities)
from .errors import (Cancelled, DegenerateCovariateWarning, DegenerateLabels, DimensionMismatch,
                     DomainError, InvalidMarginals, NoFeasibleStart, NonConvergence, NoPositives,
                     ReconstructionError, ScalingDiverged, StructureInfeasible, TargetUnreachable,
                     ZeroTotal)
from .gravity import (CalibratedAlpha, DcGravityResult, FitnessSpec, calibrate_alpha,
                      dc_gravity_reconstruct, dc_gravity_values, edge_probabilities, gravity_fit,
                      sample_binary)
from .hierarchical import (HierarchicalConfig, HierarchicalResult, fit_probabilities,
                           hierarchical_reconstruct, sample_network)
from .lasso import LassoPath, lasso_fit, lasso_path, tau_max, tau_search
from .metrics import (BrierDecomposition, EvaluationReport, brier_decomposition, degree_rmse,
                      evaluate, pr_auc, roc_auc, value_errors)
from .mindens import MindensConfig, MindensMember, mindens_best, mindens_lower_bound, mindens_run
from .tomogravity import TomogravityConfig, TomogravityResult, tomogravity_fit, tomogravity_loss

__version__ = "0.1.0"
