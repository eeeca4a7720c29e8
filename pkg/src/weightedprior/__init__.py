"""Weighted eigenspace-prior reconstruction for sparse-view longitudinal tomography."""

from .analytic import fbp_reconstruct
from .algebraic import AlgebraicOptions, algebraic_reconstruct
from .cs import CsOptions, SparsifyingTransform, cs_reconstruct, solve_theta_subproblem
from .grid import RegionOfInterest, extract_roi, load_raster, save_raster
from .metrics import rmse, ssim
from .phantom import LongitudinalSpec, generate_longitudinal_dataset, okra_spec, potato_spec
from .pipeline import (
    ReconConfig,
    plain_prior_reconstruct,
    reconstruct,
    weighted_prior_reconstruct,
)
from .prior import Eigenspace, build_eigenspace, project_onto_eigenspace, solve_alpha_subproblem
from .projector import (
    ScanGeometry,
    Sinogram,
    back_project,
    dense_system_matrix,
    forward_project,
    parallel_geometry,
)
from .weights import PilotMethod, build_pilot_set, compute_weight_map, simulate_template_sinograms

__version__ = "0.1.0"
