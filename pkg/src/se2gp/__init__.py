"""SE(2)-steerable networks in angular-mode space and their GP kernels."""

from .fields import (BandlimitError, GroupElement, ModeField, PolarGridField,
                     RadialGrid, RadialProfile, TranslationResult,
                     angular_decompose, angular_reconstruct, load_mode_field,
                     mode_field_from_record, mode_field_to_record,
                     random_mode_field, rotate_mode_field, rotate_polar_field,
                     save_mode_field, synth_field, translate_mode_field,
                     translate_polar_field)
from .hankel import (GridMismatchError, HankelTransform, hankel_frequency_grid,
                     hankel_transform_mode, resample_bessel)
from .scnn import (CoordFilter, FilterStack, ForwardRecord, LayerFilters,
                   NetworkConfig, apply_cubic, apply_linear, build_coord_filter,
                   check_kernel_constraint, cubic_window, decompose_output,
                   eval_coord_filter, forward, polar_grid_forward,
                   required_angular_count, sample_filters, window_evolution)
from .kernel import (DiagonalKernel, DiagonalityReport, KernelMatrix,
                     LayerGaussianCov, MomentEstimate, SingleModeReport,
                     analytic_activation_kernel, analytic_closed, analytic_step,
                     diagonality_check, empirical_kernel, gp_sample,
                     input_kernel, load_kernel, moment_oracle, save_kernel,
                     single_mode_check)
from .experiments import (ResultRow, StructuralCheckError, SuiteItem,
                          SuiteReport, SweepSpec, converge_sweep,
                          equivariance_suite, median_rel_err_by_width,
                          rows_to_csv)
from .config import ConfigError, RunConfig, load_run_config

__version__ = "0.1.0"
