"""Sparse modal and layer recovery from generalized-delay interferometry."""

from .delay import (DiagonalDelay, KernelOperator, OpticalParams, apply_operator, diagonal_delay,
                    fresnel_kernel, frft_delay, frft_kernel, slm_cascade_frft, slm_phase_kernel)
from .grid import (BasisSpec, CoefficientVector, Field, Grid, Grid2D, analyze_field,
                   flipped_gaussian_mode, hermite_gaussian_mode, synthesize_field)
from .interferometer import (Interferogram, SampleArm, add_noise, analytic_interferogram,
                             field_interferogram, normalize_measurements)
from .postprocess import extract_d_coefficients, extract_layers
from .sensing import (DelaySchedule, SensingMatrix, build_block_matrix, build_cosine_matrix,
                      build_oct_dictionary, nyquist_schedule, sample_delays_uniform)
from .solvers import (RecoveryProblem, RecoveryResult, basis_pursuit, dantzig_selector,
                      ft_baseline, lasso, least_squares, recovery_error)

__version__ = "0.1.0"
