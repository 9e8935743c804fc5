"""Modular model-order reduction driven by interconnected error requirements."""

from .freqresp import (FrequencyGrid, NominalMatrix, compute_N, compute_N_grid,
                       hinf_norm_estimate, make_log_grid, sigma_max)
from .lti import (InterconnectedSystem, ModelError, StateSpaceModel, freq_response,
                  freq_response_grid, lft_close, lft_response)
from .reduction import (ReductionError, ReductionResult, balanced_truncation,
                        fw_balanced_truncation, hankel_singular_values, reduce_to_requirement,
                        solve_lyapunov)
from .synthesis import (RequirementSpec, ScalingSolution, SynthesisError, SynthesisInfeasible,
                        build_interconnected_requirement, synthesize_frequency,
                        synthesize_requirements, theorem1_check)
from .validation import RequirementReport, emit_bode_data, validate_pipeline

__version__ = "0.1.0"
