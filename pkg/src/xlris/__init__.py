"""XL-RIS massive MIMO uplink: statistical-CSI rate analysis and phase optimization."""

from .config import ConfigError, NumericalError, SystemConfig, dbm_to_watt, \
    half_wavelength_config, watt_to_dbm
from .geometry import array_response_ula, array_response_uspa, correlation_matrix, \
    element_grid, element_position, path_loss, psd_sqrt
from .visibility import VisibilityRegion, build_vr, full_region, index_region, \
    random_region, random_visibility_set, rect_region
from .channel import AngleSet, ChannelRealization, StatisticalChannel, \
    build_scenario, build_statistical_channel, cascaded_channel, \
    complex_normal, los_weights, sample_realization, vr_covariance
from .rates import AuxValues, PhaseConfig, RateReport, aux_values, \
    closed_form_report, interference_term, noise_term, signal_term
from .reduction import ReducedChannel, closed_form_report_reduced, reduce_channel
from .montecarlo import monte_carlo_moments, monte_carlo_report, \
    quartic_trace_identity_error
from .gradients import AuxGradients, aux_gradients, central_difference, \
    grad_f_a, grad_terms, rate_values_and_gradients, trace_phase_gradient
from .optimizer import OptimizeResult, OptimizerConfig, RateObjective, \
    backtracking_step, grad_objective, optimize, smoothed_min, softmin_weights
from .ga import GaConfig, GaResult, ga_optimize
from .experiments import ExperimentSpec, ResultRow, emit_results, load_spec, \
    run_experiment, spec_from_dict

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
