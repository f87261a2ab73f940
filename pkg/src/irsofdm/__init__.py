"""Simulator and optimizer for reflecting-surface-assisted wideband
multiuser MISO-OFDM downlinks with a frequency-dependent element model."""

from .reflection import (
    CircuitParams, FitParams, CarrierGrid, PhaseCodebook,
    impedance, reflection_coefficient, reflection_from_impedance,
    phase_slope, phase_intercept, reflection_phase, reflection_amplitude,
    reflection_at, ideal_reflection_at, response_table, wrap_phase,
    DEFAULT_FIT, DEFAULT_CIRCUIT, FREE_SPACE_IMPEDANCE, AMPLITUDE_FLOOR,
)
from .config import (
    Geometry, PathLoss, SystemConfig,
    paper_defaults, desk_defaults, tiny_defaults,
    db_to_linear, linear_to_db, dbm_to_watts,
)
from .channel import (
    TapChannels, FreqChannels, ChannelSet,
    element_distances, fading, sample_taps, taps_to_freq, sample_channels,
    dft_matrix, end_to_end_receive, save_channels, load_channels,
)
from .metrics import (
    Solution, effective_channel, effective_rows, sinr, average_sum_rate,
    mse, wmmse_objective, optimal_equalizers,
)
from .solver import (
    SolverOptions, BlockState, PhaseSubproblem, SolverError,
    update_mse_weights, update_equalizers, update_beamformers,
    build_phase_subproblem, subband_objective, three_phase_minimize,
    search_phase_continuous, search_phase_discrete, update_phases,
    mmse_initialize, solve,
)
from .schemes import (
    SCHEME_TAGS, design_proposed, design_ideal, design_amplitude_only,
    design_random_theta, design_no_irs, run_scheme, evaluate_solution,
)

__version__ = "0.1.0"
