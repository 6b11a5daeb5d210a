"""Optomechanical backaction, thermometry, and tracking for third-sound modes."""

from .params import (
    CONSTANTS,
    PhysicalConstants,
    MechanicalMode,
    OpticalCavity,
    DriveField,
    PhotothermalCoupling,
    SystemParams,
    params_from_config,
    params_to_config,
    config_digest,
    photon_flux,
    intracavity_amplitude,
    intracavity_photon_number,
    photon_number_slope,
    zero_point_motion,
)
from .film import (
    SuperfluidFilm,
    NonEquilibriumBath,
    PowerLawFit,
    third_sound_speed,
    bessel_zeta,
    mode_frequency,
    bath_temperature,
    bath_coupling,
    bath_heat_load,
    final_temperature,
    fit_power_law,
)
from .backaction import (
    BackactionPoint,
    BackactionFit,
    cavity_response,
    response_product,
    bare_susceptibility,
    effective_susceptibility,
    photothermal_kernel,
    photothermal_filter,
    coupling_scale,
    prefactor_A,
    delta_omega_m,
    delta_gamma_m,
    detuning_sweep,
    fit_detuning_sweep,
    with_detuning,
    with_power,
)
from .langevin import (
    SimConfig,
    SimState,
    SimTrace,
    simulate,
    replay,
    sim_config_hash,
    thermal_force_amplitude,
)
from ._kernels import active_backend
from .spectral import (
    Psd,
    SpectrumFit,
    welch_psd,
    fit_mode,
    snr_vs_time,
    lorentzian_psd,
    thermal_displacement_psd,
)
from .tracker import (
    WienerFilter,
    PhaseSpaceTrack,
    TrackStatistics,
    design_wiener,
    demodulate,
    track_statistics,
)

__version__ = "0.1.0"
