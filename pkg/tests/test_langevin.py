"""Stochastic integrator physics: equipartition, spectra, delay, instability."""

import math

import numpy as np
import pytest

from thirdsound import backaction as ba
from thirdsound import spectral as sp
from thirdsound.langevin import SimConfig, SimState, simulate
from thirdsound.params import (CONSTANTS, DriveField, MechanicalMode,
                               OpticalCavity, PhotothermalCoupling,
                               SystemParams, intracavity_photon_number,
                               photon_number_slope)

TWO_PI = 2.0 * math.pi


def make_params(beta=0.0, tau_t_s=0.0, detuning_over_kappa=-0.58,
                power_w=1e-15, gamma_m_hz=2000.0, kappa_in_hz=11.15e6,
                temperature_k=0.53):
    return SystemParams(
        mode=MechanicalMode(omega_m_hz=100e3, gamma_m_hz=gamma_m_hz,
                            m_eff_kg=1e-18, temperature_k=temperature_k),
        cavity=OpticalCavity(kappa_in_hz=kappa_in_hz, kappa_0_hz=kappa_in_hz,
                             detuning_over_kappa=detuning_over_kappa),
        drive=DriveField(power_w=power_w, wavelength_m=1555.1e-9),
        photothermal=PhotothermalCoupling(g_hz_per_m=1.3e14, beta=beta,
                                          absorption=1.0, tau_t_s=tau_t_s),
    )


@pytest.fixture(scope="module")
def thermal_trace():
    """Long undriven thermal record with a shot-noise floor on the homodyne."""
    config = SimConfig(params=make_params(), duration=2.0, sample_rate=2.5e6,
                       seed=101, shot_noise_floor=1e-22)
    return config, simulate(config)


def test_equipartition(thermal_trace):
    config, trace = thermal_trace
    assert not trace.unstable
    mode = config.params.mode
    var_target = (CONSTANTS.k_B * mode.temperature_k
                  / (mode.m_eff_kg * mode.omega_m ** 2))
    assert float(np.var(trace.x_samples)) == pytest.approx(var_target, rel=0.05)
    assert abs(float(np.mean(trace.x_samples))) < 0.05 * math.sqrt(var_target)


def test_psd_matches_analytic_lineshape(thermal_trace):
    config, trace = thermal_trace
    psd = sp.welch_psd(trace, segment_length=1 << 16, channel="x")
    model = sp.thermal_displacement_psd(config.params, psd.frequencies)

    def band_mean(values, lo, hi):
        m = (psd.frequencies >= lo) & (psd.frequencies <= hi)
        return float(np.mean(values[m]))

    # on-resonance band and the off-resonant tail
    for lo, hi, tol in ((94e3, 106e3, 0.05), (150e3, 200e3, 0.10)):
        assert band_mean(psd.values, lo, hi) == pytest.approx(
            band_mean(model, lo, hi), rel=tol)


def test_homodyne_floor_level(thermal_trace):
    config, trace = thermal_trace
    psd_h = sp.welch_psd(trace, segment_length=4096, channel="homodyne")
    psd_x = sp.welch_psd(trace, segment_length=4096, channel="x")
    m = (psd_h.frequencies >= 180e3) & (psd_h.frequencies <= 220e3)
    # the stored floor is double-sided; a single-sided PSD reads 2x that
    floor_ss = 2.0 * config.shot_noise_floor
    assert float(np.mean(psd_h.values[m])) == pytest.approx(floor_ss, rel=0.05)
    assert float(np.mean(psd_x.values[m])) < 0.05 * floor_ss


def test_homodyne_equals_x_without_floor():
    config = SimConfig(params=make_params(), duration=2e-3, sample_rate=2.5e6,
                       seed=5)
    trace = simulate(config)
    assert np.array_equal(trace.homodyne_samples, trace.x_samples)
    assert not np.shares_memory(trace.homodyne_samples, trace.x_samples)
    assert trace.times[0] == 0.0
    assert trace.times[1] - trace.times[0] == pytest.approx(trace.dt, rel=1e-15)
    assert len(trace.times) == len(trace.x_samples) == 5000


def test_backaction_cools_the_adiabatic_variance():
    # red-detuned drive: variance drops by (gamma_m/gamma_eff)*(w_m/w_eff)^2
    params = make_params(beta=5.0, tau_t_s=600e-9, power_w=1e-6)
    w_m = params.mode.omega_m
    w_eff = w_m + float(ba.delta_omega_m(params, w_m))
    g_eff = params.mode.gamma_m + float(ba.delta_gamma_m(params, w_m))
    assert g_eff > 4.0 * params.mode.gamma_m  # strong cooling fixture
    config = SimConfig(params=params, duration=1.0, sample_rate=2.5e6, seed=21)
    trace = simulate(config)
    var_target = (CONSTANTS.k_B * params.mode.temperature_k
                  * params.mode.gamma_m
                  / (params.mode.m_eff_kg * g_eff * w_eff ** 2))
    assert float(np.var(trace.x_samples)) == pytest.approx(var_target, rel=0.10)


def test_photothermal_state_relaxes_at_tau():
    # deterministic decay: T = 0 kills the thermal force, x stays at zero,
    # y_pt relaxes to n_bar with the exact per-step factor exp(-dt/tau)
    params = make_params(beta=5.0, tau_t_s=600e-9, power_w=200e-9,
                         temperature_k=0.0)
    n_bar = intracavity_photon_number(params.cavity, params.drive)
    config = SimConfig(params=params, duration=16e-6, sample_rate=2.5e6,
                       seed=3)
    trace = simulate(config, initial_state=SimState(x=0.0, v=0.0,
                                                    y_pt=n_bar + 1000.0),
                     store_aux=True)
    assert np.all(trace.x_samples == 0.0)
    fluct = trace.aux_samples - n_bar
    decay = math.exp(-trace.dt / 600e-9)
    expect = 1000.0 * decay ** np.arange(1, fluct.size + 1)
    # atol: aux stores n_bar + fluct, so recovering the small late-time
    # fluctuation costs one ulp of n_bar (~2e-12) in cancellation
    np.testing.assert_allclose(fluct, expect, rtol=1e-9, atol=1e-11)


def test_instant_aux_tracks_photon_number():
    # tau_t = 0: y_pt is slaved to x through the adiabatic lineshape slope
    params = make_params(beta=5.0, tau_t_s=0.0, power_w=200e-9)
    config = SimConfig(params=params, duration=1e-3, sample_rate=2.5e6, seed=9)
    trace = simulate(config, store_aux=True)
    n_bar = intracavity_photon_number(params.cavity, params.drive)
    c_x = photon_number_slope(params)
    np.testing.assert_array_equal(trace.aux_samples,
                                  n_bar + c_x * trace.x_samples)


def test_blue_detuning_goes_unstable():
    params = make_params(beta=5.0, tau_t_s=600e-9, power_w=2e-6,
                         detuning_over_kappa=+0.58, gamma_m_hz=500.0)
    g_eff = params.mode.gamma_m + float(ba.delta_gamma_m(params,
                                                         params.mode.omega_m))
    assert g_eff < 0  # anti-damped fixture
    config = SimConfig(params=params, duration=8e-3, sample_rate=3e6, seed=13)
    trace = simulate(config)
    assert trace.unstable
    assert len(trace.x_samples) < int(round(config.duration * config.sample_rate))
    assert np.all(np.isfinite(trace.x_samples))


def test_full_cavity_equipartition():
    # resonant drive (no backaction) with a slow cavity the rate guard allows
    params = make_params(detuning_over_kappa=0.0, power_w=1e-9,
                         kappa_in_hz=1e5)
    config = SimConfig(params=params, duration=1.0, sample_rate=5e6, seed=31,
                       mode_flag="full-cavity")
    trace = simulate(config)
    assert not trace.unstable
    mode = params.mode
    var_target = (CONSTANTS.k_B * mode.temperature_k
                  / (mode.m_eff_kg * mode.omega_m ** 2))
    assert float(np.var(trace.x_samples)) == pytest.approx(var_target, rel=0.10)


def test_sample_rate_guard():
    params = make_params()
    with pytest.raises(ValueError, match="too low for adiabatic"):
        SimConfig(params=params, duration=1e-3, sample_rate=1.9e6, seed=1), \
            simulate(SimConfig(params=params, duration=1e-3,
                               sample_rate=1.9e6, seed=1))
    # full-cavity mode must also resolve the cavity decay
    with pytest.raises(ValueError, match="cavity decay"):
        simulate(SimConfig(params=params, duration=1e-3, sample_rate=5e6,
                           seed=1, mode_flag="full-cavity"))


@pytest.mark.parametrize("kwargs,match", [
    (dict(duration=0.0), "duration"),
    (dict(sample_rate=-1.0), "sample_rate"),
    (dict(mode_flag="exact"), "mode_flag"),
    (dict(shot_noise_floor=-1e-22), "shot_noise_floor"),
    (dict(seed=-1), "seed"),
    (dict(seed=2 ** 64), "seed"),
])
def test_config_validation(kwargs, match):
    kw = dict(params=make_params(), duration=1e-3, sample_rate=2.5e6, seed=1)
    kw.update(kwargs)
    with pytest.raises(ValueError, match=match):
        SimConfig(**kw)


def test_duration_must_cover_one_sample():
    config = SimConfig(params=make_params(), duration=1e-8, sample_rate=2.5e6,
                       seed=1)
    with pytest.raises(ValueError, match="shorter than one sample"):
        simulate(config)
