"""Wiener filtering, quadrature demodulation, and track statistics."""

import math

import numpy as np
import pytest

from thirdsound import spectral as sp
from thirdsound import tracker as tk
from thirdsound.langevin import SimConfig, simulate
from thirdsound.params import (CONSTANTS, DriveField, MechanicalMode,
                               OpticalCavity, PhotothermalCoupling,
                               SystemParams)

TWO_PI = 2.0 * math.pi
FS = 2.5e6
F_M = 100e3
GAMMA_HZ = 2000.0
FLOOR_DS = 1e-22  # double-sided homodyne floor, m^2/Hz


def make_params():
    return SystemParams(
        mode=MechanicalMode(omega_m_hz=F_M, gamma_m_hz=GAMMA_HZ,
                            m_eff_kg=1e-18, temperature_k=0.53),
        cavity=OpticalCavity(kappa_in_hz=11.15e6, kappa_0_hz=11.15e6,
                             detuning_over_kappa=-0.58),
        drive=DriveField(power_w=1e-15, wavelength_m=1555.1e-9),
        photothermal=PhotothermalCoupling(g_hz_per_m=1.3e14, beta=0.0,
                                          absorption=1.0, tau_t_s=0.0),
    )


def analytic_psds(n_fft=8192, floor=2.0 * FLOOR_DS):
    """Model signal and noise Psd pair on a shared rfft grid."""
    f = np.fft.rfftfreq(n_fft, 1.0 / FS)
    signal = sp.thermal_displacement_psd(make_params(), f)
    noise = np.full(f.size, floor)
    kw = dict(segment_count=1, window_name="hann", resolution_bandwidth=FS / n_fft)
    return (sp.Psd(frequencies=f, values=signal, **kw),
            sp.Psd(frequencies=f, values=noise, **kw))


@pytest.fixture(scope="module")
def wiener():
    s, n = analytic_psds()
    return tk.design_wiener(s, n, n_taps=4097)


@pytest.fixture(scope="module")
def thermal_track(wiener):
    config = SimConfig(params=make_params(), duration=2.0, sample_rate=FS,
                       seed=303, shot_noise_floor=FLOOR_DS)
    trace = simulate(config)
    track = tk.demodulate(trace, F_M, wiener, lp_bandwidth_hz=8e3,
                          shot_noise_floor=FLOOR_DS, seed=303)
    return config, track


# --- filter design ----------------------------------------------------------

def test_wiener_gain_curve(wiener):
    s, n = analytic_psds()
    expect = s.values / (s.values + n.values)
    np.testing.assert_allclose(wiener.gain, expect, rtol=1e-12)
    # near-unity in the passband, tiny far away
    i_pk = int(np.argmin(np.abs(wiener.frequencies - F_M)))
    assert wiener.gain[i_pk] > 0.9
    far = np.abs(wiener.frequencies - F_M) > 100e3
    assert np.all(wiener.gain[far] < 0.05)


def test_wiener_taps_are_zero_phase(wiener):
    assert wiener.n_taps == 4097
    # symmetric up to irfft rounding (max tap is ~1e-2)
    np.testing.assert_allclose(wiener.taps, wiener.taps[::-1], rtol=0,
                               atol=1e-15)
    # the realized magnitude tracks the ideal gain to the promised 1%
    achieved = np.abs(np.fft.rfft(wiener.taps, n=2 * (wiener.gain.size - 1)))
    assert float(np.max(np.abs(achieved - wiener.gain))) < 0.01


def test_wiener_apply_passband_and_stopband(wiener):
    t = np.arange(1 << 17) / FS
    inband = np.sin(TWO_PI * F_M * t)
    outband = np.sin(TWO_PI * 400e3 * t)
    core = slice(1 << 12, -(1 << 12))  # clear of the convolution edges
    gain_in = float(np.std(wiener.apply(inband)[core]) / np.std(inband[core]))
    gain_out = float(np.std(wiener.apply(outband)[core]) / np.std(outband[core]))
    i_pk = int(np.argmin(np.abs(wiener.frequencies - F_M)))
    assert gain_in == pytest.approx(float(wiener.gain[i_pk]), rel=0.02)
    assert gain_out < 0.02


def test_wiener_design_contracts():
    s, n = analytic_psds()
    with pytest.raises(ValueError, match="odd"):
        tk.design_wiener(s, n, n_taps=4096)
    with pytest.raises(ValueError, match="exceeds the design grid"):
        tk.design_wiener(s, n, n_taps=16385)
    shifted = sp.Psd(frequencies=n.frequencies + 5.0, values=n.values,
                     segment_count=1, window_name="hann",
                     resolution_bandwidth=n.resolution_bandwidth)
    with pytest.raises(ValueError, match="different frequency"):
        tk.design_wiener(s, shifted, n_taps=2049)


def test_wiener_refuses_unrealizable_gain():
    f = np.fft.rfftfreq(8192, 1.0 / FS)
    spike = np.full(f.size, 1e-26)
    spike[2000] = 1e-18  # single-bin passband: impulse response never decays
    kw = dict(segment_count=1, window_name="hann", resolution_bandwidth=FS / 8192)
    s = sp.Psd(frequencies=f, values=spike, **kw)
    n = sp.Psd(frequencies=f, values=np.full(f.size, 1e-22), **kw)
    with pytest.raises(ValueError, match="ripple"):
        tk.design_wiener(s, n, n_taps=65)


# --- demodulation -----------------------------------------------------------

def test_demodulate_calibrated_tone_radius(wiener):
    t = np.arange(1 << 17) / FS
    amp = 3.2e-9
    for theta, check in ((0.0, lambda tr: tr.x_quad),
                         (math.pi / 2.0, lambda tr: -tr.y_quad)):
        record = amp * np.cos(TWO_PI * F_M * t - theta)
        track = tk.demodulate(record, F_M, wiener, sample_rate=FS,
                              lp_bandwidth_hz=8e3)
        radius = np.hypot(track.x_quad, track.y_quad)
        np.testing.assert_allclose(radius, amp, rtol=0.02)
        np.testing.assert_allclose(check(track), amp, rtol=0.02)
    # a tone carries no shot noise: measurement_std stays zero
    assert track.measurement_std == 0.0


def test_demodulate_contracts(wiener):
    t = np.arange(1 << 16) / FS
    record = 1e-9 * np.cos(TWO_PI * F_M * t)
    with pytest.raises(ValueError, match="sample_rate"):
        tk.demodulate(record, F_M, wiener)
    with pytest.raises(ValueError, match="lp_bandwidth_hz or gamma_hz"):
        tk.demodulate(record, F_M, wiener, sample_rate=FS)
    with pytest.raises(ValueError, match="below the mode linewidth"):
        tk.demodulate(record, F_M, wiener, sample_rate=FS,
                      lp_bandwidth_hz=1e3, gamma_hz=GAMMA_HZ)
    with pytest.raises(ValueError, match="bins would be correlated"):
        tk.demodulate(record, F_M, wiener, sample_rate=FS,
                      lp_bandwidth_hz=8e3, bin_time_s=1e-5)
    with pytest.raises(ValueError, match="Nyquist"):
        tk.demodulate(record, 2e6, wiener, sample_rate=FS,
                      lp_bandwidth_hz=8e3)


def test_measurement_std_scales_with_floor(wiener):
    # same seed draws the same shot normals: the ratio is exact
    t = np.arange(1 << 17) / FS
    record = 2e-9 * np.cos(TWO_PI * F_M * t)
    kw = dict(sample_rate=FS, lp_bandwidth_hz=8e3, seed=7)
    one = tk.demodulate(record, F_M, wiener, shot_noise_floor=FLOOR_DS, **kw)
    four = tk.demodulate(record, F_M, wiener, shot_noise_floor=4 * FLOOR_DS,
                         **kw)
    assert one.measurement_std > 0
    assert four.measurement_std == pytest.approx(2.0 * one.measurement_std,
                                                 rel=1e-9)


def test_thermal_track_is_gaussian(thermal_track):
    config, track = thermal_track
    stats = tk.track_statistics(track)
    assert stats.n_points == track.x_quad.size >= 500
    # thermal state: both excess kurtoses vanish within the null error
    assert abs(stats.kurtosis_x) < 3.0 * stats.kurtosis_err
    assert abs(stats.kurtosis_y) < 3.0 * stats.kurtosis_err
    # isotropic covariance, uncorrelated quadratures
    v_x, v_y = stats.covariance[0, 0], stats.covariance[1, 1]
    assert v_x == pytest.approx(v_y, rel=0.2)
    assert abs(stats.covariance[0, 1]) < 0.2 * math.sqrt(v_x * v_y)
    assert abs(stats.mean_x) < 3.0 * math.sqrt(v_x / stats.n_points) * 2
    assert int(np.sum(stats.radial_counts)) == stats.n_points


def test_thermal_track_amplitude_calibration(thermal_track):
    config, track = thermal_track
    mode = config.params.mode
    rms = math.sqrt(CONSTANTS.k_B * mode.temperature_k
                    / (mode.m_eff_kg * mode.omega_m ** 2))
    # per-quadrature thermal spread matches the mode rms displacement
    # (binning over ~a correlation time costs some contrast)
    assert track.thermal_std == pytest.approx(rms, rel=0.25)
    assert 1.0 < track.thermal_std / track.measurement_std < 10.0


def test_track_statistics_needs_points():
    track = tk.PhaseSpaceTrack(times=np.arange(10.0), x_quad=np.zeros(10),
                               y_quad=np.zeros(10), bin_time_s=1.0,
                               measurement_std=0.0, thermal_std=0.0)
    with pytest.raises(ValueError, match="500"):
        tk.track_statistics(track)
