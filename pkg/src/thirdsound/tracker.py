"""Phase-space tracking of a thermally driven mode from a noisy record.

The chain is: Wiener-filter the homodyne record (frequency-domain gain
S_signal/(S_signal + S_noise) realized as a linear-phase FIR), demodulate
at the mode frequency, low-pass both quadratures, then average into bins
of fixed duration.  A unit-amplitude tone at the mode frequency is pushed
through the identical chain to calibrate the overall gain, and a pure
shot-noise record is pushed through the identical chain to report the
measurement noise per bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import firwin2, get_window, oaconvolve

from .langevin import SimTrace

__all__ = [
    "WienerFilter",
    "PhaseSpaceTrack",
    "TrackStatistics",
    "design_wiener",
    "demodulate",
    "track_statistics",
]


@dataclass(frozen=True)
class WienerFilter:
    """Linear-phase FIR realization of a frequency-domain gain curve."""

    frequencies: np.ndarray  # design grid, Hz
    gain: np.ndarray         # ideal gain on that grid
    n_taps: int
    taps: np.ndarray

    def apply(self, samples: np.ndarray) -> np.ndarray:
        """Zero-phase filtering (symmetric taps, centered convolution)."""
        return oaconvolve(np.asarray(samples, dtype=float), self.taps,
                          mode="same")


@dataclass(frozen=True)
class PhaseSpaceTrack:
    """Binned quadrature track with per-bin noise calibration."""

    times: np.ndarray   # bin centers, s
    x_quad: np.ndarray  # m
    y_quad: np.ndarray  # m
    bin_time_s: float
    measurement_std: float  # per-bin, per-quadrature shot contribution, m
    thermal_std: float      # per-quadrature mode contribution, m


@dataclass(frozen=True)
class TrackStatistics:
    n_points: int
    mean_x: float
    mean_y: float
    covariance: np.ndarray  # 2x2, m^2
    kurtosis_x: float       # Fisher excess
    kurtosis_y: float
    kurtosis_err: float     # sqrt(24/N), the Gaussian-null standard error
    radial_edges: np.ndarray
    radial_counts: np.ndarray


def design_wiener(signal_psd, noise_psd, n_taps: int = 4097) -> WienerFilter:
    """Build the optimal-gain FIR from matched signal and noise PSDs.

    Both Psd inputs must share one frequency grid (same Welch settings);
    the gain S_s/(S_s + S_n) is inverse-transformed, truncated to n_taps
    symmetrically about zero delay, and Hann-windowed.  The achieved
    response is checked against the ideal gain on the design grid and a
    deviation above 1% of the gain maximum is refused.
    """
    fs_grid = np.asarray(signal_psd.frequencies, dtype=float)
    fn_grid = np.asarray(noise_psd.frequencies, dtype=float)
    if fs_grid.shape != fn_grid.shape or not np.allclose(
            fs_grid, fn_grid, rtol=0.0, atol=1e-9 * max(fs_grid[-1], 1.0)):
        raise ValueError("signal and noise PSDs are on different frequency "
                         "grids; recompute with identical Welch settings")
    if n_taps % 2 != 1:
        raise ValueError("n_taps must be odd for a symmetric zero-phase FIR")
    n_fft = 2 * (fs_grid.size - 1)
    if n_taps > n_fft:
        raise ValueError(f"n_taps {n_taps} exceeds the design grid length "
                         f"{n_fft}; use a longer PSD segment")
    s = np.asarray(signal_psd.values, dtype=float)
    n = np.asarray(noise_psd.values, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        gain = np.where(s + n > 0.0, s / (s + n), 0.0)

    impulse = np.fft.irfft(gain, n=n_fft)
    centered = np.roll(impulse, n_fft // 2)
    half = n_taps // 2
    taps = centered[n_fft // 2 - half:n_fft // 2 + half + 1].copy()
    taps *= get_window("hann", n_taps, fftbins=False)

    achieved = np.abs(np.fft.rfft(taps, n=n_fft))
    ripple = float(np.max(np.abs(achieved - gain))) / float(np.max(gain))
    if ripple > 0.01:
        raise ValueError(
            f"FIR truncation ripple {ripple:.3%} exceeds 1%; increase "
            f"n_taps (gain structure too sharp for {n_taps} taps)")
    return WienerFilter(frequencies=fs_grid, gain=gain, n_taps=n_taps,
                        taps=taps)


def _lowpass_taps(sample_rate: float, cutoff_hz: float, n_max: int) -> np.ndarray:
    # linear-phase FIR with the magnitude of a 4th-order Butterworth
    n_lp = int(3.0 * sample_rate / cutoff_hz)
    n_lp = min(n_lp | 1, max(n_max | 1, 3))
    grid = np.linspace(0.0, 1.0, 257)
    f_hz = grid * sample_rate / 2.0
    mag = 1.0 / np.sqrt(1.0 + (f_hz / cutoff_hz) ** 8)
    mag[-1] = 0.0
    return firwin2(n_lp, grid, mag)


def _pipeline(samples: np.ndarray, sample_rate: float, f_m_hz: float,
              wiener: WienerFilter, lp_taps: np.ndarray,
              samples_per_bin: int, n_edge: int):
    filtered = wiener.apply(samples)
    t = np.arange(filtered.size) / sample_rate
    z = 2.0 * filtered * np.exp(-2j * math.pi * f_m_hz * t)
    del filtered, t
    z = oaconvolve(z, lp_taps, mode="same")
    n_bins = z.size // samples_per_bin
    z = z[:n_bins * samples_per_bin].reshape(n_bins, samples_per_bin).mean(axis=1)
    if n_bins <= 2 * n_edge:
        raise ValueError("record too short: filter transients span all bins")
    return z[n_edge:n_bins - n_edge]


def demodulate(record, f_m_hz: float, wiener: WienerFilter,
               sample_rate: float | None = None,
               lp_bandwidth_hz: float | None = None,
               bin_time_s: float | None = None,
               gamma_hz: float | None = None,
               shot_noise_floor: float | None = None,
               seed: int = 0) -> PhaseSpaceTrack:
    """Demodulate a homodyne record into binned (X, Y) quadratures.

    lp_bandwidth_hz defaults to 4*gamma_hz (gamma_hz required in that
    case) and must be at least gamma_hz when both are given; bin_time_s
    defaults to 1/lp_bandwidth_hz and may not undercut it.  The gain of
    the whole chain is calibrated on a synthetic unit tone at f_m_hz, so
    quadratures come out in the units of the input record regardless of
    Wiener or low-pass attenuation.  measurement_std is measured, not
    predicted: a white record with the double-sided floor shot_noise_floor
    (taken from the trace config when a SimTrace is passed) runs through
    the same chain.
    """
    if isinstance(record, SimTrace):
        samples = np.asarray(record.homodyne_samples, dtype=float)
        fs = 1.0 / record.dt
    else:
        if sample_rate is None:
            raise ValueError("sample_rate is required for a bare array input")
        samples = np.asarray(record, dtype=float)
        fs = float(sample_rate)

    if lp_bandwidth_hz is None:
        if gamma_hz is None:
            raise ValueError("need lp_bandwidth_hz or gamma_hz to size the "
                             "low-pass filter")
        lp_bandwidth_hz = 4.0 * gamma_hz
    if gamma_hz is not None and lp_bandwidth_hz < gamma_hz:
        raise ValueError(
            f"lp_bandwidth_hz {lp_bandwidth_hz:g} is below the mode "
            f"linewidth {gamma_hz:g} Hz and would distort the dynamics")
    if bin_time_s is None:
        bin_time_s = 1.0 / lp_bandwidth_hz
    if bin_time_s * lp_bandwidth_hz < 1.0 - 1e-9:
        raise ValueError(
            f"bin_time_s {bin_time_s:g} is shorter than 1/lp_bandwidth "
            f"{1.0 / lp_bandwidth_hz:g} s; bins would be correlated")
    if not 0.0 < f_m_hz < fs / 2.0:
        raise ValueError("f_m_hz must lie inside the Nyquist band")

    samples_per_bin = int(round(bin_time_s * fs))
    if samples_per_bin < 1:
        raise ValueError("bin_time_s is under one sample")
    lp_taps = _lowpass_taps(fs, lp_bandwidth_hz, n_max=samples.size // 4)
    n_edge = math.ceil((wiener.n_taps + lp_taps.size) / 2 / samples_per_bin)

    z = _pipeline(samples, fs, f_m_hz, wiener, lp_taps, samples_per_bin,
                  n_edge)

    t = np.arange(samples.size) / fs
    tone = np.cos(2.0 * math.pi * f_m_hz * t)
    del t
    z_tone = _pipeline(tone, fs, f_m_hz, wiener, lp_taps, samples_per_bin,
                       n_edge)
    del tone
    cal = np.mean(z_tone)
    if abs(cal) < 1e-12:
        raise RuntimeError("calibration tone vanished in the pipeline; "
                           "check f_m_hz against the Wiener passband")
    z = z / cal

    if shot_noise_floor is None and isinstance(record, SimTrace):
        shot_noise_floor = 0.0  # unknown here; caller passes the floor
    measurement_std = 0.0
    if shot_noise_floor:
        rng = np.random.Generator(np.random.Philox(
            key=np.array([seed, 2], dtype=np.uint64)))
        shot = rng.standard_normal(samples.size) * math.sqrt(
            shot_noise_floor * fs)
        z_shot = _pipeline(shot, fs, f_m_hz, wiener, lp_taps,
                           samples_per_bin, n_edge) / cal
        del shot
        measurement_std = float(math.sqrt(
            0.5 * (np.var(z_shot.real) + np.var(z_shot.imag))))

    var_tot = 0.5 * (np.var(z.real) + np.var(z.imag))
    thermal_std = float(math.sqrt(max(var_tot - measurement_std ** 2, 0.0)))

    n_bins_total = samples.size // samples_per_bin
    centers = (np.arange(n_edge, n_bins_total - n_edge) + 0.5) * bin_time_s
    return PhaseSpaceTrack(
        times=centers, x_quad=z.real.copy(), y_quad=z.imag.copy(),
        bin_time_s=float(bin_time_s), measurement_std=measurement_std,
        thermal_std=thermal_std)


def track_statistics(track: PhaseSpaceTrack, n_radial_bins: int = 32
                     ) -> TrackStatistics:
    """Gaussianity summary of a track: moments, excess kurtosis, radial law.

    Requires at least 500 points so the kurtosis null error sqrt(24/N)
    is meaningful.  For a thermal (Gaussian) state both excess kurtoses
    are zero within a few standard errors and the radial histogram is
    Rayleigh.
    """
    x = np.asarray(track.x_quad, dtype=float)
    y = np.asarray(track.y_quad, dtype=float)
    n = x.size
    if n < 500:
        raise ValueError(f"need >= 500 track points for statistics, got {n}")
    from scipy.stats import kurtosis
    cov = np.cov(np.vstack([x, y]))
    r = np.hypot(x - x.mean(), y - y.mean())
    counts, edges = np.histogram(r, bins=n_radial_bins)
    return TrackStatistics(
        n_points=n, mean_x=float(x.mean()), mean_y=float(y.mean()),
        covariance=cov, kurtosis_x=float(kurtosis(x, fisher=True)),
        kurtosis_y=float(kurtosis(y, fisher=True)),
        kurtosis_err=math.sqrt(24.0 / n),
        radial_edges=edges, radial_counts=counts)
