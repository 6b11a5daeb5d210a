"""Spectral estimation and mode thermometry.

All I/O spectra are single-sided densities in 1/Hz units (m^2/Hz for
displacement).  The thermal mode spectrum in this convention is

    S_xx(f) = 2 * [2*Gamma_m*m_eff*k_B*T] * |chi'(2*pi*f)|^2

where the leading 2 converts the double-sided rad/s-domain force noise
2*Gamma_m*m_eff*k_B*T to a single-sided Hz-domain density; integrating
S_xx over f >= 0 returns the equipartition variance k_B*T/(m_eff*w_m^2)
exactly, which is the normalization check every Psd carries (Parseval).

The fitted lineshape is S(f) = floor + c/((f_m^2 - f^2)^2 + f^2*gamma^2)
with gamma the FWHM in Hz; its analytic band integral is
area = c*pi/(2*gamma*f_m^2), the displacement variance of the mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import welch

from .backaction import effective_susceptibility
from .params import CONSTANTS, SystemParams
from .langevin import SimTrace

__all__ = [
    "Psd",
    "SpectrumFit",
    "welch_psd",
    "fit_mode",
    "snr_vs_time",
    "lorentzian_psd",
    "thermal_displacement_psd",
]


@dataclass(frozen=True)
class Psd:
    """Single-sided PSD estimate on a uniform frequency grid."""

    frequencies: np.ndarray  # Hz
    values: np.ndarray       # (input units)^2/Hz
    segment_count: int
    window_name: str
    resolution_bandwidth: float  # Hz (window ENBW)

    @property
    def df(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])


@dataclass(frozen=True)
class SpectrumFit:
    """Lorentzian mode fit: center, FWHM, band area, noise floor, errors."""

    f_m_hz: float
    gamma_hz: float
    area: float   # integrated mode power, m^2 for displacement input
    floor: float
    f_m_err: float
    gamma_err: float
    area_err: float
    floor_err: float
    chi2_reduced: float


def lorentzian_psd(f, f_m_hz: float, gamma_hz: float, c: float,
                   floor: float = 0.0) -> np.ndarray:
    """The fitted model floor + c/((f_m^2 - f^2)^2 + f^2*gamma^2)."""
    f = np.asarray(f, dtype=float)
    return floor + c / ((f_m_hz ** 2 - f ** 2) ** 2 + f ** 2 * gamma_hz ** 2)


def thermal_displacement_psd(params: SystemParams, f_hz) -> np.ndarray:
    """Analytic single-sided displacement PSD 4*Gamma_m*m*k_B*T*|chi'(w)|^2, m^2/Hz."""
    mode = params.mode
    w = 2.0 * math.pi * np.asarray(f_hz, dtype=float)
    chi = effective_susceptibility(params, w)
    return (4.0 * mode.gamma_m * mode.m_eff_kg * CONSTANTS.k_B
            * mode.temperature_k * np.abs(chi) ** 2)


def _as_record(data, sample_rate, channel):
    if isinstance(data, SimTrace):
        samples = data.x_samples if channel == "x" else data.homodyne_samples
        return np.asarray(samples, dtype=float), 1.0 / data.dt
    if sample_rate is None:
        raise ValueError("sample_rate is required for a bare array input")
    return np.asarray(data, dtype=float), float(sample_rate)


def welch_psd(data, sample_rate: float | None = None,
              segment_length: int = 4096, overlap_fraction: float = 0.5,
              window: str = "hann", channel: str = "homodyne") -> Psd:
    """Averaged-periodogram single-sided PSD (Welch, density-normalized).

    data is a SimTrace (channel selects "homodyne" or "x") or a plain array
    with sample_rate given.  No detrending is applied, so the Parseval
    identity sum(values)*df = mean of windowed segment power holds exactly
    up to rounding.
    """
    x, fs = _as_record(data, sample_rate, channel)
    if not 0.0 <= overlap_fraction <= 0.9:
        raise ValueError("overlap_fraction must lie in [0, 0.9]")
    if segment_length < 8:
        raise ValueError("segment_length must be at least 8")
    if x.size < segment_length:
        raise ValueError(
            f"record of {x.size} samples shorter than segment_length "
            f"{segment_length}; need at least {segment_length}")
    noverlap = int(round(overlap_fraction * segment_length))
    freqs, vals = welch(x, fs=fs, window=window, nperseg=segment_length,
                        noverlap=noverlap, detrend=False,
                        scaling="density", return_onesided=True)
    segments = 1 + (x.size - segment_length) // (segment_length - noverlap)
    from scipy.signal import get_window
    w = get_window(window, segment_length)
    enbw = fs * np.sum(w ** 2) / np.sum(w) ** 2
    return Psd(frequencies=freqs, values=vals, segment_count=int(segments),
               window_name=window, resolution_bandwidth=float(enbw))


def _band_slice(freqs: np.ndarray, band) -> np.ndarray:
    lo, hi = float(band[0]), float(band[1])
    if not lo < hi:
        raise ValueError("band must be (lo, hi) with lo < hi")
    mask = (freqs >= lo) & (freqs <= hi)
    return np.flatnonzero(mask)


def _smooth(vals: np.ndarray, width: int) -> np.ndarray:
    width = max(int(width), 1)
    if width == 1:
        return vals.copy()
    kernel = np.ones(width) / width
    # reflect-pad so the edges are not biased toward zero
    pad = width // 2
    ext = np.concatenate([vals[pad:0:-1], vals, vals[-2:-2 - pad:-1]])
    sm = np.convolve(ext, kernel, mode="same")[pad:pad + vals.size]
    return sm


def fit_mode(psd: Psd, band) -> SpectrumFit:
    """Weighted Lorentzian fit over a band containing one resonance.

    Weights are the inverse of a locally smoothed copy of the PSD scaled by
    sqrt(segment_count) (the chi-square spread of averaged periodogram
    bins), so the reduced chi-square is ~1 for a correct model.  Failure
    modes raise: no discernible peak, non-convergence, or gamma pinned at
    its bounds.
    """
    idx = _band_slice(psd.frequencies, band)
    if idx.size < 20:
        raise ValueError(f"need >= 20 points in band, got {idx.size}")
    f = psd.frequencies[idx]
    y = psd.values[idx]
    df = psd.df

    width = max(5, idx.size // 50)
    ysm = _smooth(y, width)
    med = float(np.median(ysm))
    if med <= 0 or float(np.max(ysm)) < 2.5 * med:
        raise RuntimeError(
            "no resonance peak in band: smoothed maximum below 2.5x the "
            "median floor (floor-only input?)")

    ipk = int(np.argmax(ysm))
    f0 = float(f[ipk])
    floor0 = float(np.median(ysm[ysm < 2.0 * med])) if np.any(ysm < 2.0 * med) else med
    half = floor0 + (ysm[ipk] - floor0) / 2.0
    # contiguous half-maximum width around the peak, not a stray-bin count
    right = ipk
    while right + 1 < ysm.size and ysm[right + 1] > half:
        right += 1
    left = ipk
    while left - 1 >= 0 and ysm[left - 1] > half:
        left -= 1
    gamma0 = max(df * (right - left + 1), df)
    ynorm = float(ysm[ipk])
    c0 = (ysm[ipk] - floor0) * (f0 * gamma0) ** 2 / ynorm

    sigma = ysm / (ynorm * math.sqrt(max(psd.segment_count, 1)))
    yh = y / ynorm

    def resid(th):
        return (lorentzian_psd(f, th[0], th[1], th[2], th[3]) - yh) / sigma

    lo_b = [f[0], df / 10.0, 0.0, 0.0]
    hi_b = [f[-1], 10.0 * (f[-1] - f[0]), np.inf, np.inf]
    scale = [f0, gamma0, max(c0, 1e-30), max(floor0 / ynorm, 1e-6)]
    sol = least_squares(resid, x0=[f0, gamma0, c0, max(floor0 / ynorm, 0.0)],
                        bounds=(lo_b, hi_b), x_scale=scale, max_nfev=20000)
    if not sol.success:
        raise RuntimeError(f"mode fit did not converge: {sol.message}")
    f_m, gamma, c_n, floor_n = sol.x
    if gamma <= lo_b[1] * 1.01 or gamma >= hi_b[1] * 0.99:
        raise RuntimeError(
            f"fitted gamma = {gamma:g} Hz pinned at the fit bounds "
            f"[{lo_b[1]:g}, {hi_b[1]:g}]; band does not constrain the linewidth")

    dof = max(idx.size - 4, 1)
    chi2_red = 2.0 * sol.cost / dof
    try:
        cov = np.linalg.inv(sol.jac.T @ sol.jac) * chi2_red
        perr = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        cov = np.full((4, 4), math.nan)
        perr = np.full(4, math.nan)

    area = c_n * ynorm * math.pi / (2.0 * gamma * f_m ** 2)
    grad = np.array([-2.0 * area / f_m, -area / gamma,
                     area / c_n if c_n > 0 else 0.0, 0.0])
    area_err = float(math.sqrt(max(grad @ cov @ grad, 0.0)))
    return SpectrumFit(
        f_m_hz=float(f_m), gamma_hz=float(gamma), area=float(area),
        floor=float(floor_n * ynorm), f_m_err=float(perr[0]),
        gamma_err=float(perr[1]), area_err=area_err,
        floor_err=float(perr[3] * ynorm), chi2_reduced=float(chi2_red))


def snr_vs_time(data, band, durations, sample_rate: float | None = None,
                rbw_hz: float | None = None, n_segments: int = 1,
                channel: str = "homodyne") -> list[tuple[float, float]]:
    """Peak/floor SNR in dB of a periodogram versus measurement duration.

    For each duration a Hann periodogram of that length is taken from the
    start of the record, smoothed over rbw_hz (default: the window's own
    resolution bandwidth) as a spectrum analyzer would, and reduced to
    max(peak)/median(floor) over the band, excluding the central 30% of
    band bins around the peak from the floor estimate.  n_segments > 1
    averages that many disjoint stretches of the record (variance
    reduction; estimator per stretch unchanged).

    Durations shorter than 10 cycles of the band center are refused.
    """
    x, fs = _as_record(data, sample_rate, channel)
    f_ref = 0.5 * (float(band[0]) + float(band[1]))
    out = []
    for dur in durations:
        nseg = int(round(dur * fs))
        if nseg < 10 * fs / f_ref:
            raise ValueError(
                f"duration {dur:g} s is under 10 cycles of {f_ref:g} Hz")
        if nseg > x.size:
            raise ValueError(f"duration {dur:g} s exceeds the record")
        avail = min(max(x.size // nseg, 1), max(int(n_segments), 1))
        acc = None
        for j in range(avail):
            seg = x[j * nseg:(j + 1) * nseg]
            freqs, vals = welch(seg, fs=fs, window="hann", nperseg=nseg,
                                noverlap=0, detrend=False,
                                scaling="density", return_onesided=True)
            acc = vals if acc is None else acc + vals
        vals = acc / avail
        df = freqs[1] - freqs[0]
        rbw = rbw_hz if rbw_hz is not None else 1.5 * fs / nseg
        vals = _smooth(vals, int(round(rbw / df)))
        idx = _band_slice(freqs, band)
        if idx.size < 4:
            raise ValueError("band holds fewer than 4 bins at this duration")
        sub = vals[idx]
        ipk = int(np.argmax(sub))
        guard = max(int(0.15 * idx.size), 1)
        keep = np.ones(idx.size, dtype=bool)
        keep[max(ipk - guard, 0):ipk + guard + 1] = False
        floor = float(np.median(sub[keep])) if keep.any() else float(np.min(sub))
        peak = float(sub[ipk])
        if floor <= 0.0:
            raise ValueError("nonpositive floor estimate; check the record")
        out.append((float(dur), 10.0 * math.log10(peak / floor)))
    return out
