"""Time-domain Langevin simulation of the cavity-coupled film mode.

The linearized dynamics are a linear SDE dz = A z dt + b xi(t) dt driven by
the thermal force sqrt(2*Gamma_m*m_eff*k_B*T)*xi(t) (always the intrinsic
Gamma_m: backaction modifies the damping, not the thermal drive, which is
exactly how the mode temperature moves away from the cryostat).  Quantum
backaction noise on the drive is not modeled.

Discretization: the sampled process is propagated exactly,
z_{n+1} = e^{A dt} z_n + w_n with w_n ~ N(0, Sigma(dt)) and Sigma from the
Van Loan block exponential.  For a linear SDE this is the distribution of
the true solution at the sample times, so the integrator is stable at any
step that satisfies the sampling contract (the naive explicit update is
anti-damped at these Q factors and cannot meet the equipartition
invariants).  Noise increments are drawn from counter-based (Philox)
streams, one for the thermal force and one for shot noise, so traces replay
bit-identically and chunked generation matches unchunked.

Modes: "adiabatic" folds the backaction into (omega_m + dw, Gamma_m + dG)
evaluated at omega_m and keeps the photothermal state y_pt as a diagnostic
low-pass of the instantaneous photon number (its force effect is already in
the effective parameters; feeding it back as a force again would double
count).  "full-cavity" integrates the coupled (x, v, y_pt, a_re, a_im)
system with the linearized cavity equation, from which the backaction
emerges rather than being imposed.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import _kernels
from .backaction import delta_gamma_m, delta_omega_m
from .params import (CONSTANTS, MechanicalMode, SystemParams,
                     intracavity_amplitude, intracavity_photon_number,
                     params_to_config, photon_number_slope)

__all__ = [
    "SimConfig",
    "SimState",
    "SimTrace",
    "thermal_force_amplitude",
    "sim_config_hash",
    "simulate",
    "replay",
]

MODE_FLAGS = ("adiabatic", "full-cavity")

_CHUNK = 1 << 18
_BLOWUP = 1e50  # |x| beyond this is treated as the instability regime


@dataclass(frozen=True)
class SimConfig:
    """One simulation run: physics, duration, rate, seed, mode, shot noise.

    shot_noise_floor is the displacement-equivalent double-sided PSD in
    m^2/Hz added to the homodyne record (single-sided floor = 2x this).
    """

    params: SystemParams
    duration: float
    sample_rate: float
    seed: int
    mode_flag: str = "adiabatic"
    shot_noise_floor: float = 0.0

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.mode_flag not in MODE_FLAGS:
            raise ValueError(f"mode_flag must be one of {MODE_FLAGS}")
        if self.shot_noise_floor < 0:
            raise ValueError("shot_noise_floor must be nonnegative")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class SimState:
    """Instantaneous dynamical state (a_re/a_im used in full-cavity mode)."""

    x: float
    v: float
    y_pt: float
    a_re: float = 0.0
    a_im: float = 0.0


@dataclass(frozen=True)
class SimTrace:
    """Simulated record. Arrays are owned by the trace; treat as immutable."""

    t0: float
    dt: float
    x_samples: np.ndarray
    homodyne_samples: np.ndarray
    seed: int
    config_hash: str
    unstable: bool = False
    aux_samples: np.ndarray | None = None  # y_pt when requested

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.x_samples))


def thermal_force_amplitude(mode: MechanicalMode) -> float:
    """White thermal force strength sqrt(2*Gamma_m*m_eff*k_B*T), N*s^(1/2)."""
    return math.sqrt(2.0 * mode.gamma_m * mode.m_eff_kg
                     * CONSTANTS.k_B * mode.temperature_k)


def sim_config_hash(config: SimConfig) -> str:
    """sha256 over the canonical config text plus the run settings."""
    text = params_to_config(config.params, config.seed)
    text += (f"duration = {config.duration!r}\n"
             f"sample_rate = {config.sample_rate!r}\n"
             f"mode_flag = {config.mode_flag}\n"
             f"shot_noise_floor = {config.shot_noise_floor!r}\n")
    return hashlib.sha256(text.encode()).hexdigest()


def _check_rate(config: SimConfig) -> None:
    mode_hz = config.params.mode.omega_m_hz
    if config.mode_flag == "adiabatic":
        need = 20.0 * mode_hz
        what = "20 samples per mechanical cycle"
    else:
        need = 20.0 * max(mode_hz, config.params.cavity.kappa_in_hz
                          + config.params.cavity.kappa_0_hz)
        what = "20 samples per cavity decay (and mechanical cycle)"
    if config.sample_rate <= need:
        raise ValueError(
            f"sample_rate {config.sample_rate:g} Hz too low for "
            f"{config.mode_flag} mode: need > {need:g} Hz ({what})")


def _drift(params: SystemParams, mode_flag: str):
    """Drift matrix A, noise direction b, and layout metadata.

    Returns (a, b, y_index, n_bar): y_index is the position of the
    photothermal fluctuation state (-1 when tau_t = 0 eliminates it) and
    n_bar the steady photon number (y_pt = n_bar + fluctuation).
    """
    mode, cav, pt = params.mode, params.cavity, params.photothermal
    m_eff = mode.m_eff_kg
    s_over_m = thermal_force_amplitude(mode) / m_eff
    tau = pt.tau_t_s
    n_bar = intracavity_photon_number(cav, params.drive)

    if mode_flag == "adiabatic":
        w_eff = mode.omega_m + float(delta_omega_m(params, mode.omega_m))
        g_eff = mode.gamma_m + float(delta_gamma_m(params, mode.omega_m))
        c_x = photon_number_slope(params)
        if tau > 0:
            a = np.array([
                [0.0, 1.0, 0.0],
                [-w_eff ** 2, -g_eff, 0.0],
                [c_x / tau, 0.0, -1.0 / tau],
            ])
            b = np.array([0.0, s_over_m, 0.0])
            return a, b, 2, n_bar
        a = np.array([[0.0, 1.0], [-w_eff ** 2, -g_eff]])
        return a, np.array([0.0, s_over_m]), -1, n_bar

    # full-cavity: phase convention makes the steady amplitude real
    alpha = abs(intracavity_amplitude(cav, params.drive))
    kap, det, g = cav.kappa, cav.detuning, pt.g
    hg_m = CONSTANTS.hbar * g / m_eff
    if tau > 0:
        a = np.array([
            [0.0, 1.0, 0.0, 0.0, 0.0],
            [-mode.omega_m ** 2, -mode.gamma_m, hg_m * pt.beta_times_a,
             2.0 * hg_m * alpha, 0.0],
            [0.0, 0.0, -1.0 / tau, 2.0 * alpha / tau, 0.0],
            [0.0, 0.0, 0.0, -kap, -det],
            [g * alpha, 0.0, 0.0, det, -kap],
        ])
        b = np.array([0.0, s_over_m, 0.0, 0.0, 0.0])
        return a, b, 2, n_bar
    a = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-mode.omega_m ** 2, -mode.gamma_m,
         2.0 * hg_m * alpha * (1.0 + pt.beta_times_a), 0.0],
        [0.0, 0.0, -kap, -det],
        [g * alpha, 0.0, det, -kap],
    ])
    return a, np.array([0.0, s_over_m, 0.0, 0.0]), -1, n_bar


def _sqrt_psd_matrix(sig: np.ndarray) -> np.ndarray:
    """L with L L^T = sig for a symmetric PSD matrix (eigh with clipping)."""
    evals, vecs = np.linalg.eigh(0.5 * (sig + sig.T))
    return vecs * np.sqrt(np.clip(evals, 0.0, None))


def _discretize(a: np.ndarray, b: np.ndarray, dt: float):
    """Exact one-step propagator M = e^{A dt} and noise covariance Sigma(dt).

    Van Loan: exp(dt*[[A, b b^T], [0, -A^T]]) has M in the top-left block
    and M^-T Sigma... specifically Sigma = (top-right block) @ M^T.
    """
    d = a.shape[0]
    blk = np.zeros((2 * d, 2 * d))
    blk[:d, :d] = a
    blk[:d, d:] = np.outer(b, b)
    blk[d:, d:] = -a.T
    eb = expm(blk * dt)
    m = eb[:d, :d]
    sig = eb[:d, d:] @ m.T
    return m, 0.5 * (sig + sig.T)


def _state_to_vector(state: SimState, y_index: int, n_bar: float,
                     mode_flag: str, dim: int) -> np.ndarray:
    z = np.zeros(dim)
    z[0], z[1] = state.x, state.v
    if y_index >= 0:
        z[y_index] = state.y_pt - n_bar
    if mode_flag == "full-cavity":
        z[dim - 2], z[dim - 1] = state.a_re, state.a_im
    return z


def _stationary_vector(m: np.ndarray, sig: np.ndarray,
                       rng: np.random.Generator) -> np.ndarray | None:
    """Draw z0 from the exact stationary distribution, or None if unstable.

    Always consumes dim normals so the stream layout does not depend on
    stability.
    """
    draw = rng.standard_normal(m.shape[0])
    if np.max(np.abs(np.linalg.eigvals(m))) >= 1.0:
        return None
    # doubling iteration for Sig_inf = M Sig M^T + Sig: immune to the
    # huge x/v scale ratio that defeats a direct Lyapunov solve
    sig_inf = sig.copy()
    mk = m.copy()
    for _ in range(128):
        sig_inf = mk @ sig_inf @ mk.T + sig_inf
        mk = mk @ mk
        if np.max(np.abs(mk)) < 1e-15:
            break
    return _sqrt_psd_matrix(sig_inf) @ draw


def simulate(config: SimConfig, initial_state: SimState | None = None,
             store_aux: bool = False, backend: str | None = None) -> SimTrace:
    """Integrate the configured system and return the sampled trace.

    initial_state overrides the default draw from the stationary
    distribution (used e.g. to watch y_pt relax from a cold start).
    store_aux records y_pt alongside x.  backend picks the kernel
    ("numba"/"numpy"); default per THIRDSOUND_BACKEND.
    """
    _check_rate(config)
    dt = 1.0 / config.sample_rate
    n = int(round(config.duration * config.sample_rate))
    if n < 1:
        raise ValueError("duration shorter than one sample")

    a, b, y_index, n_bar = _drift(config.params, config.mode_flag)
    dim = a.shape[0]
    m, sig = _discretize(a, b, dt)
    l_noise = _sqrt_psd_matrix(sig)

    seed = config.seed & (2 ** 64 - 1)
    rng_thermal = np.random.Generator(
        np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    rng_shot = np.random.Generator(
        np.random.Philox(key=np.array([seed, 1], dtype=np.uint64)))

    if initial_state is not None:
        z = _state_to_vector(initial_state, y_index, n_bar,
                             config.mode_flag, dim)
    else:
        z = _stationary_vector(m, sig, rng_thermal)
        if z is None:
            z = np.zeros(dim)  # anti-damped: start at rest, flag on blowup

    x = np.empty(n)
    want_aux = store_aux and y_index >= 0
    aux = np.empty(n) if want_aux else None

    n_keep, unstable = n, False
    for start in range(0, n, _CHUNK):
        k = min(_CHUNK, n - start)
        w = rng_thermal.standard_normal((k, dim)) @ l_noise.T
        aux_view = aux[start:start + k] if want_aux else None
        _kernels.propagate(m, z, w, x[start:start + k], aux_view,
                           y_index if want_aux else -1, backend)
        seg = x[start:start + k]
        bad = ~np.isfinite(seg) | (np.abs(seg) > _BLOWUP)
        if bad.any():
            n_keep = start + int(np.argmax(bad))
            unstable = True
            break

    x = x[:n_keep]
    if store_aux:
        if want_aux:
            aux = aux[:n_keep] + n_bar
        else:
            # tau_t = 0: y_pt tracks the photon number instantaneously
            c_x = photon_number_slope(config.params)
            aux = n_bar + c_x * x
    else:
        aux = None

    if config.shot_noise_floor > 0.0 and n_keep > 0:
        sigma_shot = math.sqrt(config.shot_noise_floor * config.sample_rate)
        hom = x.copy()
        for start in range(0, n_keep, _CHUNK):
            k = min(_CHUNK, n_keep - start)
            hom[start:start + k] += sigma_shot * rng_shot.standard_normal(k)
    else:
        hom = x.copy()

    return SimTrace(t0=0.0, dt=dt, x_samples=x, homodyne_samples=hom,
                    seed=config.seed, config_hash=sim_config_hash(config),
                    unstable=unstable, aux_samples=aux)


def replay(config: SimConfig, expected_hash: str | None = None,
           backend: str | None = None) -> SimTrace:
    """Re-run a config; bit-identical to the original run within a backend.

    expected_hash (from the original SimTrace) is checked first so altered
    parameters are caught before any compute.
    """
    if expected_hash is not None:
        got = sim_config_hash(config)
        if got != expected_hash:
            raise ValueError(
                f"config_hash mismatch: expected {expected_hash}, got {got}; "
                "the parameters differ from the recorded run")
    return simulate(config, backend=backend)
