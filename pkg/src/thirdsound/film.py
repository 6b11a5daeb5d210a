"""Superfluid film acoustics and the non-equilibrium bath it presents.

Third sound on a van der Waals-bound helium film propagates at
``c3 = sqrt(3*(rho_s/rho)*alpha_vdw/d^3)`` where d is the film thickness and
alpha_vdw the substrate van der Waals coefficient.  A confined resonator of
geometric scale L supports modes at ``f = zeta*c3/(2*pi*L)`` with zeta a
boundary-condition eigenvalue supplied by the caller.

A bath with unequal force-noise spectral densities s_plus, s_minus at +/- the
mode frequency acts as a reservoir at ``T_B = hbar*w/(k_B*ln(s_plus/s_minus))``
coupled at rate ``Gamma_B = (x_zpf^2/hbar^2)*(s_plus - s_minus)``; the mode
settles at the rate-weighted mixture of the cryostat and bath temperatures.
Both T_B and Gamma_B may be negative (emission-dominated bath), which is how
linewidth narrowing coexists with mode heating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.special import jnp_zeros

from .params import CONSTANTS, MechanicalMode, PhysicalConstants, zero_point_motion

__all__ = [
    "SuperfluidFilm",
    "NonEquilibriumBath",
    "PowerLawFit",
    "third_sound_speed",
    "mode_frequency",
    "bessel_zeta",
    "bath_temperature",
    "bath_coupling",
    "bath_heat_load",
    "final_temperature",
    "fit_power_law",
    "ALPHA_VDW_DEFAULT",
]

ALPHA_VDW_DEFAULT = 2.65e21  # nm^5 / s^2

# Relative |s+ - s-| below which T_B is reported as the infinite-temperature
# (fully classical) marker rather than a huge finite number.
_EQUAL_RATE_RTOL = 1e-12


@dataclass(frozen=True)
class SuperfluidFilm:
    """Helium film: thickness in nm, superfluid fraction, vdW coefficient."""

    thickness_nm: float
    superfluid_fraction: float = 1.0
    alpha_vdw: float = ALPHA_VDW_DEFAULT  # nm^5/s^2

    def __post_init__(self) -> None:
        if self.thickness_nm <= 0:
            raise ValueError("thickness_nm must be positive")
        if not 0.0 <= self.superfluid_fraction <= 1.0:
            raise ValueError("superfluid_fraction must lie in [0, 1]")
        if self.alpha_vdw <= 0:
            raise ValueError("alpha_vdw must be positive")


def third_sound_speed(film: SuperfluidFilm) -> float:
    """Third-sound speed c3 = sqrt(3*(rho_s/rho)*alpha_vdw/d^3), m/s.

    alpha_vdw/d^3 carries nm^2/s^2 in the stored units, hence the 1e-9.
    """
    c_nm = math.sqrt(3.0 * film.superfluid_fraction * film.alpha_vdw
                     / film.thickness_nm ** 3)
    return c_nm * 1e-9


def bessel_zeta(m: int, n: int) -> float:
    """n-th zero of J_m', for a disk mode with a free film edge.

    Reference eigenvalues only: the mode shapes of the measured device are
    not established, so nothing downstream depends on this table.
    """
    if m < 0 or n < 1:
        raise ValueError("need m >= 0 and n >= 1")
    return float(jnp_zeros(m, n)[-1])


def mode_frequency(film: SuperfluidFilm, length_m: float, zeta: float) -> float:
    """Confined-wave mode frequency f = zeta*c3/(2*pi*L), Hz.

    zeta is a free geometry eigenvalue (see bessel_zeta for one standard
    choice); L is the confinement scale in meters.
    """
    if length_m <= 0 or zeta <= 0:
        raise ValueError("length_m and zeta must be positive")
    return zeta * third_sound_speed(film) / (2.0 * math.pi * length_m)


@dataclass(frozen=True)
class NonEquilibriumBath:
    """Bath description: spectral densities at +/-omega_m, or (T_B, Gamma_B).

    Exactly one description must be supplied; use the classmethods.  Spectral
    densities are force-noise values S_BB(+omega_m), S_BB(-omega_m) in any
    common unit (only their ratio and difference enter).
    """

    s_plus: float | None = None
    s_minus: float | None = None
    t_b_k: float | None = None
    gamma_b_rad: float | None = None

    def __post_init__(self) -> None:
        spectral = self.s_plus is not None and self.s_minus is not None
        effective = self.t_b_k is not None and self.gamma_b_rad is not None
        if spectral == effective:
            raise ValueError(
                "supply either (s_plus, s_minus) or (t_b_k, gamma_b_rad), not both")
        if spectral and (self.s_plus <= 0 or self.s_minus <= 0):
            raise ValueError("spectral densities must be positive")

    @classmethod
    def from_spectral_densities(cls, s_plus: float, s_minus: float) -> "NonEquilibriumBath":
        return cls(s_plus=s_plus, s_minus=s_minus)

    @classmethod
    def from_effective(cls, t_b_k: float, gamma_b_rad: float) -> "NonEquilibriumBath":
        return cls(t_b_k=t_b_k, gamma_b_rad=gamma_b_rad)

    @property
    def is_spectral(self) -> bool:
        return self.s_plus is not None


def bath_temperature(bath: NonEquilibriumBath, omega_m: float,
                     const: PhysicalConstants = CONSTANTS) -> float:
    """Effective bath temperature T_B = hbar*w/(k_B*ln(s+/s-)), K (signed).

    Negative when emission beats absorption (s- > s+).  Equal rates mean a
    fully classical bath; below 1e-12 relative difference the infinite-
    temperature marker math.inf is returned instead of a noise-dominated
    huge number.
    """
    if not bath.is_spectral:
        return bath.t_b_k
    if omega_m <= 0:
        raise ValueError("omega_m must be positive")
    sp, sm = bath.s_plus, bath.s_minus
    if abs(sp - sm) <= _EQUAL_RATE_RTOL * max(sp, sm):
        return math.inf
    return const.hbar * omega_m / (const.k_B * math.log(sp / sm))


def bath_coupling(bath: NonEquilibriumBath, mode: MechanicalMode,
                  const: PhysicalConstants = CONSTANTS) -> float:
    """Bath coupling rate Gamma_B = (x_zpf^2/hbar^2)*(s+ - s-), rad/s (signed)."""
    if not bath.is_spectral:
        return bath.gamma_b_rad
    x_zpf = zero_point_motion(mode, const)
    return x_zpf ** 2 / const.hbar ** 2 * (bath.s_plus - bath.s_minus)


def bath_heat_load(bath: NonEquilibriumBath, mode: MechanicalMode,
                   omega_m: float,
                   const: PhysicalConstants = CONSTANTS) -> float:
    """The product T_B*Gamma_B, K*rad/s, stable through the s+ = s- limit.

    T_B*Gamma_B = (w*x_zpf^2/(k_B*hbar)) * (s+ - s-)/ln(s+/s-); the last
    factor tends to s as the rates merge (where T_B alone diverges), kept
    finite here via log1p.
    """
    if not bath.is_spectral:
        return bath.t_b_k * bath.gamma_b_rad
    x_zpf = zero_point_motion(mode, const)
    r = bath.s_plus / bath.s_minus - 1.0
    ratio = bath.s_minus if r == 0.0 else bath.s_minus * r / math.log1p(r)
    return omega_m * x_zpf ** 2 * ratio / (const.k_B * const.hbar)


def final_temperature(temperature_k: float, gamma_0: float,
                      t_b_k: float, gamma_b_rad: float) -> float:
    """Steady mode temperature (T*Gamma_0 + T_B*Gamma_B)/(Gamma_0 + Gamma_B), K.

    Gamma_B = 0 returns the cryostat temperature exactly (no bath term is
    evaluated, so an infinite-T_B marker with zero coupling is fine).  A
    nonpositive total damping rate has no steady state and raises.
    """
    if gamma_0 <= 0:
        raise ValueError("gamma_0 must be positive")
    if gamma_0 + gamma_b_rad <= 0:
        raise ValueError(
            "unstable: gamma_0 + gamma_b <= 0 has no steady-state temperature")
    if gamma_b_rad == 0.0:
        return temperature_k
    return ((temperature_k * gamma_0 + t_b_k * gamma_b_rad)
            / (gamma_0 + gamma_b_rad))


@dataclass(frozen=True)
class PowerLawFit:
    """Result of fitting y = a*P^b + c."""

    a: float
    b: float
    c: float
    a_err: float
    b_err: float
    c_err: float
    residual_norm: float
    converged: bool = True
    message: str = ""


def fit_power_law(power_w: np.ndarray, values: np.ndarray,
                  errors: np.ndarray | None = None,
                  fix_c: float | None = None) -> PowerLawFit:
    """Weighted least-squares fit of y = a*P^b + c.

    The power axis is normalized to its geometric mean internally, making
    the result covariant under unit changes (fitting in W or nW recovers
    the same b and c and a rescaled a); a and a_err are reported in the
    caller's units.  The initial guess takes c just under min(y), then
    (a, b) from the log-log slope of y - c against P.  fix_c pins the
    offset (use 0.0 for pure power laws).  Parameter errors are 1-sigma
    from the Jacobian at the optimum scaled by the residual variance.
    Non-convergence returns converged=False carrying the best-so-far
    parameters.
    """
    p = np.asarray(power_w, dtype=float)
    y = np.asarray(values, dtype=float)
    if p.ndim != 1 or p.shape != y.shape or p.size < 4:
        raise ValueError("need matching 1-d arrays with at least 4 points")
    if np.any(p <= 0):
        raise ValueError("power values must be positive")
    sig = np.ones_like(y) if errors is None else np.asarray(errors, dtype=float)
    if sig.shape != y.shape or np.any(sig <= 0):
        raise ValueError("errors must be positive and match values")

    # centered log-power keeps the optimizer basin independent of units
    p_0 = math.exp(float(np.mean(np.log(p))))
    u = p / p_0

    span = float(np.ptp(y))
    if span == 0.0:
        raise ValueError("values are constant; power law unidentifiable")
    c0 = float(np.min(y)) - 1e-3 * span if fix_c is None else fix_c
    shifted = y - c0
    if np.any(shifted <= 0):
        # pinned offset sits above some data; seed the slope from below anyway
        shifted = y - (float(np.min(y)) - 1e-3 * span)
    slope, intercept = np.polyfit(np.log(u), np.log(shifted), 1)
    a0, b0 = math.exp(intercept), slope

    if fix_c is None:
        def resid(th):
            return (th[0] * np.power(u, th[1]) + th[2] - y) / sig
        x0 = np.array([a0, b0, c0])
    else:
        def resid(th):
            return (th[0] * np.power(u, th[1]) + fix_c - y) / sig
        x0 = np.array([a0, b0])

    sol = least_squares(resid, x0=x0, method="lm", max_nfev=10000)

    dof = max(y.size - sol.x.size, 1)
    s2 = 2.0 * sol.cost / dof
    try:
        cov = np.linalg.inv(sol.jac.T @ sol.jac) * s2
    except np.linalg.LinAlgError:
        cov = np.full((sol.x.size, sol.x.size), math.nan)
    perr = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    if fix_c is None:
        a_u, b, c = sol.x
        b_e, c_e = perr[1], perr[2]
    else:
        (a_u, b), c = sol.x, fix_c
        b_e, c_e = perr[1], 0.0
    # back to caller units: a = a_u/p_0^b, propagated through cov(a_u, b)
    scale = p_0 ** -b
    a = a_u * scale
    grad = np.array([scale, -a_u * math.log(p_0) * scale])
    var_a = float(grad @ cov[:2, :2] @ grad)
    a_e = math.sqrt(var_a) if var_a >= 0.0 else math.nan
    return PowerLawFit(a=float(a), b=float(b), c=float(c),
                       a_err=float(a_e), b_err=float(b_e), c_err=float(c_e),
                       residual_norm=float(np.linalg.norm(sol.fun)),
                       converged=bool(sol.success),
                       message="" if sol.success else str(sol.message))
