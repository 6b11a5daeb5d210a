"""Dynamical backaction of a detuned cavity field with a delayed photothermal channel.

The intracavity field modifies the mechanical susceptibility to

    chi'(w)^-1 = m_eff*(w_m^2 + 2*w*dw_m(w) - w^2 + i*w*(Gamma_m + dG_m(w)))

with frequency pull and damping change

    dw_m = A(w)/(2*w_m) * [ P*(1 + bA/L) - 2*kappa*w^2*tau*bA/L ]
    dG_m = -A(w)     * [ P*tau*bA/L + 2*kappa*(1 + bA/L) ]

where P = kappa^2 + Delta^2 - w^2, L = 1 + w^2*tau^2, bA = beta*absorption,
and A(w) = 4*g0^2*|a|^2*w_m*Delta / |D(w)D*(-w)|^2 is the (dimensionless)
cavity response weight, D(w) = kappa + i*(w - Delta).  The shift expressions
are evaluated at the bare w_m for scalar reporting; effective_susceptibility
evaluates them at every probe frequency as printed.

Sign conventions: red detuning (Delta < 0) with beta = 0 gives dG_m > 0
(cooling); a sufficiently negative beta*A flips it (heating with narrowing
removed, i.e. narrowing with heating).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .params import (CONSTANTS, MechanicalMode, OpticalCavity,
                     PhotothermalCoupling, SystemParams,
                     intracavity_photon_number, photon_flux, zero_point_motion)

__all__ = [
    "BackactionPoint",
    "BackactionFit",
    "cavity_response",
    "response_product",
    "bare_susceptibility",
    "photothermal_kernel",
    "photothermal_filter",
    "prefactor_A",
    "coupling_scale",
    "delta_omega_m",
    "delta_gamma_m",
    "effective_susceptibility",
    "detuning_sweep",
    "fit_detuning_sweep",
]


def cavity_response(cavity: OpticalCavity, omega) -> complex:
    """Cavity response denominator D(w) = kappa + i*(w - Delta), rad/s."""
    omega = np.asarray(omega, dtype=float)
    return cavity.kappa + 1j * (omega - cavity.detuning)


def response_product(cavity: OpticalCavity, omega) -> complex:
    """D(w)*D*(-w) = kappa^2 + Delta^2 - w^2 + 2i*kappa*w."""
    omega = np.asarray(omega, dtype=float)
    kap, det = cavity.kappa, cavity.detuning
    return kap ** 2 + det ** 2 - omega ** 2 + 2j * kap * omega


def bare_susceptibility(mode: MechanicalMode, omega) -> complex:
    """chi(w) = 1/(m_eff*(w_m^2 - w^2 + i*w*Gamma_m))."""
    omega = np.asarray(omega, dtype=float)
    return 1.0 / (mode.m_eff_kg
                  * (mode.omega_m ** 2 - omega ** 2 + 1j * omega * mode.gamma_m))


def photothermal_kernel(t, tau_t: float) -> np.ndarray:
    """Causal memory kernel exp(-t/tau_t) for t >= 0, else 0.

    Its Fourier transform (physics convention e^{-iwt} forward in the
    equations of motion) is tau_t/(1 + i*w*tau_t).
    """
    if tau_t <= 0:
        raise ValueError("tau_t must be positive for a memory kernel")
    t = np.asarray(t, dtype=float)
    return np.where(t >= 0.0, np.exp(-np.clip(t, 0.0, None) / tau_t), 0.0)


def photothermal_filter(pt: PhotothermalCoupling, omega) -> complex:
    """Force filter 1 + beta*A/(1 + i*w*tau_t); reduces to 1 + beta*A at tau_t = 0."""
    omega = np.asarray(omega, dtype=float)
    return 1.0 + pt.beta_times_a / (1.0 + 1j * omega * pt.tau_t_s)


def coupling_scale(params: SystemParams) -> float:
    """g0^2 * n_bar(Delta=0), rad^2/s^2: the power- and coupling-dependent scale.

    n_bar(Delta) = n_bar(0)*kappa^2/(kappa^2 + Delta^2), so this single
    number fixes the sweep amplitude at fixed input power.
    """
    g0 = params.photothermal.g * zero_point_motion(params.mode)
    n0 = (2.0 * params.cavity.kappa_in * photon_flux(params.drive)
          / params.cavity.kappa ** 2)
    return g0 ** 2 * n0


def prefactor_A(params: SystemParams, omega) -> np.ndarray:
    """A(w) = 4*g0^2*|a|^2*w_m*Delta/|D(w)D*(-w)|^2, dimensionless.

    |a|^2 is the photon number at this detuning (fixed input power).
    """
    omega = np.asarray(omega, dtype=float)
    g0 = params.photothermal.g * zero_point_motion(params.mode)
    n = intracavity_photon_number(params.cavity, params.drive)
    dd = response_product(params.cavity, omega)
    return (4.0 * g0 ** 2 * n * params.mode.omega_m * params.cavity.detuning
            / np.abs(dd) ** 2)


def _shift_terms(beta_a: float, tau_t: float, scale: float,
                 omega_m: float, kappa: float, detuning, omega):
    """(dw_m, dG_m) in rad/s from the printed expressions, vectorized.

    scale = g0^2*n_bar(0); detuning and omega broadcast together.
    """
    det = np.asarray(detuning, dtype=float)
    w = np.asarray(omega, dtype=float)
    k2 = kappa ** 2
    pterm = k2 + det ** 2 - w ** 2
    abs2 = pterm ** 2 + 4.0 * k2 * w ** 2
    a_w = 4.0 * scale * (k2 / (k2 + det ** 2)) * omega_m * det / abs2
    lden = 1.0 + (w * tau_t) ** 2
    filt = beta_a / lden
    d_omega = a_w / (2.0 * omega_m) * (pterm * (1.0 + filt)
                                       - 2.0 * kappa * w ** 2 * tau_t * filt)
    d_gamma = -a_w * (pterm * tau_t * filt + 2.0 * kappa * (1.0 + filt))
    return d_omega, d_gamma


def delta_omega_m(params: SystemParams, omega) -> np.ndarray:
    """Mechanical frequency shift dw_m(w), rad/s."""
    dw, _ = _shift_terms(params.photothermal.beta_times_a,
                         params.photothermal.tau_t_s, coupling_scale(params),
                         params.mode.omega_m, params.cavity.kappa,
                         params.cavity.detuning, omega)
    return dw


def delta_gamma_m(params: SystemParams, omega) -> np.ndarray:
    """Mechanical damping change dG_m(w), rad/s."""
    _, dg = _shift_terms(params.photothermal.beta_times_a,
                         params.photothermal.tau_t_s, coupling_scale(params),
                         params.mode.omega_m, params.cavity.kappa,
                         params.cavity.detuning, omega)
    return dg


def effective_susceptibility(params: SystemParams, omega) -> complex:
    """chi'(w) with the shift terms evaluated at each probe frequency."""
    w = np.asarray(omega, dtype=float)
    dw, dg = _shift_terms(params.photothermal.beta_times_a,
                          params.photothermal.tau_t_s, coupling_scale(params),
                          params.mode.omega_m, params.cavity.kappa,
                          params.cavity.detuning, w)
    mode = params.mode
    return 1.0 / (mode.m_eff_kg * (mode.omega_m ** 2 + 2.0 * w * dw - w ** 2
                                   + 1j * w * (mode.gamma_m + dg)))


@dataclass(frozen=True)
class BackactionPoint:
    """Backaction observables at one detuning (rad/s internally)."""

    detuning_over_kappa: float
    delta_omega: float
    delta_gamma: float
    effective_gamma: float
    temperature_ratio: float  # Gamma_0/Gamma_eff; NaN past the instability


def detuning_sweep(params: SystemParams, detunings) -> list[BackactionPoint]:
    """Evaluate the backaction observables at each Delta/kappa.

    Input power is held fixed: the photon number is recomputed at every
    detuning.  temperature_ratio = Gamma_0/Gamma_eff becomes the NaN
    undefined-marker where Gamma_eff <= 0 (parametric instability; the
    linear temperature formula is invalid there).
    """
    dk = np.asarray(detunings, dtype=float)
    if not np.all(np.isfinite(dk)):
        raise ValueError("detunings must be finite")
    kappa = params.cavity.kappa
    wm, g0rate = params.mode.omega_m, params.mode.gamma_m
    dw, dg = _shift_terms(params.photothermal.beta_times_a,
                          params.photothermal.tau_t_s, coupling_scale(params),
                          wm, kappa, dk * kappa, wm)
    dw, dg = np.atleast_1d(dw), np.atleast_1d(dg)
    points = []
    for i, d in enumerate(np.atleast_1d(dk)):
        geff = g0rate + dg[i]
        ratio = g0rate / geff if geff > 0.0 else math.nan
        points.append(BackactionPoint(
            detuning_over_kappa=float(d), delta_omega=float(dw[i]),
            delta_gamma=float(dg[i]), effective_gamma=float(geff),
            temperature_ratio=float(ratio)))
    return points


@dataclass(frozen=True)
class BackactionFit:
    """Fitted backaction parameters with 1-sigma errors.

    A single detuning sweep at fixed probe frequency determines exactly two
    combinations of (beta*A, tau_t, coupling_scale): with L = 1 +
    (omega_m*tau_t)^2 and f = beta*A/L,

        instant_weight  X = coupling_scale*(1 + f)       (rad^2/s^2)
        delayed_weight  Y = coupling_scale*tau_t*f       (rad^2/s^2 * s)

    because both dw_m(Delta) and dG_m(Delta) are linear in (X, Y) at fixed
    omega.  Every triple on the one-parameter family {tau: scale = X - Y/tau,
    f = Y/(tau*scale), beta*A = f*L} reproduces the sweep bit-for-bit, so the
    reported triple is a documented canonical representative of that family
    (see fit_detuning_sweep), tau_t_err is NaN (unconstrained along the
    family), and beta_times_a_err / coupling_scale_err are conditional on the
    reported tau_t_s.  Physical conclusions should be drawn from the weights.
    """

    beta_times_a: float
    tau_t_s: float
    coupling_scale: float
    beta_times_a_err: float
    tau_t_err: float
    coupling_scale_err: float
    instant_weight: float
    delayed_weight_s: float
    instant_weight_err: float
    delayed_weight_err_s: float
    residual_norm: float
    converged: bool
    message: str = ""


_FAMILY_NOTE = (
    "single-sweep data constrain only instant_weight = "
    "coupling_scale*(1+beta_times_a/L) and delayed_weight_s = "
    "coupling_scale*tau_t*beta_times_a/L with L = 1+(omega_m*tau_t)^2; "
    "the reported triple is one point of the exact one-parameter family")


def _response_columns(omega_m: float, kappa: float, det_rad):
    """Per-point coefficients of (X, Y) in (dG_m, dw_m), rad/s.

    dG_m = ug*X + vg*Y and dw_m = uw*X + vw*Y exactly; derived from
    _shift_terms so there is a single source of truth for the model.
    """
    uw, ug = _shift_terms(0.0, 0.0, 1.0, omega_m, kappa, det_rad, omega_m)
    # second evaluation at beta*A = 1, omega_m*tau = 1 where X = 3/2, Y = 1/(2 omega_m)
    t0 = 1.0 / omega_m
    dw1, dg1 = _shift_terms(1.0, t0, 1.0, omega_m, kappa, det_rad, omega_m)
    x1, y1 = 1.5, 0.5 * t0
    vw = (dw1 - uw * x1) / y1
    vg = (dg1 - ug * x1) / y1
    return ug, vg, uw, vw


def _complete_triple(x: float, y: float, omega_m: float):
    """Canonical (beta*A, tau_t, scale) reproducing weights (x, y).

    Any tau with scale = x - y/tau > 0 works; the gauge is fixed per sign
    branch: for x, y > 0 the minimum-|beta*A| point tau = r + sqrt(r^2 +
    1/omega_m^2) with r = y/x; for x < 0, y < 0 (photothermal-dominated)
    the midpoint tau = r/2 of the admissible window (0, r); for x > 0,
    y < 0, tau = 1/omega_m.  Returns None when no positive scale exists
    (x <= 0 <= y with y != 0).
    """
    if y == 0.0:
        return (0.0, 0.0, x) if x > 0 else None
    r = y / x if x != 0.0 else math.inf
    if x > 0 and y > 0:
        tau = r + math.hypot(r, 1.0 / omega_m)
    elif x < 0 and y < 0:
        tau = 0.5 * r
    elif x > 0:
        tau = 1.0 / omega_m
    else:
        return None
    scale = x - y / tau
    if scale <= 0 or not math.isfinite(scale):
        return None
    f = y / (tau * scale)
    return f * (1.0 + (omega_m * tau) ** 2), tau, scale


def fit_detuning_sweep(detuning_over_kappa, gamma_hz, domega_hz,
                       gamma_err_hz=None, domega_err_hz=None, *,
                       omega_m: float, kappa: float, gamma_0: float) -> BackactionFit:
    """Fit the backaction model to a measured detuning sweep.

    gamma_hz is the absolute measured linewidth Gamma_eff/2pi (modeled as
    gamma_0/2pi + dG/2pi with gamma_0 known); domega_hz is the frequency
    shift dw/2pi.  Errors default to uniform weights.  omega_m, kappa,
    gamma_0 are known constants in rad/s.

    At fixed probe frequency the model is linear in the two identifiable
    weights (X, Y) (see BackactionFit), so the weighted least-squares
    optimum is found exactly by a linear solve; residual norm and standard
    errors come from that design matrix (scaled by reduced chi^2 when no
    measurement errors are supplied, absolute otherwise).  The reported
    (beta_times_a, tau_t_s, coupling_scale) are the canonical representative
    of the exact degenerate family through (X, Y), with the family noted in
    the message.  If the delayed weight carries no signal (tau_t -> 0 data),
    only the product coupling_scale*(1+beta_times_a) is identifiable and the
    fit returns converged=False naming that combination.
    """
    dk = np.asarray(detuning_over_kappa, dtype=float)
    gam = np.asarray(gamma_hz, dtype=float)
    dom = np.asarray(domega_hz, dtype=float)
    if dk.ndim != 1 or dk.size < 4:
        raise ValueError("need at least 4 sweep points")
    if gam.shape != dk.shape or dom.shape != dk.shape:
        raise ValueError("gamma_hz and domega_hz must match detunings")
    sg = np.ones_like(gam) if gamma_err_hz is None else np.asarray(gamma_err_hz, float)
    sw = np.ones_like(dom) if domega_err_hz is None else np.asarray(domega_err_hz, float)
    if np.any(sg <= 0) or np.any(sw <= 0):
        raise ValueError("errors must be positive")
    if not (np.all(np.isfinite(gam)) and np.all(np.isfinite(dom))
            and np.all(np.isfinite(dk))):
        raise ValueError("sweep data must be finite")

    two_pi = 2.0 * math.pi
    ug, vg, uw, vw = _response_columns(omega_m, kappa, dk * kappa)
    design = np.empty((2 * dk.size, 2))
    design[:dk.size, 0] = ug / two_pi / sg
    design[:dk.size, 1] = vg / two_pi / sg
    design[dk.size:, 0] = uw / two_pi / sw
    design[dk.size:, 1] = vw / two_pi / sw
    target = np.concatenate([(gam - gamma_0 / two_pi) / sg, dom / sw])

    sv = np.linalg.svd(design, compute_uv=False)
    if sv[0] <= 0:
        raise RuntimeError("design matrix vanished: all-zero response columns")
    product_only = sv[-1] / sv[0] < 1e-10

    if product_only:
        # rank 1: the delayed column adds nothing; X alone is identifiable
        gx = design[:, 0]
        x_hat = float(gx @ target / (gx @ gx))
        y_hat = 0.0
        resid = target - gx * x_hat
        cov = np.array([[1.0 / (gx @ gx), 0.0], [0.0, math.inf]])
    else:
        sol, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
        x_hat, y_hat = float(sol[0]), float(sol[1])
        resid = target - design @ sol
        cov = np.linalg.inv(design.T @ design)
    if gamma_err_hz is None and domega_err_hz is None:
        dof = max(2 * dk.size - (1 if product_only else 2), 1)
        cov = cov * float(resid @ resid) / dof
    x_err = math.sqrt(max(cov[0, 0], 0.0))
    y_err = math.sqrt(max(cov[1, 1], 0.0)) if math.isfinite(cov[1, 1]) else math.nan

    # delay signal below numerical significance behaves like tau_t -> 0 data
    if not product_only and abs(y_hat) * omega_m <= 1e-9 * abs(x_hat):
        product_only = True
        y_hat = 0.0

    if product_only:
        triple = _complete_triple(x_hat, 0.0, omega_m)
        ba, tau, scale = triple if triple else (math.nan, math.nan, math.nan)
        return BackactionFit(
            beta_times_a=ba, tau_t_s=tau, coupling_scale=scale,
            beta_times_a_err=math.nan, tau_t_err=math.nan,
            coupling_scale_err=x_err,
            instant_weight=x_hat, delayed_weight_s=y_hat,
            instant_weight_err=x_err, delayed_weight_err_s=y_err,
            residual_norm=float(np.linalg.norm(resid)),
            converged=False,
            message=("degenerate fit: no delayed response in the sweep, only "
                     "the product coupling_scale*(1+beta_times_a) is "
                     "identifiable, not the factors"))

    triple = _complete_triple(x_hat, y_hat, omega_m)
    if triple is None:
        return BackactionFit(
            beta_times_a=math.nan, tau_t_s=math.nan, coupling_scale=math.nan,
            beta_times_a_err=math.nan, tau_t_err=math.nan,
            coupling_scale_err=math.nan,
            instant_weight=x_hat, delayed_weight_s=y_hat,
            instant_weight_err=x_err, delayed_weight_err_s=y_err,
            residual_norm=float(np.linalg.norm(resid)),
            converged=False,
            message=("fitted weights admit no positive coupling scale "
                     "(instant_weight <= 0 with delayed_weight >= 0); " + _FAMILY_NOTE))
    ba, tau, scale = triple

    # errors on (beta*A, scale) conditional on the reported tau: linear
    # propagation of cov(X, Y) through scale = X - Y/tau, f = Y/(tau*scale)
    denom = tau * x_hat - y_hat
    jac_s = np.array([1.0, -1.0 / tau])
    jac_f = np.array([-tau * y_hat, tau * x_hat]) / denom ** 2
    lfac = 1.0 + (omega_m * tau) ** 2
    var_s = float(jac_s @ cov @ jac_s)
    var_ba = float(lfac ** 2 * (jac_f @ cov @ jac_f))
    return BackactionFit(
        beta_times_a=ba, tau_t_s=tau, coupling_scale=scale,
        beta_times_a_err=math.sqrt(max(var_ba, 0.0)), tau_t_err=math.nan,
        coupling_scale_err=math.sqrt(max(var_s, 0.0)),
        instant_weight=x_hat, delayed_weight_s=y_hat,
        instant_weight_err=x_err, delayed_weight_err_s=y_err,
        residual_norm=float(np.linalg.norm(resid)),
        converged=True, message=_FAMILY_NOTE)


def with_detuning(params: SystemParams, detuning_over_kappa: float) -> SystemParams:
    """A copy of params at a different Delta/kappa."""
    return replace(params, cavity=replace(params.cavity,
                                          detuning_over_kappa=detuning_over_kappa))


def with_power(params: SystemParams, power_w: float) -> SystemParams:
    """A copy of params at a different launched power."""
    return replace(params, drive=replace(params.drive, power_w=power_w))
