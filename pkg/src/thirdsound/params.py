"""System parameters for an optomechanical film mode coupled to a driven cavity.

Conventions
-----------
Config files and dataclass fields store ordinary frequencies in Hz (the
``*_hz`` keys) and SI quantities otherwise.  Angular frequencies in rad/s are
exposed as derived properties (``omega_m``, ``gamma_m``, ``kappa``,
``detuning``, ``g``).  The split keeps config round-trips bit-exact: a value
written as Hz comes back as the identical float, which would not survive a
2*pi there-and-back.

The cavity field convention: a drive of power P at wavelength lam carries a
photon flux |a_in|^2 = P*lam/(2*pi*hbar*c), and the steady intracavity
amplitude is a = sqrt(2*kappa_in)*a_in/(kappa - i*Delta) with kappa the total
amplitude decay rate and Delta the laser-cavity detuning.  The overall phase
is fixed so a_in is real.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "MechanicalMode",
    "OpticalCavity",
    "DriveField",
    "PhotothermalCoupling",
    "SystemParams",
    "photon_flux",
    "intracavity_amplitude",
    "intracavity_photon_number",
    "photon_number_slope",
    "zero_point_motion",
    "params_to_config",
    "params_from_config",
    "config_digest",
    "CONFIG_KEYS",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental constants (CODATA exact values). Immutable."""

    hbar: float = 1.054571817e-34  # J s
    k_B: float = 1.380649e-23      # J/K
    c: float = 299792458.0         # m/s


CONSTANTS = PhysicalConstants()


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class MechanicalMode:
    """A single mechanical mode: frequency, intrinsic linewidth, mass, bath T."""

    omega_m_hz: float
    gamma_m_hz: float
    m_eff_kg: float
    temperature_k: float

    def __post_init__(self) -> None:
        _require(self.omega_m_hz > 0, "omega_m_hz must be positive")
        _require(self.gamma_m_hz > 0, "gamma_m_hz must be positive")
        _require(self.m_eff_kg > 0, "m_eff_kg must be positive")
        _require(self.temperature_k >= 0, "temperature_k must be nonnegative")

    @property
    def omega_m(self) -> float:
        """Angular resonance frequency, rad/s."""
        return TWO_PI * self.omega_m_hz

    @property
    def gamma_m(self) -> float:
        """Intrinsic energy decay rate, rad/s."""
        return TWO_PI * self.gamma_m_hz


@dataclass(frozen=True)
class OpticalCavity:
    """Cavity decay channels and detuning (stored relative to total kappa)."""

    kappa_in_hz: float
    kappa_0_hz: float
    detuning_over_kappa: float

    def __post_init__(self) -> None:
        _require(self.kappa_in_hz > 0, "kappa_in_hz must be positive")
        _require(self.kappa_0_hz >= 0, "kappa_0_hz must be nonnegative")
        _require(math.isfinite(self.detuning_over_kappa),
                 "detuning_over_kappa must be finite")

    @property
    def kappa_in(self) -> float:
        """Input-coupler amplitude decay rate, rad/s."""
        return TWO_PI * self.kappa_in_hz

    @property
    def kappa_0(self) -> float:
        """Intrinsic amplitude decay rate, rad/s."""
        return TWO_PI * self.kappa_0_hz

    @property
    def kappa(self) -> float:
        """Total amplitude decay rate kappa_in + kappa_0, rad/s."""
        return TWO_PI * (self.kappa_in_hz + self.kappa_0_hz)

    @property
    def detuning(self) -> float:
        """Laser-cavity detuning Delta, rad/s."""
        return self.detuning_over_kappa * self.kappa


@dataclass(frozen=True)
class DriveField:
    """Launched optical drive."""

    power_w: float
    wavelength_m: float

    def __post_init__(self) -> None:
        _require(self.power_w >= 0, "power_w must be nonnegative")
        _require(self.wavelength_m > 0, "wavelength_m must be positive")


@dataclass(frozen=True)
class PhotothermalCoupling:
    """Optomechanical coupling plus the photothermal response channel.

    The model depends on beta and absorption only through their product
    (the photothermal strength relative to radiation pressure); they are
    kept as separate fields because they are set by separate physics.
    beta may take either sign; a negative product flips heating/cooling.
    """

    g_hz_per_m: float
    beta: float
    absorption: float
    tau_t_s: float

    def __post_init__(self) -> None:
        _require(math.isfinite(self.g_hz_per_m), "g_hz_per_m must be finite")
        _require(math.isfinite(self.beta), "beta must be finite")
        _require(0.0 <= self.absorption <= 1.0, "absorption must lie in [0, 1]")
        _require(self.tau_t_s >= 0, "tau_t_s must be nonnegative")

    @property
    def g(self) -> float:
        """Dispersive coupling d(omega_cav)/dx, rad/s per meter."""
        return TWO_PI * self.g_hz_per_m

    @property
    def beta_times_a(self) -> float:
        """Photothermal-to-radiation-pressure force ratio beta*A."""
        return self.beta * self.absorption


@dataclass(frozen=True)
class SystemParams:
    """Complete parameter set for one cavity-coupled mechanical mode."""

    mode: MechanicalMode
    cavity: OpticalCavity
    drive: DriveField
    photothermal: PhotothermalCoupling


def photon_flux(drive: DriveField, const: PhysicalConstants = CONSTANTS) -> float:
    """Launched photon flux |a_in|^2 = P*lam/(2*pi*hbar*c), photons/s."""
    return drive.power_w * drive.wavelength_m / (TWO_PI * const.hbar * const.c)


def intracavity_amplitude(cavity: OpticalCavity, drive: DriveField,
                          const: PhysicalConstants = CONSTANTS) -> complex:
    """Steady-state intracavity amplitude a = sqrt(2*kappa_in)*a_in/(kappa - i*Delta).

    Phase convention: a_in real, so the returned amplitude carries the full
    cavity phase. Units sqrt(photons).
    """
    a_in = math.sqrt(photon_flux(drive, const))
    return math.sqrt(2.0 * cavity.kappa_in) * a_in / (cavity.kappa - 1j * cavity.detuning)


def intracavity_photon_number(cavity: OpticalCavity, drive: DriveField,
                              const: PhysicalConstants = CONSTANTS) -> float:
    """Mean photon number |a|^2 = 2*kappa_in*|a_in|^2/(kappa^2 + Delta^2)."""
    return (2.0 * cavity.kappa_in * photon_flux(drive, const)
            / (cavity.kappa ** 2 + cavity.detuning ** 2))


def photon_number_slope(params: SystemParams,
                        const: PhysicalConstants = CONSTANTS) -> float:
    """Adiabatic photon-number response dn/dx = -2*n*Delta*g/(kappa^2 + Delta^2).

    The displacement x shifts the cavity resonance by g*x, so the steady
    photon number follows the Lorentzian lineshape; this is its local slope.
    """
    n = intracavity_photon_number(params.cavity, params.drive, const)
    kap, det = params.cavity.kappa, params.cavity.detuning
    return -2.0 * n * det * params.photothermal.g / (kap ** 2 + det ** 2)


def zero_point_motion(mode: MechanicalMode,
                      const: PhysicalConstants = CONSTANTS) -> float:
    """Zero-point displacement x_zpf = sqrt(hbar/(2*m_eff*omega_m)), meters."""
    return math.sqrt(const.hbar / (2.0 * mode.m_eff_kg * mode.omega_m))


# --- flat key-value config I/O -------------------------------------------
# Exactly these keys, in this order; unknown keys are a hard error.

CONFIG_KEYS = (
    "omega_m_hz", "gamma_m_hz", "m_eff_kg", "temperature_k",
    "kappa_in_hz", "kappa_0_hz", "detuning_over_kappa",
    "power_w", "wavelength_m",
    "g_hz_per_m", "beta", "absorption", "tau_t_s",
    "seed",
)


def _flat_dict(params: SystemParams, seed: int) -> dict:
    out = {}
    for section in (params.mode, params.cavity, params.drive, params.photothermal):
        for f in fields(section):
            # numpy scalars sneak in from array math; repr must stay plain
            out[f.name] = float(getattr(section, f.name))
    out["seed"] = int(seed)
    return out


def params_to_config(params: SystemParams, seed: int) -> str:
    """Serialize to flat ``key = value`` text. Floats use repr: bit-exact round trip."""
    d = _flat_dict(params, seed)
    lines = [f"{k} = {d[k]!r}" for k in CONFIG_KEYS]
    return "\n".join(lines) + "\n"


def params_from_config(text: str) -> tuple[SystemParams, int]:
    """Parse flat key-value config text.

    Grammar: one ``key = value`` per line; ``#`` starts a comment; blank
    lines ignored. All keys in CONFIG_KEYS are required; any other key,
    a duplicate, or an unparsable value raises ValueError (fail closed).
    """
    seen: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in CONFIG_KEYS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        try:
            seen[key] = int(val) if key == "seed" else float(val)
        except ValueError as exc:
            raise ValueError(f"config line {lineno}: bad value for {key!r}: {val!r}") from exc
    missing = [k for k in CONFIG_KEYS if k not in seen]
    if missing:
        raise ValueError(f"config missing keys: {', '.join(missing)}")
    params = SystemParams(
        mode=MechanicalMode(
            omega_m_hz=seen["omega_m_hz"], gamma_m_hz=seen["gamma_m_hz"],
            m_eff_kg=seen["m_eff_kg"], temperature_k=seen["temperature_k"]),
        cavity=OpticalCavity(
            kappa_in_hz=seen["kappa_in_hz"], kappa_0_hz=seen["kappa_0_hz"],
            detuning_over_kappa=seen["detuning_over_kappa"]),
        drive=DriveField(power_w=seen["power_w"], wavelength_m=seen["wavelength_m"]),
        photothermal=PhotothermalCoupling(
            g_hz_per_m=seen["g_hz_per_m"], beta=seen["beta"],
            absorption=seen["absorption"], tau_t_s=seen["tau_t_s"]),
    )
    return params, int(seen["seed"])


def config_digest(params: SystemParams, seed: int) -> str:
    """sha256 hex digest of the canonical config text."""
    return hashlib.sha256(params_to_config(params, seed).encode()).hexdigest()
