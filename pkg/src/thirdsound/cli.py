"""Command-line entry point: deterministic runs with sealed artifacts.

Every subcommand writes its outputs into ``--out`` together with a
``manifest.json`` recording the resolved flags, the fully materialized
config text, the seed, the tool version, and SHA-256 digests of all
inputs and outputs, so a run can be reproduced from the manifest alone
(see invocation_from_manifest).  Failures leave a single-line JSON
object ``{"error", "message", "stage"?}`` on stderr; exit codes
distinguish usage errors (2), file I/O failures (3), and computation
failures (4).
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from . import backaction as ba
from . import film as fl
from .artifacts import (RunManifest, format_float, read_table, write_json,
                        write_table)
from .langevin import SimConfig, simulate
from .params import MechanicalMode, params_from_config, params_to_config
from .spectral import Psd, fit_mode, lorentzian_psd, welch_psd
from .tracker import demodulate, design_wiener, track_statistics

__all__ = ["main", "invocation_from_manifest"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_COMPUTE = 4

_TWO_PI = 2.0 * math.pi


class CliError(Exception):
    """Failure carrying an exit code and the machine-readable error kind."""

    def __init__(self, code: int, kind: str, message: str,
                 stage: str | None = None):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.stage = stage


class _Parser(argparse.ArgumentParser):
    # argparse exits the process on bad flags; raise instead so main()
    # can emit the error JSON and choose the exit code.
    def error(self, message):
        raise CliError(EXIT_USAGE, "usage", message)

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        # accept dash-leading numeric values (--sweep -1:0:41) as values,
        # not flags; there are no short options to collide with
        self._negative_number_matcher = re.compile(r"^-\d+[\d.:eE+-]*$")


def _print_error(err: CliError) -> None:
    doc = {"error": err.kind, "message": str(err)}
    if err.stage is not None:
        doc["stage"] = err.stage
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)


def _json_safe(doc: dict) -> dict:
    """Replace non-finite floats with null; JSON has no inf/nan literals."""
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
            for k, v in doc.items()}


def _parse_sweep(spec: str) -> np.ndarray:
    try:
        start_s, stop_s, count_s = spec.split(":")
        start, stop, count = float(start_s), float(stop_s), int(count_s)
    except ValueError:
        raise CliError(EXIT_USAGE, "usage",
                       f"--sweep wants start:stop:count, got {spec!r}")
    if count < 1:
        raise CliError(EXIT_USAGE, "usage", "--sweep count must be >= 1")
    return np.linspace(start, stop, count)


def _parse_band(spec: str) -> tuple[float, float]:
    try:
        lo_s, hi_s = spec.split(":")
        lo, hi = float(lo_s), float(hi_s)
    except ValueError:
        raise CliError(EXIT_USAGE, "usage",
                       f"--band wants lo:hi in Hz, got {spec!r}")
    if not lo < hi:
        raise CliError(EXIT_USAGE, "usage", "--band needs lo < hi")
    return lo, hi


def _parse_floats(spec: str) -> list[float]:
    try:
        return [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError:
        raise CliError(EXIT_USAGE, "usage",
                       f"expected comma-separated numbers, got {spec!r}")


def _load_params(args):
    """Read and resolve the config; returns (params, seed, resolved text)."""
    if args.config is None:
        raise CliError(EXIT_USAGE, "usage",
                       "--config is required for this subcommand")
    try:
        text = Path(args.config).read_text()
    except OSError as err:
        raise CliError(EXIT_IO, "io", f"cannot read config: {err}")
    try:
        params, seed = params_from_config(text)
    except ValueError as err:
        raise CliError(EXIT_USAGE, "usage", str(err))
    if args.seed is not None:
        seed = args.seed
    args.seed = seed
    return params, seed, params_to_config(params, seed)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, subcommand: str, config_text: str | None,
              seed: int | None) -> RunManifest:
    resolved = {}
    for key, value in vars(args).items():
        if key in ("func", "subcommand"):
            continue
        resolved[key] = str(value) if isinstance(value, Path) else value
    return RunManifest(subcommand=subcommand, resolved_args=resolved,
                       config_text=config_text, seed=seed,
                       tool_version=__version__)


def _trace_columns(path) -> tuple[np.ndarray, float]:
    """Homodyne record and sample rate from a trace table."""
    tab = read_table(path)
    for col in ("t_s", "homodyne_m"):
        if col not in tab:
            raise CliError(EXIT_COMPUTE, "computation",
                           f"{path}: missing column {col!r}")
    t = tab["t_s"]
    if t.size < 2:
        raise CliError(EXIT_COMPUTE, "computation",
                       f"{path}: need at least 2 samples")
    return tab, 1.0 / (t[1] - t[0])


# ---------------------------------------------------------------- handlers

def _cmd_backaction(args) -> None:
    params, seed, text = _load_params(args)
    if args.sweep is not None:
        dets = _parse_sweep(args.sweep)
    else:
        dets = np.array([params.cavity.detuning_over_kappa])
    points = ba.detuning_sweep(params, dets)
    out = _out_dir(args)
    man = _manifest(args, "backaction", text, seed)
    path = out / f"sweep.{args.format}"
    write_table(path,
                ["detuning_over_kappa", "delta_omega_hz", "delta_gamma_hz",
                 "gamma_eff_hz", "temperature_ratio"],
                [np.array([p.detuning_over_kappa for p in points]),
                 np.array([p.delta_omega for p in points]) / _TWO_PI,
                 np.array([p.delta_gamma for p in points]) / _TWO_PI,
                 np.array([p.effective_gamma for p in points]) / _TWO_PI,
                 np.array([p.temperature_ratio for p in points])],
                fmt=args.format)
    man.add_output(path)
    man.write(out)


def _cmd_fit_sweep(args) -> None:
    params, seed, text = _load_params(args)
    tab = read_table(args.input)
    for col in ("detuning_over_kappa", "gamma_hz", "domega_hz"):
        if col not in tab:
            raise CliError(EXIT_COMPUTE, "computation",
                           f"{args.input}: missing column {col!r}")
    fit = ba.fit_detuning_sweep(
        tab["detuning_over_kappa"], tab["gamma_hz"], tab["domega_hz"],
        gamma_err_hz=tab.get("gamma_err_hz"),
        domega_err_hz=tab.get("domega_err_hz"),
        omega_m=params.mode.omega_m, kappa=params.cavity.kappa,
        gamma_0=params.mode.gamma_m)
    out = _out_dir(args)
    man = _manifest(args, "fit-sweep", text, seed)
    man.add_input(args.input)
    path = out / "backaction_fit.json"
    write_json(path, _json_safe(asdict(fit)), schema="backaction_fit")
    man.add_output(path)
    man.write(out)


def _cmd_simulate(args) -> None:
    params, seed, text = _load_params(args)
    config = SimConfig(params=params, duration=args.duration,
                       sample_rate=args.rate, seed=seed,
                       mode_flag=args.mode,
                       shot_noise_floor=args.shot_floor)
    trace = simulate(config)
    if trace.unstable:
        print("warning: parametric instability reached; trace is clipped")
    t = trace.t0 + np.arange(trace.x_samples.size) * trace.dt
    out = _out_dir(args)
    man = _manifest(args, "simulate", text, seed)
    path = out / f"trace.{args.format}"
    write_table(path, ["t_s", "x_m", "homodyne_m"],
                [t, trace.x_samples, trace.homodyne_samples],
                fmt=args.format)
    man.add_output(path)
    man.write(out)


def _cmd_analyze(args) -> None:
    tab, fs = _trace_columns(args.input)
    column = "x_m" if args.channel == "x" else "homodyne_m"
    if column not in tab:
        raise CliError(EXIT_COMPUTE, "computation",
                       f"{args.input}: missing column {column!r}")
    psd = welch_psd(tab[column], sample_rate=fs,
                    segment_length=args.segment,
                    overlap_fraction=args.overlap, window=args.window)
    fit = fit_mode(psd, _parse_band(args.band))
    out = _out_dir(args)
    man = _manifest(args, "analyze", None, None)
    man.add_input(args.input)
    psd_path = out / f"psd.{args.format}"
    write_table(psd_path, ["freq_hz", "psd"],
                [psd.frequencies, psd.values], fmt=args.format)
    fit_path = out / "spectrum_fit.json"
    write_json(fit_path, _json_safe(asdict(fit)), schema="spectrum_fit")
    man.add_output(psd_path)
    man.add_output(fit_path)
    man.write(out)


def _cmd_track(args) -> None:
    seed = 0 if args.seed is None else args.seed
    args.seed = seed
    tab, fs = _trace_columns(args.input)
    record = tab["homodyne_m"]
    psd = welch_psd(record, sample_rate=fs, segment_length=args.segment)
    fit = fit_mode(psd, (0.8 * args.fm, 1.2 * args.fm))
    # single-sided peak c so that the Lorentzian area matches the fit
    c_fit = fit.area * 2.0 * fit.gamma_hz * fit.f_m_hz ** 2 / math.pi
    signal = Psd(psd.frequencies,
                 lorentzian_psd(psd.frequencies, fit.f_m_hz, fit.gamma_hz,
                                c_fit, 0.0),
                 1, "model", psd.resolution_bandwidth)
    noise = Psd(psd.frequencies, np.full_like(psd.frequencies, fit.floor),
                1, "model", psd.resolution_bandwidth)
    wiener = design_wiener(signal, noise, n_taps=args.taps)
    # fitted floor is the single-sided reading, demodulate wants double-sided
    track = demodulate(record, args.fm, wiener, sample_rate=fs,
                       lp_bandwidth_hz=args.lp_bw, bin_time_s=args.bin_time,
                       gamma_hz=fit.gamma_hz,
                       shot_noise_floor=fit.floor / 2.0, seed=seed)
    stats = track_statistics(track)
    ratio = (track.thermal_std / track.measurement_std
             if track.measurement_std > 0.0 else math.inf)
    out = _out_dir(args)
    man = _manifest(args, "track", None, seed)
    man.add_input(args.input)
    track_path = out / f"track.{args.format}"
    write_table(track_path, ["t_s", "x_quad_m", "y_quad_m"],
                [track.times, track.x_quad, track.y_quad], fmt=args.format)
    stats_path = out / "track_stats.json"
    write_json(stats_path, _json_safe({
        "n_points": stats.n_points,
        "thermal_std": track.thermal_std,
        "measurement_std": track.measurement_std,
        "thermal_over_measurement": ratio,
        "kurtosis_x": stats.kurtosis_x, "kurtosis_y": stats.kurtosis_y,
        "kurtosis_err": stats.kurtosis_err,
        "mean_x": stats.mean_x, "mean_y": stats.mean_y,
    }), schema="track_stats")
    man.add_output(track_path)
    man.add_output(stats_path)
    man.write(out)


def _cmd_film(args) -> None:
    film = fl.SuperfluidFilm(thickness_nm=args.thickness_nm,
                             superfluid_fraction=args.fraction,
                             alpha_vdw=args.alpha_vdw)
    speed = fl.third_sound_speed(film)
    print(f"third_sound_speed_m_per_s = {format_float(speed)}")
    doc = {"thickness_nm": args.thickness_nm,
           "superfluid_fraction": args.fraction,
           "alpha_vdw": args.alpha_vdw,
           "third_sound_speed_m_per_s": speed}
    if args.zeta is not None:
        if args.length_um is None:
            raise CliError(EXIT_USAGE, "usage",
                           "--length-um is required with --zeta")
        zetas = _parse_floats(args.zeta)
        freqs = [fl.mode_frequency(film, args.length_um * 1e-6, z)
                 for z in zetas]
        print("zeta,mode_frequency_hz")
        for zeta, freq in zip(zetas, freqs):
            print(f"{format_float(zeta)},{format_float(freq)}")
        doc["mode_frequencies_hz"] = freqs
    out = _out_dir(args)
    man = _manifest(args, "film", None, None)
    path = out / "film.json"
    write_json(path, doc, schema="film")
    man.add_output(path)
    man.write(out)


def _cmd_bath(args) -> None:
    spectral = any(v is not None for v in (args.s_plus, args.s_minus))
    direct = any(v is not None for v in (args.t_b_k, args.gamma_b_hz))
    if spectral == direct:
        raise CliError(EXIT_USAGE, "usage",
                       "give either --s-plus/--s-minus (with --fm-hz and "
                       "--m-eff-kg) or --t-b-k/--gamma-b-hz")
    gamma_0 = _TWO_PI * args.gamma0_hz
    if spectral:
        missing = [flag for flag, v in (("--s-plus", args.s_plus),
                                        ("--s-minus", args.s_minus),
                                        ("--fm-hz", args.fm_hz),
                                        ("--m-eff-kg", args.m_eff_kg))
                   if v is None]
        if missing:
            raise CliError(EXIT_USAGE, "usage",
                           "missing " + ", ".join(missing))
        bath = fl.NonEquilibriumBath(s_plus=args.s_plus,
                                     s_minus=args.s_minus)
        omega_m = _TWO_PI * args.fm_hz
        mode = MechanicalMode(omega_m_hz=args.fm_hz,
                              gamma_m_hz=args.gamma0_hz,
                              m_eff_kg=args.m_eff_kg,
                              temperature_k=args.temperature_k)
        t_b = fl.bath_temperature(bath, omega_m)
        gamma_b = fl.bath_coupling(bath, mode)
        heat = fl.bath_heat_load(bath, mode, omega_m)
    else:
        if args.t_b_k is None or args.gamma_b_hz is None:
            raise CliError(EXIT_USAGE, "usage",
                           "need both --t-b-k and --gamma-b-hz")
        t_b = args.t_b_k
        gamma_b = _TWO_PI * args.gamma_b_hz
        heat = t_b * gamma_b
    t_final = fl.final_temperature(args.temperature_k, gamma_0, t_b, gamma_b)
    print(f"final_temperature_k = {format_float(t_final)}")
    out = _out_dir(args)
    man = _manifest(args, "bath", None, None)
    path = out / "bath.json"
    write_json(path, _json_safe({
        "bath_temperature_k": t_b,
        "bath_coupling_rad_per_s": gamma_b,
        "final_temperature_k": t_final,
        "base_temperature_k": args.temperature_k,
        "gamma_0_rad_per_s": gamma_0,
        "heat_load_k_rad_per_s": heat,
    }), schema="bath")
    man.add_output(path)
    man.write(out)


def _cmd_fit_power(args) -> None:
    tab = read_table(args.input)
    for col in ("power_w", "value"):
        if col not in tab:
            raise CliError(EXIT_COMPUTE, "computation",
                           f"{args.input}: missing column {col!r}")
    fit = fl.fit_power_law(tab["power_w"], tab["value"], tab.get("err"),
                           fix_c=args.fix_c)
    out = _out_dir(args)
    man = _manifest(args, "fit-power", None, None)
    man.add_input(args.input)
    path = out / "powerlaw_fit.json"
    write_json(path, _json_safe(asdict(fit)), schema="powerlaw_fit")
    man.add_output(path)
    man.write(out)


def _cmd_repro(args) -> None:
    from . import repro
    out = _out_dir(args)
    man = _manifest(args, "repro", None, None)
    try:
        report = repro.REPRO_RUNNERS[args.figure](out, fmt=args.format)
    except CliError:
        raise
    except Exception as err:
        raise CliError(EXIT_COMPUTE, "computation", str(err),
                       stage=args.figure)
    for path in sorted(out.iterdir()):
        if path.is_file() and path.name != "manifest.json":
            man.add_output(path)
    man.write(out)
    if not report["passed"]:
        failed = [c["name"] for c in report["checks"] if not c["passed"]]
        stage = failed[0].split("/")[0]
        raise CliError(EXIT_COMPUTE, "computation",
                       "reproduction checks failed: " + ", ".join(failed),
                       stage=f"{args.figure}/{stage}")


# ------------------------------------------------------------------ parser

def _build_parser() -> _Parser:
    parser = _Parser(prog="thirdsound",
                     description="superfluid third-sound optomechanics "
                                 "toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, metavar="PATH",
                        help="system parameter config file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", type=Path, default=Path("."),
                        metavar="DIR", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="table output format")
    sub = parser.add_subparsers(dest="subcommand", required=True,
                                metavar="SUBCOMMAND")

    p = sub.add_parser("backaction", parents=[common],
                       help="detuning sweep of the backaction model")
    p.add_argument("--sweep", metavar="START:STOP:COUNT",
                   help="detuning sweep in units of kappa "
                        "(default: the config detuning only)")
    p.set_defaults(func=_cmd_backaction)

    p = sub.add_parser("fit-sweep", parents=[common],
                       help="fit a measured detuning sweep")
    p.add_argument("input", help="sweep CSV with detuning_over_kappa, "
                                 "gamma_hz, domega_hz (+ optional errors)")
    p.set_defaults(func=_cmd_fit_sweep)

    p = sub.add_parser("simulate", parents=[common],
                       help="integrate the stochastic equations of motion")
    p.add_argument("--duration", type=float, required=True,
                   metavar="SECONDS")
    p.add_argument("--rate", type=float, required=True, metavar="HZ",
                   help="sample rate")
    p.add_argument("--mode", choices=("adiabatic", "full"),
                   default="adiabatic", help="cavity integration mode")
    p.add_argument("--shot-floor", type=float, default=0.0, metavar="M2_PER_HZ",
                   help="double-sided shot noise floor on the homodyne record")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", parents=[common],
                       help="Welch PSD and resonance fit of a trace")
    p.add_argument("input", help="trace CSV with t_s and the chosen channel")
    p.add_argument("--segment", type=int, default=4096,
                   help="Welch segment length in samples")
    p.add_argument("--overlap", type=float, default=0.5,
                   help="segment overlap fraction")
    p.add_argument("--window", default="hann", help="window function name")
    p.add_argument("--band", required=True, metavar="LO:HI",
                   help="fit band in Hz")
    p.add_argument("--channel", choices=("homodyne", "x"),
                   default="homodyne", help="trace column to analyze")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("track", parents=[common],
                       help="demodulate a record into phase-space quadratures")
    p.add_argument("input", help="trace CSV with t_s, homodyne_m")
    p.add_argument("--fm", type=float, required=True, metavar="HZ",
                   help="demodulation frequency")
    p.add_argument("--bin-time", type=float, metavar="SECONDS",
                   help="quadrature binning time (default 1/lp bandwidth)")
    p.add_argument("--lp-bw", type=float, metavar="HZ",
                   help="low-pass bandwidth (default 4x fitted linewidth)")
    p.add_argument("--segment", type=int, default=262144,
                   help="Welch segment length for the filter design fit")
    p.add_argument("--taps", type=int, default=4097,
                   help="Wiener filter tap count")
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("film", parents=[common],
                       help="third sound speed and mode frequencies")
    p.add_argument("--thickness-nm", type=float, required=True)
    p.add_argument("--fraction", type=float, default=1.0,
                   help="superfluid fraction rho_s/rho")
    p.add_argument("--alpha-vdw", type=float, default=fl.ALPHA_VDW_DEFAULT,
                   metavar="NM5_PER_S2", help="van der Waals coefficient")
    p.add_argument("--zeta", metavar="Z1,Z2,...",
                   help="mode eigenvalue list for the frequency table")
    p.add_argument("--length-um", type=float, metavar="UM",
                   help="resonator length scale for --zeta")
    p.set_defaults(func=_cmd_film)

    p = sub.add_parser("bath", parents=[common],
                       help="steady mode temperature against an extra bath")
    p.add_argument("--temperature-k", type=float, required=True,
                   help="cryostat temperature")
    p.add_argument("--gamma0-hz", type=float, required=True,
                   help="intrinsic linewidth Gamma_0/2pi")
    p.add_argument("--s-plus", type=float, help="absorption spectral weight")
    p.add_argument("--s-minus", type=float, help="emission spectral weight")
    p.add_argument("--fm-hz", type=float, help="mode frequency for --s-plus")
    p.add_argument("--m-eff-kg", type=float,
                   help="effective mass for --s-plus")
    p.add_argument("--t-b-k", type=float, help="bath temperature (direct)")
    p.add_argument("--gamma-b-hz", type=float,
                   help="bath coupling Gamma_B/2pi (direct)")
    p.set_defaults(func=_cmd_bath)

    p = sub.add_parser("fit-power", parents=[common],
                       help="fit y = a*P^b + c to a power series")
    p.add_argument("input", help="CSV with power_w, value (+ optional err)")
    p.add_argument("--fix-c", type=float, metavar="C",
                   help="freeze the offset instead of fitting it")
    p.set_defaults(func=_cmd_fit_power)

    p = sub.add_parser("repro", parents=[common],
                       help="scripted figure-level reproduction pipelines")
    p.add_argument("figure", choices=("fig3", "fig4", "si-fig2"))
    p.set_defaults(func=_cmd_repro)

    return parser


def invocation_from_manifest(doc: dict, work_dir) -> list[str]:
    """Rebuild the argv recorded in a manifest, rooted at work_dir.

    The materialized config text is written into work_dir (the original
    config file is not needed) and --out is redirected there, so running
    main() on the result regenerates the artifacts for digest comparison.
    """
    work = Path(work_dir)
    work.mkdir(parents=True, exist_ok=True)
    args = dict(doc["resolved_args"])
    argv = [str(doc["subcommand"])]
    for positional in ("input", "figure"):
        value = args.pop(positional, None)
        if value is not None:
            argv.append(str(value))
    args.pop("config", None)
    if doc.get("config_text"):
        config_path = work / "config.cfg"
        config_path.write_text(doc["config_text"])
        argv += ["--config", str(config_path)]
    args["out"] = str(work)
    for key in sorted(args):
        value = args[key]
        if value is None:
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
            continue
        argv += [flag, str(value)]
    return argv


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except CliError as err:
        _print_error(err)
        return err.code
    except OSError as err:
        _print_error(CliError(EXIT_IO, "io", str(err)))
        return EXIT_IO
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as err:
        _print_error(CliError(EXIT_COMPUTE, "computation", str(err)))
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
