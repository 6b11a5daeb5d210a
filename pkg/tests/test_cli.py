"""End-to-end command line tests: exit codes, artifacts, manifests.

These exercise the argv-to-file plumbing: every subcommand is invoked
in process through main(), and the outputs are checked against the
library calls they wrap.  Numerical correctness of the underlying
models lives in the per-module test files.
"""

import json

import numpy as np
import pytest

from thirdsound import __version__
from thirdsound import backaction as ba
from thirdsound import film as fl
from thirdsound import params as ps
from thirdsound.artifacts import (file_digest, format_float, load_schema,
                                  read_manifest, read_table, validate_json,
                                  write_table)
from thirdsound.cli import (EXIT_COMPUTE, EXIT_IO, EXIT_OK, EXIT_USAGE,
                            invocation_from_manifest, main)
from thirdsound.repro import fig4_fixture

TWO_PI = 2.0 * np.pi


def make_params(omega_m_hz=482e3, gamma_m_hz=106.0, power_w=200e-9):
    return ps.SystemParams(
        mode=ps.MechanicalMode(omega_m_hz=omega_m_hz, gamma_m_hz=gamma_m_hz,
                               m_eff_kg=1e-18, temperature_k=0.53),
        cavity=ps.OpticalCavity(kappa_in_hz=11.15e6, kappa_0_hz=11.15e6,
                                detuning_over_kappa=-0.58),
        drive=ps.DriveField(power_w=power_w, wavelength_m=1555.1e-9),
        photothermal=ps.PhotothermalCoupling(g_hz_per_m=1.3e14, beta=5.0,
                                             absorption=1.0, tau_t_s=600e-9),
    )


def write_config(directory, params, seed=0):
    path = directory / "system.cfg"
    path.write_text(ps.params_to_config(params, seed))
    return path


def identifiable_weights(params):
    """(X, Y) = (scale*(1+f), scale*tau*f) from the model definitions."""
    pt = params.photothermal
    scale = ba.coupling_scale(params)
    lden = 1.0 + (params.mode.omega_m * pt.tau_t_s) ** 2
    f = pt.beta_times_a / lden
    return scale * (1.0 + f), scale * pt.tau_t_s * f


def cli_error(capsys, expected_kind):
    """Assert the single-line JSON error contract and return the payload."""
    err = capsys.readouterr().err
    lines = [ln for ln in err.splitlines() if ln.strip()]
    assert len(lines) == 1
    doc = json.loads(lines[0])
    assert doc["error"] == expected_kind
    assert doc["message"]
    return doc


@pytest.fixture(scope="module")
def sim_run(tmp_path_factory):
    """One short homodyne trace shared by the analyze and track tests."""
    root = tmp_path_factory.mktemp("sim")
    cfg = write_config(root, make_params(omega_m_hz=100e3, gamma_m_hz=2e3,
                                         power_w=1e-15), seed=17)
    out = root / "run"
    rc = main(["simulate", "--config", str(cfg), "--duration", "0.12",
               "--rate", "2.5e6", "--shot-floor", "1e-22",
               "--out", str(out)])
    assert rc == EXIT_OK
    return out / "trace.csv", cfg


# ------------------------------------------------------------ parser basics

def test_version_reports_package_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == __version__


def test_missing_subcommand_is_usage_error(capsys):
    assert main([]) == EXIT_USAGE
    cli_error(capsys, "usage")


def test_unknown_option_is_usage_error(capsys):
    rc = main(["film", "--thickness-nm", "10", "--bogus"])
    assert rc == EXIT_USAGE
    cli_error(capsys, "usage")


# ----------------------------------------------------------------- film

def test_film_prints_speed_and_mode_table(tmp_path, capsys):
    zetas = [1.8411837813406593, 3.0542369282271403]
    rc = main(["film", "--thickness-nm", "10",
               "--zeta", ",".join(map(repr, zetas)),
               "--length-um", "30", "--out", str(tmp_path)])
    assert rc == EXIT_OK
    film = fl.SuperfluidFilm(thickness_nm=10.0)
    speed = fl.third_sound_speed(film)
    length_m = 30.0 * 1e-6    # the CLI multiplies, 30e-6 is 1 ulp away
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == f"third_sound_speed_m_per_s = {format_float(speed)}"
    assert lines[1] == "zeta,mode_frequency_hz"
    for line, zeta in zip(lines[2:], zetas):
        freq = fl.mode_frequency(film, length_m, zeta)
        assert line == f"{format_float(zeta)},{format_float(freq)}"
    doc = json.loads((tmp_path / "film.json").read_text())
    validate_json(doc, load_schema("film"))
    assert doc["third_sound_speed_m_per_s"] == speed
    assert doc["mode_frequencies_hz"] == [fl.mode_frequency(film, length_m, z)
                                          for z in zetas]


def test_film_zeta_without_length_is_usage_error(tmp_path, capsys):
    rc = main(["film", "--thickness-nm", "10", "--zeta", "1.5",
               "--out", str(tmp_path)])
    assert rc == EXIT_USAGE
    doc = cli_error(capsys, "usage")
    assert "--length-um" in doc["message"]


# ----------------------------------------------------------------- bath

def test_bath_direct_route_equal_weights(tmp_path, capsys):
    rc = main(["bath", "--temperature-k", "0.5", "--gamma0-hz", "100",
               "--t-b-k", "2.0", "--gamma-b-hz", "100",
               "--out", str(tmp_path)])
    assert rc == EXIT_OK
    # equal rates average the two temperatures exactly
    assert capsys.readouterr().out.strip() == "final_temperature_k = 1.25"
    doc = json.loads((tmp_path / "bath.json").read_text())
    validate_json(doc, load_schema("bath"))
    assert doc["final_temperature_k"] == 1.25
    assert doc["bath_temperature_k"] == 2.0
    assert doc["gamma_0_rad_per_s"] == TWO_PI * 100.0
    assert doc["bath_coupling_rad_per_s"] == TWO_PI * 100.0
    assert doc["heat_load_k_rad_per_s"] == 2.0 * TWO_PI * 100.0


def test_bath_spectral_route_matches_library(tmp_path, capsys):
    rc = main(["bath", "--temperature-k", "0.5", "--gamma0-hz", "100",
               "--s-plus", "2e-46", "--s-minus", "1e-46",
               "--fm-hz", "482e3", "--m-eff-kg", "1e-18",
               "--out", str(tmp_path)])
    assert rc == EXIT_OK
    capsys.readouterr()
    bath = fl.NonEquilibriumBath(s_plus=2e-46, s_minus=1e-46)
    mode = ps.MechanicalMode(omega_m_hz=482e3, gamma_m_hz=100.0,
                             m_eff_kg=1e-18, temperature_k=0.5)
    t_b = fl.bath_temperature(bath, mode.omega_m)
    gamma_b = fl.bath_coupling(bath, mode)
    doc = json.loads((tmp_path / "bath.json").read_text())
    assert doc["bath_temperature_k"] == t_b
    assert doc["bath_coupling_rad_per_s"] == gamma_b
    assert doc["final_temperature_k"] == fl.final_temperature(
        0.5, TWO_PI * 100.0, t_b, gamma_b)


@pytest.mark.parametrize("extra", [
    [],                                                  # neither route
    ["--t-b-k", "2.0", "--gamma-b-hz", "40",
     "--s-plus", "1e-46"],                               # both routes
    ["--s-plus", "1e-46", "--s-minus", "1e-46"],         # spectral, no mode
    ["--t-b-k", "2.0"],                                  # direct, half given
])
def test_bath_route_selection_errors(tmp_path, capsys, extra):
    rc = main(["bath", "--temperature-k", "0.5", "--gamma0-hz", "100",
               "--out", str(tmp_path)] + extra)
    assert rc == EXIT_USAGE
    cli_error(capsys, "usage")


# ------------------------------------------------------------- backaction

def test_backaction_sweep_matches_library_rows(tmp_path, capsys):
    cfg = write_config(tmp_path, make_params(), seed=1)
    out = tmp_path / "out"
    # negative sweep start must survive argparse option matching
    rc = main(["backaction", "--config", str(cfg), "--sweep", "-1:0:41",
               "--out", str(out)])
    assert rc == EXIT_OK
    header = (out / "sweep.csv").read_text().splitlines()[0]
    assert header == ("detuning_over_kappa,delta_omega_hz,delta_gamma_hz,"
                      "gamma_eff_hz,temperature_ratio")
    tab = read_table(out / "sweep.csv")
    points = ba.detuning_sweep(make_params(), np.linspace(-1.0, 0.0, 41))
    assert np.array_equal(tab["detuning_over_kappa"],
                          [p.detuning_over_kappa for p in points])
    assert np.array_equal(tab["delta_omega_hz"],
                          np.array([p.delta_omega for p in points]) / TWO_PI)
    assert np.array_equal(tab["gamma_eff_hz"],
                          np.array([p.effective_gamma for p in points])
                          / TWO_PI)
    # the optical response vanishes on resonance
    assert tab["delta_omega_hz"][-1] == 0.0
    assert tab["delta_gamma_hz"][-1] == 0.0
    assert tab["gamma_eff_hz"][-1] == 106.0
    assert tab["temperature_ratio"][-1] == 1.0


def test_backaction_without_config_is_usage_error(tmp_path, capsys):
    rc = main(["backaction", "--out", str(tmp_path)])
    assert rc == EXIT_USAGE
    doc = cli_error(capsys, "usage")
    assert "config" in doc["message"]


def test_backaction_unreadable_config_is_io_error(tmp_path, capsys):
    rc = main(["backaction", "--config", str(tmp_path / "nope.cfg"),
               "--out", str(tmp_path)])
    assert rc == EXIT_IO
    doc = cli_error(capsys, "io")
    assert "cannot read config" in doc["message"]


def test_backaction_malformed_config_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nonsense = 1\n")
    rc = main(["backaction", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == EXIT_USAGE
    cli_error(capsys, "usage")


@pytest.mark.parametrize("spec", ["0.1:0.2", "0:1:0", "a:b:3"])
def test_backaction_bad_sweep_spec_is_usage_error(tmp_path, capsys, spec):
    cfg = write_config(tmp_path, make_params(), seed=1)
    rc = main(["backaction", "--config", str(cfg), "--sweep", spec,
               "--out", str(tmp_path)])
    assert rc == EXIT_USAGE
    cli_error(capsys, "usage")


# -------------------------------------------------------------- fit-sweep

def test_fit_sweep_recovers_identifiable_weights(tmp_path, capsys):
    params = fig4_fixture("cooling")
    cfg = write_config(tmp_path, params, seed=3)
    sweep_dir = tmp_path / "sweep"
    rc = main(["backaction", "--config", str(cfg),
               "--sweep", "-1:-0.05:20", "--out", str(sweep_dir)])
    assert rc == EXIT_OK
    tab = read_table(sweep_dir / "sweep.csv")
    measured = tmp_path / "measured.csv"
    write_table(measured, ["detuning_over_kappa", "gamma_hz", "domega_hz"],
                [tab["detuning_over_kappa"], tab["gamma_eff_hz"],
                 tab["delta_omega_hz"]])
    fit_dir = tmp_path / "fit"
    rc = main(["fit-sweep", str(measured), "--config", str(cfg),
               "--out", str(fit_dir)])
    assert rc == EXIT_OK
    doc = json.loads((fit_dir / "backaction_fit.json").read_text())
    validate_json(doc, load_schema("backaction_fit"))
    x_true, y_true = identifiable_weights(params)
    assert doc["converged"] is True
    assert doc["instant_weight"] == pytest.approx(x_true, rel=1e-6)
    assert doc["delayed_weight_s"] == pytest.approx(y_true, rel=1e-6)
    assert doc["tau_t_err"] is None    # unconstrained along the family
    assert "one-parameter family" in doc["message"]
    man = read_manifest(fit_dir / "manifest.json")
    assert man["input_digests"]["measured.csv"] == file_digest(measured)


def test_fit_sweep_missing_column_is_compute_error(tmp_path, capsys):
    cfg = write_config(tmp_path, make_params(), seed=1)
    bad = tmp_path / "bad.csv"
    write_table(bad, ["detuning_over_kappa", "gamma_hz"],
                [np.array([-0.5, -0.4]), np.array([110.0, 112.0])])
    rc = main(["fit-sweep", str(bad), "--config", str(cfg),
               "--out", str(tmp_path)])
    assert rc == EXIT_COMPUTE
    doc = cli_error(capsys, "computation")
    assert "domega_hz" in doc["message"]


# -------------------------------------------------------------- fit-power

def test_fit_power_recovers_exponent(tmp_path, capsys):
    p_w = np.linspace(7e-9, 250e-9, 12)
    series = tmp_path / "series.csv"
    write_table(series, ["power_w", "value"],
                [p_w, 2.5e3 * p_w ** 0.4 + 7.0])
    rc = main(["fit-power", str(series), "--out", str(tmp_path)])
    assert rc == EXIT_OK
    doc = json.loads((tmp_path / "powerlaw_fit.json").read_text())
    validate_json(doc, load_schema("powerlaw_fit"))
    assert doc["converged"] is True
    assert doc["b"] == pytest.approx(0.4, rel=1e-6)
    assert doc["c"] == pytest.approx(7.0, rel=1e-6)

    fixed_dir = tmp_path / "fixed"
    rc = main(["fit-power", str(series), "--fix-c", "7.0",
               "--out", str(fixed_dir)])
    assert rc == EXIT_OK
    doc = json.loads((fixed_dir / "powerlaw_fit.json").read_text())
    assert doc["c"] == 7.0
    assert doc["c_err"] == 0.0
    assert doc["b"] == pytest.approx(0.4, rel=1e-6)


def test_fit_power_missing_column_is_compute_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    write_table(bad, ["power_w"], [np.array([1e-9, 2e-9])])
    rc = main(["fit-power", str(bad), "--out", str(tmp_path)])
    assert rc == EXIT_COMPUTE
    doc = cli_error(capsys, "computation")
    assert "value" in doc["message"]


# ------------------------------------------------- simulate/analyze/track

def test_simulate_then_analyze_chain(sim_run, tmp_path):
    trace_path, _ = sim_run
    tab = read_table(trace_path)
    assert list(tab) == ["t_s", "x_m", "homodyne_m"]
    assert tab["t_s"].size == int(0.12 * 2.5e6)
    out = tmp_path / "spec"
    rc = main(["analyze", str(trace_path), "--band", "80e3:120e3",
               "--segment", "8192", "--out", str(out)])
    assert rc == EXIT_OK
    psd_tab = read_table(out / "psd.csv")
    assert list(psd_tab) == ["freq_hz", "psd"]
    assert psd_tab["freq_hz"].size == 8192 // 2 + 1
    fit = json.loads((out / "spectrum_fit.json").read_text())
    validate_json(fit, load_schema("spectrum_fit"))
    assert fit["f_m_hz"] == pytest.approx(100e3, rel=0.02)
    assert fit["gamma_hz"] == pytest.approx(2e3, rel=0.5)
    man = read_manifest(out / "manifest.json")
    assert man["input_digests"]["trace.csv"] == file_digest(trace_path)


def test_analyze_missing_trace_file_is_io_error(tmp_path, capsys):
    rc = main(["analyze", str(tmp_path / "nope.csv"),
               "--band", "1e3:2e3", "--out", str(tmp_path)])
    assert rc == EXIT_IO
    cli_error(capsys, "io")


def test_analyze_missing_channel_is_compute_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    write_table(bad, ["t_s", "x_m"],
                [np.arange(4) * 1e-6, np.zeros(4)])
    rc = main(["analyze", str(bad), "--band", "1e3:2e3",
               "--out", str(tmp_path)])
    assert rc == EXIT_COMPUTE
    doc = cli_error(capsys, "computation")
    assert "homodyne_m" in doc["message"]


def test_track_chain_writes_quadratures_and_stats(sim_run, tmp_path):
    trace_path, _ = sim_run
    out = tmp_path / "trk"
    rc = main(["track", str(trace_path), "--fm", "100e3",
               "--segment", "16384", "--taps", "4097",
               "--seed", "23", "--out", str(out)])
    assert rc == EXIT_OK
    tab = read_table(out / "track.csv")
    assert list(tab) == ["t_s", "x_quad_m", "y_quad_m"]
    stats = json.loads((out / "track_stats.json").read_text())
    validate_json(stats, load_schema("track_stats"))
    assert stats["n_points"] == tab["t_s"].size
    assert stats["n_points"] >= 500
    assert stats["measurement_std"] > 0.0
    assert stats["thermal_over_measurement"] > 1.0
    # excess kurtosis, zero for a Gaussian record
    assert abs(stats["kurtosis_x"]) < 5.0 * stats["kurtosis_err"]
    assert abs(stats["kurtosis_y"]) < 5.0 * stats["kurtosis_err"]


def test_track_without_fm_is_usage_error(tmp_path, capsys):
    rc = main(["track", str(tmp_path / "x.csv"), "--out", str(tmp_path)])
    assert rc == EXIT_USAGE
    cli_error(capsys, "usage")


# ------------------------------------------------------------------ repro

def test_repro_si_fig2_passes_and_seals_outputs(tmp_path):
    out = tmp_path / "si2"
    rc = main(["repro", "si-fig2", "--out", str(out)])
    assert rc == EXIT_OK
    doc = json.loads((out / "repro_si_fig2.json").read_text())
    validate_json(doc, load_schema("repro_checks"))
    assert doc["passed"] is True
    assert all(c["passed"] for c in doc["checks"])
    man = read_manifest(out / "manifest.json")
    files = {p.name for p in out.iterdir() if p.name != "manifest.json"}
    assert set(man["output_digests"]) == files
    for name, digest in man["output_digests"].items():
        assert file_digest(out / name) == digest


def test_repro_rejects_unknown_figure(tmp_path, capsys):
    rc = main(["repro", "fig9", "--out", str(tmp_path)])
    assert rc == EXIT_USAGE
    cli_error(capsys, "usage")


# -------------------------------------------------------------- manifests

def test_manifest_rerun_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, make_params(), seed=5)
    p_w = np.linspace(7e-9, 250e-9, 12)
    series = tmp_path / "series.csv"
    write_table(series, ["power_w", "value"],
                [p_w, 2.5e3 * p_w ** 0.4 + 7.0])
    invocations = [
        ["film", "--thickness-nm", "12", "--zeta", "1.5,2.5",
         "--length-um", "30"],
        ["bath", "--temperature-k", "0.5", "--gamma0-hz", "100",
         "--t-b-k", "2.0", "--gamma-b-hz", "40"],
        ["backaction", "--config", str(cfg), "--sweep", "-0.9:-0.1:9"],
        ["fit-power", str(series), "--fix-c", "7.0"],
    ]
    for k, argv in enumerate(invocations):
        first = tmp_path / f"first_{k}"
        assert main(argv + ["--out", str(first)]) == EXIT_OK
        doc = read_manifest(first / "manifest.json")
        replay_dir = tmp_path / f"again_{k}"
        assert main(invocation_from_manifest(doc, replay_dir)) == EXIT_OK
        for name, digest in doc["output_digests"].items():
            assert file_digest(replay_dir / name) == digest, (argv[0], name)
