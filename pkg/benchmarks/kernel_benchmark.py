"""Time the simulation recurrence on the numba and numpy backends.

Runs the same seeded workload through both implementations, checks that
they agree to float rounding, and reports wall time per simulated second
plus the speedup.  The first numba call pays the JIT compile; a warmup
run keeps it out of the timing.
"""

import argparse
import time

import numpy as np

from thirdsound._kernels import HAVE_NUMBA
from thirdsound.langevin import SimConfig, simulate
from thirdsound.params import (DriveField, MechanicalMode, OpticalCavity,
                               PhotothermalCoupling, SystemParams)


def _workload(duration: float, rate: float, seed: int) -> SimConfig:
    params = SystemParams(
        mode=MechanicalMode(omega_m_hz=482e3, gamma_m_hz=106.0,
                            m_eff_kg=1e-18, temperature_k=0.53),
        cavity=OpticalCavity(kappa_in_hz=11.15e6, kappa_0_hz=11.15e6,
                             detuning_over_kappa=-0.58),
        drive=DriveField(power_w=200e-9, wavelength_m=1555.1e-9),
        photothermal=PhotothermalCoupling(g_hz_per_m=130e12, beta=5.0,
                                          absorption=1.0, tau_t_s=600e-9),
    )
    return SimConfig(params=params, duration=duration, sample_rate=rate,
                     seed=seed, shot_noise_floor=1e-22)


def _time_backend(config: SimConfig, backend: str, repeats: int):
    simulate(config, backend=backend)  # warmup: JIT compile, allocator
    best = np.inf
    trace = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        trace = simulate(config, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, trace


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--duration", type=float, default=0.05,
                    help="simulated seconds per run (default 0.05)")
    ap.add_argument("--rate", type=float, default=1e7,
                    help="sample rate in Hz (default 1e7)")
    ap.add_argument("--repeats", type=int, default=3,
                    help="timing repeats, best-of (default 3)")
    ap.add_argument("--seed", type=int, default=12345)
    args = ap.parse_args()

    config = _workload(args.duration, args.rate, args.seed)
    n_samples = int(round(args.duration * args.rate))
    print(f"workload: {n_samples} samples at {args.rate:g} Hz, "
          f"best of {args.repeats}")

    t_np, trace_np = _time_backend(config, "numpy", args.repeats)
    print(f"numpy : {t_np:8.3f} s  "
          f"({t_np / args.duration:6.2f} s per simulated second)")

    if not HAVE_NUMBA:
        print("numba : not installed; skipping")
        return

    t_nb, trace_nb = _time_backend(config, "numba", args.repeats)
    print(f"numba : {t_nb:8.3f} s  "
          f"({t_nb / args.duration:6.2f} s per simulated second)")
    print(f"speedup: {t_np / t_nb:.1f}x")

    scale = np.max(np.abs(trace_np.x_samples))
    worst = np.max(np.abs(trace_np.x_samples - trace_nb.x_samples)) / scale
    print(f"backend agreement: max |dx|/max|x| = {worst:.3e}")
    if worst > 1e-7:
        raise SystemExit("backends disagree beyond float rounding")


if __name__ == "__main__":
    main()
