"""Hot loop for the discrete state recurrence z <- M z + w_n.

Two interchangeable backends compute the same recurrence:

* "numba": the plain-Python triple loop below compiled with @njit.  Default
  whenever numba imports.
* "numpy": eigendecomposition of M turns the d-dimensional recurrence into d
  independent complex first-order recursions, each evaluated by
  scipy.signal.lfilter; vectorized, no JIT required.

Selection: THIRDSOUND_BACKEND environment variable ("numba" or "numpy"),
else numba when available.  The two backends agree to float rounding
(different summation order), not bit-exactly; replay bit-identity holds
within a backend.  fastmath stays off so the numba build keeps IEEE
semantics.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.signal import lfilter

_ENV_VAR = "THIRDSOUND_BACKEND"


def _propagate_py(m, z, w, out_x, out_aux, aux_idx):
    """Run z <- m @ z + w[i] over all rows of w, recording component 0.

    z is modified in place and holds the final state on return.  aux_idx >= 0
    additionally records that state component into out_aux.
    """
    d = m.shape[0]
    n = w.shape[0]
    zt = np.empty(d)
    for i in range(n):
        for r in range(d):
            acc = w[i, r]
            for c in range(d):
                acc += m[r, c] * z[c]
            zt[r] = acc
        for r in range(d):
            z[r] = zt[r]
        out_x[i] = z[0]
        if aux_idx >= 0:
            out_aux[i] = z[aux_idx]


try:
    from numba import njit

    _propagate_numba = njit(cache=True)(_propagate_py)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - environment without numba
    _propagate_numba = None
    HAVE_NUMBA = False


def _propagate_numpy(m, z, w, out_x, out_aux, aux_idx):
    """Same recurrence via modal decomposition and per-mode lfilter.

    Writing M = V diag(lam) V^-1 and z_mod = V^-1 z, each modal component
    obeys z_mod[i] <- lam_i z_mod[i] + u_i with u = w V^-T, which is an
    order-1 IIR filter.  Falls back to the plain loop if M is defective.
    """
    lam, vr = np.linalg.eig(m)
    if np.linalg.cond(vr) > 1e12:
        _propagate_py(m, z, w, out_x, out_aux, aux_idx)
        return
    vri = np.linalg.inv(vr)
    u = w @ vri.T
    z0 = vri @ z
    acc_x = np.zeros(w.shape[0])
    acc_aux = np.zeros(w.shape[0]) if aux_idx >= 0 else None
    z_final = np.empty(len(lam), dtype=complex)
    for k in range(len(lam)):
        yk, _ = lfilter(np.array([1.0 + 0j]), np.array([1.0, -lam[k]]),
                        u[:, k], zi=np.array([lam[k] * z0[k]]))
        acc_x += (vr[0, k] * yk).real
        if aux_idx >= 0:
            acc_aux += (vr[aux_idx, k] * yk).real
        z_final[k] = yk[-1]
    out_x[:] = acc_x
    if aux_idx >= 0:
        out_aux[:] = acc_aux
    z[:] = (vr @ z_final).real


def active_backend() -> str:
    """Resolve the backend name: env override, else numba when importable."""
    choice = os.environ.get(_ENV_VAR, "").strip().lower()
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError(
                f"{_ENV_VAR}=numba requested but numba is not importable")
        return "numba"
    if choice:
        raise RuntimeError(
            f"unknown {_ENV_VAR}={choice!r}; use 'numba' or 'numpy'")
    return "numba" if HAVE_NUMBA else "numpy"


def propagate(m: np.ndarray, z: np.ndarray, w: np.ndarray,
              out_x: np.ndarray, out_aux: np.ndarray | None = None,
              aux_idx: int = -1, backend: str | None = None) -> None:
    """Dispatch one chunk of the recurrence to the selected backend."""
    if backend is None:
        backend = active_backend()
    if out_aux is None:
        out_aux = np.empty(1)
        aux_idx = -1
    m = np.ascontiguousarray(m, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if backend == "numba":
        _propagate_numba(m, z, w, out_x, out_aux, aux_idx)
    elif backend == "numpy":
        _propagate_numpy(m, z, w, out_x, out_aux, aux_idx)
    else:
        raise RuntimeError(f"unknown backend {backend!r}")
