"""Trajectory-kernel dispatch: compiled fast path with a numpy fallback.

The compiled extension (``eprb.kernels._fast``) is preferred when it was
built; otherwise the numpy reference implementation is used.  The choice
can be forced with the ``EPRB_KERNEL`` environment variable:

    EPRB_KERNEL=auto     prefer the compiled kernel (default)
    EPRB_KERNEL=cython   require the compiled kernel, fail if missing
    EPRB_KERNEL=python   force the numpy reference kernel

Both backends implement the same fixed-step RK4 with identical operation
order; per-trajectory results agree to rounding noise (see
benchmarks/kernel_bench.py).  Within one backend results are bit-stable
across runs, batch splits and process counts.
"""

from __future__ import annotations

import os

import numpy as np

from . import reference

try:
    from . import _fast
except ImportError:
    _fast = None

_choice = os.environ.get("EPRB_KERNEL", "auto").strip().lower()
if _choice in ("", "auto"):
    _impl = _fast
elif _choice == "cython":
    if _fast is None:
        raise ImportError(
            "EPRB_KERNEL=cython requested but the compiled kernel is not built; "
            "reinstall with a C compiler or use EPRB_KERNEL=python"
        )
    _impl = _fast
elif _choice in ("python", "reference"):
    _impl = None
else:
    raise ValueError(f"EPRB_KERNEL={_choice!r}: expected auto, cython or python")


def backend_name() -> str:
    """Name of the active kernel backend: 'cython' or 'python'."""
    return "python" if _impl is None else "cython"


def rk4_final_batch(
    z0,
    cos_theta0,
    kmag: float,
    rate: float,
    u: float,
    z_delta: float,
    inv_sig2: float,
    dt_magnet: float,
    t_drift: float,
    steps_in: int,
    steps_out: int,
) -> np.ndarray:
    """Detection-time z for a batch of trajectories (magnet then drift)."""
    z0 = np.ascontiguousarray(z0, dtype=np.float64)
    cos_theta0 = np.ascontiguousarray(cos_theta0, dtype=np.float64)
    if z0.ndim != 1 or cos_theta0.shape != z0.shape:
        raise ValueError("z0 and cos_theta0 must be matching 1-d arrays")
    if steps_in < 1 or steps_out < 1:
        raise ValueError("step counts must be >= 1")
    out = np.empty_like(z0)
    impl = reference if _impl is None else _impl
    impl.rk4_final_batch(
        z0, cos_theta0, kmag, rate, u, z_delta, inv_sig2,
        dt_magnet, t_drift, steps_in, steps_out, out,
    )
    return out


def rk4_record(
    z0: float,
    cos_theta0: float,
    kmag: float,
    rate: float,
    u: float,
    z_delta: float,
    inv_sig2: float,
    dt_magnet: float,
    t_drift: float,
    steps_in: int,
    steps_out: int,
) -> np.ndarray:
    """z samples of one trajectory after every RK4 step; length steps_in+steps_out+1."""
    if steps_in < 1 or steps_out < 1:
        raise ValueError("step counts must be >= 1")
    out = np.empty(steps_in + steps_out + 1, dtype=np.float64)
    impl = reference if _impl is None else _impl
    impl.rk4_record(
        float(z0), float(cos_theta0), kmag, rate, u, z_delta, inv_sig2,
        dt_magnet, t_drift, steps_in, steps_out, out,
    )
    return out
