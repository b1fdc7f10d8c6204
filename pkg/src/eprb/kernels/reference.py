"""Pure-Python/numpy fallback for the trajectory kernels.

The batch integrator loops over RK4 steps with the whole batch held in
numpy arrays; the single-trajectory recorder runs a scalar loop on libm
floats.  Arithmetic is written with the same operation order as the
compiled kernels in ``_fast.pyx`` so the two backends agree to rounding
noise.
"""

from __future__ import annotations

import math

import numpy as np


def _cos_theta(c2, s2, a):
    a = np.clip(a, -700.0, 700.0)
    ea = np.exp(a)
    up = c2 * ea
    dn = s2 / ea
    return (up - dn) / (up + dn)


def _cos_theta_scalar(c2: float, s2: float, a: float) -> float:
    if a > 700.0:
        a = 700.0
    elif a < -700.0:
        a = -700.0
    ea = math.exp(a)
    up = c2 * ea
    dn = s2 / ea
    return (up - dn) / (up + dn)


def rk4_final_batch(
    z0,
    cos_theta0,
    kmag,
    rate,
    u,
    z_delta,
    inv_sig2,
    dt_magnet,
    t_drift,
    steps_in,
    steps_out,
    out,
):
    """Vectorized RK4 over magnet transit and drift; fills ``out`` with final z."""
    c2 = 0.5 * (1.0 + cos_theta0)
    s2 = 0.5 * (1.0 - cos_theta0)
    h1 = dt_magnet / steps_in
    h2 = t_drift / steps_out
    z = np.array(z0, dtype=np.float64, copy=True)

    def vel_magnet(zz, t):
        a = (kmag * (t * t)) * zz
        return (rate * t) * _cos_theta(c2, s2, a)

    def vel_drift(zz, t):
        a = ((z_delta + u * t) * zz) * inv_sig2
        return u * _cos_theta(c2, s2, a)

    for k in range(steps_in):
        t = k * h1
        k1 = vel_magnet(z, t)
        k2 = vel_magnet(z + (0.5 * h1) * k1, t + 0.5 * h1)
        k3 = vel_magnet(z + (0.5 * h1) * k2, t + 0.5 * h1)
        k4 = vel_magnet(z + h1 * k3, t + h1)
        z = z + (h1 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    for k in range(steps_out):
        t = k * h2
        k1 = vel_drift(z, t)
        k2 = vel_drift(z + (0.5 * h2) * k1, t + 0.5 * h2)
        k3 = vel_drift(z + (0.5 * h2) * k2, t + 0.5 * h2)
        k4 = vel_drift(z + h2 * k3, t + h2)
        z = z + (h2 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out[:] = z


def rk4_record(
    z0,
    cos_theta0,
    kmag,
    rate,
    u,
    z_delta,
    inv_sig2,
    dt_magnet,
    t_drift,
    steps_in,
    steps_out,
    out,
):
    """Scalar RK4 recording z after every step into ``out``."""
    c2 = 0.5 * (1.0 + cos_theta0)
    s2 = 0.5 * (1.0 - cos_theta0)
    h1 = dt_magnet / steps_in
    h2 = t_drift / steps_out
    z = float(z0)

    def vel_magnet(zz, t):
        a = (kmag * (t * t)) * zz
        return (rate * t) * _cos_theta_scalar(c2, s2, a)

    def vel_drift(zz, t):
        a = ((z_delta + u * t) * zz) * inv_sig2
        return u * _cos_theta_scalar(c2, s2, a)

    out[0] = z
    for k in range(steps_in):
        t = k * h1
        k1 = vel_magnet(z, t)
        k2 = vel_magnet(z + (0.5 * h1) * k1, t + 0.5 * h1)
        k3 = vel_magnet(z + (0.5 * h1) * k2, t + 0.5 * h1)
        k4 = vel_magnet(z + h1 * k3, t + h1)
        z = z + (h1 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = z
    for k in range(steps_out):
        t = k * h2
        k1 = vel_drift(z, t)
        k2 = vel_drift(z + (0.5 * h2) * k1, t + 0.5 * h2)
        k3 = vel_drift(z + (0.5 * h2) * k2, t + 0.5 * h2)
        k4 = vel_drift(z + h2 * k3, t + h2)
        z = z + (h2 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[steps_in + k + 1] = z
