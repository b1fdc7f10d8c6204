# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 kernels for the Stern-Gerlach guidance fields.

The scalar arithmetic mirrors kernels/reference.py operation for
operation; keep the two in lockstep so backend results agree to rounding
noise.  Exponents are clamped at +-700 before exp(): physically reachable
values stay below ~50, the clamp only keeps the kernels total on garbage
inputs (the callers reject non-finite output).
"""

from libc.math cimport exp


cdef inline double _cos_theta(double c2, double s2, double a) nogil:
    """cos(theta) of the local spin angle from the branch-weight exponent.

    tan(theta/2) = tan(theta0/2) exp(-a) with c2 = cos^2(theta0/2),
    s2 = sin^2(theta0/2); the up/down-weighted ratio form is exact at the
    poles (c2 or s2 equal to 0) and bounded in [-1, 1] by construction.
    """
    if a > 700.0:
        a = 700.0
    elif a < -700.0:
        a = -700.0
    cdef double ea = exp(a)
    cdef double up = c2 * ea
    cdef double dn = s2 / ea
    return (up - dn) / (up + dn)


cdef inline double _vel_magnet(double z, double t, double c2, double s2,
                               double kmag, double rate) nogil:
    """dz/dt inside the magnet: (mu B' t / m) cos(theta(z, t))."""
    cdef double a = (kmag * (t * t)) * z
    return (rate * t) * _cos_theta(c2, s2, a)


cdef inline double _vel_drift(double z, double t, double c2, double s2,
                              double u, double z_delta, double inv_sig2) nogil:
    """dz/dt after the magnet: u cos(theta(z, t)), t measured from exit."""
    cdef double a = ((z_delta + u * t) * z) * inv_sig2
    return u * _cos_theta(c2, s2, a)


def rk4_final_batch(double[::1] z0, double[::1] cos_theta0,
                    double kmag, double rate, double u, double z_delta,
                    double inv_sig2, double dt_magnet, double t_drift,
                    Py_ssize_t steps_in, Py_ssize_t steps_out,
                    double[::1] out):
    """Integrate a batch of trajectories through magnet and drift.

    Classical fixed-step RK4, ``steps_in`` steps over the magnet transit and
    ``steps_out`` over the drift; writes the detection-time z into ``out``.
    """
    cdef Py_ssize_t n = z0.shape[0]
    cdef double h1 = dt_magnet / steps_in
    cdef double h2 = t_drift / steps_out
    cdef Py_ssize_t i, k
    cdef double z, c2, s2, t, k1, k2, k3, k4
    with nogil:
        for i in range(n):
            c2 = 0.5 * (1.0 + cos_theta0[i])
            s2 = 0.5 * (1.0 - cos_theta0[i])
            z = z0[i]
            for k in range(steps_in):
                t = k * h1
                k1 = _vel_magnet(z, t, c2, s2, kmag, rate)
                k2 = _vel_magnet(z + (0.5 * h1) * k1, t + 0.5 * h1, c2, s2, kmag, rate)
                k3 = _vel_magnet(z + (0.5 * h1) * k2, t + 0.5 * h1, c2, s2, kmag, rate)
                k4 = _vel_magnet(z + h1 * k3, t + h1, c2, s2, kmag, rate)
                z = z + (h1 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            for k in range(steps_out):
                t = k * h2
                k1 = _vel_drift(z, t, c2, s2, u, z_delta, inv_sig2)
                k2 = _vel_drift(z + (0.5 * h2) * k1, t + 0.5 * h2, c2, s2, u, z_delta, inv_sig2)
                k3 = _vel_drift(z + (0.5 * h2) * k2, t + 0.5 * h2, c2, s2, u, z_delta, inv_sig2)
                k4 = _vel_drift(z + h2 * k3, t + h2, c2, s2, u, z_delta, inv_sig2)
                z = z + (h2 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out[i] = z


def rk4_record(double z0, double cos_theta0,
               double kmag, double rate, double u, double z_delta,
               double inv_sig2, double dt_magnet, double t_drift,
               Py_ssize_t steps_in, Py_ssize_t steps_out,
               double[::1] out):
    """Integrate one trajectory, recording z after every step.

    ``out`` must have length steps_in + steps_out + 1; out[0] is z0, the
    next steps_in entries sample the magnet transit and the rest the drift.
    """
    cdef double h1 = dt_magnet / steps_in
    cdef double h2 = t_drift / steps_out
    cdef double c2 = 0.5 * (1.0 + cos_theta0)
    cdef double s2 = 0.5 * (1.0 - cos_theta0)
    cdef double z = z0
    cdef Py_ssize_t k
    cdef double t, k1, k2, k3, k4
    with nogil:
        out[0] = z
        for k in range(steps_in):
            t = k * h1
            k1 = _vel_magnet(z, t, c2, s2, kmag, rate)
            k2 = _vel_magnet(z + (0.5 * h1) * k1, t + 0.5 * h1, c2, s2, kmag, rate)
            k3 = _vel_magnet(z + (0.5 * h1) * k2, t + 0.5 * h1, c2, s2, kmag, rate)
            k4 = _vel_magnet(z + h1 * k3, t + h1, c2, s2, kmag, rate)
            z = z + (h1 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out[k + 1] = z
        for k in range(steps_out):
            t = k * h2
            k1 = _vel_drift(z, t, c2, s2, u, z_delta, inv_sig2)
            k2 = _vel_drift(z + (0.5 * h2) * k1, t + 0.5 * h2, c2, s2, u, z_delta, inv_sig2)
            k3 = _vel_drift(z + (0.5 * h2) * k2, t + 0.5 * h2, c2, s2, u, z_delta, inv_sig2)
            k4 = _vel_drift(z + h2 * k3, t + h2, c2, s2, u, z_delta, inv_sig2)
            z = z + (h2 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out[steps_in + k + 1] = z
