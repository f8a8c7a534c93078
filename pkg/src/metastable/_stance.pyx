# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stance-phase integrator for the vertical F-SLIP hopper.

Mirrors ``_stance_py`` operation for operation so both backends agree to
rounding. Fixed-step RK4 (full steps in precomputed affine form); liftoff,
bottom-out and compression/extension switches are localized by bisection
on the substep length.
"""

import numpy as np
cimport numpy as cnp

from ._stance_py import step_coefficients

cnp.import_array()

cdef enum:
    ST_LIFTOFF = 0
    ST_BOTTOM = 1
    ST_TIMEOUT = 2

cdef enum:
    EV_NONE = 0
    EV_BOTTOM = 1
    EV_LIFTOFF = 2
    EV_SWITCH = 3


cdef struct Params:
    double m, r0, k, c, F, g, h, t_max
    int n_bisect
    double p11, p12, p21, p22, qc1, qc2, qe1, qe2


cdef inline double _accel(const Params* p, double y, double v, int ext) noexcept nogil:
    cdef double f = -p.m * p.g + p.k * (p.r0 - y) - p.c * v
    if ext:
        f = f + p.F
    return f / p.m


cdef inline void _rk4(const Params* p, double y, double v, double dt, int ext,
                      double* yo, double* vo) noexcept nogil:
    cdef double k1y, k1v, k2y, k2v, k3y, k3v, k4y, k4v
    k1y = v
    k1v = _accel(p, y, v, ext)
    k2y = v + 0.5 * dt * k1v
    k2v = _accel(p, y + 0.5 * dt * k1y, v + 0.5 * dt * k1v, ext)
    k3y = v + 0.5 * dt * k2v
    k3v = _accel(p, y + 0.5 * dt * k2y, v + 0.5 * dt * k2v, ext)
    k4y = v + dt * k3v
    k4v = _accel(p, y + dt * k3y, v + dt * k3v, ext)
    yo[0] = y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    vo[0] = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)


cdef inline int _fires(const Params* p, int ev, int ext, double y, double v) noexcept nogil:
    if ev == EV_BOTTOM:
        return y <= 0.0
    if ev == EV_LIFTOFF:
        return ext and y >= p.r0
    if ext:
        return v <= 0.0
    return v >= 0.0


cdef inline double _bisect(const Params* p, int ev, int ext, double y, double v,
                           double hi) noexcept nogil:
    cdef double lo = 0.0, mid, ym, vm
    cdef int i
    for i in range(p.n_bisect):
        mid = 0.5 * (lo + hi)
        _rk4(p, y, v, mid, ext, &ym, &vm)
        if _fires(p, ev, ext, ym, vm):
            hi = mid
        else:
            lo = mid
    return hi


cdef int _stance_one(const Params* p, double v0, double* v_lo) noexcept nogil:
    cdef double y = p.r0, v = v0, t = 0.0
    cdef double y1, v1, tau, best_tau
    cdef int ext, ev, best_ev
    if v0 > 0.0:
        v_lo[0] = v0
        return ST_LIFTOFF
    ext = 0
    while t < p.t_max:
        if ext:
            y1 = p.p11 * y + p.p12 * v + p.qe1
            v1 = p.p21 * y + p.p22 * v + p.qe2
        else:
            y1 = p.p11 * y + p.p12 * v + p.qc1
            v1 = p.p21 * y + p.p22 * v + p.qc2
        best_ev = EV_NONE
        best_tau = p.h
        for ev in range(EV_BOTTOM, EV_SWITCH + 1):
            if _fires(p, ev, ext, y1, v1):
                tau = _bisect(p, ev, ext, y, v, p.h)
                if best_ev == EV_NONE or tau < best_tau:
                    best_tau = tau
                    best_ev = ev
        if best_ev == EV_NONE:
            y = y1
            v = v1
            t = t + p.h
            continue
        _rk4(p, y, v, best_tau, ext, &y1, &v1)
        y = y1
        v = v1
        t = t + best_tau
        if best_ev == EV_BOTTOM:
            v_lo[0] = v
            return ST_BOTTOM
        if best_ev == EV_LIFTOFF:
            v_lo[0] = v
            return ST_LIFTOFF
        ext = 1 - ext
    v_lo[0] = v
    return ST_TIMEOUT


def stance_batch(double m, double r0, double k, double c, double F, double g,
                 double h, double t_max, int n_bisect, v0):
    """Integrate stance from touchdown velocities ``v0``.

    Returns ``(v_lo, status)`` with status 0 = liftoff, 1 = bottom-out,
    2 = no liftoff before ``t_max``.
    """
    cdef cnp.ndarray[double, ndim=1] vin = np.ascontiguousarray(v0, dtype=np.float64).ravel()
    cdef Py_ssize_t n = vin.shape[0], i
    cdef cnp.ndarray[double, ndim=1] vout = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.int8_t, ndim=1] status = np.empty(n, dtype=np.int8)
    cdef double[::1] vin_v = vin
    cdef double[::1] vout_v = vout
    cdef cnp.int8_t[::1] st_v = status
    cdef Params p
    cdef double out
    p.m = m; p.r0 = r0; p.k = k; p.c = c; p.F = F; p.g = g
    p.h = h; p.t_max = t_max; p.n_bisect = n_bisect
    p.p11, p.p12, p.p21, p.p22, p.qc1, p.qc2, p.qe1, p.qe2 = step_coefficients(m, r0, k, c, F, g, h)
    with nogil:
        for i in range(n):
            st_v[i] = <cnp.int8_t>_stance_one(&p, vin_v[i], &out)
            vout_v[i] = out
    return vout, status
