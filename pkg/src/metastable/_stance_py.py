"""Pure-numpy stance integrator, the fallback when the compiled kernel is absent.

Same algorithm as ``_stance.pyx`` but vectorized over the batch: every
sample advances in lockstep, and samples whose step triggers an event are
bisected together. Full steps use the precomputed affine form of RK4;
event substeps use the generic stage formula.
"""

from __future__ import annotations

import numpy as np

ST_LIFTOFF, ST_BOTTOM, ST_TIMEOUT = 0, 1, 2
_EV_BOTTOM, _EV_LIFTOFF, _EV_SWITCH = 1, 2, 3


def _accel(p, y, v, ext):
    f = -p[0] * p[5] + p[2] * (p[1] - y) - p[3] * v
    f = np.where(ext, f + p[4], f)
    return f / p[0]


def _rk4(p, y, v, dt, ext):
    k1y = v
    k1v = _accel(p, y, v, ext)
    k2y = v + 0.5 * dt * k1v
    k2v = _accel(p, y + 0.5 * dt * k1y, v + 0.5 * dt * k1v, ext)
    k3y = v + 0.5 * dt * k2v
    k3v = _accel(p, y + 0.5 * dt * k2y, v + 0.5 * dt * k2v, ext)
    k4y = v + dt * k3v
    k4v = _accel(p, y + dt * k3y, v + dt * k3v, ext)
    y_new = y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    v_new = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return y_new, v_new


def step_coefficients(m, r0, k, c, F, g, h):
    """Coefficients of one full RK4 step for each stance phase.

    The stance ODE is affine with constant coefficients inside a phase, so
    a classical RK4 step of length ``h`` is exactly ``x -> P x + q`` with
    ``P = I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24``. Returns
    ``(p11, p12, p21, p22, q1_comp, q2_comp, q1_ext, q2_ext)``.
    """
    A = np.array([[0.0, 1.0], [-k / m, -c / m]])
    hA = h * A
    I = np.eye(2)
    hA2 = hA @ hA
    hA3 = hA2 @ hA
    P = I + hA + hA2 / 2.0 + hA3 / 6.0 + hA3 @ hA / 24.0
    S = h * (I + hA / 2.0 + hA2 / 6.0 + hA3 / 24.0)
    b_comp = np.array([0.0, (k * r0 - m * g) / m])
    b_ext = np.array([0.0, (k * r0 - m * g + F) / m])
    q_c = S @ b_comp
    q_e = S @ b_ext
    return tuple(float(x) for x in (P[0, 0], P[0, 1], P[1, 0], P[1, 1], q_c[0], q_c[1], q_e[0], q_e[1]))


def _full_step(co, y, v, ext):
    q1 = np.where(ext, co[6], co[4])
    q2 = np.where(ext, co[7], co[5])
    return co[0] * y + co[1] * v + q1, co[2] * y + co[3] * v + q2


def _fires(p, ev, ext, y, v):
    if ev == _EV_BOTTOM:
        return y <= 0.0
    if ev == _EV_LIFTOFF:
        return ext & (y >= p[1])
    return np.where(ext, v <= 0.0, v >= 0.0)


def _bisect(p, ev, ext, y, v, h, n_bisect):
    lo = np.zeros_like(y)
    hi = np.full_like(y, h)
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        ym, vm = _rk4(p, y, v, mid, ext)
        f = _fires(p, ev, ext, ym, vm)
        hi = np.where(f, mid, hi)
        lo = np.where(f, lo, mid)
    return hi


def stance_batch(m, r0, k, c, F, g, h, t_max, n_bisect, v0):
    p = (float(m), float(r0), float(k), float(c), float(F), float(g))
    co = step_coefficients(m, r0, k, c, F, g, h)
    v0 = np.ascontiguousarray(v0, dtype=np.float64).ravel()
    n = v0.shape[0]
    v_out = np.empty(n)
    status = np.full(n, ST_TIMEOUT, dtype=np.int8)

    done = v0 > 0.0
    v_out[done] = v0[done]
    status[done] = ST_LIFTOFF

    idx = np.flatnonzero(~done)
    y = np.full(idx.shape, p[1])
    v = v0[idx].copy()
    t = np.zeros(idx.shape)
    ext = np.zeros(idx.shape, dtype=bool)

    while idx.size:
        y1, v1 = _full_step(co, y, v, ext)
        best_ev = np.zeros(idx.shape, dtype=np.int8)
        best_tau = np.full(idx.shape, h)
        for ev in (_EV_BOTTOM, _EV_LIFTOFF, _EV_SWITCH):
            f = _fires(p, ev, ext, y1, v1)
            if not f.any():
                continue
            sel = np.flatnonzero(f)
            tau = _bisect(p, ev, ext[sel], y[sel], v[sel], h, n_bisect)
            better = (best_ev[sel] == 0) | (tau < best_tau[sel])
            upd = sel[better]
            best_tau[upd] = tau[better]
            best_ev[upd] = ev

        hit = best_ev != 0
        if hit.any():
            sel = np.flatnonzero(hit)
            ye, ve = _rk4(p, y[sel], v[sel], best_tau[sel], ext[sel])
            y1[sel] = ye
            v1[sel] = ve
        y, v = y1, v1
        t = t + best_tau

        fin_bottom = best_ev == _EV_BOTTOM
        fin_lift = best_ev == _EV_LIFTOFF
        ext = np.where(best_ev == _EV_SWITCH, ~ext, ext)
        fin_time = ~(fin_bottom | fin_lift) & (t >= t_max)
        fin = fin_bottom | fin_lift | fin_time
        if fin.any():
            gi = idx[fin]
            v_out[gi] = v[fin]
            status[gi] = np.where(
                fin_lift[fin], ST_LIFTOFF, np.where(fin_bottom[fin], ST_BOTTOM, ST_TIMEOUT)
            )
            keep = ~fin
            idx, y, v, t, ext = idx[keep], y[keep], v[keep], t[keep], ext[keep]
    return v_out, status
