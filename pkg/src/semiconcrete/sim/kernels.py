"""Longitudinal integration kernels.

Two implementations of the same fixed-step integrator:

* ``integrate_numba`` -- per-run scalar loop compiled with numba;
* ``integrate_numpy`` -- vectorised over runs, Python loop over time.

``integrate`` is bound to the numba path unless numba is missing or the
environment variable ``SEMICONCRETE_DISABLE_NUMBA`` is set to a non-empty
value other than ``0``. Both perform the same floating-point operations in
the same order and produce identical results.

Row layouts
-----------
scen[b] : ego_v0, v_set, lead_present, gap0, lead_v0, maneuver, t_start,
          magnitude, brake_factor, sensor_scale
ctrl[b] : k_gap, k_rel, k_v, tau, d_min, a_min, a_max, sensor_range,
          gap_sign, rel_sign, speed_sign, stuck, stuck_value, v_set_scale,
          detection_offset

``maneuver`` is 0 constant, 1 brake, 2 accelerate. An absent lead is
carried at ``+inf`` position and never detected.
"""

import os

import numpy as np

N_SCEN = 10
N_CTRL = 15

_flag = os.environ.get("SEMICONCRETE_DISABLE_NUMBA", "")
NUMBA_REQUESTED = _flag in ("", "0")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def _step_arrays(n_runs, n_steps):
    shape = (n_runs, n_steps + 1)
    return (np.empty(shape), np.empty(shape), np.empty(shape),
            np.empty(shape), np.empty(shape), np.empty(shape, dtype=np.bool_))


@njit(cache=True, nogil=True)
def _integrate_jit(scen, ctrl, dt, n_steps, ego_x, ego_v, ego_a, lead_x, lead_v, detected):
    for b in range(scen.shape[0]):
        v_set = scen[b, 1] * ctrl[b, 13]
        present = scen[b, 2] > 0.5
        maneuver = scen[b, 5]
        t_start = scen[b, 6]
        mag = scen[b, 7]
        lo_b = ctrl[b, 5] * scen[b, 8]
        a_max = ctrl[b, 6]
        lo = min(lo_b, a_max)
        hi = max(lo_b, a_max)
        rng = ctrl[b, 7] * scen[b, 9] - ctrl[b, 14]
        x = 0.0
        v = scen[b, 0]
        if present:
            lx = scen[b, 3]
            lv = scen[b, 4]
        else:
            lx = np.inf
            lv = 0.0
        for k in range(n_steps + 1):
            gap = lx - x
            det = present and gap <= rng
            cruise = ctrl[b, 2] * ctrl[b, 10] * (v_set - v)
            if det:
                follow = (ctrl[b, 0] * ctrl[b, 8] * (gap - (ctrl[b, 4] + ctrl[b, 3] * v))
                          + ctrl[b, 1] * ctrl[b, 9] * (lv - v))
                a = min(follow, cruise)
            else:
                a = cruise
            if ctrl[b, 11] > 0.5:
                a = ctrl[b, 12]
            a = min(max(a, lo), hi)
            ego_x[b, k] = x
            ego_v[b, k] = v
            ego_a[b, k] = a
            lead_x[b, k] = lx
            lead_v[b, k] = lv
            detected[b, k] = det
            if k == n_steps:
                break
            t = k * dt
            la = 0.0
            if present and t >= t_start:
                if maneuver == 1.0:
                    la = -mag
                elif maneuver == 2.0:
                    la = mag
            v_prev = v
            lv_prev = lv
            v = max(v + a * dt, 0.0)
            x = x + 0.5 * (v_prev + v) * dt
            lv = max(lv + la * dt, 0.0)
            lx = lx + 0.5 * (lv_prev + lv) * dt


def integrate_numba(scen, ctrl, dt, n_steps):
    if not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    out = _step_arrays(len(scen), n_steps)
    _integrate_jit(np.ascontiguousarray(scen, dtype=np.float64),
                   np.ascontiguousarray(ctrl, dtype=np.float64), float(dt), int(n_steps), *out)
    return out


def integrate_numpy(scen, ctrl, dt, n_steps):
    scen = np.asarray(scen, dtype=np.float64)
    ctrl = np.asarray(ctrl, dtype=np.float64)
    ego_x, ego_v, ego_a, lead_x, lead_v, detected = _step_arrays(len(scen), n_steps)
    v_set = scen[:, 1] * ctrl[:, 13]
    present = scen[:, 2] > 0.5
    maneuver = scen[:, 5]
    t_start = scen[:, 6]
    mag = scen[:, 7]
    lo_b = ctrl[:, 5] * scen[:, 8]
    lo = np.minimum(lo_b, ctrl[:, 6])
    hi = np.maximum(lo_b, ctrl[:, 6])
    rng = ctrl[:, 7] * scen[:, 9] - ctrl[:, 14]
    stuck = ctrl[:, 11] > 0.5
    gain_gap = ctrl[:, 0] * ctrl[:, 8]
    gain_rel = ctrl[:, 1] * ctrl[:, 9]
    gain_v = ctrl[:, 2] * ctrl[:, 10]
    d_min, tau = ctrl[:, 4], ctrl[:, 3]
    lead_acc = np.where(maneuver == 1.0, -mag, np.where(maneuver == 2.0, mag, 0.0))
    x = np.zeros(len(scen))
    v = scen[:, 0].copy()
    lx = np.where(present, scen[:, 3], np.inf)
    lv = np.where(present, scen[:, 4], 0.0)
    with np.errstate(invalid="ignore"):
        for k in range(n_steps + 1):
            gap = lx - x
            det = present & (gap <= rng)
            cruise = gain_v * (v_set - v)
            follow = gain_gap * (gap - (d_min + tau * v)) + gain_rel * (lv - v)
            a = np.where(det, np.minimum(follow, cruise), cruise)
            a = np.where(stuck, ctrl[:, 12], a)
            a = np.minimum(np.maximum(a, lo), hi)
            ego_x[:, k] = x
            ego_v[:, k] = v
            ego_a[:, k] = a
            lead_x[:, k] = lx
            lead_v[:, k] = lv
            detected[:, k] = det
            if k == n_steps:
                break
            t = k * dt
            la = np.where(present & (t >= t_start), lead_acc, 0.0)
            v_prev = v
            lv_prev = lv
            v = np.maximum(v + a * dt, 0.0)
            x = x + 0.5 * (v_prev + v) * dt
            lv = np.maximum(lv + la * dt, 0.0)
            lx = lx + 0.5 * (lv_prev + lv) * dt
    return ego_x, ego_v, ego_a, lead_x, lead_v, detected


USING_NUMBA = HAVE_NUMBA and NUMBA_REQUESTED
integrate = integrate_numba if USING_NUMBA else integrate_numpy
