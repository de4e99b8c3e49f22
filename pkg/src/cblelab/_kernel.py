"""Compiled single-path stepper; see :mod:`cblelab.simulate` for the scheme."""
import math

import numpy as np
from numba import njit

OK = 0
UNDERFLOW = 1


@njit(cache=True, nogil=True)
def _competition(y, kind, b0, q0, A, tab_x, tab_y, tab_slope):
    if kind == 0:
        if b0 == 0.0 or y <= 0.0:
            return 0.0
        if y >= A:
            return b0 * y ** q0
        return b0 * A ** q0 * y / A
    if y <= tab_x[-1]:
        return np.interp(y, tab_x, tab_y)
    return tab_y[-1] + tab_slope * (y - tab_x[-1])


@njit(cache=True, nogil=True)
def run_path(y0, dt_max, K, rec_times,
             lin, comp_kind, b0, q0, comp_A, tab_x, tab_y, tab_slope,
             b2sq2, sigma,
             lam_big, stable_mass, stable_lo, alpha, atom_sizes, atom_cum, var_small,
             env_t, env_z, env_on,
             rng_b, rng_c, rng_d, rng_e,
             out_t, out_y):
    """Simulate one path; returns (n_samples, status, exploded, tau_K, absorbed, tau_0, n_env_seen, n_steps, t, y)."""
    n_rec = rec_times.shape[0]
    n_env = env_t.shape[0]
    h_floor_drift = 1e-6 * dt_max
    h_min = 1e-12 * dt_max

    t = 0.0
    y = y0
    out_t[0] = 0.0
    out_y[0] = y
    n_out = 1
    j = 1
    ie = 0
    steps = 0
    status = OK
    exploded = False
    tau_K = np.nan
    absorbed = False
    tau_0 = np.nan

    if y >= K:
        return n_out, status, True, 0.0, False, tau_0, ie, steps, t, y
    if y <= 0.0:
        absorbed = True
        tau_0 = 0.0

    while not absorbed and j < n_rec:
        next_rec = rec_times[j]
        t_ev = env_t[ie] if ie < n_env else np.inf

        # adaptive step from the step-start state
        h = dt_max
        if lam_big > 0.0:
            h = min(h, 0.1 / (y * lam_big))
        f0 = lin * y - _competition(y, comp_kind, b0, q0, comp_A, tab_x, tab_y, tab_slope)
        if f0 != 0.0:
            h = min(h, max(0.05 * y / abs(f0), h_floor_drift))
        if h < h_min:
            status = UNDERFLOW
            break
        target = t + h
        hit_rec = False
        if target >= next_rec:
            target = next_rec
            hit_rec = True
        if target >= t_ev:
            target = t_ev
            hit_rec = target == next_rec
        h = target - t
        y_start = y

        # (a) drift, explicit midpoint
        ym = max(y + 0.5 * h * f0, 0.0)
        fm = lin * ym - _competition(ym, comp_kind, b0, q0, comp_A, tab_x, tab_y, tab_slope)
        y = max(y + h * fm, 0.0)
        # (b) branching diffusion
        if b2sq2 > 0.0 and y > 0.0:
            y = max(y + math.sqrt(b2sq2 * y * h) * rng_b.standard_normal(), 0.0)
        # (c) environment diffusion as a stochastic exponential
        if sigma > 0.0:
            w = rng_c.standard_normal() * math.sqrt(h)
            y = y * math.exp(sigma * w - 0.5 * sigma * sigma * h)
        # (d) big branching jumps by thinning against y_hat * mu([eps, inf))
        if lam_big > 0.0:
            y_hat = max(y_start, y)
            s = 0.0
            while True:
                s += rng_d.exponential(1.0) / (y_hat * lam_big)
                if s >= h:
                    break
                if rng_d.random() * y_hat <= y:
                    u = rng_d.random() * lam_big
                    if u < stable_mass:
                        z = stable_lo * (1.0 - rng_d.random()) ** (-1.0 / alpha)
                    else:
                        z = atom_sizes[np.searchsorted(atom_cum, u, side="right")]
                    y += z
                    if y > y_hat:
                        y_hat = y
                    if y >= K:
                        exploded = True
                        tau_K = t + s
                        break
            if exploded:
                steps += 1
                break
        # (e) small branching jumps as a variance-matched Gaussian
        if var_small > 0.0 and y > 0.0:
            y = max(y + math.sqrt(y * h * var_small) * rng_e.standard_normal(), 0.0)
        t = target
        steps += 1
        # (f) environment jumps scheduled at t
        while ie < n_env and env_t[ie] <= t:
            if env_on[ie]:
                y = y * math.exp(env_z[ie])
            ie += 1

        if y >= K:
            exploded = True
            tau_K = t
            break
        if y <= 0.0:
            y = 0.0
            absorbed = True
            tau_0 = t
            if hit_rec:
                out_t[n_out] = t
                out_y[n_out] = 0.0
                n_out += 1
                j += 1
            break
        if hit_rec:
            out_t[n_out] = t
            out_y[n_out] = y
            n_out += 1
            j += 1

    if exploded:
        out_t[n_out] = tau_K
        out_y[n_out] = y
        n_out += 1
    elif absorbed:
        while j < n_rec:
            if rec_times[j] > out_t[n_out - 1]:
                out_t[n_out] = rec_times[j]
                out_y[n_out] = 0.0
                n_out += 1
            j += 1
    return n_out, status, exploded, tau_K, absorbed, tau_0, ie, steps, t, y
