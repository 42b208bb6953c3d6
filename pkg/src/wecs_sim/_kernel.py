"""Compiled inner loops: the closed-loop WECS run and the error-system
batteries. Deliberately flat argument lists (scalars and plain arrays)
so numba caching works across processes.

Integration scheme: RK4 on the continuous plant (rotor speed, electrical
angle, alphabeta currents) at dt_plant; controller and observers update
every dt_ctrl with the commanded voltage vector held between updates.
The current-observer sliding variable is advanced by the exact solution
of its piecewise-linear ODE over each tick (region-wise exponentials),
which stays stable for any assumed inductance where explicit stepping
of the stiff boundary layer would not.
"""

import math

import numpy as np
from numba import njit, prange

# log column order, mirrored by sim.Trace
N_COLS = 22
(C_T, C_VW, C_W, C_WHAT, C_TH, C_LAM, C_ID, C_IQ, C_IDH, C_IQH, C_IDR,
 C_IQR, C_VD, C_VQ, C_TAUB, C_TAUG, C_PDC, C_SA, C_SB, C_EHA, C_EHB,
 C_PHI) = range(N_COLS)

EPS_AMP = 1e-6
EPS_OMEGA = 0.1
OMEGA_CAP = 500.0


@njit(cache=True)
def cp_lookup(lam, lam_max, table):
    """Linear interpolation on a uniform cp grid, zero outside."""
    if lam <= 0.0 or lam >= lam_max:
        return 0.0
    x = lam / lam_max * (table.size - 1)
    k = int(x)
    f = x - k
    return table[k] * (1.0 - f) + table[k + 1] * f


@njit(cache=True)
def smo_advance(s, u0, R_o, L_o, l1, phi_bl, dt):
    """Exact sliding-variable update over one tick with constant input.

    Solves Lo*ds/dt = u0 - Ro*s - l1*sat(s/phi_bl) piecewise; pure sign
    (phi_bl = 0) sticks at the surface whenever |u0| <= l1. Returns
    (s_new, z_new).
    """
    t_left = dt
    if phi_bl <= 0.0:
        for _ in range(4):
            if t_left <= 0.0:
                break
            if s == 0.0:
                if abs(u0) <= l1:
                    break
                s = 1e-15 if u0 > 0.0 else -1e-15
            u_eff = u0 - l1 if s > 0.0 else u0 + l1
            s_inf = u_eff / R_o
            tau = L_o / R_o
            same_side = (s > 0.0 and s_inf >= 0.0) or (s < 0.0 and s_inf <= 0.0)
            if same_side:
                s = s_inf + (s - s_inf) * math.exp(-t_left / tau)
                t_left = 0.0
            else:
                t_x = tau * math.log((s - s_inf) / (0.0 - s_inf))
                if t_x >= t_left:
                    s = s_inf + (s - s_inf) * math.exp(-t_left / tau)
                    t_left = 0.0
                else:
                    s = 0.0
                    t_left -= t_x
        if s == 0.0:
            z = u0 if abs(u0) <= l1 else (l1 if u0 > 0.0 else -l1)
        else:
            z = l1 if s > 0.0 else -l1
        return s, z
    for _ in range(6):
        if t_left <= 0.0:
            break
        if -phi_bl <= s <= phi_bl:
            G = R_o + l1 / phi_bl
            lo, hi = -phi_bl, phi_bl
        elif s > phi_bl:
            G = R_o
            lo, hi = phi_bl, 1e300
        else:
            G = R_o
            lo, hi = -1e300, -phi_bl
        if s > phi_bl:
            s_inf = (u0 - l1) / G
        elif s < -phi_bl:
            s_inf = (u0 + l1) / G
        else:
            s_inf = u0 / G
        tau = L_o / G
        if s_inf > hi:
            s_b = hi
        elif s_inf < lo:
            s_b = lo
        else:
            s_b = -1e300  # stays in region
        if s_b == -1e300:
            s = s_inf + (s - s_inf) * math.exp(-t_left / tau)
            t_left = 0.0
        else:
            num = s - s_inf
            den = s_b - s_inf
            if num == 0.0 or num * den <= 0.0 or abs(num) <= abs(den):
                s = s_inf + (s - s_inf) * math.exp(-t_left / tau)
                t_left = 0.0
            else:
                t_x = tau * math.log(num / den)
                if t_x >= t_left:
                    s = s_inf + (s - s_inf) * math.exp(-t_left / tau)
                    t_left = 0.0
                else:
                    # nudge just across the boundary so the next region
                    # classification picks the right dynamics
                    s = s_b + (1e-12 if s_inf > s_b else -1e-12)
                    t_left -= t_x
    if s > phi_bl:
        z = l1
    elif s < -phi_bl:
        z = -l1
    else:
        z = l1 * s / phi_bl
    return s, z


@njit(cache=True)
def run_closed_loop(mode,
                    R, L, phi_f, p, V_dc, I_max,
                    rho, R_r, J, b,
                    lam_max, cp_tab,
                    R_o, L_o, l1, l2, l3, phi_bl,
                    k_p, k_i, K_t,
                    wind, wind_dt,
                    dt_plant, n_sub, n_log, n_steps,
                    omega0, theta0,
                    log):
    """Full closed-loop run; fills `log` row by row.

    mode: 0 encoder feedback, 1 sensorless. Returns (rows_filled,
    divergence_flag, t_stop). divergence_flag: 0 clean, 1 overcurrent,
    2 overspeed/non-finite.
    """
    dt_ctrl = dt_plant * n_sub
    area = math.pi * R_r * R_r
    half_rho_a = 0.5 * rho * area
    v_lim = V_dc / math.sqrt(3.0)
    i_trip = 1.5 * I_max

    w = omega0
    th = theta0
    ia = 0.0
    ib = 0.0

    # observer state
    s_a = 0.0
    s_b = 0.0
    eh_a = 0.0
    eh_b = p * phi_f * omega0
    if eh_b < EPS_AMP:
        eh_b = EPS_AMP
    z_a = 0.0
    z_b = eh_b
    we_h = p * omega0 if omega0 > 0.0 else 1.0
    ia_prev = 0.0
    ib_prev = 0.0
    wa_prev = 0.0
    wb_prev = 0.0
    have_prev = False

    # controller state
    x_d = 0.0
    x_q = 0.0
    va_h = 0.0
    vb_h = 0.0
    cth = math.cos(theta0)
    sth = math.sin(theta0)
    w_est = omega0
    id_ref = 0.0
    iq_ref = 0.0
    v_d = 0.0
    v_q = 0.0

    n_wind = wind.size
    row = 0
    flag = 0
    t = 0.0

    for step in range(n_steps):
        t = step * dt_plant
        kw = int(t / wind_dt + 1e-9)
        if kw >= n_wind:
            kw = n_wind - 1
        vw = wind[kw]

        if step % n_sub == 0:
            # divergence gate on measured quantities
            i_norm = math.hypot(ia, ib)
            if not (math.isfinite(i_norm) and math.isfinite(w)):
                flag = 2
                break
            if i_norm > i_trip:
                flag = 1
                break
            if w > OMEGA_CAP:
                flag = 2
                break
            # observers advance in both modes so their estimates stay
            # loggable; only the sensorless branch feeds them back
            if have_prev:
                wa = va_h - R_o * 0.5 * (ia + ia_prev) \
                    - L_o * (ia - ia_prev) / dt_ctrl
                wb = vb_h - R_o * 0.5 * (ib + ib_prev) \
                    - L_o * (ib - ib_prev) / dt_ctrl
                ua = 1.5 * wa - 0.5 * wa_prev
                ub = 1.5 * wb - 0.5 * wb_prev
                # speed/BEMF adaptation, forward Euler at the tick rate.
                # Steps with the z of the previous tick: feeding the
                # just-refreshed z would hand the integrator a sample one
                # tick ahead of its state and bias the estimated angle
                # forward by a full electrical tick.
                da = -we_h * eh_b - l2 * (eh_a - z_a)
                db = we_h * eh_a - l2 * (eh_b - z_b)
                dw = l3 * ((eh_a - z_a) * eh_b - (eh_b - z_b) * eh_a)
                eh_a += dt_ctrl * da
                eh_b += dt_ctrl * db
                we_h += dt_ctrl * dw
                s_a, z_a = smo_advance(s_a, ua, R_o, L_o, l1, phi_bl, dt_ctrl)
                s_b, z_b = smo_advance(s_b, ub, R_o, L_o, l1, phi_bl, dt_ctrl)
                wa_prev = wa
                wb_prev = wb
            ia_prev = ia
            ib_prev = ib
            have_prev = True
            if mode == 1:
                nrm = math.hypot(eh_a, eh_b)
                if nrm < EPS_AMP:
                    nrm = EPS_AMP
                cth = eh_b / nrm
                sth = -eh_a / nrm
                w_est = we_h / p
            else:
                cth = math.cos(th)
                sth = math.sin(th)
                w_est = w
            id_m = cth * ia + sth * ib
            iq_m = -sth * ia + cth * ib
            iq_mag = 2.0 * K_t * w_est * w_est / (3.0 * p * phi_f)
            if iq_mag > I_max:
                iq_mag = I_max
            id_ref = 0.0
            iq_ref = -iq_mag
            # state feedback on the measured currents, integral on the
            # tracking errors, conditional integration at the clamp
            v_d = -k_p * id_m - k_i * x_d
            v_q = -k_p * iq_m - k_i * x_q
            nv = math.hypot(v_d, v_q)
            if nv > v_lim:
                sc = v_lim / nv
                v_d *= sc
                v_q *= sc
            else:
                x_d += dt_ctrl * (id_m - id_ref)
                x_q += dt_ctrl * (iq_m - iq_ref)
            va_h = cth * v_d - sth * v_q
            vb_h = sth * v_d + cth * v_q

        if step % n_log == 0:
            log[row, C_T] = t
            log[row, C_VW] = vw
            log[row, C_W] = w
            log[row, C_WHAT] = w_est
            log[row, C_TH] = th
            log[row, C_LAM] = w * R_r / vw
            ct0 = math.cos(th)
            st0 = math.sin(th)
            log[row, C_ID] = ct0 * ia + st0 * ib
            log[row, C_IQ] = -st0 * ia + ct0 * ib
            log[row, C_IDH] = cth * ia + sth * ib
            log[row, C_IQH] = -sth * ia + cth * ib
            log[row, C_IDR] = id_ref
            log[row, C_IQR] = iq_ref
            log[row, C_VD] = v_d
            log[row, C_VQ] = v_q
            lam = w * R_r / vw
            p_aero = half_rho_a * vw * vw * vw * cp_lookup(lam, lam_max, cp_tab)
            w_den = w if w > EPS_OMEGA else EPS_OMEGA
            log[row, C_TAUB] = p_aero / w_den
            log[row, C_TAUG] = 1.5 * p * phi_f * log[row, C_IQ]
            log[row, C_PDC] = -1.5 * (va_h * ia + vb_h * ib)
            log[row, C_SA] = s_a
            log[row, C_SB] = s_b
            log[row, C_EHA] = eh_a
            log[row, C_EHB] = eh_b
            th_hat = math.atan2(-eh_a, eh_b)
            dphi = th_hat - th
            log[row, C_PHI] = (dphi + math.pi) % (2.0 * math.pi) - math.pi
            row += 1

        # RK4 on (w, th, ia, ib) with held voltages and wind
        w1, th1, a1, b1 = w, th, ia, ib

        lam = w1 * R_r / vw
        p_a = half_rho_a * vw * vw * vw * cp_lookup(lam, lam_max, cp_tab)
        tb = p_a / (w1 if w1 > EPS_OMEGA else EPS_OMEGA)
        iq_t = -math.sin(th1) * a1 + math.cos(th1) * b1
        k1w = (tb + 1.5 * p * phi_f * iq_t - b * w1) / J
        k1t = p * w1
        amp = p * phi_f * w1
        k1a = (va_h - R * a1 + amp * math.sin(th1)) / L
        k1b = (vb_h - R * b1 - amp * math.cos(th1)) / L

        w2 = w1 + 0.5 * dt_plant * k1w
        th2 = th1 + 0.5 * dt_plant * k1t
        a2 = a1 + 0.5 * dt_plant * k1a
        b2 = b1 + 0.5 * dt_plant * k1b
        lam = w2 * R_r / vw
        p_a = half_rho_a * vw * vw * vw * cp_lookup(lam, lam_max, cp_tab)
        tb = p_a / (w2 if w2 > EPS_OMEGA else EPS_OMEGA)
        iq_t = -math.sin(th2) * a2 + math.cos(th2) * b2
        k2w = (tb + 1.5 * p * phi_f * iq_t - b * w2) / J
        k2t = p * w2
        amp = p * phi_f * w2
        k2a = (va_h - R * a2 + amp * math.sin(th2)) / L
        k2b = (vb_h - R * b2 - amp * math.cos(th2)) / L

        w3 = w1 + 0.5 * dt_plant * k2w
        th3 = th1 + 0.5 * dt_plant * k2t
        a3 = a1 + 0.5 * dt_plant * k2a
        b3 = b1 + 0.5 * dt_plant * k2b
        lam = w3 * R_r / vw
        p_a = half_rho_a * vw * vw * vw * cp_lookup(lam, lam_max, cp_tab)
        tb = p_a / (w3 if w3 > EPS_OMEGA else EPS_OMEGA)
        iq_t = -math.sin(th3) * a3 + math.cos(th3) * b3
        k3w = (tb + 1.5 * p * phi_f * iq_t - b * w3) / J
        k3t = p * w3
        amp = p * phi_f * w3
        k3a = (va_h - R * a3 + amp * math.sin(th3)) / L
        k3b = (vb_h - R * b3 - amp * math.cos(th3)) / L

        w4 = w1 + dt_plant * k3w
        th4 = th1 + dt_plant * k3t
        a4 = a1 + dt_plant * k3a
        b4 = b1 + dt_plant * k3b
        lam = w4 * R_r / vw
        p_a = half_rho_a * vw * vw * vw * cp_lookup(lam, lam_max, cp_tab)
        tb = p_a / (w4 if w4 > EPS_OMEGA else EPS_OMEGA)
        iq_t = -math.sin(th4) * a4 + math.cos(th4) * b4
        k4w = (tb + 1.5 * p * phi_f * iq_t - b * w4) / J
        k4t = p * w4
        amp = p * phi_f * w4
        k4a = (va_h - R * a4 + amp * math.sin(th4)) / L
        k4b = (vb_h - R * b4 - amp * math.cos(th4)) / L

        sixth = dt_plant / 6.0
        w = w1 + sixth * (k1w + 2.0 * (k2w + k3w) + k4w)
        th = th1 + sixth * (k1t + 2.0 * (k2t + k3t) + k4t)
        ia = a1 + sixth * (k1a + 2.0 * (k2a + k3a) + k4a)
        ib = b1 + sixth * (k1b + 2.0 * (k2b + k3b) + k4b)
        th = th % (2.0 * math.pi)
        if w < 0.0:
            w = 0.0

    if flag == 0:
        # closing row at t_end with the last held commands
        t = n_steps * dt_plant
        kw = int(t / wind_dt + 1e-9)
        if kw >= n_wind:
            kw = n_wind - 1
        vw = wind[kw]
        log[row, C_T] = t
        log[row, C_VW] = vw
        log[row, C_W] = w
        log[row, C_WHAT] = w_est
        log[row, C_TH] = th
        log[row, C_LAM] = w * R_r / vw
        ct0 = math.cos(th)
        st0 = math.sin(th)
        log[row, C_ID] = ct0 * ia + st0 * ib
        log[row, C_IQ] = -st0 * ia + ct0 * ib
        log[row, C_IDH] = cth * ia + sth * ib
        log[row, C_IQH] = -sth * ia + cth * ib
        log[row, C_IDR] = id_ref
        log[row, C_IQR] = iq_ref
        log[row, C_VD] = v_d
        log[row, C_VQ] = v_q
        lam = w * R_r / vw
        p_aero = half_rho_a * vw * vw * vw * cp_lookup(lam, lam_max, cp_tab)
        w_den = w if w > EPS_OMEGA else EPS_OMEGA
        log[row, C_TAUB] = p_aero / w_den
        log[row, C_TAUG] = 1.5 * p * phi_f * log[row, C_IQ]
        log[row, C_PDC] = -1.5 * (va_h * ia + vb_h * ib)
        log[row, C_SA] = s_a
        log[row, C_SB] = s_b
        log[row, C_EHA] = eh_a
        log[row, C_EHB] = eh_b
        th_hat = math.atan2(-eh_a, eh_b)
        dphi = th_hat - th
        log[row, C_PHI] = (dphi + math.pi) % (2.0 * math.pi) - math.pi
        row += 1

    return row, flag, t


@njit(cache=True)
def error_system_run(e0, R, L, phi_f, p, b, J, k_p, k_i,
                     id_ref, iq_ref, w_star, dt, t_end, ratio):
    """RK4 on the 5-state tracking-error system with early exit.

    Returns (converged, t_converged, final_norm_ratio).
    """
    ed, eq, xd, xq, ew = e0[0], e0[1], e0[2], e0[3], e0[4]
    n0 = math.sqrt(ed * ed + eq * eq + xd * xd + xq * xq + ew * ew)
    if n0 == 0.0:
        return True, 0.0, 0.0
    thresh = ratio * n0
    n_steps = int(t_end / dt) + 1
    aRL = (k_p + R) / L
    kiL = k_i / L
    pphiL = p * phi_f / L
    ew_gain = 1.5 * p * phi_f / J
    bJ = b / J
    t = 0.0
    for k in range(n_steps):
        # k1
        w = ew + w_star
        d1d = -aRL * ed - kiL * xd + p * w * eq + p * ew * iq_ref
        d1q = -aRL * eq - kiL * xq - pphiL * ew - p * w * ed - p * ew * id_ref
        d1xd = ed
        d1xq = eq
        d1w = ew_gain * eq - bJ * ew
        # k2
        h = 0.5 * dt
        ed2, eq2 = ed + h * d1d, eq + h * d1q
        xd2, xq2 = xd + h * d1xd, xq + h * d1xq
        ew2 = ew + h * d1w
        w = ew2 + w_star
        d2d = -aRL * ed2 - kiL * xd2 + p * w * eq2 + p * ew2 * iq_ref
        d2q = -aRL * eq2 - kiL * xq2 - pphiL * ew2 - p * w * ed2 - p * ew2 * id_ref
        d2xd = ed2
        d2xq = eq2
        d2w = ew_gain * eq2 - bJ * ew2
        # k3
        ed3, eq3 = ed + h * d2d, eq + h * d2q
        xd3, xq3 = xd + h * d2xd, xq + h * d2xq
        ew3 = ew + h * d2w
        w = ew3 + w_star
        d3d = -aRL * ed3 - kiL * xd3 + p * w * eq3 + p * ew3 * iq_ref
        d3q = -aRL * eq3 - kiL * xq3 - pphiL * ew3 - p * w * ed3 - p * ew3 * id_ref
        d3xd = ed3
        d3xq = eq3
        d3w = ew_gain * eq3 - bJ * ew3
        # k4
        ed4, eq4 = ed + dt * d3d, eq + dt * d3q
        xd4, xq4 = xd + dt * d3xd, xq + dt * d3xq
        ew4 = ew + dt * d3w
        w = ew4 + w_star
        d4d = -aRL * ed4 - kiL * xd4 + p * w * eq4 + p * ew4 * iq_ref
        d4q = -aRL * eq4 - kiL * xq4 - pphiL * ew4 - p * w * ed4 - p * ew4 * id_ref
        d4xd = ed4
        d4xq = eq4
        d4w = ew_gain * eq4 - bJ * ew4

        sx = dt / 6.0
        ed += sx * (d1d + 2.0 * (d2d + d3d) + d4d)
        eq += sx * (d1q + 2.0 * (d2q + d3q) + d4q)
        xd += sx * (d1xd + 2.0 * (d2xd + d3xd) + d4xd)
        xq += sx * (d1xq + 2.0 * (d2xq + d3xq) + d4xq)
        ew += sx * (d1w + 2.0 * (d2w + d3w) + d4w)
        t = (k + 1) * dt
        nrm = math.sqrt(ed * ed + eq * eq + xd * xd + xq * xq + ew * ew)
        if not math.isfinite(nrm) or nrm > 1e9 * n0:
            return False, np.nan, nrm / n0
        if nrm < thresh:
            return True, t, nrm / n0
        if t >= t_end:
            break
    nrm = math.sqrt(ed * ed + eq * eq + xd * xd + xq * xq + ew * ew)
    return nrm < thresh, np.nan, nrm / n0


@njit(cache=True, parallel=True)
def error_system_battery(e0s, R, L, phi_f, p, b, J, k_p, k_i,
                         id_ref, iq_ref, w_star, dt, t_end, ratio):
    """Convergence flags for a batch of initial errors (rows of e0s)."""
    n = e0s.shape[0]
    ok = np.zeros(n, dtype=np.uint8)
    for i in prange(n):
        conv, _, _ = error_system_run(e0s[i], R, L, phi_f, p, b, J,
                                      k_p, k_i, id_ref, iq_ref,
                                      w_star, dt, t_end, ratio)
        if conv:
            ok[i] = 1
    return ok
