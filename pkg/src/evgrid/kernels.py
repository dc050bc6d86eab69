"""Array kernels for the per-step charger/battery update and KPI reductions.

Each kernel mirrors the scalar models in :mod:`evgrid.core_models` with the
same arithmetic order, so both backends and the scalar path agree bit for bit
on the same inputs.
"""

import numpy as np

from ._accel import helper, kernel


@helper
def curve_value(x, xs, ys, n, default):
    if n == 0:
        return default
    if x <= xs[0]:
        return ys[0]
    for i in range(1, n):
        if x <= xs[i]:
            return ys[i - 1] + (ys[i] - ys[i - 1]) * (x - xs[i - 1]) / (xs[i] - xs[i - 1])
    return ys[n - 1]


@helper
def decay(q, theta, floor):
    decayed = q * (1.0 - theta)
    lim = q if q < floor else floor
    return decayed if decayed > lim else lim


@kernel
def charger_step(actions, conn_ev, dt,
                 p_ch, p_dis, eta_c, ceff_x, ceff_y, ceff_n,
                 q, cap0, cap, p_nom, pc_x, pc_y, pc_n, eta_rt, theta, floor,
                 throughput, degr, min_cap,
                 out_requested, out_energy, out_supplied, out_delta, out_pmin, out_pmax):
    """Advance every battery by one step.

    Batteries behind a connected charger take the (already range-checked)
    action; all others only lose ``theta`` to thermal decay. ``q``, ``cap`` and
    ``throughput`` are updated in place.
    """
    n_ev = q.shape[0]
    served = np.zeros(n_ev, dtype=np.bool_)
    for c in range(conn_ev.shape[0]):
        e = conn_ev[c]
        if e < 0:
            out_requested[c] = 0.0
            out_energy[c] = 0.0
            out_supplied[c] = 0.0
            out_delta[c] = 0.0
            out_pmin[c] = 0.0
            out_pmax[c] = 0.0
            continue
        served[e] = True
        q_prev = q[e]
        p_bat = p_nom[e] * curve_value(q_prev / cap0[e], pc_x[e], pc_y[e], pc_n[e], 1.0)
        pmax = p_ch[c] if p_ch[c] < p_bat else p_bat
        pmin = -(p_dis[c] if p_dis[c] < p_bat else p_bat)
        out_pmin[c] = pmin
        out_pmax[c] = pmax

        a = actions[c]
        if a >= 0:
            requested = a * p_ch[c] * dt
        else:
            requested = a * p_dis[c] * dt
        out_requested[c] = requested
        lo = pmin * dt
        hi = pmax * dt
        cons = requested
        if cons < lo:
            cons = lo
        if cons > hi:
            cons = hi

        eta = eta_c[c]
        if ceff_n[c] > 0 and cons != 0.0:
            nominal = p_ch[c] if cons > 0 else p_dis[c]
            if nominal > 0:
                eta = curve_value(abs(cons) / (nominal * dt), ceff_x[c], ceff_y[c], ceff_n[c], eta)
        if cons >= 0:
            supplied = eta * cons
        else:
            supplied = cons / eta

        carried = decay(q_prev, theta[e], floor[e])
        limit = p_bat * dt
        if supplied >= 0:
            intake = supplied if supplied < limit else limit
            target = carried + intake * eta_rt[e]
            if target <= cap[e] and supplied <= limit:
                q_new = target
                realized = supplied
            else:
                q_new = target if target < cap[e] else cap[e]
                keep = carried if carried < cap[e] else cap[e]
                if q_new < keep:
                    q_new = keep
                realized = (q_new - carried) / eta_rt[e]
            step_thr = realized
        else:
            drawn = supplied if supplied > -limit else -limit
            target = carried + drawn / eta_rt[e]
            if target >= floor[e] and supplied >= -limit:
                q_new = target
                realized = supplied
            else:
                q_new = target if target > floor[e] else floor[e]
                if q_new > carried:
                    q_new = carried
                realized = -(carried - q_new) * eta_rt[e]
            step_thr = -realized

        if realized == supplied:
            metered = cons
        elif supplied >= 0:
            metered = realized / eta
        else:
            metered = realized * eta

        throughput[e] += step_thr
        if degr[e] > 0:
            faded = cap0[e] * (1.0 - degr[e] * throughput[e] / cap0[e])
            lowest = min_cap[e] * cap0[e]
            cap[e] = faded if faded > lowest else lowest
            if q_new > cap[e]:
                q_new = cap[e]
        q[e] = q_new
        out_energy[c] = metered
        out_supplied[c] = realized
        out_delta[c] = q_new - q_prev

    for e in range(n_ev):
        if not served[e]:
            q[e] = decay(q[e], theta[e], floor[e])


@kernel
def daily_peaks(e, steps_per_day):
    """Max of each day-long chunk; a trailing partial day counts as a day."""
    n = e.shape[0]
    n_days = (n + steps_per_day - 1) // steps_per_day
    out = np.empty(n_days)
    for d in range(n_days):
        lo = d * steps_per_day
        hi = min(lo + steps_per_day, n)
        m = e[lo]
        for i in range(lo + 1, hi):
            if e[i] > m:
                m = e[i]
        out[d] = m
    return out


@kernel
def ramping(e):
    total = 0.0
    for i in range(1, e.shape[0]):
        total += abs(e[i] - e[i - 1])
    return total


@kernel
def period_one_minus_load_factor(e, period_ids):
    """``1 - mean/max`` per run of equal ``period_ids``; 0 where max <= 0."""
    n = e.shape[0]
    out = []
    lo = 0
    while lo < n:
        hi = lo
        s = 0.0
        m = e[lo]
        while hi < n and period_ids[hi] == period_ids[lo]:
            s += e[hi]
            if e[hi] > m:
                m = e[hi]
            hi += 1
        if m > 0:
            out.append(1.0 - (s / (hi - lo)) / m)
        else:
            out.append(0.0)
        lo = hi
    return np.array(out)


@kernel
def sanitize_actions(a, conn_ev, lo, hi, flags):
    """Clamp out-of-range actions (NaN becomes 0) and zero actions on idle chargers.

    Works in place on ``a`` and ``flags``; returns how many actions were out
    of range before clamping.
    """
    bad = 0
    for c in range(a.shape[0]):
        x = a[c]
        if not (x >= lo and x <= hi):
            bad += 1
            flags[c] |= 2
            if x != x:
                x = 0.0
            elif x < lo:
                x = lo
            else:
                x = hi
        if conn_ev[c] < 0 and x != 0.0:
            flags[c] |= 1
            x = 0.0
        a[c] = x
    return bad


@kernel
def meter(energy, requested, charger_building, exogenous_t, net, flags):
    """Building net electricity for one step; flags chargers whose request was trimmed."""
    for b in range(net.shape[0]):
        net[b] = exogenous_t[b]
    for c in range(energy.shape[0]):
        net[charger_building[c]] += energy[c]
        if abs(requested[c] - energy[c]) > 1e-9:
            flags[c] |= 4


@kernel
def step_violations(q, floor, cap, conn_ev, energy, pmin, pmax, dt, load_t, pv_t, charger_building, net, tol):
    """Bitmask of failed invariants after a step.

    1: stored energy outside [floor, capacity]; 2: realized power outside
    the slice bounds, or energy through an idle charger; 4: building net
    differs from load - PV + charger consumption (recomputed here per
    building rather than per charger).
    """
    out = 0
    for e in range(q.shape[0]):
        if q[e] < floor[e] - tol or q[e] > cap[e] + tol:
            out |= 1
    for c in range(energy.shape[0]):
        if conn_ev[c] < 0:
            if energy[c] != 0.0:
                out |= 2
        else:
            p = energy[c] / dt
            if p < pmin[c] - tol or p > pmax[c] + tol:
                out |= 2
    for b in range(net.shape[0]):
        s = 0.0
        for c in range(energy.shape[0]):
            if charger_building[c] == b:
                s += energy[c]
        if abs(load_t[b] - pv_t[b] + s - net[b]) > tol:
            out |= 4
    return out


@kernel
def observe(row, conn_ev, q, cap0, s_state, s_charger, s_dep, s_req, s_arr, s_soca, obs):
    """Fill the (n_chargers, 6) observation matrix for schedule column ``row``.

    A connected EV fills state 1 fields. An empty charger shows the lowest
    numbered EV heading to it (state 2), otherwise all sentinels.
    """
    n_c = obs.shape[0]
    for c in range(n_c):
        e = conn_ev[c]
        if e >= 0:
            obs[c, 0] = 1.0
            obs[c, 1] = q[e] / cap0[e]
            d = s_dep[e, row]
            obs[c, 2] = d if d >= 0 else -1.0
            r = s_req[e, row]
            obs[c, 3] = -1.0 if r != r else r
        else:
            obs[c, 0] = 0.0
            obs[c, 1] = -1.0
            obs[c, 2] = -1.0
            obs[c, 3] = -1.0
        obs[c, 4] = -1.0
        obs[c, 5] = -1.0
    for e in range(s_state.shape[0] - 1, -1, -1):
        if s_state[e, row] != 2:
            continue
        c = s_charger[e, row]
        if c < 0 or conn_ev[c] >= 0:
            continue
        obs[c, 0] = 2.0
        a = s_arr[e, row]
        obs[c, 4] = a if a >= 0 else -1.0
        s = s_soca[e, row]
        obs[c, 5] = -1.0 if s != s else s


@kernel
def observation_violations(obs, tol):
    """Number of rows breaking the sentinel rules for their state."""
    bad = 0
    for c in range(obs.shape[0]):
        s = obs[c, 0]
        ok = True
        if s == 0.0:
            for k in range(1, 6):
                if obs[c, k] != -1.0:
                    ok = False
        elif s == 1.0:
            if obs[c, 4] != -1.0 or obs[c, 5] != -1.0:
                ok = False
            if obs[c, 1] < 0.0 or obs[c, 1] > 1.0 + tol:
                ok = False
        elif s == 2.0:
            for k in range(1, 4):
                if obs[c, k] != -1.0:
                    ok = False
        else:
            ok = False
        if not ok:
            bad += 1
    return bad


@kernel
def record_row(row, t, month, hour, price, carbon, load_t, pv_t, net, rewards,
               obs, a, energy, pmin, pmax, flags):
    """Write one trace row (column layout of ``EvChargingEnv.trace_columns``)."""
    row[0] = t
    row[1] = month
    row[2] = hour
    row[3] = price
    row[4] = carbon
    total = 0.0
    for b in range(net.shape[0]):
        total += net[b]
    row[5] = total
    k = 6
    for b in range(net.shape[0]):
        row[k] = load_t[b]
        row[k + 1] = pv_t[b]
        row[k + 2] = net[b]
        row[k + 3] = rewards[b]
        k += 4
    for c in range(a.shape[0]):
        row[k] = obs[c, 0]
        row[k + 1] = obs[c, 1]
        row[k + 2] = obs[c, 3]
        row[k + 3] = a[c]
        row[k + 4] = energy[c]
        row[k + 5] = pmin[c]
        row[k + 6] = pmax[c]
        row[k + 7] = flags[c]
        k += 8
