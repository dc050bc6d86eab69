"""Independent reference implementations used by the tests.

Nothing here imports evgrid's model code; each function is written straight
from the model equations in plain python so the package can be checked
against it.
"""

import math


def pwl(x, pts):
    """Piecewise-linear interpolation, flat outside the breakpoints."""
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    if x <= xs[0]:
        return ys[0]
    if x >= xs[-1]:
        return ys[-1]
    k = 0
    while xs[k + 1] < x:
        k += 1
    w = (x - xs[k]) / (xs[k + 1] - xs[k])
    return ys[k] * (1 - w) + ys[k + 1] * w


def carried_energy(q, theta, floor):
    # thermal loss, but never below the DoD floor (or below q if q already sits under it)
    return max(q * (1 - theta), min(q, floor))


def charge_step(c_t, q_prev, theta, q_in, p_dt, eta_rt, floor=0.0):
    return min(c_t, carried_energy(q_prev, theta, floor) + min(q_in, p_dt) * eta_rt)


def discharge_step(c0, dod, q_prev, theta, q_out, p_dt, eta_rt):
    floor = c0 * (1 - dod)
    return max(floor, carried_energy(q_prev, theta, floor) + max(q_out, -p_dt) / eta_rt)


def battery_step(q_supplied, *, c0, c_t, q_prev, theta, p_dt, eta_rt, dod):
    if q_supplied >= 0:
        return charge_step(c_t, q_prev, theta, q_supplied, p_dt, eta_rt, c0 * (1 - dod))
    return discharge_step(c0, dod, q_prev, theta, q_supplied, p_dt, eta_rt)


def full_step(action, *, p_ch, p_dis, eta_c, c0, c_t, q_prev, p_nom, f, theta, eta_rt, dod, dt):
    """Action -> stored energy after one step, with the charger power held in its slice.

    ``f`` is the power-curve fraction at the current SoC.
    """
    p_bat = p_nom * f
    e = action * (p_ch if action >= 0 else p_dis) * dt
    e = min(max(e, -min(p_dis, p_bat) * dt), min(p_ch, p_bat) * dt)
    q = e * eta_c if e >= 0 else e / eta_c
    return battery_step(q, c0=c0, c_t=c_t, q_prev=q_prev, theta=theta, p_dt=p_bat * dt,
                        eta_rt=eta_rt, dod=dod)


# --------------------------------------------------------------------- KPIs

def kpi_consumption(e):
    total = 0.0
    for x in e:
        if x > 0:
            total += x
    return total


def kpi_cost(e, price):
    total = 0.0
    for x, p in zip(e, price):
        if x > 0:
            total += x * p
    return total


def kpi_ramping(e):
    total = 0.0
    for i in range(1, len(e)):
        total += abs(e[i] - e[i - 1])
    return total


def kpi_daily_peak(e, per_day):
    peaks = []
    for start in range(0, len(e), per_day):
        peaks.append(max(e[start:start + per_day]))
    return sum(peaks) / len(peaks)


def kpi_one_minus_load_factor(e, period):
    vals = []
    for start in range(0, len(e), period):
        chunk = e[start:start + period]
        m = max(chunk)
        vals.append(0.0 if m <= 0 else 1 - (sum(chunk) / len(chunk)) / m)
    return sum(vals) / len(vals)


def kpi_zero_net(e, demand):
    d = kpi_consumption(e)
    s = sum(demand)
    return d / s if s > 0 else 0.0


def close(a, b, tol=1e-9):
    return math.isclose(a, b, rel_tol=0, abs_tol=tol)
