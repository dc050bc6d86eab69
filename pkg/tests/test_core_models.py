import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evgrid import kernels
from evgrid._accel import HAVE_NUMBA, pick
from evgrid.core_models import (
    Charger, EvBattery, ModeViolation, SimulationMode, battery_charge, battery_discharge, battery_max_power,
    battery_soc, battery_update, charge_discharge, charger_consumption, charger_id, degrade_capacity,
    idle_step, parse_charger_id, supplied_energy,
)

import oracles

V2G, G2V, NC = SimulationMode.V2G, SimulationMode.G2V, SimulationMode.NO_CONTROL


def charger(p_ch=22.0, p_dis=0.0, eta=1.0, curve=None):
    return Charger("1", 1, 1, p_ch, p_dis, eta, curve)


def battery(c0=40.0, q=10.0, p=10.0, eta=1.0, theta=0.0, dod=1.0, **kw):
    return EvBattery(c0, p, q, round_trip_efficiency=eta, thermal_loss_coefficient=theta,
                     depth_of_discharge=dod, **kw)


# ------------------------------------------------------------ charger model

def test_consumption_half_action_on_22kw():
    assert charger_consumption(0.5, charger(22.0), V2G, 1.0) == 11.0


def test_consumption_zero_action():
    assert charger_consumption(0.0, charger(22.0, 11.0), V2G) == 0.0


def test_consumption_discharge_quarter():
    assert math.isclose(charger_consumption(-0.25, charger(7.4, 7.4), V2G, 1.0), -1.85, abs_tol=1e-12)


@pytest.mark.parametrize("mode", [G2V, NC])
def test_negative_action_outside_v2g_rejected(mode):
    with pytest.raises(ModeViolation):
        charger_consumption(-0.1, charger(7.4, 7.4), mode)


def test_for_mode_zeroes_discharge():
    c = charger(7.4, 7.4)
    assert c.for_mode(G2V).nominal_power_discharging == 0.0
    assert c.for_mode(NC).nominal_power_discharging == 0.0
    assert c.for_mode(V2G).nominal_power_discharging == 7.4


def test_supplied_energy_examples():
    assert math.isclose(supplied_energy(11.0, charger(eta=0.95)), 10.45, abs_tol=1e-12)
    assert supplied_energy(0.0, charger(eta=0.7)) == 0.0
    assert supplied_energy(-1.85, charger(eta=1.0)) == -1.85


def test_supplied_energy_curve_interpolates_load_fraction():
    c = charger(10.0, 10.0, 0.9, curve=((0.0, 0.8), (1.0, 1.0)))
    # half load -> efficiency 0.9
    assert math.isclose(supplied_energy(5.0, c), 4.5, abs_tol=1e-12)


def test_charger_id_round_trip():
    assert charger_id(3, 2, 1) == "EVC_3_2_1"
    assert parse_charger_id("EVC_3_2_1") == ("3", 2, 1)
    with pytest.raises(ValueError):
        parse_charger_id("charger-1")


@given(st.floats(0, 1), st.floats(0.1, 50))
def test_consumption_odd_symmetric(a, p):
    c = charger(p, p)
    assert charger_consumption(-a, c, V2G) == -charger_consumption(a, c, V2G)


# ------------------------------------------------------------ battery model

def test_max_power_examples():
    assert battery_max_power(battery(p=7.4)) == 7.4
    curve = ((0.0, 1.0), (0.8, 1.0), (1.0, 0.0))
    assert math.isclose(battery_max_power(battery(p=7.4, q=36.0, power_curve=curve)), 3.7, abs_tol=1e-12)
    assert battery_max_power(battery(p=7.4, q=40.0, power_curve=curve)) == 0.0


def test_charge_examples():
    assert math.isclose(battery_charge(battery(q=10, eta=0.9), 5.0).stored_energy, 14.5, abs_tol=1e-12)
    assert battery_charge(battery(q=39, eta=1.0), 5.0).stored_energy == 40.0
    assert battery_charge(battery(q=10), 0.0).stored_energy == 10.0


def test_discharge_examples():
    b = battery(q=10, dod=0.9)
    assert math.isclose(battery_discharge(b, -5.0).stored_energy, 5.0, abs_tol=1e-12)
    assert math.isclose(battery_discharge(battery(q=5, dod=0.9), -10.0).stored_energy, 4.0, abs_tol=1e-12)
    assert math.isclose(battery_discharge(battery(q=10, p=6.0, dod=0.9), -20.0).stored_energy, 4.0,
                        abs_tol=1e-12)


def test_throughput_counts_realized_intake():
    b = battery_charge(battery(q=39, eta=1.0), 5.0)
    assert math.isclose(b.cumulative_throughput, 1.0, abs_tol=1e-12)


def test_soc_examples():
    assert battery_soc(battery(q=20)) == 0.5
    assert battery_soc(battery(q=0)) == 0.0
    assert battery_soc(battery(q=40)) == 1.0


def test_degradation_examples():
    assert degrade_capacity(battery(cumulative_throughput=1e4)) == 40.0
    b = battery(cumulative_throughput=400.0, degradation_coefficient=1e-4)
    assert math.isclose(degrade_capacity(b), 39.96, abs_tol=1e-12)
    assert degrade_capacity(battery(degradation_coefficient=1e-4)) == 40.0


def test_degradation_floor():
    b = battery(cumulative_throughput=1e6, degradation_coefficient=1e-3, min_capacity_fraction=0.7)
    assert degrade_capacity(b) == 28.0


def test_thermal_loss_on_idle_step_stops_at_floor():
    b = battery(q=4.1, theta=0.5, dod=0.9)
    assert idle_step(b).stored_energy == b.floor_energy
    assert idle_step(battery(q=20, theta=0.1)).stored_energy == 18.0


def test_charge_discharge_meters_eleven_kwh():
    b = EvBattery(100.0, 50.0, 20.0)
    _, tr = charge_discharge(charger(22.0, 22.0), b, 0.5, V2G, 1.0)
    assert tr.charger_consumption == 11.0
    assert tr.supplied_energy == 11.0


def test_charge_discharge_holds_power_in_slice():
    b = EvBattery(40.0, 3.0, 20.0)
    _, tr = charge_discharge(charger(22.0, 22.0), b, 1.0, V2G)
    assert tr.charger_consumption == 3.0


def test_charge_discharge_at_floor_exports_nothing():
    b = EvBattery(40.0, 7.4, 0.0, depth_of_discharge=0.9).with_soc(0.0)
    new, tr = charge_discharge(charger(7.4, 7.4), b, -1.0, V2G)
    assert new.stored_energy == b.floor_energy
    assert tr.charger_consumption == 0.0


# ---------------------------------------------------------------- properties

params = st.fixed_dictionaries({
    "c0": st.floats(10, 100), "p": st.floats(1, 50), "eta": st.floats(0.5, 1.0),
    "theta": st.floats(0, 0.05), "dod": st.floats(0.1, 1.0), "soc": st.floats(0, 1),
    "p_ch": st.floats(0, 50), "p_dis": st.floats(0, 50), "eta_c": st.floats(0.5, 1.0),
})


def make(pr):
    b = EvBattery(pr["c0"], pr["p"], 0.0, round_trip_efficiency=pr["eta"],
                  thermal_loss_coefficient=pr["theta"], depth_of_discharge=pr["dod"]).with_soc(pr["soc"])
    return b, Charger("1", 1, 1, pr["p_ch"], pr["p_dis"], pr["eta_c"])


@settings(max_examples=300)
@given(params, st.floats(-1, 1))
def test_update_matches_oracle(pr, a):
    b, c = make(pr)
    new, tr = charge_discharge(c, b, a, V2G)
    want = oracles.full_step(a, p_ch=c.nominal_power_charging, p_dis=c.nominal_power_discharging,
                             eta_c=c.technical_efficiency, c0=b.capacity_initial, c_t=b.capacity_current,
                             q_prev=b.stored_energy, p_nom=b.nominal_power, f=1.0,
                             theta=b.thermal_loss_coefficient, eta_rt=b.round_trip_efficiency,
                             dod=b.depth_of_discharge, dt=1.0)
    assert abs(new.stored_energy - want) <= 1e-9


@settings(max_examples=300)
@given(params, st.floats(-60, 60))
def test_battery_update_matches_oracle(pr, q):
    b, _ = make(pr)
    got = battery_update(b, q).stored_energy
    want = oracles.battery_step(q, c0=b.capacity_initial, c_t=b.capacity_current, q_prev=b.stored_energy,
                                theta=b.thermal_loss_coefficient, p_dt=b.nominal_power,
                                eta_rt=b.round_trip_efficiency, dod=b.depth_of_discharge)
    assert abs(got - want) <= 1e-9


@settings(max_examples=200)
@given(params, st.floats(0, 60))
def test_round_trip_never_gains_energy(pr, q):
    b, _ = make(pr)
    pr_theta0 = EvBattery(b.capacity_initial, b.nominal_power, b.stored_energy,
                          round_trip_efficiency=min(b.round_trip_efficiency, 0.99),
                          depth_of_discharge=b.depth_of_discharge)
    up = battery_charge(pr_theta0, q)
    intake = up.cumulative_throughput
    if intake > 0:
        down = battery_discharge(up, -intake)
        assert down.stored_energy <= pr_theta0.stored_energy + 1e-12


def test_band_holds_over_random_sequences():
    rng = np.random.default_rng(3)
    bad = 0
    for run in range(100):
        c0 = rng.uniform(10, 100)
        b = EvBattery(c0, rng.uniform(1, 30), 0.0, round_trip_efficiency=rng.uniform(0.6, 1),
                      thermal_loss_coefficient=rng.uniform(0, 0.02), depth_of_discharge=rng.uniform(0.2, 1),
                      power_curve=((0.0, 1.0), (0.8, 1.0), (1.0, rng.uniform(0, 1))),
                      degradation_coefficient=rng.choice([0.0, 1e-3]), min_capacity_fraction=0.6,
                      ).with_soc(rng.uniform())
        c = Charger("1", 1, 1, rng.uniform(0, 30), rng.uniform(0, 30), rng.uniform(0.7, 1))
        for a in rng.uniform(-1, 1, 1000):
            b, _ = charge_discharge(c, b, float(a), V2G)
            if not (b.floor_energy - 1e-9 <= b.stored_energy <= b.capacity_current + 1e-9):
                bad += 1
            if not 0.0 <= battery_soc(b) <= 1.0:
                bad += 1
            if b.capacity_current > b.capacity_initial:
                bad += 1
    assert bad == 0


@given(params, st.floats(-1, 1))
def test_transfer_signs_agree(pr, a):
    b, c = make(pr)
    _, tr = charge_discharge(c, b, a, V2G)
    assert (tr.charger_consumption > 0) == (tr.supplied_energy > 0)
    assert (tr.charger_consumption < 0) == (tr.supplied_energy < 0)


# ----------------------------------------------------- kernels vs scalar path

def _kernel_step(fn, c, b, a):
    one = lambda v: np.array([v], dtype=float)  # noqa: E731
    z = np.zeros
    q, cap, thr = one(b.stored_energy), one(b.capacity_current), one(b.cumulative_throughput)
    curve = b.power_curve
    outs = [z(1) for _ in range(6)]
    fn(one(a), np.array([0]), 1.0, one(c.nominal_power_charging), one(c.nominal_power_discharging),
       one(c.technical_efficiency), z((1, 1)), z((1, 1)), np.zeros(1, dtype=np.int64),
       q, one(b.capacity_initial), cap, one(b.nominal_power),
       np.array([[p[0] for p in curve]]), np.array([[p[1] for p in curve]]), np.array([len(curve)]),
       one(b.round_trip_efficiency), one(b.thermal_loss_coefficient), one(b.floor_energy), thr,
       one(b.degradation_coefficient), one(b.min_capacity_fraction), *outs)
    return q[0], cap[0], outs[1][0], outs[2][0]


@pytest.mark.parametrize("use_numba", [False] + ([True] if HAVE_NUMBA else []))
@settings(max_examples=200, deadline=None)
@given(pr=params, a=st.floats(-1, 1), degr=st.sampled_from([0.0, 1e-3]))
def test_kernel_matches_scalar_bit_for_bit(use_numba, pr, a, degr):
    b, c = make(pr)
    b = EvBattery(b.capacity_initial, b.nominal_power, b.stored_energy,
                  round_trip_efficiency=b.round_trip_efficiency,
                  thermal_loss_coefficient=b.thermal_loss_coefficient, depth_of_discharge=b.depth_of_discharge,
                  power_curve=((0.0, 1.0), (0.7, 1.0), (1.0, 0.2)), degradation_coefficient=degr,
                  cumulative_throughput=50.0 * (degr > 0), min_capacity_fraction=0.5)
    new, tr = charge_discharge(c, b, a, V2G)
    q, cap, energy, supplied = _kernel_step(pick(kernels.charger_step, use_numba), c, b, a)
    assert q == new.stored_energy
    assert cap == new.capacity_current
    assert energy == tr.charger_consumption
    assert supplied == tr.supplied_energy


def test_capacity_below_floor_discharge_keeps_energy():
    # degraded capacity under the DoD floor: discharging cannot lift energy up to the floor
    b = EvBattery(40.0, 7.4, 3.0, capacity_current=3.0, depth_of_discharge=0.9)
    new, tr = charge_discharge(charger(7.4, 7.4), b, -1.0, V2G)
    assert new.stored_energy == 3.0 and tr.charger_consumption == 0.0
