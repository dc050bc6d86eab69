"""Step/reset simulation of chargers, EVs and building loads.

Each :meth:`EvChargingEnv.step` runs, in order: exogenous building series for
step ``t``; the charger/battery update for every connected EV; ``t += 1``;
:meth:`advance_ems`, which plugs EVs in and out according to their
schedules; then new observations and rewards.
"""

from __future__ import annotations

import csv
import datetime as dt
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import kernels
from ._accel import pick
from .config import ScenarioConfig, schedule_arrays
from .core_models import Charger, EvBattery, SimulationMode, interpolate_curve
from .flexoffer import FlexOffer, Slice

OBS_FIELDS = ("state", "soc", "est_departure", "req_soc_departure", "est_arrival", "est_soc_arrival")

STATE_EMPTY, STATE_CONNECTED, STATE_INCOMING = 0, 1, 2

FLAG_IDLE_ACTION = 1
FLAG_CLAMPED = 2
FLAG_BOUNDED = 4

SHORTFALL_TOL = 1e-6
_EPS = 1e-9


class ActionError(ValueError):
    """Wrong number of actions, or an out-of-range action in strict mode."""


class InvariantViolation(RuntimeError):
    """A runtime invariant failed while ``strict`` was set."""


@dataclass(frozen=True)
class ChargerObservation:
    state: int
    soc: float = -1.0
    est_departure: float = -1.0
    req_soc_departure: float = -1.0
    est_arrival: float = -1.0
    est_soc_arrival: float = -1.0

    @classmethod
    def from_vector(cls, v) -> "ChargerObservation":
        return cls(int(v[0]), *(float(x) for x in v[1:]))

    def as_tuple(self):
        return (self.state, self.soc, self.est_departure, self.req_soc_departure,
                self.est_arrival, self.est_soc_arrival)


@dataclass(frozen=True)
class ConnectionEvent:
    t: int
    kind: str  # "connect", "disconnect" or "deferred"
    ev: str
    charger: str
    soc: float
    required_soc: float = float("nan")
    shortfall: float = 0.0
    feasible: bool = False


@dataclass
class StepResult:
    t: int
    observations: np.ndarray
    net_electricity: np.ndarray
    rewards: np.ndarray
    done: bool
    requested: np.ndarray
    consumption: np.ndarray
    supplied: np.ndarray
    battery_delta: np.ndarray
    flags: np.ndarray
    events: List[ConnectionEvent] = field(default_factory=list)


def _natural_key(name):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", name)]


def _pad_curves(curves, default_n=0):
    k = max([len(c) for c in curves if c] + [1])
    xs = np.zeros((len(curves), k))
    ys = np.zeros((len(curves), k))
    n = np.zeros(len(curves), dtype=np.int64)
    for i, c in enumerate(curves):
        if not c:
            continue
        n[i] = len(c)
        xs[i, :len(c)] = [p[0] for p in c]
        ys[i, :len(c)] = [p[1] for p in c]
    return xs, ys, n


def _is_flat(curve):
    return all(y == 1.0 for _, y in curve)


class EvChargingEnv:
    """Discrete-time EV charging environment over one scenario.

    ``check_invariants`` verifies after every step that SoC stays in its band,
    observations respect the sentinel rules, realized charger power lies in
    the step's slice bounds and building metering adds up. Failures are
    counted in ``violations``; with ``strict=True`` they raise
    :class:`InvariantViolation` and out-of-range actions raise
    :class:`ActionError` instead of being clamped.
    """

    def __init__(self, config: ScenarioConfig, *, strict: bool = False, check_invariants: bool = True,
                 use_numba: Optional[bool] = None, record_trace: bool = True):
        self.config = config
        self.mode = SimulationMode.parse(config.mode)
        self.dt = float(config.timestep_hours)
        self.horizon = int(config.horizon_steps)
        self.strict = strict
        self.check_invariants = check_invariants
        self.record_trace = record_trace
        self._k = {name: pick(getattr(kernels, name), use_numba) for name in (
            "charger_step", "sanitize_actions", "meter", "step_violations", "observe",
            "observation_violations", "record_row")}

        self.buildings = [b.name for b in config.buildings]
        self.chargers: List[Charger] = [c.for_mode(self.mode) for b in config.buildings for c in b.chargers]
        self.charger_ids = [c.id for c in self.chargers]
        self._charger_index = {cid: i for i, cid in enumerate(self.charger_ids)}
        self.charger_building = np.array(
            [bi for bi, b in enumerate(config.buildings) for _ in b.chargers], dtype=np.int64)
        n_b, n_c = len(self.buildings), len(self.chargers)

        evs = sorted(config.evs, key=lambda ev: _natural_key(ev.name))
        self.ev_ids = [ev.name for ev in evs]
        self._evs = evs
        n_e = len(evs)
        n_cols = min([self.horizon + 1] + [len(ev.schedule) for ev in evs]) if evs else self.horizon + 1
        self._sched = schedule_arrays(evs, self._charger_index, n_cols)
        self._sched_cols = n_cols
        S = self._sched
        # steps at which some EV changes state or charger, or reports an arrival estimate
        changed = np.zeros(n_cols, dtype=bool)
        changed[0] = True
        if n_e:
            changed[1:] = np.any((S.state[:, 1:] != S.state[:, :-1]) | (S.charger[:, 1:] != S.charger[:, :-1]),
                                 axis=0)
            changed |= np.any(S.state == STATE_INCOMING, axis=0)
        self._ems_steps = changed

        self.load = np.array([b.load[:self.horizon] for b in config.buildings]).reshape(n_b, self.horizon)
        self.pv = np.array([b.pv[:self.horizon] for b in config.buildings]).reshape(n_b, self.horizon)
        self.exogenous = self.load - self.pv
        # step-major copies so each step reads one contiguous row
        self._load_t = np.ascontiguousarray(self.load.T)
        self._pv_t = np.ascontiguousarray(self.pv.T)
        self._exo_t = np.ascontiguousarray(self.exogenous.T)
        self.price = np.asarray(config.price[:self.horizon], dtype=float)
        self.carbon = np.asarray(config.carbon[:self.horizon], dtype=float)
        times = np.datetime64(config.calendar_start, "s") + (
            np.arange(self.horizon + 1) * self.dt * 3600).astype("timedelta64[s]")
        self.month = (times.astype("datetime64[M]").astype(np.int64) % 12 + 1)
        self.hour = ((times - times.astype("datetime64[D]")).astype(np.int64) // 3600 + 1)

        # charger parameters
        self.p_ch = np.array([c.nominal_power_charging for c in self.chargers], dtype=float)
        self.p_dis = np.array([c.nominal_power_discharging for c in self.chargers], dtype=float)
        self.eta_c = np.array([c.technical_efficiency for c in self.chargers], dtype=float)
        self.ceff_x, self.ceff_y, self.ceff_n = _pad_curves([c.efficiency_curve for c in self.chargers])

        # battery parameters
        bats: List[EvBattery] = [ev.battery for ev in evs]
        self.cap0 = np.array([b.capacity_initial for b in bats], dtype=float)
        self.p_nom = np.array([b.nominal_power for b in bats], dtype=float)
        self.eta_rt = np.array([b.round_trip_efficiency for b in bats], dtype=float)
        self.theta = np.array([b.thermal_loss_coefficient for b in bats], dtype=float)
        self.floor = np.array([b.floor_energy for b in bats], dtype=float)
        self.degr = np.array([b.degradation_coefficient for b in bats], dtype=float)
        self.min_cap = np.array([b.min_capacity_fraction for b in bats], dtype=float)
        self.pc_x, self.pc_y, self.pc_n = _pad_curves(
            [None if _is_flat(b.power_curve) else b.power_curve for b in bats])
        self._initial_soc = np.array([ev.initial_soc for ev in evs], dtype=float)

        self._trace_columns = self._build_trace_columns()
        self.t = 0
        self._ready = False
        self.q = np.zeros(n_e)

    # ------------------------------------------------------------------ sizes

    @property
    def n_chargers(self) -> int:
        return len(self.chargers)

    @property
    def n_evs(self) -> int:
        return len(self.ev_ids)

    @property
    def done(self) -> bool:
        return self.t >= self.horizon

    @property
    def action_range(self):
        return self.mode.action_range

    # ------------------------------------------------------------------ reset

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        seed = self.config.seed if seed is None else int(seed)
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        n_e, n_c, n_b = self.n_evs, self.n_chargers, len(self.buildings)
        self.t = 0
        self.cap = self.cap0.copy()
        self.q = np.minimum(np.maximum(self._initial_soc * self.cap0, self.floor), self.cap)
        self.throughput = np.zeros(n_e)
        self.conn_ev = np.full(n_c, -1, dtype=np.int64)
        self.ev_conn = np.full(n_e, -1, dtype=np.int64)
        self._pending_soc = np.full(n_e, np.nan)
        self._feasible = np.zeros(n_e, dtype=bool)
        self._fo_open: Dict[int, list] = {}
        self._deferred = 0
        self.flexoffer_log: List[tuple] = []
        self.events: List[ConnectionEvent] = []
        self.violations: List[str] = []
        self._prev_net = None
        self._net_hist = np.zeros((self.horizon, n_b))
        self._charge_hist = np.zeros(self.horizon)
        if self.record_trace:
            self._trace = np.zeros((self.horizon, len(self._trace_columns)))
        self._out = {k: np.zeros(n_c) for k in ("requested", "energy", "supplied", "delta", "pmin", "pmax")}
        self._ready = True
        self.advance_ems()
        self._obs = self._observe_all()
        if self.check_invariants:
            self._check_observations(self._obs)
        return self._obs.copy()

    # ------------------------------------------------------------------- step

    def step(self, actions) -> StepResult:
        if not self._ready:
            raise RuntimeError("call reset() before step()")
        if self.done:
            raise RuntimeError("episode is over; call reset()")
        a = np.array(actions, dtype=float).reshape(-1)
        n_c = self.n_chargers
        if a.size != n_c:
            raise ActionError(f"expected {n_c} actions, got {a.size}")
        K = self._k
        flags = np.zeros(n_c, dtype=np.int64)
        lo, hi = self.mode.action_range
        if self.strict:
            bad = ~((a >= lo) & (a <= hi))
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise ActionError(f"action {a[i]} for {self.charger_ids[i]} outside [{lo}, {hi}]")
        K["sanitize_actions"](a, self.conn_ev, lo, hi, flags)

        t = self.t
        obs_before = self._obs
        out = self._out
        K["charger_step"](
            a, self.conn_ev, self.dt,
            self.p_ch, self.p_dis, self.eta_c, self.ceff_x, self.ceff_y, self.ceff_n,
            self.q, self.cap0, self.cap, self.p_nom, self.pc_x, self.pc_y, self.pc_n,
            self.eta_rt, self.theta, self.floor, self.throughput, self.degr, self.min_cap,
            out["requested"], out["energy"], out["supplied"], out["delta"], out["pmin"], out["pmax"])
        energy = out["energy"]
        net = np.empty(len(self.buildings))
        K["meter"](energy, out["requested"], self.charger_building, self._exo_t[t], net, flags)
        self._net_hist[t] = net
        self._charge_hist[t] = np.maximum(energy, 0.0).sum()

        if self.check_invariants:
            code = K["step_violations"](self.q, self.floor, self.cap, self.conn_ev, energy, out["pmin"],
                                        out["pmax"], self.dt, self._load_t[t], self._pv_t[t],
                                        self.charger_building, net, _EPS)
            if code:
                self._step_failure(t, code)

        self.t = t + 1
        events = self.advance_ems()
        rewards = self._rewards(t, net, events)
        self._prev_net = net
        self._obs = self._observe_all()
        if self.check_invariants:
            self._check_observations(self._obs)
        if self.record_trace:
            K["record_row"](self._trace[t], t, self.month[t], self.hour[t], self.price[t], self.carbon[t],
                            self._load_t[t], self._pv_t[t], net, rewards, obs_before, a, energy,
                            out["pmin"], out["pmax"], flags)
        return StepResult(
            t=self.t, observations=self._obs.copy(), net_electricity=net, rewards=rewards,
            done=self.done, requested=out["requested"].copy(), consumption=energy.copy(),
            supplied=out["supplied"].copy(), battery_delta=out["delta"].copy(), flags=flags,
            events=events,
        )

    # ------------------------------------------------------------ connections

    def advance_ems(self) -> List[ConnectionEvent]:
        """Apply the schedules at the current ``t``: unplug leavers, plug in arrivals."""
        t = self.t
        if t >= self._sched_cols or not (self._ems_steps[t] or self._deferred):
            return []
        S = self._sched
        st = S.state[:, t]
        ch = S.charger[:, t]
        events: List[ConnectionEvent] = []

        incoming = st == STATE_INCOMING
        if incoming.any():
            est = S.est_soc_arrival[:, t]
            known = incoming & ~np.isnan(est)
            self._pending_soc[known] = est[known]

        connected = self.ev_conn >= 0
        leaving = connected & ((st != STATE_CONNECTED) | (ch != self.ev_conn))
        for e in np.flatnonzero(leaving):
            events.append(self._disconnect(int(e), t))

        wanting = (st == STATE_CONNECTED) & (ch >= 0) & (self.ev_conn != ch)
        self._deferred = 0
        for e in np.flatnonzero(wanting):
            e = int(e)
            c = int(ch[e])
            if self.conn_ev[c] >= 0:
                self._deferred += 1
                events.append(ConnectionEvent(t, "deferred", self.ev_ids[e], self.charger_ids[c],
                                              float(self.q[e] / self.cap0[e])))
                continue
            events.append(self._connect(e, c, t))
        if events:
            self.events.extend(events)
        return events

    def _connect(self, e, c, t):
        pending = self._pending_soc[e]
        if not np.isnan(pending):
            soc = pending
            std = self.config.arrival_soc_noise_std
            if std > 0:
                soc = truncated_normal(self.rng, pending, std, 0.0, 1.0)
            self.q[e] = min(max(soc * self.cap0[e], self.floor[e]), self.cap[e])
            self._pending_soc[e] = np.nan
        self.conn_ev[c] = e
        self.ev_conn[e] = c
        S = self._sched
        k = int(S.est_departure[e, t])
        req = float(S.req_soc[e, t])
        self._feasible[e] = k >= 0 and not np.isnan(req) and self._reachable(e, c, k + 1) >= req - SHORTFALL_TOL
        p_min, p_max = self._bounds_now(e, c)
        self._fo_open[e] = [self.ev_ids[e], self.charger_ids[c], t, (t + k + 1) if k >= 0 else None,
                            None if np.isnan(req) else req, p_min, p_max]
        return ConnectionEvent(t, "connect", self.ev_ids[e], self.charger_ids[c],
                               float(self.q[e] / self.cap0[e]), req, 0.0, bool(self._feasible[e]))

    def _disconnect(self, e, t):
        c = int(self.ev_conn[e])
        self.conn_ev[c] = -1
        self.ev_conn[e] = -1
        soc = float(self.q[e] / self.cap0[e])
        req = float(self._sched.req_soc[e, t - 1]) if t > 0 else float("nan")
        shortfall = 0.0 if np.isnan(req) else max(0.0, req - soc)
        fo = self._fo_open.pop(e, None)
        if fo is not None:
            n = (fo[3] - fo[2]) if fo[3] is not None else (t - fo[2])
            self.flexoffer_log.append(tuple(fo) + (n,))
        return ConnectionEvent(t, "disconnect", self.ev_ids[e], self.charger_ids[c], soc, req, shortfall,
                               bool(self._feasible[e]))

    def _power_fraction(self, e, soc):
        n = self.pc_n[e]
        return 1.0 if n == 0 else kernels.curve_value(soc, self.pc_x[e], self.pc_y[e], n, 1.0)

    def _bounds_now(self, e, c):
        p_bat = self.p_nom[e] * self._power_fraction(e, self.q[e] / self.cap0[e])
        return -min(self.p_dis[c], p_bat) + 0.0, min(self.p_ch[c], p_bat)

    def _reachable(self, e, c, steps):
        """SoC after ``steps`` steps at full charge from the current state."""
        q, cap, floor, theta, rt = self.q[e], self.cap[e], self.floor[e], self.theta[e], self.eta_rt[e]
        for _ in range(steps):
            p_bat = self.p_nom[e] * self._power_fraction(e, q / self.cap0[e])
            cons = min(self.p_ch[c], p_bat) * self.dt
            eta = self._eta(c, cons)
            carried = kernels.decay(q, theta, floor)
            q = min(cap, carried + min(eta * cons, p_bat * self.dt) * rt)
            if q >= cap:
                break
        return q / self.cap0[e]

    # ----------------------------------------------------------- observations

    def _observe_all(self) -> np.ndarray:
        obs = np.empty((self.n_chargers, 6))
        S = self._sched
        row = min(self.t, self._sched_cols - 1)
        self._k["observe"](row, self.conn_ev, self.q, self.cap0, S.state, S.charger, S.est_departure,
                           S.req_soc, S.est_arrival, S.est_soc_arrival, obs)
        return obs

    @property
    def observations(self) -> np.ndarray:
        return self._obs.copy()

    def observe(self, charger_id: str) -> ChargerObservation:
        return ChargerObservation.from_vector(self._obs[self._charger_index[charger_id]])

    def context(self) -> dict:
        """Exogenous values for the current step (price, carbon, calendar)."""
        t = min(self.t, self.horizon - 1)
        return {
            "t": self.t,
            "month": int(self.month[self.t]),
            "hour": int(self.hour[self.t]),
            "price": float(self.price[t]),
            "carbon_intensity": float(self.carbon[t]),
        }

    @property
    def current_price(self) -> float:
        return float(self.price[min(self.t, self.horizon - 1)])

    def _eta(self, c, cons):
        """Charger efficiency for a consumption of ``cons`` kWh in one step."""
        nominal = self.p_ch[c] if cons > 0 else self.p_dis[c]
        if self.ceff_n[c] == 0 or cons == 0 or nominal <= 0:
            return self.eta_c[c]
        return kernels.curve_value(abs(cons) / (nominal * self.dt), self.ceff_x[c], self.ceff_y[c],
                                   self.ceff_n[c], self.eta_c[c])

    def _min_fraction(self, e, lo, hi):
        """Smallest power-curve fraction over the SoC interval [lo, hi]."""
        f = min(self._power_fraction(e, lo), self._power_fraction(e, hi))
        for k in range(self.pc_n[e]):
            if lo < self.pc_x[e, k] < hi:
                f = min(f, self.pc_y[e, k])
        return f

    def soc_rates(self):
        """Per-charger SoC gain at full charge, drop at full discharge and standing loss.

        All three are conservative for deadline planning: ``gain`` uses the
        lowest battery power and charger efficiency on the way from the current
        SoC up to the required SoC; ``loss`` is the thermal loss per step at
        the higher of the two; ``drop`` includes this step's thermal loss.
        """
        gain = np.zeros(self.n_chargers)
        drop = np.zeros(self.n_chargers)
        loss = np.zeros(self.n_chargers)
        row = min(self.t, self._sched_cols - 1)
        for c in np.flatnonzero(self.conn_ev >= 0):
            e = self.conn_ev[c]
            soc = self.q[e] / self.cap0[e]
            req = self._sched.req_soc[e, row]
            top = soc if np.isnan(req) else max(soc, req)
            p_low = self.p_nom[e] * self._min_fraction(e, soc, top)
            cons = min(self.p_ch[c], p_low) * self.dt
            eta = self._eta(c, cons)
            if self.ceff_n[c]:
                # a partial action may run at a worse point of the efficiency curve
                eta = min(eta, self.ceff_y[c, :self.ceff_n[c]].min())
            intake = min(eta * cons, p_low * self.dt)
            gain[c] = intake * self.eta_rt[e] / self.cap0[e]
            loss[c] = self.theta[e] * top
            p_bat = self.p_nom[e] * self._power_fraction(e, soc)
            cons = min(self.p_dis[c], p_bat) * self.dt
            out = min(cons / self._eta(c, -cons), p_bat * self.dt) if cons > 0 else 0.0
            drop[c] = out / self.eta_rt[e] / self.cap0[e] + self.theta[e] * soc
        return gain, drop, loss

    def battery(self, ev_id: str) -> EvBattery:
        """Snapshot of one EV battery as a :class:`EvBattery`."""
        from dataclasses import replace
        e = self.ev_ids.index(ev_id)
        base = self._evs[e].battery
        return replace(base, stored_energy=float(self.q[e]), capacity_current=float(self.cap[e]),
                       cumulative_throughput=float(self.throughput[e]))

    # ----------------------------------------------------------------- reward

    def _rewards(self, t, net, events):
        w = self.config.reward
        imported = np.maximum(net, 0.0)
        prev = net if self._prev_net is None else self._prev_net
        r = -(w.cost * imported * self.price[t] + w.carbon * imported * self.carbon[t]
              + w.ramp * np.abs(net - prev))
        if w.soc:
            for ev in events:
                if ev.kind == "disconnect" and ev.shortfall > 0:
                    b = self.charger_building[self._charger_index[ev.charger]]
                    r[b] -= w.soc * ev.shortfall ** 2
        return r

    # -------------------------------------------------------------- invariants

    def _fail(self, msg):
        self.violations.append(msg)
        if self.strict:
            raise InvariantViolation(msg)

    def _step_failure(self, t, code):
        if code & 1:
            self._fail(f"t={t}: stored energy outside [floor, capacity]")
        if code & 2:
            self._fail(f"t={t}: realized charger power outside its slice bounds")
        if code & 4:
            self._fail(f"t={t}: building metering does not add up")

    def _check_observations(self, obs):
        bad = self._k["observation_violations"](obs, _EPS)
        if bad:
            self._fail(f"t={self.t}: {bad} observation(s) break the sentinel rules")

    # ------------------------------------------------------------------- trace

    def _build_trace_columns(self):
        cols = ["t", "month", "hour", "price", "carbon_intensity", "district_net"]
        for b in self.buildings:
            cols += [f"{b}_load", f"{b}_pv", f"{b}_net", f"{b}_reward"]
        for c in self.charger_ids:
            cols += [f"{c}_state", f"{c}_soc", f"{c}_req_soc", f"{c}_action", f"{c}_energy",
                     f"{c}_p_min", f"{c}_p_max", f"{c}_flags"]
        return cols

    @property
    def trace_columns(self):
        return list(self._trace_columns)

    def trace_array(self) -> np.ndarray:
        return self._trace[:self.t].copy()

    def write_trace(self, path) -> None:
        write_table(path, self._trace_columns, self._trace[:self.t], int_columns=_int_trace_columns(self))

    # -------------------------------------------------------------- summaries

    def district_net(self) -> np.ndarray:
        return self._net_hist[:self.t].sum(axis=1)

    def kpi_series(self) -> dict:
        n = self.t
        demand = self.load[:, :n].sum(axis=0) + self._charge_hist[:n]
        return {
            "net": self.district_net(),
            "price": self.price[:n].copy(),
            "carbon": self.carbon[:n].copy(),
            "pv": self.pv[:, :n].sum(axis=0),
            "demand": demand,
            "months": self.month[:n].copy(),
            "timestep_hours": self.dt,
        }

    def departures(self) -> List[ConnectionEvent]:
        return [e for e in self.events if e.kind == "disconnect"]

    def shortfalls(self, feasible_only: bool = True) -> List[ConnectionEvent]:
        return [e for e in self.departures()
                if e.shortfall > SHORTFALL_TOL and (e.feasible or not feasible_only)]

    def flexoffers(self) -> List[tuple]:
        """(ev_id, charger_id, FlexOffer) for every plug-in so far."""
        out = []
        for ev, ch, t_es, t_ls, soc, p_min, p_max, n in self.flexoffer_log:
            out.append((ev, ch, FlexOffer(t_es, t_ls, soc, (Slice(p_min, p_max),) * n)))
        return out


def _int_trace_columns(env):
    cols = {"t", "month", "hour"}
    for c in env.charger_ids:
        cols.update({f"{c}_state", f"{c}_flags"})
    return cols


def truncated_normal(rng, mean, std, lo, hi, max_tries=1000):
    """Normal sample restricted to [lo, hi] by rejection."""
    for _ in range(max_tries):
        x = rng.normal(mean, std)
        if lo <= x <= hi:
            return float(x)
    return float(min(max(mean, lo), hi))


def write_table(path, columns: Sequence[str], data: np.ndarray, int_columns=()) -> None:
    """CSV with shortest round-trip float formatting (stable across runs)."""
    cols = []
    for k, name in enumerate(columns):
        col = data[:, k]
        if name in int_columns:
            cols.append([str(int(v)) for v in col.tolist()])
        else:
            cols.append([repr(v) for v in col.tolist()])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for rec in zip(*cols):
            fh.write(",".join(rec) + "\n")


def read_table(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in rec] for rec in reader if rec]
    return header, np.array(rows, dtype=float).reshape(-1, len(header))


def run_episode(env: EvChargingEnv, policy, seed: Optional[int] = None, steps: Optional[int] = None):
    """Drive ``env`` with ``policy`` until done (or ``steps`` steps)."""
    obs = env.reset(seed)
    n = 0
    while not env.done and (steps is None or n < steps):
        obs = env.step(policy.act(obs, env)).observations
        n += 1
    return env
