"""EV energy-flexibility schedules: CSV I/O, validation and synthetic generation.

One file per EV, one row per simulation step::

    Month,Hour,EV_State,Charger,Est_Departure_Time,Req_SOC_Departure,Est_Arrival_Time,Est_SoC_Arrival

Countdown columns hold the number of steps until the event; the last
plugged-in row before a departure carries ``Est_Departure_Time = 0``.
Absent values are written as ``nan``.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import io
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

COLUMNS = (
    "Month", "Hour", "EV_State", "Charger", "Est_Departure_Time",
    "Req_SOC_Departure", "Est_Arrival_Time", "Est_SoC_Arrival",
)

DEFAULT_START = dt.datetime(2022, 1, 1)


class ScheduleError(ValueError):
    """Malformed schedule file or row."""


class EvState(enum.IntEnum):
    PLUGGED_READY = 1
    INCOMING = 2
    TRANSIT = 3


@dataclass(frozen=True)
class EvScheduleRow:
    month: int
    hour: int
    ev_state: EvState
    charger_id: Optional[str] = None
    est_departure_steps: Optional[int] = None
    req_soc_departure: Optional[float] = None
    est_arrival_steps: Optional[int] = None
    est_soc_arrival: Optional[float] = None

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ScheduleError(f"Month {self.month} outside 1-12")
        if not 1 <= self.hour <= 24:
            raise ScheduleError(f"Hour {self.hour} outside 1-24")
        try:
            object.__setattr__(self, "ev_state", EvState(self.ev_state))
        except ValueError:
            raise ScheduleError(f"unknown EV_State {self.ev_state!r}") from None
        for name in ("req_soc_departure", "est_soc_arrival"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ScheduleError(f"{name}={v} outside [0, 1]")
        for name in ("est_departure_steps", "est_arrival_steps"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ScheduleError(f"{name}={v} is negative")


# --------------------------------------------------------------------------- I/O

def _opt_int(text, col, line):
    if text.strip().lower() in ("nan", ""):
        return None
    try:
        value = float(text)
    except ValueError:
        raise ScheduleError(f"line {line}: {col}={text!r} is not a number") from None
    if value != int(value):
        raise ScheduleError(f"line {line}: {col}={text!r} is not an integer")
    return int(value)


def _opt_float(text, col, line):
    if text.strip().lower() in ("nan", ""):
        return None
    try:
        value = float(text)
    except ValueError:
        raise ScheduleError(f"line {line}: {col}={text!r} is not a number") from None
    return None if math.isnan(value) else value


def read_rows(lines: Iterable[str]) -> List[EvScheduleRow]:
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise ScheduleError("empty schedule file") from None
    header = [h.strip() for h in header]
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise ScheduleError(f"missing column(s): {', '.join(missing)}")
    idx = [header.index(c) for c in COLUMNS]
    rows = []
    for line, rec in enumerate(reader, start=2):
        if not rec:
            continue
        try:
            vals = [rec[i] for i in idx]
        except IndexError:
            raise ScheduleError(f"line {line}: expected {len(header)} fields, got {len(rec)}") from None
        month = _opt_int(vals[0], "Month", line)
        hour = _opt_int(vals[1], "Hour", line)
        state = _opt_int(vals[2], "EV_State", line)
        if month is None or hour is None or state is None:
            raise ScheduleError(f"line {line}: Month, Hour and EV_State are required")
        charger = vals[3].strip()
        try:
            rows.append(EvScheduleRow(
                month=month,
                hour=hour,
                ev_state=state,
                charger_id=None if charger.lower() in ("nan", "") else charger,
                est_departure_steps=_opt_int(vals[4], "Est_Departure_Time", line),
                req_soc_departure=_opt_float(vals[5], "Req_SOC_Departure", line),
                est_arrival_steps=_opt_int(vals[6], "Est_Arrival_Time", line),
                est_soc_arrival=_opt_float(vals[7], "Est_SoC_Arrival", line),
            ))
        except ScheduleError as err:
            raise ScheduleError(f"line {line}: {err}") from None
    return rows


def parse_schedule(path) -> List[EvScheduleRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        return read_rows(fh)


def _fmt(v):
    if v is None:
        return "nan"
    return repr(v) if isinstance(v, float) else str(v)


def format_row(row: EvScheduleRow) -> str:
    return ",".join([
        str(row.month), str(row.hour), str(int(row.ev_state)),
        row.charger_id if row.charger_id is not None else "nan",
        _fmt(row.est_departure_steps), _fmt(row.req_soc_departure),
        _fmt(row.est_arrival_steps), _fmt(row.est_soc_arrival),
    ])


def schedule_text(rows: Sequence[EvScheduleRow]) -> str:
    buf = io.StringIO()
    buf.write(",".join(COLUMNS) + "\n")
    for row in rows:
        buf.write(format_row(row) + "\n")
    return buf.getvalue()


def write_schedule(rows: Sequence[EvScheduleRow], path) -> Path:
    path = Path(path)
    path.write_text(schedule_text(rows), encoding="utf-8", newline="")
    return path


def schedule_filename(ev_id) -> str:
    return f"electric_vehicle_{ev_id}.csv"


# ---------------------------------------------------------------------- validation

@dataclass(frozen=True)
class Violation:
    row: int
    kind: str
    message: str
    severity: str = "error"


_ALLOWED = {
    (EvState.PLUGGED_READY, EvState.PLUGGED_READY),
    (EvState.PLUGGED_READY, EvState.TRANSIT),
    (EvState.TRANSIT, EvState.TRANSIT),
    (EvState.TRANSIT, EvState.INCOMING),
    (EvState.INCOMING, EvState.INCOMING),
    (EvState.INCOMING, EvState.PLUGGED_READY),
}


def validate_schedule(rows: Sequence[EvScheduleRow], timestep_hours: float = 1.0) -> List[Violation]:
    """Report countdown, transition, field/state and timestamp problems.

    Severity is ``"error"`` except for a Transit -> PluggedReady jump, which is
    allowed but flagged as a ``"warning"``.
    """
    out: List[Violation] = []
    per_hour = max(1, int(round(1.0 / timestep_hours))) if timestep_hours < 1 else 1
    hour_step = max(1, int(round(timestep_hours))) if timestep_hours >= 1 else 1

    for i, r in enumerate(rows):
        s = r.ev_state
        if s is not EvState.PLUGGED_READY and (r.est_departure_steps is not None or r.req_soc_departure is not None):
            out.append(Violation(i, "field_state", "departure fields set outside PluggedReady"))
        if s is not EvState.INCOMING and (r.est_arrival_steps is not None or r.est_soc_arrival is not None):
            out.append(Violation(i, "field_state", "arrival fields set outside Incoming"))
        if s is EvState.PLUGGED_READY and r.charger_id is None:
            out.append(Violation(i, "field_state", "PluggedReady row without a charger"))

    run = 1
    for i in range(1, len(rows)):
        prev, cur = rows[i - 1], rows[i]
        a, b = prev.ev_state, cur.ev_state
        if (a, b) not in _ALLOWED:
            if a is EvState.TRANSIT and b is EvState.PLUGGED_READY:
                out.append(Violation(i, "transition", "missing Incoming phase", "warning"))
            else:
                out.append(Violation(i, "transition", f"illegal transition {a.name} -> {b.name}"))
        if a is b is EvState.PLUGGED_READY:
            if prev.charger_id != cur.charger_id:
                out.append(Violation(i, "transition", "charger changed inside a plugged-in session"))
            if prev.est_departure_steps == 0:
                out.append(Violation(i, "countdown", "still plugged in after departure countdown reached 0"))
            elif prev.est_departure_steps is not None and cur.est_departure_steps is not None \
                    and cur.est_departure_steps != prev.est_departure_steps - 1:
                out.append(Violation(i, "countdown", "Est_Departure_Time does not count down by 1"))
        if a is b is EvState.INCOMING and prev.est_arrival_steps is not None \
                and cur.est_arrival_steps is not None \
                and cur.est_arrival_steps != prev.est_arrival_steps - 1:
            out.append(Violation(i, "countdown", "Est_Arrival_Time does not count down by 1"))

        # timestamps
        if (prev.month, prev.hour) == (cur.month, cur.hour):
            run += 1
            if run > per_hour:
                out.append(Violation(i, "timestamp", "too many rows for one hour"))
            continue
        expected_hour = (prev.hour - 1 + hour_step) % 24 + 1
        if cur.hour != expected_hour:
            out.append(Violation(i, "timestamp", f"gap: hour {prev.hour} followed by {cur.hour}"))
        wrapped = cur.hour <= prev.hour
        if cur.month != prev.month and not (wrapped and cur.month == prev.month % 12 + 1):
            out.append(Violation(i, "timestamp", f"month jumps from {prev.month} to {cur.month}"))
        run = 1
    return out


def errors_only(violations: Iterable[Violation]) -> List[Violation]:
    return [v for v in violations if v.severity == "error"]


# ----------------------------------------------------------------------- generator

class GeneratorMode(enum.Enum):
    HOUSEHOLD = "household"
    WORKPLACE = "workplace"


@dataclass
class GeneratorParams:
    """Statistical description of one EV's routine.

    Times are hours of day. In household mode ``departure`` is leaving home in
    the morning and ``arrival`` is coming back; in workplace mode ``arrival``
    is reaching the office and ``departure`` is leaving it.
    """

    mode: GeneratorMode = GeneratorMode.HOUSEHOLD
    chargers: Sequence[str] = ("EVC_1_1_1",)
    departure_mean: float = 8.0
    departure_std: float = 1.0
    arrival_mean: float = 18.0
    arrival_std: float = 1.0
    required_soc_departure: float = 0.8
    routine_break_probability: float = 0.0
    weekend_morning_outing_probability: float = 0.0
    weekend_afternoon_outing_probability: float = 0.0
    traffic_delay_probability: float = 0.0
    traffic_delay_hours: float = 1.0
    commute_soc_drop_mean: float = 0.3
    commute_soc_drop_std: float = 0.05
    incoming_steps: int = 1
    seed: int = 0
    timestep_hours: float = 1.0
    calendar_start: dt.datetime = field(default=DEFAULT_START)

    def __post_init__(self):
        self.mode = GeneratorMode(self.mode) if not isinstance(self.mode, GeneratorMode) else self.mode
        if isinstance(self.chargers, str):
            self.chargers = (self.chargers,)
        self.chargers = tuple(self.chargers)
        if isinstance(self.calendar_start, str):
            self.calendar_start = dt.datetime.fromisoformat(self.calendar_start)
        for name in ("routine_break_probability", "weekend_morning_outing_probability",
                     "weekend_afternoon_outing_probability", "traffic_delay_probability",
                     "required_soc_departure"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} must lie in [0, 1]")
        for name in ("departure_mean", "arrival_mean"):
            if not 0.0 <= getattr(self, name) < 24.0:
                raise ValueError(f"{name}={getattr(self, name)} must be an hour of day in [0, 24)")
        for name in ("departure_std", "arrival_std", "commute_soc_drop_std", "traffic_delay_hours"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.chargers:
            raise ValueError("at least one charger id is required")
        if self.incoming_steps < 1:
            raise ValueError("incoming_steps must be >= 1")
        if self.timestep_hours <= 0 or (24.0 / self.timestep_hours) % 1:
            raise ValueError("timestep_hours must divide 24")

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorParams":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown generator parameter(s): {', '.join(sorted(extra))}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        d["chargers"] = list(self.chargers)
        d["calendar_start"] = self.calendar_start.isoformat()
        return d


@dataclass(frozen=True)
class Trip:
    """An absence from the charger: leave at step ``depart``, plug in at ``arrive``."""

    depart: int
    arrive: int
    charger: str
    soc_arrival: float


def _steps_per_day(p):
    return int(round(24.0 / p.timestep_hours))


def _clock(rng, mean, std, lo, hi):
    """Normal time of day truncated to [lo, hi] by resampling."""
    if std == 0:
        return min(max(mean, lo), hi)
    for _ in range(100):
        x = rng.normal(mean, std)
        if lo <= x <= hi:
            return x
    return min(max(mean, lo), hi)


def _soc_drop(rng, p):
    if p.commute_soc_drop_std == 0:
        return p.commute_soc_drop_mean
    return max(0.0, rng.normal(p.commute_soc_drop_mean, p.commute_soc_drop_std))


def _to_step(day, hour, p):
    return day * _steps_per_day(p) + int(round(hour / p.timestep_hours))


def _household_day(rng, p, day, weekday):
    """Absences for one calendar day as (leave_hour, back_hour) pairs."""
    if weekday >= 5:
        out = []
        if rng.random() < p.weekend_morning_outing_probability:
            leave = _clock(rng, 10.0, 1.0, 7.0, 12.0)
            out.append((leave, leave + rng.uniform(1.0, 3.0)))
        if rng.random() < p.weekend_afternoon_outing_probability:
            leave = _clock(rng, 15.0, 1.0, 13.0, 18.0)
            if out and leave < out[-1][1] + 1.0:
                leave = out[-1][1] + 1.0
            out.append((leave, leave + rng.uniform(2.0, 4.0)))
        return out
    if p.routine_break_probability and rng.random() < p.routine_break_probability:
        if rng.random() < 0.5:
            return []
        leave = rng.uniform(6.0, 16.0)
        return [(leave, leave + rng.uniform(1.0, 6.0))]
    leave = _clock(rng, p.departure_mean, p.departure_std, 0.0, 23.0)
    back = _clock(rng, p.arrival_mean, p.arrival_std, 0.0, 23.0)
    return [(leave, back)]


def _plan_household(rng, p, n_days):
    trips = []
    last_arrival_step = -1
    for day in range(n_days):
        weekday = (p.calendar_start + dt.timedelta(days=day)).weekday()
        for leave_h, back_h in _household_day(rng, p, day, weekday):
            depart = max(_to_step(day, leave_h, p), last_arrival_step + 1)
            arrive = max(_to_step(day, back_h, p), depart + 2)
            charger = p.chargers[int(rng.integers(len(p.chargers)))] if len(p.chargers) > 1 else p.chargers[0]
            soc = max(0.0, p.required_soc_departure - _soc_drop(rng, p))
            trips.append(Trip(depart, arrive, charger, soc))
            last_arrival_step = arrive
    return trips


def _plan_workplace(rng, p, n_days):
    """Office stays become the complement of these absences."""
    trips = []
    stays = []
    for day in range(n_days):
        weekday = (p.calendar_start + dt.timedelta(days=day)).weekday()
        if weekday >= 5:
            continue
        if p.routine_break_probability and rng.random() < p.routine_break_probability:
            continue
        arrive_h = _clock(rng, p.arrival_mean, p.arrival_std, 0.0, 22.0)
        if p.traffic_delay_probability and rng.random() < p.traffic_delay_probability:
            arrive_h = min(arrive_h + p.traffic_delay_hours, 22.0)
        leave_h = _clock(rng, p.departure_mean, p.departure_std, 0.0, 23.0)
        a = _to_step(day, arrive_h, p)
        d = max(_to_step(day, leave_h, p), a + 1)
        if stays and a < stays[-1][1] + 2:
            continue
        charger = p.chargers[int(rng.integers(len(p.chargers)))] if len(p.chargers) > 1 else p.chargers[0]
        soc = max(0.0, p.required_soc_departure - _soc_drop(rng, p))
        stays.append((a, d, charger, soc))
    # the EV starts away from the office; each stay closes the preceding absence
    prev_end = None
    for a, d, charger, soc in stays:
        depart = prev_end if prev_end is not None else min(0, a - 2)
        trips.append(Trip(depart, a, charger, soc))
        prev_end = d
    if prev_end is not None:
        trips.append(Trip(prev_end, 10 ** 9, p.chargers[0], 0.0))
    return trips


def _render(p, trips, horizon, start_plugged):
    """Turn a trip list into schedule rows for ``horizon`` steps."""
    state = np.full(horizon, int(EvState.PLUGGED_READY if start_plugged else EvState.TRANSIT), dtype=np.int8)
    charger = [None] * horizon
    dep = [None] * horizon
    arr = [None] * horizon
    soc_arr = [None] * horizon
    req = [None] * horizon

    if start_plugged:
        first = trips[0].depart if trips else None
        home = p.chargers[0]
        upto = min(first, horizon) if first is not None else horizon
        for t in range(0, upto):
            charger[t] = home
            dep[t] = (first - 1 - t) if first is not None else None
            req[t] = p.required_soc_departure

    for k, trip in enumerate(trips):
        nxt = trips[k + 1].depart if k + 1 < len(trips) else None
        lo = max(trip.depart, 0)
        hi = min(trip.arrive, horizon)
        n_incoming = min(p.incoming_steps, trip.arrive - trip.depart - 1)
        for t in range(lo, hi):
            if t >= trip.arrive - n_incoming:
                state[t] = EvState.INCOMING
                charger[t] = trip.charger
                arr[t] = trip.arrive - t
                soc_arr[t] = trip.soc_arrival
            else:
                state[t] = EvState.TRANSIT
        end = min(nxt, horizon) if nxt is not None else horizon
        for t in range(max(trip.arrive, 0), end):
            state[t] = EvState.PLUGGED_READY
            charger[t] = trip.charger
            dep[t] = (nxt - 1 - t) if nxt is not None else None
            req[t] = p.required_soc_departure

    rows = []
    for t in range(horizon):
        when = p.calendar_start + dt.timedelta(hours=t * p.timestep_hours)
        rows.append(EvScheduleRow(
            month=when.month, hour=when.hour + 1, ev_state=EvState(int(state[t])),
            charger_id=charger[t], est_departure_steps=dep[t], req_soc_departure=req[t],
            est_arrival_steps=arr[t], est_soc_arrival=soc_arr[t],
        ))
    return rows


def _check_horizon(p, horizon_steps):
    if horizon_steps < 0 or horizon_steps % _steps_per_day(p):
        raise ValueError(f"horizon {horizon_steps} is not a whole number of days "
                         f"at {p.timestep_hours} h per step")


def generate_household(params: GeneratorParams, horizon_steps: int) -> List[EvScheduleRow]:
    """Home-charging routine: plugged in overnight, away during the day.

    Weekday departures and arrivals are normal around their means; weekends
    carry optional morning/afternoon outings; a routine break replaces a
    weekday by either a day at home or an irregular trip.
    """
    if params.mode is not GeneratorMode.HOUSEHOLD:
        raise ValueError("generate_household needs mode=household")
    _check_horizon(params, horizon_steps)
    rng = np.random.default_rng(params.seed)
    n_days = horizon_steps // _steps_per_day(params) + 2
    trips = _plan_household(rng, params, n_days)
    return _render(params, trips, horizon_steps, start_plugged=True)


def generate_workplace(params: GeneratorParams, horizon_steps: int) -> List[EvScheduleRow]:
    """Office-charging routine: plugged in during working hours on weekdays.

    Morning arrivals slip by ``traffic_delay_hours`` with
    ``traffic_delay_probability``. The arrival SoC is the required departure
    SoC minus a sampled commute drop, floored at 0.
    """
    if params.mode is not GeneratorMode.WORKPLACE:
        raise ValueError("generate_workplace needs mode=workplace")
    _check_horizon(params, horizon_steps)
    rng = np.random.default_rng(params.seed)
    n_days = horizon_steps // _steps_per_day(params) + 2
    trips = _plan_workplace(rng, params, n_days)
    return _render(params, trips, horizon_steps, start_plugged=False)


def generate(params: GeneratorParams, horizon_steps: int) -> List[EvScheduleRow]:
    if params.mode is GeneratorMode.HOUSEHOLD:
        return generate_household(params, horizon_steps)
    return generate_workplace(params, horizon_steps)


def departure_steps(rows: Sequence[EvScheduleRow]) -> List[int]:
    """Indices of the first row after each plugged-in session ends."""
    return [i for i in range(1, len(rows))
            if rows[i - 1].ev_state is EvState.PLUGGED_READY and rows[i].ev_state is not EvState.PLUGGED_READY]


def arrival_steps(rows: Sequence[EvScheduleRow]) -> List[int]:
    return [i for i in range(1, len(rows))
            if rows[i].ev_state is EvState.PLUGGED_READY and rows[i - 1].ev_state is not EvState.PLUGGED_READY]


def schedule_summary(rows: Sequence[EvScheduleRow], timestep_hours: float = 1.0) -> dict:
    per_day = int(round(24.0 / timestep_hours))

    def stats(steps):
        hours = np.array([(s % per_day) * timestep_hours for s in steps], dtype=float)
        if hours.size == 0:
            return 0, float("nan"), float("nan")
        return int(hours.size), float(hours.mean()), float(hours.std())

    n_dep, dep_mean, dep_std = stats(departure_steps(rows))
    n_arr, arr_mean, arr_std = stats(arrival_steps(rows))
    return {
        "departures": n_dep, "departure_hour_mean": dep_mean, "departure_hour_std": dep_std,
        "arrivals": n_arr, "arrival_hour_mean": arr_mean, "arrival_hour_std": arr_std,
    }
