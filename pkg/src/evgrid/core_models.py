"""Charger and EV battery models.

Powers are in kW, energies in kWh. A step of ``timestep_hours`` converts
power into per-step energy. Every function here is a pure state transition:
batteries are frozen dataclasses and updates return a new instance.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

Curve = Tuple[Tuple[float, float], ...]

FLAT_CURVE: Curve = ((0.0, 1.0), (1.0, 1.0))

_CHARGER_ID = re.compile(r"^EVC_(\w+?)_(\d+)_(\d+)$")


class ModeViolation(ValueError):
    """An action outside the range allowed by the simulation mode."""


class SimulationMode(enum.Enum):
    V2G = "V2G"
    G2V = "G2V"
    NO_CONTROL = "NoControl"

    @classmethod
    def parse(cls, value) -> "SimulationMode":
        if isinstance(value, cls):
            return value
        key = str(value).replace("-", "").replace("_", "").lower()
        for mode in cls:
            if mode.value.lower() == key:
                return mode
        raise ValueError(f"unknown simulation mode {value!r}")

    @property
    def allows_discharge(self) -> bool:
        return self is SimulationMode.V2G

    @property
    def action_range(self) -> Tuple[float, float]:
        return (-1.0, 1.0) if self.allows_discharge else (0.0, 1.0)


def interpolate_curve(x: float, curve: Sequence[Tuple[float, float]]) -> float:
    """Piecewise-linear lookup, flat beyond the end breakpoints."""
    if x <= curve[0][0]:
        return curve[0][1]
    for (x0, y0), (x1, y1) in zip(curve, curve[1:]):
        if x <= x1:
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    return curve[-1][1]


def _check_curve(curve, name, lo=0.0, hi=1.0):
    if len(curve) < 2:
        raise ValueError(f"{name} needs at least two breakpoints")
    xs = [p[0] for p in curve]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError(f"{name} breakpoints must be strictly increasing")
    if any(not (lo <= p[1] <= hi) for p in curve):
        raise ValueError(f"{name} values must lie in [{lo}, {hi}]")


def charger_id(building, number: int, plug: int) -> str:
    return f"EVC_{building}_{number}_{plug}"


def parse_charger_id(cid: str) -> Tuple[str, int, int]:
    m = _CHARGER_ID.match(cid)
    if not m:
        raise ValueError(f"charger id {cid!r} does not follow EVC_<building>_<number>_<plug>")
    return m.group(1), int(m.group(2)), int(m.group(3))


@dataclass(frozen=True)
class Charger:
    building_id: str
    charger_number: int
    plug_number: int
    nominal_power_charging: float
    nominal_power_discharging: float = 0.0
    technical_efficiency: float = 1.0
    efficiency_curve: Optional[Curve] = None
    connected_ev: Optional[str] = None

    def __post_init__(self):
        if self.charger_number < 1 or self.plug_number < 1:
            raise ValueError("charger and plug numbers start at 1")
        if self.nominal_power_charging < 0 or self.nominal_power_discharging < 0:
            raise ValueError("nominal powers must be non-negative")
        if not (0.0 < self.technical_efficiency <= 1.0):
            raise ValueError("technical_efficiency must lie in (0, 1]")
        if self.efficiency_curve is not None:
            curve = tuple((float(x), float(y)) for x, y in self.efficiency_curve)
            _check_curve(curve, "efficiency_curve")
            if any(y <= 0 for _, y in curve):
                raise ValueError("efficiency_curve values must be positive")
            object.__setattr__(self, "efficiency_curve", curve)

    @property
    def id(self) -> str:
        return charger_id(self.building_id, self.charger_number, self.plug_number)

    def for_mode(self, mode: SimulationMode) -> "Charger":
        """Discharging power is zeroed outside V2G."""
        if SimulationMode.parse(mode).allows_discharge or self.nominal_power_discharging == 0:
            return self
        return replace(self, nominal_power_discharging=0.0)

    def efficiency_at(self, consumption: float, timestep_hours: float = 1.0) -> float:
        if self.efficiency_curve is None or consumption == 0:
            return self.technical_efficiency
        nominal = self.nominal_power_charging if consumption > 0 else self.nominal_power_discharging
        if nominal <= 0:
            return self.technical_efficiency
        return interpolate_curve(abs(consumption) / (nominal * timestep_hours), self.efficiency_curve)


@dataclass(frozen=True)
class EvBattery:
    capacity_initial: float
    nominal_power: float
    stored_energy: float = 0.0
    capacity_current: Optional[float] = None
    round_trip_efficiency: float = 1.0
    thermal_loss_coefficient: float = 0.0
    depth_of_discharge: float = 1.0
    power_curve: Curve = FLAT_CURVE
    cumulative_throughput: float = 0.0
    degradation_coefficient: float = 0.0
    min_capacity_fraction: float = 0.0

    def __post_init__(self):
        if self.capacity_initial <= 0:
            raise ValueError("capacity_initial must be positive")
        if self.nominal_power <= 0:
            raise ValueError("nominal_power must be positive")
        if self.capacity_current is None:
            object.__setattr__(self, "capacity_current", float(self.capacity_initial))
        if self.capacity_current > self.capacity_initial + 1e-12:
            raise ValueError("capacity_current cannot exceed capacity_initial")
        if not (0.0 < self.round_trip_efficiency <= 1.0):
            raise ValueError("round_trip_efficiency must lie in (0, 1]")
        if not (0.0 <= self.thermal_loss_coefficient < 1.0):
            raise ValueError("thermal_loss_coefficient must lie in [0, 1)")
        if not (0.0 < self.depth_of_discharge <= 1.0):
            raise ValueError("depth_of_discharge must lie in (0, 1]")
        curve = tuple((float(x), float(y)) for x, y in self.power_curve)
        _check_curve(curve, "power_curve")
        if curve[0][0] > 0.0 or curve[-1][0] < 1.0:
            raise ValueError("power_curve must cover SoC range [0, 1]")
        object.__setattr__(self, "power_curve", curve)

    @property
    def floor_energy(self) -> float:
        """Lowest admissible stored energy, C_0 * (1 - DoD)."""
        return self.capacity_initial * (1.0 - self.depth_of_discharge)

    @property
    def soc(self) -> float:
        return battery_soc(self)

    def with_soc(self, soc: float) -> "EvBattery":
        """Place the battery at ``soc``, clipped to the admissible band."""
        q = min(max(soc * self.capacity_initial, self.floor_energy), self.capacity_current)
        return replace(self, stored_energy=q)


@dataclass(frozen=True)
class EnergyTransfer:
    charger_consumption: float = 0.0
    supplied_energy: float = 0.0
    battery_delta: float = 0.0


def check_action(action: float, mode: SimulationMode) -> None:
    lo, hi = SimulationMode.parse(mode).action_range
    if not (lo <= action <= hi):
        raise ModeViolation(f"action {action} outside [{lo}, {hi}] for mode {SimulationMode.parse(mode).value}")


def charger_consumption(action: float, charger: Charger, mode: SimulationMode,
                        timestep_hours: float = 1.0) -> float:
    """Grid-side energy requested by ``action`` over one step (kWh)."""
    check_action(action, mode)
    if action >= 0:
        return action * charger.nominal_power_charging * timestep_hours
    return action * charger.nominal_power_discharging * timestep_hours


def supplied_energy(consumption: float, charger: Charger, timestep_hours: float = 1.0) -> float:
    """Battery-side energy for a grid-side ``consumption``.

    Charging loses a fraction ``1 - eta`` on the way into the car. On export the
    same efficiency sits between battery and grid, so the battery gives up
    ``|consumption| / eta`` for ``|consumption|`` metered at the grid.
    """
    eta = charger.efficiency_at(consumption, timestep_hours)
    if consumption >= 0:
        return eta * consumption
    return consumption / eta


def battery_max_power(battery: EvBattery) -> float:
    return battery.nominal_power * interpolate_curve(battery_soc(battery), battery.power_curve)


def battery_soc(battery: EvBattery) -> float:
    return battery.stored_energy / battery.capacity_initial


def thermal_decay(battery: EvBattery) -> float:
    """Carry-over energy after one step of thermal loss.

    The loss never pushes an admissible battery under the depth-of-discharge
    floor.
    """
    q = battery.stored_energy
    decayed = q * (1.0 - battery.thermal_loss_coefficient)
    return max(decayed, min(q, battery.floor_energy))


def _charge(battery, q_supplied, timestep_hours):
    carried = thermal_decay(battery)
    limit = battery_max_power(battery) * timestep_hours
    intake = min(q_supplied, limit)
    target = carried + intake * battery.round_trip_efficiency
    if target <= battery.capacity_current and q_supplied <= limit:
        return _settle(battery, target, q_supplied), q_supplied
    q_new = max(min(battery.capacity_current, target), min(carried, battery.capacity_current))
    realized = (q_new - carried) / battery.round_trip_efficiency
    return _settle(battery, q_new, realized), realized


def _discharge(battery, q_supplied, timestep_hours):
    carried = thermal_decay(battery)
    limit = -battery_max_power(battery) * timestep_hours
    drawn = max(q_supplied, limit)
    target = carried + drawn / battery.round_trip_efficiency
    if target >= battery.floor_energy and q_supplied >= limit:
        return _settle(battery, target, -q_supplied), q_supplied
    q_new = min(max(battery.floor_energy, target), carried)
    realized = -(carried - q_new) * battery.round_trip_efficiency
    return _settle(battery, q_new, -realized), realized


def battery_charge(battery: EvBattery, q_supplied: float, timestep_hours: float = 1.0) -> EvBattery:
    """Store ``q_supplied`` (battery-side kWh, >= 0), limited by power and capacity."""
    if q_supplied < 0:
        raise ValueError("battery_charge expects q_supplied >= 0")
    return _charge(battery, q_supplied, timestep_hours)[0]


def battery_discharge(battery: EvBattery, q_supplied: float, timestep_hours: float = 1.0) -> EvBattery:
    """Draw ``-q_supplied`` kWh, limited by power and the depth-of-discharge floor."""
    if q_supplied >= 0:
        raise ValueError("battery_discharge expects q_supplied < 0")
    return _discharge(battery, q_supplied, timestep_hours)[0]


def battery_update(battery: EvBattery, q_supplied: float, timestep_hours: float = 1.0) -> EvBattery:
    if q_supplied >= 0:
        return battery_charge(battery, q_supplied, timestep_hours)
    return battery_discharge(battery, q_supplied, timestep_hours)


def idle_step(battery: EvBattery) -> EvBattery:
    """One step without a charger: thermal loss only."""
    return replace(battery, stored_energy=thermal_decay(battery))


def degrade_capacity(battery: EvBattery) -> float:
    """Linear-in-throughput capacity fade, floored at ``min_capacity_fraction``."""
    c0 = battery.capacity_initial
    faded = c0 * (1.0 - battery.degradation_coefficient * battery.cumulative_throughput / c0)
    return max(faded, battery.min_capacity_fraction * c0)


def _settle(battery, q_new, throughput_step):
    b = replace(battery, stored_energy=q_new,
                cumulative_throughput=battery.cumulative_throughput + throughput_step)
    if b.degradation_coefficient > 0:
        cap = degrade_capacity(b)
        b = replace(b, capacity_current=cap, stored_energy=min(b.stored_energy, cap))
    return b


def slice_limits(charger: Charger, battery: EvBattery) -> Tuple[float, float]:
    """(p_min, p_max) in kW for the current battery state."""
    p_bat = battery_max_power(battery)
    return -min(charger.nominal_power_discharging, p_bat), min(charger.nominal_power_charging, p_bat)


def charge_discharge(charger: Charger, battery: EvBattery, action: float, mode: SimulationMode,
                     timestep_hours: float = 1.0) -> Tuple[EvBattery, EnergyTransfer]:
    """Apply ``action`` through ``charger`` to ``battery`` for one step.

    The requested consumption is held inside the slice limits before it reaches
    the battery. The returned transfer carries what was actually metered after
    capacity and DoD clamps.
    """
    mode = SimulationMode.parse(mode)
    charger = charger.for_mode(mode)
    requested = charger_consumption(action, charger, mode, timestep_hours)
    p_min, p_max = slice_limits(charger, battery)
    consumption = min(max(requested, p_min * timestep_hours), p_max * timestep_hours)
    eta = charger.efficiency_at(consumption, timestep_hours)
    supplied = supplied_energy(consumption, charger, timestep_hours)
    if supplied >= 0:
        new, realized = _charge(battery, supplied, timestep_hours)
        metered = consumption if realized == supplied else realized / eta
    else:
        new, realized = _discharge(battery, supplied, timestep_hours)
        metered = consumption if realized == supplied else realized * eta
    return new, EnergyTransfer(
        charger_consumption=metered,
        supplied_energy=realized,
        battery_delta=new.stored_energy - battery.stored_energy,
    )


__all__ = [
    "Charger", "EvBattery", "EnergyTransfer", "SimulationMode", "ModeViolation",
    "charger_consumption", "supplied_energy", "battery_max_power", "battery_charge",
    "battery_discharge", "battery_update", "battery_soc", "degrade_capacity",
    "charge_discharge", "idle_step", "thermal_decay", "interpolate_curve",
    "charger_id", "parse_charger_id", "check_action", "slice_limits", "FLAT_CURVE",
]
