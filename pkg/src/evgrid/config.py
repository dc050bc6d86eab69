"""Scenario configuration (the JSON "schema") and its time-series inputs.

Layout::

    {
      "mode": "V2G",
      "timestep_hours": 1.0,
      "horizon_steps": 8760,
      "calendar_start": "2022-01-01T00:00:00",
      "seed": 0,
      "arrival_soc_noise_std": 0.05,
      "pricing": "pricing.csv",
      "carbon_intensity": "carbon_intensity.csv",
      "reward": {"cost": 1, "carbon": 1, "ramp": 0.1, "soc": 10},
      "buildings": {
        "Building_1": {
          "energy_simulation": "Building_1.csv",
          "chargers": {
            "EVC_1_1_1": {"nominal_power_charging": 7.4,
                          "nominal_power_discharging": 7.4,
                          "efficiency": 0.95}
          }
        }
      },
      "electric_vehicles": {
        "EV_1": {
          "energy_simulation": "electric_vehicle_1.csv",
          "initial_soc": 0.5,
          "battery": {"capacity": 40, "nominal_power": 7.4}
        }
      }
    }

Relative paths resolve against the directory holding the config file.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .core_models import Charger, EvBattery, SimulationMode, parse_charger_id
from .dataset import EvScheduleRow, EvState, ScheduleError, parse_schedule

BUILDING_COLUMNS = ("non_shiftable_load", "solar_generation")
PRICE_COLUMN = "electricity_pricing"
CARBON_COLUMN = "carbon_intensity"


class ConfigError(ValueError):
    """Invalid or inconsistent scenario configuration."""


@dataclass
class RewardWeights:
    cost: float = 1.0
    carbon: float = 1.0
    ramp: float = 0.1
    soc: float = 10.0


@dataclass
class BuildingConfig:
    name: str
    load: np.ndarray
    pv: np.ndarray
    chargers: List[Charger] = field(default_factory=list)


@dataclass
class EvConfig:
    name: str
    battery: EvBattery
    schedule: List[EvScheduleRow]
    initial_soc: float = 0.5
    schedule_path: Optional[Path] = None


@dataclass
class ScenarioConfig:
    mode: SimulationMode
    timestep_hours: float
    horizon_steps: int
    calendar_start: dt.datetime
    buildings: List[BuildingConfig]
    evs: List[EvConfig]
    price: np.ndarray
    carbon: np.ndarray
    reward: RewardWeights = field(default_factory=RewardWeights)
    seed: int = 0
    arrival_soc_noise_std: float = 0.05
    rbc: Dict[str, float] = field(default_factory=dict)
    source: Optional[Path] = None

    @property
    def chargers(self) -> List[Charger]:
        return [c for b in self.buildings for c in b.chargers]

    def with_mode(self, mode) -> "ScenarioConfig":
        return replace(self, mode=SimulationMode.parse(mode))

    def with_horizon(self, steps: int) -> "ScenarioConfig":
        if steps > self.horizon_steps:
            raise ConfigError(f"requested {steps} steps but the scenario holds {self.horizon_steps}")
        return replace(self, horizon_steps=int(steps))


def read_columns(path: Path, columns: Sequence[str]) -> Dict[str, np.ndarray]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read series file {path}: {err.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        missing = [c for c in columns if c not in header]
        if missing:
            raise ConfigError(f"{path.name}: missing column(s) {', '.join(missing)}")
        idx = [header.index(c) for c in columns]
        data = [[float(rec[i]) for i in idx] for rec in reader if rec]
    arr = np.array(data, dtype=float).reshape(-1, len(columns))
    return {c: arr[:, k].copy() for k, c in enumerate(columns)}


DOD_CONVENTIONS = ("usable", "reserve")


def _depth_of_discharge(spec: dict, ev: str) -> float:
    """DoD as the usable fraction of capacity.

    ``dod_convention: "reserve"`` reads ``depth_of_discharge`` as the share
    that must stay in the battery instead, so 0.1 there equals 0.9 usable.
    """
    value = float(spec.get("depth_of_discharge", 1.0))
    convention = spec.get("dod_convention", "usable")
    if convention not in DOD_CONVENTIONS:
        raise ConfigError(f"{ev}: dod_convention must be one of {', '.join(DOD_CONVENTIONS)}")
    return 1.0 - value if convention == "reserve" else value


def _battery(spec: dict, ev: str) -> EvBattery:
    dod = _depth_of_discharge(spec, ev)
    try:
        curve = spec.get("power_curve")
        return EvBattery(
            capacity_initial=float(spec["capacity"]),
            nominal_power=float(spec["nominal_power"]),
            round_trip_efficiency=float(spec.get("efficiency", 1.0)),
            thermal_loss_coefficient=float(spec.get("loss_coefficient", 0.0)),
            depth_of_discharge=dod,
            power_curve=tuple(map(tuple, curve)) if curve else ((0.0, 1.0), (1.0, 1.0)),
            degradation_coefficient=float(spec.get("degradation_coefficient", 0.0)),
            min_capacity_fraction=float(spec.get("min_capacity_fraction", 0.0)),
        )
    except KeyError as err:
        raise ConfigError(f"{ev}: battery is missing {err.args[0]!r}") from None
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{ev}: invalid battery: {err}") from None


def _charger(cid: str, spec: dict, building: str) -> Charger:
    try:
        b, n, plug = parse_charger_id(cid)
        curve = spec.get("efficiency_curve")
        return Charger(
            building_id=b, charger_number=n, plug_number=plug,
            nominal_power_charging=float(spec.get("nominal_power_charging", spec.get("nominal_power", 0.0))),
            nominal_power_discharging=float(spec.get("nominal_power_discharging", 0.0)),
            technical_efficiency=float(spec.get("efficiency", 1.0)),
            efficiency_curve=tuple(map(tuple, curve)) if curve else None,
        )
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{building}/{cid}: {err}") from None


def load_config(path, *, mode=None, horizon_steps: Optional[int] = None) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise ConfigError(f"cannot read scenario {path}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path.name}: invalid JSON: {err}") from None
    return config_from_dict(raw, path.parent, mode=mode, horizon_steps=horizon_steps, source=path)


def config_from_dict(raw: dict, root: Path, *, mode=None, horizon_steps=None, source=None) -> ScenarioConfig:
    root = Path(root)
    try:
        sim_mode = SimulationMode.parse(mode if mode is not None else raw.get("mode", "V2G"))
    except ValueError as err:
        raise ConfigError(str(err)) from None
    dt_h = float(raw.get("timestep_hours", 1.0))
    if dt_h <= 0:
        raise ConfigError("timestep_hours must be positive")
    start = dt.datetime.fromisoformat(str(raw.get("calendar_start", "2022-01-01T00:00:00")))

    def resolve(p):
        return (root / p) if not Path(p).is_absolute() else Path(p)

    for key in ("pricing", "carbon_intensity", "buildings"):
        if key not in raw:
            raise ConfigError(f"scenario is missing {key!r}")
    price = read_columns(resolve(raw["pricing"]), (PRICE_COLUMN,))[PRICE_COLUMN]
    carbon = read_columns(resolve(raw["carbon_intensity"]), (CARBON_COLUMN,))[CARBON_COLUMN]

    buildings = []
    seen = set()
    for name, bspec in raw["buildings"].items():
        if "energy_simulation" not in bspec:
            raise ConfigError(f"{name}: missing energy_simulation")
        cols = read_columns(resolve(bspec["energy_simulation"]), BUILDING_COLUMNS)
        chargers = []
        for cid, cspec in (bspec.get("chargers") or {}).items():
            if cid in seen:
                raise ConfigError(f"charger id {cid} is used twice")
            seen.add(cid)
            chargers.append(_charger(cid, cspec, name))
        buildings.append(BuildingConfig(name, cols[BUILDING_COLUMNS[0]], cols[BUILDING_COLUMNS[1]], chargers))
    if not buildings:
        raise ConfigError("scenario has no buildings")

    evs = []
    for name, espec in (raw.get("electric_vehicles") or {}).items():
        if "energy_simulation" not in espec or "battery" not in espec:
            raise ConfigError(f"{name}: needs energy_simulation and battery")
        spath = resolve(espec["energy_simulation"])
        try:
            rows = parse_schedule(spath)
        except OSError as err:
            raise ConfigError(f"{name}: cannot read schedule {spath}: {err.strerror}") from None
        except ScheduleError as err:
            raise ConfigError(f"{name}: {spath.name}: {err}") from None
        soc0 = float(espec.get("initial_soc", 0.5))
        if not 0.0 <= soc0 <= 1.0:
            raise ConfigError(f"{name}: initial_soc must lie in [0, 1]")
        evs.append(EvConfig(name, _battery(espec["battery"], name), rows, soc0, spath))

    for ev in evs:
        referenced = {r.charger_id for r in ev.schedule if r.charger_id is not None}
        dangling = sorted(referenced - seen)
        if dangling:
            raise ConfigError(f"{ev.name}: schedule references unknown charger {', '.join(dangling)}")

    lengths = {"pricing": len(price), "carbon_intensity": len(carbon)}
    lengths.update({b.name: len(b.load) for b in buildings})
    lengths.update({ev.name: len(ev.schedule) for ev in evs})
    shortest = min(lengths.values())
    horizon = horizon_steps if horizon_steps is not None else raw.get("horizon_steps", shortest)
    horizon = int(horizon)
    if horizon <= 0:
        raise ConfigError("horizon_steps must be positive")
    short = sorted(k for k, n in lengths.items() if n < horizon)
    if short:
        raise ConfigError(f"series shorter than horizon {horizon}: {', '.join(short)}")

    weights = RewardWeights(**{k: float(v) for k, v in (raw.get("reward") or {}).items()})
    noise = float(raw.get("arrival_soc_noise_std", 0.05))
    if noise < 0:
        raise ConfigError("arrival_soc_noise_std must be non-negative")
    return ScenarioConfig(
        mode=sim_mode, timestep_hours=dt_h, horizon_steps=horizon, calendar_start=start,
        buildings=buildings, evs=evs, price=price, carbon=carbon, reward=weights,
        seed=int(raw.get("seed", 0)), arrival_soc_noise_std=noise,
        rbc={k: float(v) for k, v in (raw.get("rbc") or {}).items()}, source=source,
    )


@dataclass
class ScheduleArrays:
    """Dense (n_ev, steps) view of all schedules; -1 / NaN mark absent values."""

    state: np.ndarray
    charger: np.ndarray
    est_departure: np.ndarray
    req_soc: np.ndarray
    est_arrival: np.ndarray
    est_soc_arrival: np.ndarray


def schedule_arrays(evs: Sequence[EvConfig], charger_index: Dict[str, int], steps: int) -> ScheduleArrays:
    n = len(evs)
    out = ScheduleArrays(
        state=np.full((n, steps), int(EvState.TRANSIT), dtype=np.int8),
        charger=np.full((n, steps), -1, dtype=np.int64),
        est_departure=np.full((n, steps), -1, dtype=np.int64),
        req_soc=np.full((n, steps), np.nan),
        est_arrival=np.full((n, steps), -1, dtype=np.int64),
        est_soc_arrival=np.full((n, steps), np.nan),
    )
    for e, ev in enumerate(evs):
        for t, r in enumerate(ev.schedule[:steps]):
            out.state[e, t] = int(r.ev_state)
            if r.charger_id is not None:
                out.charger[e, t] = charger_index[r.charger_id]
            if r.est_departure_steps is not None:
                out.est_departure[e, t] = r.est_departure_steps
            if r.req_soc_departure is not None:
                out.req_soc[e, t] = r.req_soc_departure
            if r.est_arrival_steps is not None:
                out.est_arrival[e, t] = r.est_arrival_steps
            if r.est_soc_arrival is not None:
                out.est_soc_arrival[e, t] = r.est_soc_arrival
    return out
