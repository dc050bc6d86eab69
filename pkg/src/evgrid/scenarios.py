"""Synthetic scenario builder.

Writes a complete scenario directory: building load/PV series, a price and a
carbon-intensity series, one generated schedule per EV and the JSON config.
Residential buildings each host one home charger; an office building hosts a
small pool of chargers shared by the workplace EVs. Everything is derived
from one seed, so rebuilding a scenario reproduces it byte for byte.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .core_models import charger_id
from .dataset import GeneratorMode, GeneratorParams, generate, schedule_filename, write_schedule

START = dt.datetime(2022, 1, 1)
SMOKE_DIR = Path(__file__).resolve().parent / "data" / "smoke"


@dataclass
class ScenarioSpec:
    days: int = 14
    n_household: int = 8
    n_workplace: int = 4
    office_chargers: int = 2
    seed: int = 7
    mode: str = "V2G"
    start: dt.datetime = START
    # price tiers (currency/kWh); the expensive tier covers [peak_start, peak_end)
    cheap_price: float = 0.10
    peak_price: float = 0.40
    peak_start: int = 17
    peak_end: int = 22
    # residential load shape (kWh per hour)
    base_load: float = 4.0
    morning_load: float = 2.0
    evening_load: float = 12.0
    pv_peak: float = 3.0
    office_load: float = 15.0
    charger_power: float = 7.4
    charger_efficiency: float = 0.95
    battery_capacity: float = 60.0
    battery_power: float = 7.4
    battery_efficiency: float = 0.9
    loss_coefficient: float = 1e-4
    depth_of_discharge: float = 0.9
    arrival_soc_noise_std: float = 0.05
    household: Dict[str, float] = field(default_factory=lambda: {
        "departure_mean": 7.5, "departure_std": 1.0, "arrival_mean": 18.0, "arrival_std": 1.0,
        "required_soc_departure": 0.8, "routine_break_probability": 0.05,
        "weekend_morning_outing_probability": 0.3, "weekend_afternoon_outing_probability": 0.3,
        "commute_soc_drop_mean": 0.3, "commute_soc_drop_std": 0.05,
    })
    workplace: Dict[str, float] = field(default_factory=lambda: {
        "arrival_mean": 8.5, "arrival_std": 0.75, "departure_mean": 17.0, "departure_std": 0.75,
        "required_soc_departure": 0.7, "traffic_delay_probability": 0.2, "traffic_delay_hours": 1.0,
        "commute_soc_drop_mean": 0.25, "commute_soc_drop_std": 0.05,
    })
    rbc: Dict[str, float] = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return self.days * 24


def _hours(n):
    return np.arange(n) % 24


def _season(n, start):
    """1 at midsummer, about 0.3 at midwinter."""
    doy = (np.arange(n) // 24 + start.timetuple().tm_yday - 1) % 365
    return 0.65 - 0.35 * np.cos(2 * np.pi * (doy + 10) / 365.0)


def _weekday(n, start):
    return np.array([(start + dt.timedelta(days=int(d))).weekday() for d in np.arange(n) // 24])


def residential_series(spec: ScenarioSpec, rng, n):
    h = _hours(n)
    load = np.full(n, spec.base_load)
    load += spec.morning_load * ((h >= 6) & (h < 9))
    load += spec.evening_load * ((h >= spec.peak_start) & (h < spec.peak_end))
    load *= rng.uniform(0.9, 1.1, n)
    sun = np.clip(np.sin(np.pi * (h - 6) / 12.0), 0.0, None)
    pv = spec.pv_peak * sun * _season(n, spec.start) * rng.uniform(0.6, 1.0, n)
    return np.round(load, 3), np.round(pv, 3)


def office_series(spec: ScenarioSpec, rng, n):
    h = _hours(n)
    work = (h >= 8) & (h < 18) & (_weekday(n, spec.start) < 5)
    load = 0.2 * spec.office_load + 0.8 * spec.office_load * work
    load = load * rng.uniform(0.9, 1.1, n)
    sun = np.clip(np.sin(np.pi * (h - 6) / 12.0), 0.0, None)
    pv = 2.0 * spec.pv_peak * sun * _season(n, spec.start) * rng.uniform(0.6, 1.0, n)
    return np.round(load, 3), np.round(pv, 3)


def price_series(spec: ScenarioSpec, n):
    h = _hours(n)
    peak = (h >= spec.peak_start) & (h < spec.peak_end)
    return np.where(peak, spec.peak_price, spec.cheap_price)


def carbon_series(spec: ScenarioSpec, rng, n):
    h = _hours(n)
    sun = np.clip(np.sin(np.pi * (h - 6) / 12.0), 0.0, None)
    return np.round(0.35 - 0.12 * sun + 0.05 * ((h >= 17) & (h < 22)) + rng.normal(0, 0.01, n), 4)


def _write_columns(path: Path, header, cols) -> None:
    lines = [",".join(header)]
    for rec in zip(*[np.asarray(c).tolist() for c in cols]):
        lines.append(",".join(repr(float(v)) for v in rec))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_scenario(out_dir, spec: Optional[ScenarioSpec] = None) -> Path:
    """Write a scenario directory and return the path of its JSON config."""
    spec = spec or ScenarioSpec()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = spec.steps
    rng = np.random.default_rng(spec.seed)

    charger = {
        "nominal_power_charging": spec.charger_power,
        "nominal_power_discharging": spec.charger_power,
        "efficiency": spec.charger_efficiency,
    }
    battery = {
        "capacity": spec.battery_capacity,
        "nominal_power": spec.battery_power,
        "efficiency": spec.battery_efficiency,
        "loss_coefficient": spec.loss_coefficient,
        "depth_of_discharge": spec.depth_of_discharge,
    }
    buildings: Dict[str, dict] = {}
    evs: Dict[str, dict] = {}

    for i in range(1, spec.n_household + 1):
        name = f"Building_{i}"
        load, pv = residential_series(spec, rng, n)
        _write_columns(out / f"{name}.csv", ("non_shiftable_load", "solar_generation"), (load, pv))
        cid = charger_id(i, 1, 1)
        buildings[name] = {"energy_simulation": f"{name}.csv", "chargers": {cid: dict(charger)}}
        params = GeneratorParams(mode=GeneratorMode.HOUSEHOLD, chargers=(cid,), seed=spec.seed * 1000 + i,
                                 calendar_start=spec.start, **spec.household)
        ev = f"EV_{i}"
        write_schedule(generate(params, n), out / schedule_filename(i))
        evs[ev] = {"energy_simulation": schedule_filename(i), "battery": dict(battery), "initial_soc": 0.5}

    if spec.n_workplace or spec.office_chargers:
        b = spec.n_household + 1
        name = f"Building_{b}"
        load, pv = office_series(spec, rng, n)
        _write_columns(out / f"{name}.csv", ("non_shiftable_load", "solar_generation"), (load, pv))
        pool = tuple(charger_id(b, k, 1) for k in range(1, spec.office_chargers + 1))
        buildings[name] = {"energy_simulation": f"{name}.csv", "chargers": {c: dict(charger) for c in pool}}
        for j in range(1, spec.n_workplace + 1):
            k = spec.n_household + j
            params = GeneratorParams(mode=GeneratorMode.WORKPLACE, chargers=pool, seed=spec.seed * 1000 + k,
                                     calendar_start=spec.start, **spec.workplace)
            write_schedule(generate(params, n), out / schedule_filename(k))
            evs[f"EV_{k}"] = {"energy_simulation": schedule_filename(k), "battery": dict(battery),
                              "initial_soc": 0.5}

    _write_columns(out / "pricing.csv", ("electricity_pricing",), (price_series(spec, n),))
    _write_columns(out / "carbon_intensity.csv", ("carbon_intensity",), (carbon_series(spec, rng, n),))

    config = {
        "mode": spec.mode,
        "timestep_hours": 1.0,
        "horizon_steps": n,
        "calendar_start": spec.start.isoformat(),
        "seed": spec.seed,
        "arrival_soc_noise_std": spec.arrival_soc_noise_std,
        "pricing": "pricing.csv",
        "carbon_intensity": "carbon_intensity.csv",
        "reward": {"cost": 1.0, "carbon": 1.0, "ramp": 0.1, "soc": 10.0},
        "buildings": buildings,
        "electric_vehicles": evs,
    }
    if spec.rbc:
        config["rbc"] = dict(spec.rbc)
    path = out / "scenario.json"
    path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return path


def district_spec(days: int = 1461, seed: int = 7) -> ScenarioSpec:
    """Nine buildings and twelve EVs: eight at home chargers, four sharing two office chargers."""
    return ScenarioSpec(days=days, seed=seed)


def smoke_spec() -> ScenarioSpec:
    """Small shipped scenario: three homes, two commuters, two weeks."""
    return ScenarioSpec(days=14, n_household=3, n_workplace=2, office_chargers=1, seed=11)


def smoke_scenario() -> Path:
    return SMOKE_DIR / "scenario.json"


PRESETS = {"smoke": smoke_spec, "district": district_spec}
