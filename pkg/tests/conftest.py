import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from evgrid.dataset import EvScheduleRow, EvState, write_schedule  # noqa: E402

PR, INC, TR = EvState.PLUGGED_READY, EvState.INCOMING, EvState.TRANSIT


def rows_from(spec, start_hour=0):
    """Schedule rows from compact tuples.

    Each item is ``("P", charger, departure_steps, req_soc)``,
    ``("I", charger, arrival_steps, est_soc)`` or ``("T",)``.
    """
    out = []
    for t, item in enumerate(spec):
        hour = (start_hour + t) % 24 + 1
        kind = item[0]
        if kind == "P":
            out.append(EvScheduleRow(1, hour, PR, item[1], item[2], item[3], None, None))
        elif kind == "I":
            out.append(EvScheduleRow(1, hour, INC, item[1], None, None, item[2], item[3]))
        else:
            out.append(EvScheduleRow(1, hour, TR, None, None, None, None, None))
    return out


def plugged(charger, n, req=0.8, then=None):
    """``n`` plugged-in rows counting down to departure."""
    return [("P", charger, n - 1 - k, req) for k in range(n)] + (then or [])


def write_tiny(root, evs, chargers=("EVC_1_1_1",), steps=None, load=1.0, pv=0.0, price=0.2, carbon=0.3,
               mode="V2G", battery=None, charger=None, noise=0.0, initial_soc=0.5, buildings=None, extra=None):
    """Write a small scenario; ``evs`` maps EV name -> row spec list."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    n = steps or max(len(v) for v in evs.values())
    buildings = buildings or {"Building_1": list(chargers)}
    bspec = {}
    for b, cids in buildings.items():
        ld = np.broadcast_to(np.asarray(load, dtype=float), (n,))
        p = np.broadcast_to(np.asarray(pv, dtype=float), (n,))
        (root / f"{b}.csv").write_text(
            "non_shiftable_load,solar_generation\n" + "".join(f"{x!r},{y!r}\n" for x, y in zip(ld.tolist(), p.tolist())))
        cs = {"nominal_power_charging": 7.4, "nominal_power_discharging": 7.4, "efficiency": 1.0}
        cs.update(charger or {})
        bspec[b] = {"energy_simulation": f"{b}.csv", "chargers": {c: dict(cs) for c in cids}}
    pr = np.broadcast_to(np.asarray(price, dtype=float), (n,))
    ca = np.broadcast_to(np.asarray(carbon, dtype=float), (n,))
    (root / "pricing.csv").write_text("electricity_pricing\n" + "".join(f"{x!r}\n" for x in pr.tolist()))
    (root / "carbon_intensity.csv").write_text("carbon_intensity\n" + "".join(f"{x!r}\n" for x in ca.tolist()))
    bat = {"capacity": 40.0, "nominal_power": 7.4, "efficiency": 1.0, "depth_of_discharge": 0.9}
    bat.update(battery or {})
    ev_spec = {}
    for i, (name, spec) in enumerate(evs.items(), 1):
        rows = rows_from(spec) if spec and isinstance(spec[0], tuple) else spec
        fname = f"electric_vehicle_{i}.csv"
        write_schedule(rows, root / fname)
        ev_spec[name] = {"energy_simulation": fname, "battery": dict(bat), "initial_soc": initial_soc}
    cfg = {
        "mode": mode, "timestep_hours": 1.0, "horizon_steps": n, "seed": 0,
        "arrival_soc_noise_std": noise, "pricing": "pricing.csv", "carbon_intensity": "carbon_intensity.csv",
        "buildings": bspec, "electric_vehicles": ev_spec,
    }
    cfg.update(extra or {})
    path = root / "scenario.json"
    path.write_text(json.dumps(cfg, indent=1))
    return path


@pytest.fixture
def tiny(tmp_path):
    def make(evs, **kw):
        return write_tiny(tmp_path / f"s{len(list(tmp_path.iterdir()))}", evs, **kw)
    return make


@pytest.fixture(scope="session")
def district_path(tmp_path_factory):
    from evgrid.scenarios import district_spec, write_scenario
    return write_scenario(tmp_path_factory.mktemp("district"), district_spec(days=1461))
