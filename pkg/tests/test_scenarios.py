import json

from evgrid.config import load_config
from evgrid.dataset import errors_only, parse_schedule, validate_schedule
from evgrid.scenarios import SMOKE_DIR, ScenarioSpec, district_spec, smoke_spec, write_scenario


def test_regenerated_smoke_matches_shipped(tmp_path):
    write_scenario(tmp_path, smoke_spec())
    shipped = sorted(p.name for p in SMOKE_DIR.iterdir() if p.is_file())
    assert sorted(p.name for p in tmp_path.iterdir()) == shipped
    for name in shipped:
        assert (tmp_path / name).read_bytes() == (SMOKE_DIR / name).read_bytes(), name


def test_smoke_price_is_two_tier():
    price = [float(x) for x in (SMOKE_DIR / "pricing.csv").read_text().splitlines()[1:]]
    assert sorted(set(price)) == [0.1, 0.4]
    assert price[:24] == [0.4 if 17 <= h < 22 else 0.1 for h in range(24)]


def test_district_layout(tmp_path):
    spec = district_spec(days=7)
    cfg = load_config(write_scenario(tmp_path, spec))
    assert len(cfg.buildings) == 9 and len(cfg.evs) == 12
    office = cfg.buildings[-1]
    assert len(office.chargers) == 2


def test_schedules_are_valid(tmp_path):
    write_scenario(tmp_path, ScenarioSpec(days=21, n_household=2, n_workplace=2, seed=4))
    for p in tmp_path.glob("electric_vehicle_*.csv"):
        assert errors_only(validate_schedule(parse_schedule(p))) == []


def test_rbc_settings_written(tmp_path):
    path = write_scenario(tmp_path, ScenarioSpec(days=1, n_household=1, n_workplace=0, office_chargers=0,
                                                 rbc={"low_threshold": 0.1}))
    assert json.loads(path.read_text())["rbc"] == {"low_threshold": 0.1}
