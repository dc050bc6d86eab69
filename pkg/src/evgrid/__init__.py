"""Discrete-time simulator for EV charging and vehicle-to-grid in energy communities."""

from .config import ConfigError, ScenarioConfig, load_config
from .controllers import NoControlPolicy, RbcPolicy, make_policy, no_control, rbc_price
from .core_models import Charger, EnergyTransfer, EvBattery, SimulationMode, charge_discharge
from .env import ChargerObservation, EvChargingEnv, InvariantViolation, StepResult, run_episode
from .kpi import KpiReport, compute_kpis, normalize

__version__ = "0.1.0"
