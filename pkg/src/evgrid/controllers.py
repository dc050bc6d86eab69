"""Built-in charging policies.

A policy maps the per-charger observation matrix (rows as in
:data:`evgrid.env.OBS_FIELDS`) plus the environment's context to one action
per charger. External agents implement the same contract over the bridge.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core_models import SimulationMode

RESERVE_SOC = 0.2
LOW_QUANTILE = 0.25
HIGH_QUANTILE = 0.75
MARGIN = 1e-9


def no_control(observations) -> np.ndarray:
    """Full charge for every connected EV that is not yet full."""
    obs = np.asarray(observations, dtype=float).reshape(-1, 6)
    return np.where((obs[:, 0] == 1) & (obs[:, 1] < 1.0), 1.0, 0.0)


def minimum_action(need, steps_left, gain, loss=0.0):
    """Smallest charge fraction now that still reaches ``need`` by departure.

    ``steps_left`` counts the charging steps remaining including this one,
    ``gain`` is the SoC added by one step at full power and ``loss`` the SoC
    lost per step whatever the action. The remaining ``steps_left - 1`` steps
    are assumed to run at full power.
    """
    if need + loss <= 0:
        return 0.0
    if gain <= 0:
        return 1.0
    # a full battery still bleeds ``loss`` per step, so need <= 0 is not enough
    later = max(steps_left - 1, 0) * (gain - loss)
    # the margin keeps float rounding from leaving a sliver of SoC uncharged
    return float(min(max((need + loss + MARGIN - later) / gain, 0.0), 1.0))


def rbc_price(observations, price, low_threshold, high_threshold, mode=SimulationMode.V2G,
              gain=None, drop=None, reserve=RESERVE_SOC, loss=None) -> np.ndarray:
    """Price-threshold rules with a departure-deadline guard.

    Per connected charger: cheap price charges fully; expensive price
    discharges fully in V2G when SoC is above ``reserve`` and the required
    SoC can still be recovered at full power before departure; otherwise the
    EV charges just enough to stay on track for its required SoC. ``gain``
    and ``drop`` are the per-step SoC change at full charge and full discharge
    and ``loss`` the standing loss per step (scalars or one per charger);
    without them the deadline guard treats every step as able to add a full
    10% of SoC with no loss.
    """
    if low_threshold > high_threshold:
        raise ValueError("low_threshold must not exceed high_threshold")
    mode = SimulationMode.parse(mode)
    obs = np.asarray(observations, dtype=float).reshape(-1, 6)
    n = obs.shape[0]
    gain = np.broadcast_to(np.asarray(0.1 if gain is None else gain, dtype=float), (n,))
    drop = np.broadcast_to(np.asarray(gain if drop is None else drop, dtype=float), (n,))
    loss = np.broadcast_to(np.asarray(0.0 if loss is None else loss, dtype=float), (n,))
    out = np.zeros(n)
    for c in range(n):
        state, soc, dep, req = obs[c, 0], obs[c, 1], obs[c, 2], obs[c, 3]
        if state != 1:
            continue
        if dep < 0 or req < 0:
            # open-ended stay: a plain price rule
            if price <= low_threshold and soc < 1.0:
                out[c] = 1.0
            elif price >= high_threshold and mode.allows_discharge and soc > reserve:
                out[c] = -1.0
            continue
        steps_left = int(dep) + 1
        need = req - soc
        forced = minimum_action(need, steps_left, gain[c], loss[c])
        if price <= low_threshold:
            out[c] = 1.0 if soc < 1.0 else 0.0
        elif price >= high_threshold and mode.allows_discharge and soc > reserve \
                and forced == 0.0 and req - (soc - drop[c]) <= (steps_left - 1) * (gain[c] - loss[c]):
            out[c] = -1.0
        else:
            out[c] = forced
    lo, hi = mode.action_range
    return np.clip(out, lo, hi)


def price_thresholds(price, rbc: Optional[dict] = None):
    """Low/high thresholds: quantiles of the price series unless configured."""
    rbc = rbc or {}
    price = np.asarray(price, dtype=float)
    low = rbc.get("low_threshold", float(np.quantile(price, rbc.get("low_quantile", LOW_QUANTILE))))
    high = rbc.get("high_threshold", float(np.quantile(price, rbc.get("high_quantile", HIGH_QUANTILE))))
    return float(low), float(high)


class NoControlPolicy:
    name = "nocontrol"

    def act(self, observations, env=None):
        return no_control(observations)


@dataclass
class RbcPolicy:
    low_threshold: float
    high_threshold: float
    reserve: float = RESERVE_SOC
    name = "rbc"

    @classmethod
    def for_env(cls, env) -> "RbcPolicy":
        low, high = price_thresholds(env.price, env.config.rbc)
        return cls(low, high, float(env.config.rbc.get("reserve", RESERVE_SOC)))

    def act(self, observations, env):
        gain, drop, loss = env.soc_rates()
        return rbc_price(observations, env.current_price, self.low_threshold, self.high_threshold,
                         env.mode, gain, drop, self.reserve, loss)


def make_policy(name: str, env=None):
    key = name.replace("_", "").replace("-", "").lower()
    if key in ("nocontrol", "none", "baseline"):
        return NoControlPolicy()
    if key in ("rbc", "rbcprice"):
        if env is None:
            raise ValueError("the rbc policy needs the environment to pick its thresholds")
        return RbcPolicy.for_env(env)
    raise ValueError(f"unknown policy {name!r}")
