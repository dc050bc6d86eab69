"""FlexOffer envelopes for plugged-in EVs.

A FlexOffer records when an EV becomes available (``earliest_start``), when
it leaves (``latest_start``, unknown for open-ended stays), the SoC it must
leave with and one power slice per step. Slices built at plug-in are a static
envelope; the environment re-evaluates the bounds every step as SoC moves.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from .core_models import Charger, EvBattery, SimulationMode, slice_limits
from .dataset import EvScheduleRow, EvState, ScheduleError

TOLERANCE = 1e-9


@dataclass(frozen=True)
class Slice:
    p_min: float
    p_max: float

    def __post_init__(self):
        if not self.p_min <= 0.0 <= self.p_max:
            raise ValueError(f"slice must satisfy p_min <= 0 <= p_max, got ({self.p_min}, {self.p_max})")


@dataclass(frozen=True)
class FlexOffer:
    earliest_start: int
    latest_start: Optional[int]
    soc_departure: Optional[float]
    slices: Tuple[Slice, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "slices", tuple(self.slices))
        if self.latest_start is not None:
            if self.latest_start < self.earliest_start:
                raise ValueError("latest_start precedes earliest_start")
            if len(self.slices) != self.latest_start - self.earliest_start:
                raise ValueError("slices must span [earliest_start, latest_start)")
        if self.soc_departure is not None and not 0.0 <= self.soc_departure <= 1.0:
            raise ValueError("soc_departure must lie in [0, 1]")

    @property
    def open_ended(self) -> bool:
        """No known departure: treat the EV as a stationary battery for now."""
        return self.latest_start is None


def slice_bounds(charger: Charger, battery: EvBattery, mode: SimulationMode) -> Tuple[float, float]:
    charger = charger.for_mode(SimulationMode.parse(mode))
    p_min, p_max = slice_limits(charger, battery)
    return (p_min if p_min != 0 else 0.0), p_max


def build_flexoffer(window: Sequence[EvScheduleRow], earliest_start: int, charger: Charger,
                    battery: EvBattery, mode: SimulationMode) -> FlexOffer:
    """FlexOffer for the plugged-in interval starting at ``earliest_start``.

    ``window`` holds the schedule rows from plug-in onwards; it must be one
    unbroken PluggedReady session on one charger.
    """
    if not window:
        return FlexOffer(earliest_start, None, None, ())
    for i, row in enumerate(window):
        if row.ev_state is not EvState.PLUGGED_READY:
            raise ScheduleError(f"window row {i} is {row.ev_state.name}, not PluggedReady")
        if row.charger_id != window[0].charger_id:
            raise ScheduleError(f"window row {i} switches charger")
        if i and None not in (row.est_departure_steps, window[i - 1].est_departure_steps) \
                and row.est_departure_steps != window[i - 1].est_departure_steps - 1:
            raise ScheduleError(f"window row {i} breaks the departure countdown")
    first = window[0]
    bounds = Slice(*slice_bounds(charger, battery, mode))
    if first.est_departure_steps is None:
        return FlexOffer(earliest_start, None, first.req_soc_departure, (bounds,) * len(window))
    n = first.est_departure_steps + 1
    return FlexOffer(earliest_start, earliest_start + n, first.req_soc_departure, (bounds,) * n)


def validate_action(flexoffer_slice: Slice, realized_power: float) -> bool:
    return (flexoffer_slice.p_min - TOLERANCE <= realized_power
            <= flexoffer_slice.p_max + TOLERANCE)


FLEXOFFER_COLUMNS = ("ev_id", "charger_id", "t_es", "t_ls", "soc_departure", "slice", "p_min", "p_max")


def flexoffer_records(ev_id: str, charger: str, fo: FlexOffer) -> List[tuple]:
    t_ls = "nan" if fo.latest_start is None else fo.latest_start
    soc = "nan" if fo.soc_departure is None else repr(fo.soc_departure)
    return [(ev_id, charger, fo.earliest_start, t_ls, soc, k, repr(s.p_min), repr(s.p_max))
            for k, s in enumerate(fo.slices)]


def write_flexoffers(path, records: Iterable[tuple]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FLEXOFFER_COLUMNS)
        w.writerows(records)
