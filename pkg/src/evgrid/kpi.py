"""District KPIs over a net-load trace and their baseline ratios.

All KPIs are "lower is better". With ``e`` the district net electricity per
step (import positive):

* D  electricity consumption: sum of max(e, 0)
* C  electricity price: sum of max(e, 0) * price
* G  carbon emissions: sum of max(e, 0) * carbon intensity
* Z  zero net energy: grid import as a share of load-side demand
     (building load plus EV charging); more self-consumption lowers it
* P  average daily peak: mean over days of the daily max of e; a trailing
     partial day counts as a day
* R  ramping: sum of |e_t - e_{t-1}|
* 1-L  one minus load factor: mean over months of 1 - mean(e)/max(e), taken
     as 0 for a month whose max is not positive
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import kernels
from ._accel import pick

KPI_ORDER = ("D", "C", "G", "Z", "P", "R", "1-L")
KPI_NAMES = {
    "D": "electricity_consumption",
    "C": "electricity_price",
    "G": "carbon_emissions",
    "Z": "zero_net_energy",
    "P": "average_daily_peak",
    "R": "ramping",
    "1-L": "one_minus_load_factor",
}
KPI_COLUMNS = ("kpi", "name", "raw", "baseline_raw", "ratio", "delta_pct", "flag")
HOURS_PER_MONTH = 730


class KpiError(ValueError):
    pass


@dataclass
class KpiReport:
    raw: Dict[str, float]
    baseline: Optional[Dict[str, float]] = None
    ratio: Dict[str, float] = field(default_factory=dict)
    absolute: Dict[str, bool] = field(default_factory=dict)

    def value(self, key: str) -> float:
        """Ratio when one exists, else the raw value."""
        return self.ratio.get(key, self.raw[key])

    def delta_pct(self, key: str) -> float:
        if key not in self.ratio:
            return float("nan")
        return (self.ratio[key] - 1.0) * 100.0

    def rows(self) -> List[tuple]:
        out = []
        for k in KPI_ORDER:
            base = self.baseline[k] if self.baseline else float("nan")
            r = self.ratio.get(k, float("nan"))
            flag = "absolute" if self.absolute.get(k) else ""
            out.append((k, KPI_NAMES[k], self.raw[k], base, r, self.delta_pct(k), flag))
        return out


def month_ids(n: int, timestep_hours: float, months=None) -> np.ndarray:
    """Period label per step: calendar months if given, else 730 h chunks."""
    if months is not None:
        m = np.asarray(months, dtype=np.int64)[:n]
        # consecutive runs of the same calendar month form one period
        return np.concatenate(([0], np.cumsum(m[1:] != m[:-1]))).astype(np.int64)
    per = max(int(round(HOURS_PER_MONTH / timestep_hours)), 1)
    return (np.arange(n) // per).astype(np.int64)


def compute_kpis(net, price, carbon, pv=None, load=None, timestep_hours: float = 1.0,
                 months=None, use_numba=None) -> KpiReport:
    """Raw KPIs; ``load`` is the load-side demand series used by Z."""
    e = np.ascontiguousarray(net, dtype=float)
    n = e.shape[0]
    if n == 0:
        raise KpiError("empty trace")
    price = np.asarray(price, dtype=float)
    carbon = np.asarray(carbon, dtype=float)
    if price.shape[0] != n or carbon.shape[0] != n:
        raise KpiError("price and carbon series must match the trace length")
    steps_per_day = int(round(24.0 / timestep_hours))
    if n < steps_per_day:
        raise KpiError(f"trace of {n} steps is shorter than one day ({steps_per_day} steps)")
    pos = np.maximum(e, 0.0)
    d = float(pos.sum())
    if load is None:
        demand = d
    else:
        demand = float(np.sum(load))
    z = d / demand if demand > 0 else 0.0
    peaks = pick(kernels.daily_peaks, use_numba)(e, steps_per_day)
    r = pick(kernels.ramping, use_numba)(e)
    lf = pick(kernels.period_one_minus_load_factor, use_numba)(e, month_ids(n, timestep_hours, months))
    raw = {
        "D": d,
        "C": float(np.dot(pos, price)),
        "G": float(np.dot(pos, carbon)),
        "Z": float(z),
        "P": float(peaks.mean()),
        "R": float(r),
        "1-L": float(lf.mean()),
    }
    return KpiReport(raw)


def kpis_from_series(series: dict, use_numba=None) -> KpiReport:
    return compute_kpis(series["net"], series["price"], series["carbon"], series.get("pv"),
                        series.get("demand"), series.get("timestep_hours", 1.0), series.get("months"),
                        use_numba=use_numba)


def normalize(report: KpiReport, baseline: KpiReport) -> KpiReport:
    """Ratios to ``baseline``; a zero baseline leaves the KPI absolute and flagged."""
    ratio, absolute = {}, {}
    for k in KPI_ORDER:
        b = baseline.raw[k]
        if not math.isfinite(b):
            raise KpiError(f"baseline {k} is not finite")
        if b == 0:
            absolute[k] = True
        else:
            ratio[k] = report.raw[k] / b
    return KpiReport(dict(report.raw), dict(baseline.raw), ratio, absolute)


def write_kpi_csv(report: KpiReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(KPI_COLUMNS)
        for k, name, raw, base, r, delta, flag in report.rows():
            w.writerow((k, name, repr(raw), repr(base), repr(r), repr(delta), flag))


def read_kpi_csv(path) -> KpiReport:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in KPI_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise KpiError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = {r["kpi"]: r for r in reader}
    absent = [k for k in KPI_ORDER if k not in rows]
    if absent:
        raise KpiError(f"{path}: missing KPI row(s) {', '.join(absent)}")
    raw = {k: float(rows[k]["raw"]) for k in KPI_ORDER}
    base = {k: float(rows[k]["baseline_raw"]) for k in KPI_ORDER}
    ratio = {k: float(rows[k]["ratio"]) for k in KPI_ORDER if rows[k]["flag"] != "absolute"}
    absolute = {k: True for k in KPI_ORDER if rows[k]["flag"] == "absolute"}
    return KpiReport(raw, base, ratio, absolute)


def _cell(report: KpiReport, k: str) -> str:
    if report.absolute.get(k):
        return f"{report.raw[k]:.4g} (abs)"
    if k not in report.ratio:
        return f"{report.raw[k]:.4g}"
    return f"{report.ratio[k]:.4f} ({report.delta_pct(k):+.2f}%)"


def format_table(reports: Sequence[KpiReport], labels: Sequence[str]) -> str:
    """Aligned text table, one row per KPI, one column per report."""
    head = ["KPI"] + list(labels)
    body = [[k] + [_cell(r, k) for r in reports] for k in KPI_ORDER]
    widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(head, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in body:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"
