"""Visualizer aggregations: yield over time, yield vs resource, summaries."""

from __future__ import annotations

import datetime
import math
from dataclasses import dataclass

from .farm import Dataset, FarmRecord

RESOURCES = ("water_l", "electricity_kwh", "fertilizer_kg")
GROUP_DIMENSIONS = ("farm_type", "product_type", "location")
BUCKETS = ("day", "month", "year")


@dataclass(frozen=True)
class Filter:
    product_type: str | None = None
    location: str | None = None
    farm_type: str | None = None
    date_range: tuple[datetime.date, datetime.date] | None = None

    def matches(self, r: FarmRecord) -> bool:
        if self.product_type is not None and r.product_type != self.product_type:
            return False
        if self.location is not None and r.location != self.location:
            return False
        if self.farm_type is not None and r.farm_type != self.farm_type:
            return False
        if self.date_range is not None:
            start, end = self.date_range
            if not start <= r.date <= end:
                return False
        return True


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float


def apply_filter(ds: Dataset, f: Filter) -> Dataset:
    return Dataset(records=tuple(r for r in ds.records if f.matches(r)))


def _bucket_start(d: datetime.date, bucket: str) -> datetime.date:
    if bucket == "day":
        return d
    if bucket == "month":
        return d.replace(day=1)
    if bucket == "year":
        return d.replace(month=1, day=1)
    raise ValueError(f"unknown bucket {bucket!r}")


def _next_bucket(d: datetime.date, bucket: str) -> datetime.date:
    if bucket == "day":
        return d + datetime.timedelta(days=1)
    if bucket == "month":
        return datetime.date(d.year + (d.month == 12), d.month % 12 + 1, 1)
    return datetime.date(d.year + 1, 1, 1)


def yield_over_time(ds: Dataset, f: Filter, bucket: str = "month") -> list[tuple[datetime.date, float]]:
    """Total yield per calendar bucket, zero-filled across the data's date span."""
    if bucket not in BUCKETS:
        raise ValueError(f"bucket must be one of {BUCKETS}")
    records = apply_filter(ds, f).records
    if not records:
        return []
    sums: dict[datetime.date, list[float]] = {}
    for r in records:
        sums.setdefault(_bucket_start(r.date, bucket), []).append(float(r.yield_kg))
    first = min(sums)
    last = max(sums)
    series = []
    cur = first
    while cur <= last:
        series.append((cur, math.fsum(sums.get(cur, []))))
        cur = _next_bucket(cur, bucket)
    return series


def linear_fit(points: list[tuple[float, float]]) -> LinearFit | None:
    """Ordinary least squares; absent when fewer than two distinct x values."""
    if len(points) < 2 or len({x for x, _ in points}) < 2:
        return None
    n = len(points)
    xs = [x for x, _ in points]
    ys = [y for _, y in points]
    xbar = math.fsum(xs) / n
    ybar = math.fsum(ys) / n
    sxx = math.fsum((x - xbar) ** 2 for x in xs)
    sxy = math.fsum((x - xbar) * (y - ybar) for x, y in points)
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    ss_res = math.fsum((y - (slope * x + intercept)) ** 2 for x, y in points)
    ss_tot = math.fsum((y - ybar) ** 2 for y in ys)
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return LinearFit(slope=slope, intercept=intercept, r2=min(max(r2, 0.0), 1.0))


def yield_vs_resource(ds: Dataset, f: Filter, resource: str,
                      group_by: str) -> dict[str, dict]:
    """Scatter of (resource, yield) per group, with an OLS fit where defined."""
    if resource not in RESOURCES:
        raise ValueError(f"resource must be one of {RESOURCES}")
    if group_by not in GROUP_DIMENSIONS:
        raise ValueError(f"group_by must be one of {GROUP_DIMENSIONS}")
    groups: dict[str, list[tuple[float, float]]] = {}
    for r in apply_filter(ds, f).records:
        label = getattr(r, group_by)
        groups.setdefault(label, []).append((float(getattr(r, resource)), float(r.yield_kg)))
    return {label: {"points": pts, "fit": linear_fit(pts)}
            for label, pts in sorted(groups.items())}


def summary(ds: Dataset, f: Filter) -> dict:
    records = apply_filter(ds, f).records
    return {
        "yield_kg": math.fsum(float(r.yield_kg) for r in records),
        "water_l": math.fsum(float(r.water_l) for r in records),
        "electricity_kwh": math.fsum(float(r.electricity_kwh) for r in records),
        "fertilizer_kg": math.fsum(float(r.fertilizer_kg) for r in records),
        "record_count": len(records),
    }
