import datetime
import random
from decimal import Decimal

import numpy as np
import pytest

from farmledger.analytics import (Filter, LinearFit, apply_filter, linear_fit,
                                  summary, yield_over_time, yield_vs_resource)
from farmledger.farm import Dataset, FarmRecord

PRODUCTS = ("tomato", "lettuce", "kale", "strawberry")
LOCATIONS = ("Kyoto", "Osaka", "Nagoya")
FARM_TYPES = ("conventional", "vertical")


def make_record(rng: random.Random) -> FarmRecord:
    start = datetime.date(2022, 1, 1)
    return FarmRecord(
        date=start + datetime.timedelta(days=rng.randrange(730)),
        farm_id=f"farm-{rng.randrange(10)}",
        location=rng.choice(LOCATIONS),
        farm_type=rng.choice(FARM_TYPES),
        product_type=rng.choice(PRODUCTS),
        yield_kg=Decimal(rng.randrange(0, 100000)) / 100,
        water_l=Decimal(rng.randrange(0, 1000000)) / 100,
        electricity_kwh=Decimal(rng.randrange(0, 50000)) / 100,
        fertilizer_kg=Decimal(rng.randrange(0, 10000)) / 100,
    )


@pytest.fixture(scope="module")
def big_dataset() -> Dataset:
    rng = random.Random(2024)
    return Dataset(records=tuple(make_record(rng) for _ in range(1000)))


class TestFilter:
    def test_empty_filter_matches_all(self, big_dataset):
        assert apply_filter(big_dataset, Filter()) == big_dataset

    def test_each_dimension(self, big_dataset):
        f = Filter(product_type="tomato")
        out = apply_filter(big_dataset, f)
        assert all(r.product_type == "tomato" for r in out.records)
        assert len(out) == sum(r.product_type == "tomato" for r in big_dataset.records)

        f = Filter(location="Kyoto", farm_type="vertical")
        out = apply_filter(big_dataset, f)
        assert all(r.location == "Kyoto" and r.farm_type == "vertical"
                   for r in out.records)

    def test_date_range_inclusive(self, big_dataset):
        lo, hi = datetime.date(2022, 6, 1), datetime.date(2022, 6, 30)
        out = apply_filter(big_dataset, Filter(date_range=(lo, hi)))
        assert all(lo <= r.date <= hi for r in out.records)
        boundary = [r for r in big_dataset.records if r.date in (lo, hi)]
        assert all(r in out.records for r in boundary)

    def test_partition_property(self, big_dataset):
        # product filters partition the dataset: sizes add up to the whole
        total = sum(len(apply_filter(big_dataset, Filter(product_type=p)))
                    for p in PRODUCTS)
        assert total == len(big_dataset)

    def test_preserves_order(self, big_dataset):
        out = apply_filter(big_dataset, Filter(farm_type="vertical")).records
        expected = tuple(r for r in big_dataset.records if r.farm_type == "vertical")
        assert out == expected


class TestYieldOverTime:
    def test_matches_brute_force_oracle(self, big_dataset):
        for bucket in ("day", "month", "year"):
            series = yield_over_time(big_dataset, Filter(), bucket)
            by_bucket = {}
            for r in big_dataset.records:
                if bucket == "day":
                    key = r.date
                elif bucket == "month":
                    key = r.date.replace(day=1)
                else:
                    key = r.date.replace(month=1, day=1)
                by_bucket[key] = by_bucket.get(key, 0.0) + float(r.yield_kg)
            got = {d: v for d, v in series if v != 0.0}
            assert set(got) == set(by_bucket)
            for key, total in by_bucket.items():
                assert got[key] == pytest.approx(total, rel=1e-12)

    def test_zero_fill_gaps(self):
        recs = (
            FarmRecord(datetime.date(2023, 1, 5), "f", "L", "vertical", "kale",
                       Decimal(10), Decimal(1), Decimal(1), Decimal(1)),
            FarmRecord(datetime.date(2023, 4, 5), "f", "L", "vertical", "kale",
                       Decimal(20), Decimal(1), Decimal(1), Decimal(1)),
        )
        series = yield_over_time(Dataset(recs), Filter(), "month")
        assert [d.month for d, _ in series] == [1, 2, 3, 4]
        assert [v for _, v in series] == [10.0, 0.0, 0.0, 20.0]

    def test_empty_selection(self, big_dataset):
        assert yield_over_time(big_dataset, Filter(product_type="durian")) == []

    def test_bad_bucket(self, big_dataset):
        with pytest.raises(ValueError):
            yield_over_time(big_dataset, Filter(), "week")

    def test_total_is_translation_invariant_under_bucketing(self, big_dataset):
        import math
        whole = math.fsum(float(r.yield_kg) for r in big_dataset.records)
        for bucket in ("day", "month", "year"):
            series = yield_over_time(big_dataset, Filter(), bucket)
            assert math.fsum(v for _, v in series) == pytest.approx(whole, rel=1e-12)


class TestLinearFit:
    def test_exact_line(self):
        pts = [(x, 3.0 * x - 2.0) for x in range(10)]
        fit = linear_fit(pts)
        assert fit.slope == pytest.approx(3.0, abs=1e-12)
        assert fit.intercept == pytest.approx(-2.0, abs=1e-12)
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)

    def test_horizontal_line_r2_one(self):
        fit = linear_fit([(0, 5.0), (1, 5.0), (2, 5.0)])
        assert fit.slope == 0.0
        assert fit.r2 == 1.0

    def test_absent_for_degenerate_inputs(self):
        assert linear_fit([]) is None
        assert linear_fit([(1.0, 2.0)]) is None
        assert linear_fit([(3.0, 1.0), (3.0, 9.0)]) is None  # vertical

    def test_matches_normal_equations_oracle(self):
        rng = random.Random(9)
        for _ in range(50):
            n = rng.randrange(2, 200)
            xs = [rng.uniform(-100, 100) for _ in range(n)]
            if len(set(xs)) < 2:
                continue
            ys = [2.5 * x + rng.gauss(0, 10) for x in xs]
            fit = linear_fit(list(zip(xs, ys)))
            slope_o, intercept_o = np.polyfit(np.array(xs), np.array(ys), 1)
            assert fit.slope == pytest.approx(slope_o, abs=1e-9)
            assert fit.intercept == pytest.approx(intercept_o, abs=1e-9)
            corr = np.corrcoef(xs, ys)[0, 1]
            assert fit.r2 == pytest.approx(corr * corr, abs=1e-9)

    def test_r2_clamped(self):
        fit = linear_fit([(0, 0.0), (1, 10.0), (2, -5.0), (3, 8.0)])
        assert 0.0 <= fit.r2 <= 1.0


class TestYieldVsResource:
    def test_groups_match_oracle(self, big_dataset):
        out = yield_vs_resource(big_dataset, Filter(), "water_l", "product_type")
        assert list(out) == sorted(set(r.product_type for r in big_dataset.records))
        for label, group in out.items():
            expected = [(float(r.water_l), float(r.yield_kg))
                        for r in big_dataset.records if r.product_type == label]
            assert group["points"] == expected
            assert group["fit"] == linear_fit(expected)

    def test_group_by_each_dimension(self, big_dataset):
        for dim in ("farm_type", "product_type", "location"):
            out = yield_vs_resource(big_dataset, Filter(), "electricity_kwh", dim)
            assert set(out) == set(getattr(r, dim) for r in big_dataset.records)

    def test_bad_arguments(self, big_dataset):
        with pytest.raises(ValueError):
            yield_vs_resource(big_dataset, Filter(), "yield_kg", "location")
        with pytest.raises(ValueError):
            yield_vs_resource(big_dataset, Filter(), "water_l", "farm_id")

    def test_single_point_group_has_no_fit(self):
        recs = (FarmRecord(datetime.date(2023, 1, 1), "f", "L", "vertical", "kale",
                           Decimal(1), Decimal(2), Decimal(3), Decimal(4)),)
        out = yield_vs_resource(Dataset(recs), Filter(), "water_l", "location")
        assert out["L"]["fit"] is None


class TestSummary:
    def test_matches_numpy_oracle(self, big_dataset):
        s = summary(big_dataset, Filter())
        assert s["record_count"] == 1000
        for field in ("yield_kg", "water_l", "electricity_kwh", "fertilizer_kg"):
            oracle = float(np.sum([float(getattr(r, field))
                                   for r in big_dataset.records], dtype=np.float64))
            assert s[field] == pytest.approx(oracle, rel=1e-12)

    def test_filtered_sums_partition(self, big_dataset):
        whole = summary(big_dataset, Filter())["yield_kg"]
        parts = sum(summary(big_dataset, Filter(farm_type=t))["yield_kg"]
                    for t in FARM_TYPES)
        assert parts == pytest.approx(whole, rel=1e-12)

    def test_empty(self):
        s = summary(Dataset(records=()), Filter())
        assert s == {"yield_kg": 0.0, "water_l": 0.0, "electricity_kwh": 0.0,
                     "fertilizer_kg": 0.0, "record_count": 0}
