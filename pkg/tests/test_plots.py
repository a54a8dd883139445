"""SVG chart rendering."""

from __future__ import annotations

import numpy as np
import pytest
from conftest import series

from m3sim import (
    MetaAgg,
    MetaSpec,
    Metric,
    MultiModel,
    Unit,
    ValidationError,
    WindowSpec,
    derive_meta,
    plot_timeseries,
    plot_totals,
)
from m3sim.plots import META_COLOR


def multi(k=4, n=12, metric=Metric.POWER, unit=Unit.WATT, seed=0):
    rng = np.random.default_rng(seed)
    members = tuple(
        (f"m{i}", series(rng.uniform(50, 200, n), unit=unit)) for i in range(k)
    )
    return MultiModel(metric=metric, window=WindowSpec(size=1), members=members)


def cumulative(k=3, n=10, seed=1):
    rng = np.random.default_rng(seed)
    members = tuple(
        (f"m{i}", series(np.cumsum(rng.uniform(0, 5, n)), unit=Unit.WATT_HOUR))
        for i in range(k)
    )
    return MultiModel(metric=Metric.ENERGY, window=WindowSpec(size=1), members=members)


class TestTimeseries:
    def test_one_polyline_per_member(self):
        svg = plot_timeseries(multi(k=4))
        assert svg.count("<polyline") == 4

    def test_meta_adds_fifth_line(self):
        mm = multi(k=4)
        meta = derive_meta(mm, MetaSpec(agg=MetaAgg.MEAN))
        svg = plot_timeseries(mm, meta=meta)
        assert svg.count("<polyline") == 5
        assert META_COLOR in svg

    def test_reference_is_dashed(self):
        mm = multi(k=2, n=8)
        ref = series(np.linspace(60, 190, 8), unit=Unit.WATT)
        svg = plot_timeseries(mm, reference=ref)
        assert svg.count("<polyline") == 3
        assert "stroke-dasharray" in svg

    def test_no_dash_without_reference(self):
        assert "stroke-dasharray" not in plot_timeseries(multi(k=2))

    def test_deterministic_output(self):
        a = plot_timeseries(multi(k=3, seed=5))
        b = plot_timeseries(multi(k=3, seed=5))
        assert a == b

    def test_title_and_svg_shell(self):
        svg = plot_timeseries(multi(k=1), title="fleet draw")
        assert svg.startswith("<svg ")
        assert svg.rstrip().endswith("</svg>")
        assert "fleet draw" in svg

    def test_flat_series_does_not_crash(self):
        mm = MultiModel(metric=Metric.POWER, window=WindowSpec(size=1),
                        members=(("m0", series([42.0] * 5, unit=Unit.WATT)),))
        svg = plot_timeseries(mm)
        assert "<polyline" in svg


class TestTotals:
    def test_one_bar_per_member(self):
        svg = plot_totals(cumulative(k=3))
        assert svg.count('class="bar"') == 3

    def test_meta_bar_is_last_and_labeled(self):
        mm = cumulative(k=9)
        meta = derive_meta(mm, MetaSpec(agg=MetaAgg.MEAN))
        svg = plot_totals(mm, meta=meta)
        assert svg.count('class="bar"') == 10
        assert ">M<" in svg
        last_member = svg.rfind(">m8<")
        meta_label = svg.rfind(">M<")
        assert meta_label > last_member  # meta row renders after all members

    def test_rejects_noncumulative_metric(self):
        with pytest.raises(ValidationError):
            plot_totals(multi(metric=Metric.POWER, unit=Unit.WATT))

    def test_deterministic_output(self):
        assert plot_totals(cumulative()) == plot_totals(cumulative())
