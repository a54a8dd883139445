"""Error metrics between reference and simulated series."""

from __future__ import annotations

import numpy as np
import pytest
from conftest import series
from hypothesis import given
from hypothesis import strategies as st

from m3sim import ValidationError, mae, mape, rmse, score


class TestMape:
    def test_hand_example(self):
        # |1-.9|/1, |2-2.2|/2, |4-4.4|/4 -> mean .1 -> 10%
        assert mape([1.0, 2.0, 4.0], [0.9, 2.2, 4.4]) == pytest.approx(10.0)

    def test_perfect_match_is_zero(self):
        assert mape([3.0, 5.0], [3.0, 5.0]) == 0.0

    def test_zero_reference_rejected(self):
        with pytest.raises(ValidationError, match="zero reference"):
            mape([1.0, 0.0], [1.0, 1.0])

    def test_symmetric_in_sign_of_error(self):
        assert mape([10.0], [9.0]) == mape([10.0], [11.0])

    def test_scale_invariant(self):
        r = np.array([4.0, 8.0, 15.0])
        s = np.array([5.0, 7.0, 16.0])
        assert mape(r, s) == pytest.approx(mape(r * 1000, s * 1000), rel=1e-12)

    def test_negative_reference_uses_magnitude(self):
        assert mape([-10.0], [-9.0]) == pytest.approx(10.0)


class TestRmseMae:
    def test_hand_example(self):
        r = [1.0, 2.0, 3.0, 4.0]
        s = [2.0, 4.0, 6.0, 8.0]
        # residuals 1,2,3,4 -> mse 30/4 = 7.5 -> rmse sqrt(7.5); mae 2.5
        assert rmse(r, s) == pytest.approx(np.sqrt(7.5), rel=1e-12)
        assert mae(r, s) == 2.5

    def test_frozen_example(self):
        r = [0.0, 0.0]
        s = [3.0, 4.0]
        assert mae(r, s) == 3.5
        assert rmse(r, s) == pytest.approx(np.sqrt(12.5), rel=1e-12)

    def test_single_sample_rmse_equals_mae(self):
        assert rmse([5.0], [8.0]) == 3.0
        assert mae([5.0], [8.0]) == 3.0

    @given(st.integers(min_value=1, max_value=40), st.integers(min_value=0, max_value=10**6))
    def test_rmse_dominates_mae(self, n, seed):
        rng = np.random.default_rng(seed)
        r, s = rng.normal(0, 10, n), rng.normal(0, 10, n)
        assert rmse(r, s) >= mae(r, s) - 1e-12

    def test_rmse_zero_iff_identical(self):
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0


class TestAlignment:
    def test_series_truncated_to_overlap(self):
        r = series([10.0, 10.0, 10.0, 10.0])
        s = series([11.0, 11.0])
        assert mape(r, s) == pytest.approx(10.0)

    def test_series_grid_mismatch(self):
        with pytest.raises(ValidationError, match="grid"):
            mape(series([1.0], step=60), series([1.0], step=30))
        with pytest.raises(ValidationError, match="grid"):
            mape(series([1.0], start=0), series([1.0], start=60))

    def test_mixed_series_and_array(self):
        assert mae(series([1.0, 2.0]), [2.0, 4.0]) == 1.5

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            mae([], [])


class TestScore:
    def test_dispatch(self):
        rep = score("mape", [10.0], [9.0])
        assert rep.metric == "mape"
        assert rep.value == pytest.approx(10.0)
        assert rep.n == 1
        assert score("rmse", [0.0], [3.0]).value == 3.0
        assert score("mae", [0.0, 0.0], [3.0, 4.0]).value == 3.5

    def test_unknown_metric(self):
        with pytest.raises(ValidationError):
            score("smape", [1.0], [1.0])
