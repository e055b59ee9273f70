import math

import pytest

from dyadic.covers import DigitRestricted, ExplicitCover, FullInterval, natural_step
from dyadic.dimension import audit_count_bounds, estimate_box_dim, fit_slope
from dyadic.errors import InvalidParameterError, ScaleOverflowError, UndefinedDimensionError


@pytest.mark.parametrize("m,digits", [(2, (0, 3)), (3, (0, 7)), (2, (0, 1, 3))])
def test_box_dimension_is_exact_on_block_scales(m, digits):
    spec = DigitRestricted(m=m, digits=digits)
    estimate = estimate_box_dim(spec, 2 * m, 24, step=natural_step(spec))
    assert estimate.H_hat == pytest.approx(math.log2(len(digits)) / m, abs=1e-12)
    assert estimate.residual < 1e-9
    assert estimate.step == m


def test_unit_interval_dimension_one(unit):
    estimate = estimate_box_dim(unit, 1, 16)
    assert estimate.H_hat == pytest.approx(1.0)
    assert estimate.per_level_counts[0] == (1, 2)
    assert estimate.limsup_estimate == pytest.approx(1.0)


def test_odd_scales_oscillate_without_natural_step(cantor_half):
    estimate = estimate_box_dim(cantor_half, 3, 21)
    assert estimate.H_hat == pytest.approx(0.5, abs=0.02)
    assert estimate.residual > 0.1


@pytest.mark.parametrize("m,digits", [(2, (0, 3)), (3, (0, 7)), (2, (0, 1, 3))])
def test_count_bounds_audit_passes(m, digits):
    spec = DigitRestricted(m=m, digits=digits)
    H = math.log2(len(digits)) / m
    audit = audit_count_bounds(spec, H, 0.3, (2 * m, 24))
    assert audit.all_passed
    assert audit.failures == []
    assert audit.first_passing == 2 * m


def test_count_audit_reports_failing_scales(cantor_half):
    audit = audit_count_bounds(cantor_half, 0.9, 0.1, (2, 10))
    assert not audit.all_passed
    assert audit.failures == list(range(2, 11))
    assert audit.first_passing is None
    assert audit.to_dict()["failures"] == audit.failures


def test_empty_cover_has_no_dimension():
    spec = ExplicitCover(levels={4: ()})
    with pytest.raises(UndefinedDimensionError):
        estimate_box_dim(spec, 1, 4)


def test_window_validation():
    with pytest.raises(InvalidParameterError):
        estimate_box_dim(FullInterval(), 5, 5)
    with pytest.raises(ScaleOverflowError):
        estimate_box_dim(FullInterval(), 1, 40, max_scale=26)
    with pytest.raises(InvalidParameterError):
        audit_count_bounds(FullInterval(), 1.0, 0.0, (1, 4))


def test_fit_slope_needs_two_points():
    fit = fit_slope([2, 4, 6], [1, 2, 3])
    assert fit.slope == pytest.approx(0.5)
    assert fit.window == (2, 6)
    with pytest.raises(UndefinedDimensionError):
        fit_slope([1], [1])
