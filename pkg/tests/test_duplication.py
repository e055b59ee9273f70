import math

import numpy as np
import pytest

from dyadic.covers import DigitRestricted, ExplicitCover, FiniteUnion, build_cover, place
from dyadic.duplication import (
    FD,
    ND,
    SD,
    DuplicationParams,
    audit_card_bounds,
    child_scale,
    classify,
    classify_counts,
)
from dyadic.errors import InvalidParameterError, ScaleOverflowError

SPECS = [(2, (0, 3)), (3, (0, 7)), (2, (0, 1, 3))]


@pytest.mark.parametrize("m,digits", SPECS)
@pytest.mark.parametrize("j", range(8, 13))
def test_partition_and_cardinality_bounds(m, digits, j):
    spec = DigitRestricted(m=m, digits=digits)
    params = DuplicationParams(beta=1.0, eps=0.1, H=math.log2(len(digits)) / m)
    report = classify(spec, j, params)
    n_sd, n_nd, n_fd, n_csd = report.counts
    assert n_sd + n_nd + n_fd == build_cover(spec, j).count
    assert n_csd == int(report.child_counts[report.classes == SD].sum())
    assert report.child_counts.sum() == report.child_total
    audit = audit_card_bounds(report, params)
    assert audit.all_passed, audit.to_dict()


def test_child_scale_floors():
    assert child_scale(8, 1.0) == 16
    assert child_scale(10, 0.5) == 15
    assert child_scale(3, 1 / 3) == 4


def test_equality_lands_in_normal_class():
    counts = np.array([1, 4, 16, 64])
    classes = classify_counts(counts, 4.0, 2.0)
    assert classes.tolist() == [SD, ND, ND, ND]
    assert classify_counts(counts, 4.0, 1.0).tolist() == [SD, SD, ND, FD]


def test_slow_duplication_detected():
    children = [0] + [k for k in range(16, 256)]
    spec = ExplicitCover(levels={4: tuple(range(16)), 8: tuple(children)})
    params = DuplicationParams(beta=1.0, eps=0.01, H=1.0)
    report = classify(spec, 4, params)
    assert report.counts == (1, 15, 0, 1)
    assert report.class_of(0) == "SD"
    assert report.class_of(5) == "ND"
    assert report.members(SD).tolist() == [0]
    assert report.rows()[0] == (4, 0, 1, "SD")
    sparse = classify(ExplicitCover(levels={4: (1,), 8: (16,)}), 4, params)
    with pytest.raises(KeyError):
        sparse.class_of(0)


def test_fast_duplication_breaks_the_fd_bound():
    spec = ExplicitCover(levels={8: (0,), 16: tuple(range(256))})
    params = DuplicationParams(beta=1.0, eps=0.05, H=0.05)
    report = classify(spec, 8, params)
    assert report.counts[2] == 1
    assert report.members(FD).tolist() == [0]
    audit = audit_card_bounds(report, params)
    assert not audit.fd.passed
    assert audit.fd.margin < 0
    assert not audit.all_passed
    assert audit.to_dict()["FD"]["passed"] is False


def test_proof_margin_is_reported(cantor_half):
    params = DuplicationParams(beta=1.0, eps=0.1, H=0.5)
    audit = audit_card_bounds(classify(cantor_half, 10, params), params)
    assert math.isinf(audit.sd_proof_margin)
    assert audit.to_dict()["C_beta_SD_proof_margin_log2"] is None


def test_parameter_errors(cantor_half):
    with pytest.raises(ScaleOverflowError):
        classify(cantor_half, 20, DuplicationParams(beta=1.0, eps=0.1, H=0.5), max_scale=26)
    with pytest.raises(InvalidParameterError):
        classify(cantor_half, 10, DuplicationParams(beta=0.01, eps=0.1, H=0.5))
    with pytest.raises(ValueError):
        DuplicationParams(beta=0.0, eps=0.1, H=0.5)
    report = classify(cantor_half, 8, DuplicationParams(beta=1.0, eps=0.1, H=0.5))
    with pytest.raises(InvalidParameterError):
        audit_card_bounds(report, DuplicationParams(beta=1.0, eps=0.2, H=0.5))


def test_m_uses_larger_of_one_and_beta():
    assert DuplicationParams(beta=0.5, eps=0.1, H=1.0).m == 1.0
    assert DuplicationParams(beta=2.0, eps=0.1, H=1.0).m == 2.0


def test_full_interval_is_all_normal(unit):
    report = classify(unit, 10, DuplicationParams(beta=1.0, eps=0.05, H=1.0))
    assert report.counts == (0, 1024, 0, 0)


def test_sparse_half_of_a_union_duplicates_slowly():
    union = FiniteUnion(components=(
        place(DigitRestricted(m=2, digits=(0, 3)), 1, 0),
        place(DigitRestricted(m=1, digits=(0, 1)), 1, 1),
    ))
    report = classify(union, 10, DuplicationParams(beta=1.0, eps=0.05, H=1.0))
    sparse = report.members(SD)
    dense = report.members(ND)
    assert sparse.size == 32 and np.all(sparse < 512)
    assert dense.size == 512 and np.all(dense >= 512)
    assert report.counts[2] == 0
