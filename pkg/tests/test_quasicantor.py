import logging

import numpy as np
import pytest

from dyadic.covers import DigitRestricted, ExplicitCover, FiniteUnion, FullInterval, build_cover, place
from dyadic.errors import InvalidParameterError, LadderTooShortError
from dyadic.quasicantor import (
    audit_theorem1,
    build_ladder,
    default_ell0,
    extract_K,
    prune,
    select_ladder_ratio,
    unpruned,
)


def test_ladder_rungs_and_gaps():
    ladder = build_ladder(8, 0.5, 26)
    assert ladder.rungs == (8, 12, 18)
    assert ladder.L == 2
    assert ladder.gap(0) == 4
    assert ladder.gap(0, 2) == 10
    assert build_ladder(8, 0.5, 27).rungs == (8, 12, 18, 27)
    assert build_ladder(6, 0.5, 20).rungs == (6, 9, 13, 20)


def test_ladder_too_short():
    with pytest.raises(LadderTooShortError) as err:
        build_ladder(20, 0.5, 26)
    assert "SOLUTION" in str(err.value)
    with pytest.raises(InvalidParameterError):
        build_ladder(8, 1.5)


def test_ladder_flooring_collisions_are_dropped(caplog):
    with caplog.at_level(logging.WARNING, logger="dyadic"):
        ladder = build_ladder(1, 0.1, 6)
    assert list(ladder.rungs) == sorted(set(ladder.rungs))
    assert ladder.rungs[0] == 1
    assert "collisions" in caplog.text


def test_select_ladder_ratio():
    b, ell, eps = select_ladder_ratio(0.5, 0.25, 4)
    assert ell == 12
    assert b == pytest.approx(0.095873, abs=1e-6)
    assert eps == pytest.approx(b * b)
    assert (1 + b) ** ell == pytest.approx(3.0)
    with pytest.raises(InvalidParameterError):
        select_ladder_ratio(0.5, 0.6, 4)


def test_full_interval_survives_pruning():
    ladder = build_ladder(8, 0.5, 26)
    qc = prune(FullInterval(), ladder, 1.0, 0.05)
    for i, j in enumerate(ladder.rungs):
        assert qc.T_inf[i].size == 1 << j
    assert audit_theorem1(qc).all_passed


@pytest.mark.parametrize("mode", ["previous", "fixed-point"])
def test_cantor_half_is_its_own_quasi_cantor_set(cantor_half, mode):
    ladder = build_ladder(8, 0.5, 24)
    qc = prune(cantor_half, ladder, 0.5, 0.04, mode=mode)
    for i, cover in enumerate(qc.covers):
        if qc.stabilized(i) or i == ladder.L:
            assert np.array_equal(qc.T_inf[i], cover.indices)
    assert qc.stabilized_at[0] == 1
    audit = audit_theorem1(qc)
    assert audit.ell0 == 0
    assert audit.count_passed and audit.reproduction_passed
    assert audit.worst_count_margin >= 0
    assert audit.worst_reproduction_margin >= 0


def _two_component_union():
    sparse = DigitRestricted(m=4, digits=(0, 15))
    dense = DigitRestricted(m=2, digits=(0, 3))
    return FiniteUnion(components=(place(sparse, 1, 0), place(dense, 1, 1)))


@pytest.mark.parametrize("mode", ["previous", "fixed-point"])
def test_pruning_selects_the_denser_component(mode):
    ladder = build_ladder(8, 0.5, 26)
    qc = prune(_two_component_union(), ladder, 0.5, 0.02, mode=mode)
    assert default_ell0(qc) == 0
    K = extract_K(qc, 0)
    for i, j in enumerate(ladder.rungs):
        members = K.at(i)
        assert members.size > 0
        assert np.all(members >> (j - 1) == 1)
    # the sparse half is slow-duplicating on both inner rungs
    assert qc.T[0][1].size == 16
    assert qc.covers[0].count == 20
    assert audit_theorem1(qc).all_passed


def test_K_counts_and_access():
    ladder = build_ladder(8, 0.5, 26)
    qc = prune(DigitRestricted(m=2, digits=(0, 3)), ladder, 0.5, 0.04)
    K = extract_K(qc, 1)
    assert K.counts() == [(12, 64), (18, 512)]
    assert not K.empty
    with pytest.raises(InvalidParameterError):
        K.at(0)
    with pytest.raises(InvalidParameterError):
        extract_K(qc, 5)


def _one_thin_parent():
    rung6 = [k for k in range(64) if k not in (13, 14, 15)]
    rung9 = [(k << 3) | c for k in rung6 for c in range(8)]
    return ExplicitCover(levels={4: tuple(range(16)), 6: tuple(rung6), 9: tuple(rung9)})


def test_reproduction_violation_is_flagged():
    ladder = build_ladder(4, 0.5, 9)
    assert ladder.rungs == (4, 6, 9)
    qc = unpruned(_one_thin_parent(), ladder, 1.0, 0.05)
    audit = audit_theorem1(qc)
    assert audit.count_passed
    assert not audit.reproduction_passed
    assert len(audit.flagged) == 1
    flag = audit.flagged[0]
    assert (flag.rung, flag.k, flag.lookahead) == (0, 3, 1)
    assert flag.margin == pytest.approx(-1.0)
    assert audit.to_dict()["flagged"][0]["k"] == 3


def test_pruning_removes_the_thin_parent():
    ladder = build_ladder(4, 0.5, 9)
    qc = prune(_one_thin_parent(), ladder, 1.0, 0.05)
    assert 3 not in qc.T_inf[0].tolist()
    assert 3 in qc.covers[0].indices.tolist()


def test_U_sets(cantor_half):
    qc = prune(cantor_half, build_ladder(8, 0.5, 24), 0.5, 0.04)
    assert qc.U(0, 2).size == 0
    with pytest.raises(InvalidParameterError):
        qc.U(0, 1)


def test_prune_rejects_large_eps(cantor_half):
    with pytest.raises(InvalidParameterError) as err:
        prune(cantor_half, build_ladder(8, 0.5, 24), 0.5, 0.06)
    assert "SOLUTION" in str(err.value)
    with pytest.raises(InvalidParameterError):
        prune(cantor_half, build_ladder(8, 0.5, 24), 0.5, 0.04, mode="sideways")


def test_empty_K_reports_empty_audit():
    spec = ExplicitCover(levels={4: (0,), 6: (0,), 9: (0,)})
    qc = prune(spec, build_ladder(4, 0.5, 9), 1.0, 0.05)
    audit = audit_theorem1(qc)
    assert audit.empty
    assert not audit.all_passed


def test_unpruned_keeps_covers(cantor_half):
    ladder = build_ladder(8, 0.5, 24)
    qc = unpruned(cantor_half, ladder, 0.5, 0.04)
    for i, j in enumerate(ladder.rungs):
        assert np.array_equal(qc.T_inf[i], build_cover(cantor_half, j).indices)


def _late_thinning():
    # rung-1 cells 1..3 only have slow-duplicating children, so rung 0
    # keeps its cell for two depths and loses it on the third
    rung9 = tuple(range(32))
    rung13 = tuple((k << 4) | c for k in range(8) for c in range(16)) + tuple(k << 4 for k in range(8, 32))
    return ExplicitCover(levels={4: (0,), 6: (0, 1, 2, 3), 9: rung9, 13: rung13})


def test_stabilization_is_measured_against_T_inf(caplog):
    ladder = build_ladder(4, 0.5, 13)
    assert ladder.rungs == (4, 6, 9, 13)
    with caplog.at_level(logging.WARNING, logger="dyadic"):
        qc = prune(_late_thinning(), ladder, 1.0, 0.05, mode="previous")
    assert [d.size for d in qc.T[0]] == [1, 1, 1, 0]
    assert [d.size for d in qc.T[1]] == [4, 4, 1]
    assert qc.T_inf[0].size == 0
    assert qc.stabilized_at[0] is None
    assert not qc.stabilized(0)
    assert "rung 0 (j=4) still shrinking" in caplog.text
    for i, ell in enumerate(qc.stabilized_at):
        if ell is not None:
            assert all(np.array_equal(d, qc.T_inf[i]) for d in qc.T[i][ell:])


def test_fixed_point_drops_the_late_thinning_cell():
    qc = prune(_late_thinning(), build_ladder(4, 0.5, 13), 1.0, 0.05, mode="fixed-point")
    assert qc.T_inf[0].size == 0
    assert qc.T_inf[1].tolist() == [0]
    assert qc.stabilized_at[0] is None


def _detached_rungs():
    # rung 0 is nowhere above rungs 1 and 2, though each count alone fits
    return ExplicitCover(levels={
        4: (0, 1, 2, 3),
        6: tuple(range(56, 64)),
        9: tuple(range(448, 472)),
    })


def test_default_ell0_uses_the_audited_K_counts():
    qc = unpruned(_detached_rungs(), build_ladder(4, 0.5, 9), 0.5, 0.05)
    assert extract_K(qc, 0).counts() == [(4, 4), (6, 0), (9, 0)]
    assert default_ell0(qc) == 1
    audit = audit_theorem1(qc)
    assert audit.ell0 == 1
    assert audit.count_passed
    assert [r.count for r in audit.counts] == [8, 24]


def test_U_sets_partition_the_normal_rung():
    qc = prune(_late_thinning(), build_ladder(4, 0.5, 13), 1.0, 0.05, mode="previous")
    for i in range(qc.ladder.L):
        depths = qc.T[i]
        pieces = [qc.U(i, ell) for ell in range(2, len(depths))]
        for a in range(len(pieces)):
            for b in range(a + 1, len(pieces)):
                assert np.intersect1d(pieces[a], pieces[b]).size == 0
        assert sum(p.size for p in pieces) + qc.T_inf[i].size == depths[1].size
    assert qc.U(0, 3).tolist() == [0]
    assert qc.U(1, 2).tolist() == [1, 2, 3]
