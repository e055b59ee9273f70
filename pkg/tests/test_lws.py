import numpy as np
import pytest

from conftest import SEEDS, quorum
from dyadic.covers import DigitRestricted, FullInterval, build_cover
from dyadic.errors import DomainError, InvalidParameterError, ScaleOverflowError, UndefinedDimensionError
from dyadic.lws import (
    LwsCoefficients,
    LwsParams,
    activation_probability,
    active_at,
    binomial_gof,
    longest_run,
    predicted_count,
    render_haar,
    rho_hat,
    synthesize,
)
from dyadic.rng import derive_seed, uniforms


def test_activation_probability():
    assert activation_probability(1.0, 0.5, 4) == pytest.approx(0.25)
    assert activation_probability(1.0, 0.5, 0) == 1.0
    assert activation_probability(1.0, 0.5, 5000) == 0.0
    params = LwsParams(alpha=1.0, eta=0.5, H=1.0, j_max=10)
    assert predicted_count(FullInterval(), params, 10) == pytest.approx(32.0)


def test_params_reject_eta_at_or_above_H():
    with pytest.raises(ValueError):
        LwsParams(alpha=1.0, eta=0.5, H=0.5, j_max=10)
    with pytest.raises(ValueError):
        LwsParams(alpha=1.0, eta=0.2, H=0.5, j_max=10, seed=-1)


def test_uniforms_are_pure_functions_of_their_key():
    positions = np.arange(1000, dtype=np.int64)
    a = uniforms(7, 12, positions)
    assert np.array_equal(a[500:], uniforms(7, 12, positions[500:]))
    assert not np.array_equal(a, uniforms(8, 12, positions))
    assert not np.array_equal(a, uniforms(7, 13, positions))
    assert a.min() >= 0.0 and a.max() < 1.0
    assert abs(a.mean() - 0.5) < 0.05


def test_derive_seed_separates_labels():
    assert derive_seed(1, "lws") == derive_seed(1, "lws")
    assert derive_seed(1, "lws") != derive_seed(1, "lws/1")
    assert derive_seed(1, "lws") != derive_seed(2, "lws")
    assert 0 <= derive_seed(1, "lws") < 1 << 64


def test_active_sets_lie_in_the_cover(cantor_half):
    params = LwsParams(alpha=1.0, eta=0.25, H=0.5, j_max=14, seed=3)
    coeffs = synthesize(cantor_half, params)
    for j in range(15):
        cover = build_cover(cantor_half, j)
        assert np.all(cover.bits[coeffs.at(j)])
        assert np.all(np.diff(coeffs.at(j)) > 0)
    assert coeffs.count(0) == 1


def test_synthesis_independent_of_threads(unit):
    params = LwsParams(alpha=1.0, eta=0.5, H=1.0, j_max=20, seed=11)
    a = synthesize(unit, params, threads=1)
    b = synthesize(unit, params, threads=4)
    for j in range(21):
        assert np.array_equal(a.at(j), b.at(j))


def test_synthesis_overflow(unit):
    params = LwsParams(alpha=1.0, eta=0.5, H=1.0, j_max=30)
    with pytest.raises(ScaleOverflowError):
        synthesize(unit, params, max_scale=26)


def test_rho_hat_unit_interval(unit):
    slopes = []
    for seed in SEEDS:
        params = LwsParams(alpha=1.0, eta=0.5, H=1.0, j_max=20, seed=seed)
        slopes.append(rho_hat(synthesize(unit, params)).slope)
    assert quorum(abs(s - 0.5) <= 0.07 for s in slopes), slopes


def test_rho_hat_cantor_half(cantor_half):
    slopes = []
    for seed in SEEDS:
        params = LwsParams(alpha=1.0, eta=0.25, H=0.5, j_max=22, seed=seed)
        slopes.append(rho_hat(synthesize(cantor_half, params)).slope)
    assert quorum(abs(s - 0.25) <= 0.08 for s in slopes), slopes


def test_rho_hat_needs_enough_scales(unit):
    coeffs = LwsCoefficients.all_active(unit, 1.0, 2)
    with pytest.raises(UndefinedDimensionError):
        rho_hat(coeffs)
    assert rho_hat(LwsCoefficients.all_active(unit, 1.0, 8)).slope == pytest.approx(1.0)


def test_longest_run():
    assert longest_run([True, True, False, True, True]) == (3, 5)
    assert longest_run([True, False, True, True, True, False]) == (2, 5)
    assert longest_run([False, False]) is None
    assert longest_run([]) is None


def test_binomial_goodness_of_fit(unit):
    params = LwsParams(alpha=1.0, eta=0.5, H=1.0, j_max=12)
    result = binomial_gof(unit, params, 12, range(256))
    assert result.trials == 4096
    assert result.p == pytest.approx(1 / 64)
    assert result.passed(0.01), result.to_dict()
    assert abs(result.mean_count - 64) < 3


@pytest.mark.parametrize("j", [8, 10])
def test_binomial_fit_holds_across_seed_batteries(cantor_half, j):
    params = LwsParams(alpha=1.0, eta=0.25, H=0.5, j_max=j)
    results = [binomial_gof(cantor_half, params, j, range(128 * s, 128 * s + 128)) for s in SEEDS]
    assert all(r.trials == 1 << (j // 2) for r in results)
    assert quorum(r.passed(0.01) for r in results), [r.pvalue for r in results]


def test_derived_coefficient_sets(cantor_half):
    coeffs = LwsCoefficients.all_active(cantor_half, 1.0, 6)
    assert coeffs.at(2).tolist() == [0, 3]
    with pytest.raises(DomainError):
        coeffs.without(2, [3]).with_active(2, [1])
    assert coeffs.without(2, [3]).with_active(2, [3]).at(2).tolist() == [0, 3]
    pruned = coeffs.without_subtree(2, [3])
    assert pruned.at(2).tolist() == [0]
    assert all(np.all(pruned.at(j) >> (j - 2) == 0) for j in range(2, 7))
    assert pruned.at(1).tolist() == coeffs.at(1).tolist()
    assert coeffs.total == sum(c for _, c in coeffs.counts())
    with pytest.raises(InvalidParameterError):
        coeffs.with_active(9, [0])


def test_render_haar_small_case():
    coeffs = LwsCoefficients(
        spec=FullInterval(), alpha=1.0, j_max=1,
        active={0: np.array([0]), 1: np.array([1])},
    )
    assert render_haar(coeffs, 2).tolist() == [1.0, 1.0, -0.5, -1.5]
    with pytest.raises(InvalidParameterError):
        render_haar(coeffs, 0)


def _haar(t: np.ndarray) -> np.ndarray:
    return np.where((t >= 0) & (t < 0.5), 1.0, np.where((t >= 0.5) & (t < 1), -1.0, 0.0))


def test_render_haar_matches_direct_sum(cantor_half):
    params = LwsParams(alpha=0.7, eta=0.25, H=0.5, j_max=8, seed=5)
    coeffs = synthesize(cantor_half, params)
    grid = 10
    x = np.arange(1 << grid) / (1 << grid)
    direct = np.zeros_like(x)
    for j in range(coeffs.j_max + 1):
        for k in coeffs.at(j):
            direct += coeffs.magnitude(j) * _haar((1 << j) * x - k)
    assert np.allclose(render_haar(coeffs, grid), direct, atol=1e-12)


def test_active_at_matches_synthesis(cantor_half):
    params = LwsParams(alpha=1.0, eta=0.25, H=0.5, j_max=10, seed=9)
    coeffs = synthesize(cantor_half, params)
    assert np.array_equal(active_at(cantor_half, params, 10), coeffs.at(10))
    other = DigitRestricted(m=2, digits=(0, 1, 3))
    assert active_at(other, params.model_copy(update={"H": 0.79}), 10).size <= 243
