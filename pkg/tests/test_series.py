"""
形式级数、Dirichlet 求值、区域估计与发散级数构造的测试。
"""

import math

import numpy as np
import pytest
from pytest import approx

from core.errors import PreconditionError
from core.extremal import green_estimate
from core.qhpoly import HoloQHPolynomial, MixedPolynomial, flow_map, series_decompose
from core.sets import SampledSet, sphere_grid
from core.suspension import Suspension
from core.series import (
    FormalSeries,
    build_divergent_series,
    builtin_divergent_family,
    convergence_region,
    dirichlet_eval,
    divergence_points,
    lambda_normalize,
    leaf_coefficient_bound,
    omega_from_capacity,
    omega_hat,
    omega_prime,
)
from core.weights import Lambda, enumerate_rho, weighted_degree


def _geometric(lam: Lambda, terms: int = 8) -> FormalSeries:
    z1 = MixedPolynomial.coordinate(lam.n, 0)
    f = z1
    for m in range(2, terms + 1):
        f = f + z1**m
    return FormalSeries.from_polynomial(f, lam)


def _random_holomorphic(rng: np.random.Generator, degree: int = 4) -> MixedPolynomial:
    f = MixedPolynomial.monomial((0, 0), coeff=complex(rng.standard_normal()))
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            if a or b:
                c = complex(rng.standard_normal(), rng.standard_normal())
                f = f + MixedPolynomial.monomial((a, b), coeff=c)
    return f


class TestFormalSeries:
    def test_blocks_follow_rho(self):
        S = _geometric(Lambda.rational(1, 1))
        assert len(S) == 8
        assert [r.value for r in S.rhos] == approx([float(m) for m in range(1, 9)])

    def test_non_increasing_blocks_rejected(self):
        lam = Lambda.rational(1, 1)
        hi = HoloQHPolynomial.build(MixedPolynomial.monomial((2, 0)), lam)
        lo = HoloQHPolynomial.build(MixedPolynomial.monomial((1, 0)), lam)
        with pytest.raises(PreconditionError):
            FormalSeries(lam, (hi, lo))

    def test_truncation_keeps_leading_blocks(self):
        S = _geometric(Lambda.rational(1, 1)).truncated(3)
        assert len(S) == 3
        assert S.truncation == 3

    @pytest.mark.parametrize(
        "lam",
        [Lambda.rational(1, 2), Lambda.parse(["1", "sqrt2"], {"sqrt2": math.sqrt(2.0)})],
        ids=["rational", "irrational"],
    )
    def test_blocks_align_with_rho_sequence(self, lam):
        f = _random_holomorphic(np.random.default_rng(3))
        blocks = series_decompose(f, lam)
        rho_values = enumerate_rho(lam, blocks[-1].d1).values()
        for block in blocks:
            assert block.d1 in rho_values
            assert all(weighted_degree(lam, k) == block.d1 for k, _ in block.poly.terms)
        total = blocks[0].poly
        for block in blocks[1:]:
            total = total + block.poly
        assert total == f


class TestDirichlet:
    def test_geometric_leaf_converges(self):
        S = _geometric(Lambda.rational(1, 1))
        result = dirichlet_eval(S, [1.0, 0.0], math.log(2.0))
        assert result.verdict.kind == "Converges"
        assert result.verdict.r_hat == approx(0.5)
        assert result.partial_sums[-1].real == approx(1 - 2.0**-8)

    def test_requires_positive_real_part(self):
        S = _geometric(Lambda.rational(1, 1))
        with pytest.raises(PreconditionError):
            dirichlet_eval(S, [1.0, 0.0], 1j)

    def test_leaf_coefficient_bound(self):
        S = _geometric(Lambda.rational(1, 1))
        M, ratios = leaf_coefficient_bound(S, [0.5, 0.0], [0.0, 1.0, 0.5 + 2j])
        assert M == approx(1 - 2.0**-8)
        assert np.all(ratios <= 1.0)

    @pytest.mark.parametrize("seed", range(20))
    def test_coefficient_bound_on_random_series(self, seed):
        rng = np.random.default_rng(seed)
        lam = Lambda.rational(1, 1 + seed % 2)
        S = FormalSeries.from_polynomial(_random_holomorphic(rng), lam)
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        z = z / np.linalg.norm(z)
        # Re t = 0 上 16 个等距相位，ρ ≤ 8 时离散 Fourier 系数就是 q_m(z)
        t_values = [2j * math.pi * j / 16 for j in range(16)] + [0.25, 1.0 + 0.5j]
        M, ratios = leaf_coefficient_bound(S, z, t_values)
        assert M > 0
        assert np.all(ratios <= 1 + 1e-9)

    @pytest.mark.parametrize("weights", [(1, 1), (1, 2)])
    def test_partial_sums_match_flowed_polynomial(self, weights):
        lam = Lambda.rational(*weights)
        rng = np.random.default_rng(7)
        f = _random_holomorphic(rng)
        S = FormalSeries.from_polynomial(f, lam)
        for _ in range(5):
            z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            t = complex(rng.uniform(0.05, 1.0), rng.uniform(-3.0, 3.0))
            result = dirichlet_eval(S, z, t)
            assert result.partial_sums[-1] == approx(f.evaluate(flow_map(lam, z, t)), abs=1e-9)

    def test_leaf_bound_rejects_left_half_plane(self):
        S = _geometric(Lambda.rational(1, 1))
        with pytest.raises(PreconditionError):
            leaf_coefficient_bound(S, [0.5, 0.0], [-0.1])


class TestRegions:
    def test_convergence_region_for_geometric_series(self):
        S = _geometric(Lambda.rational(1, 1))
        region = convergence_region(S, [[0.5, 0.0], [2.0, 0.0]])
        assert region.values == approx([0.5, 2.0])
        assert region.inside.tolist() == [True, False]

    def test_convergence_region_needs_blocks(self):
        S = _geometric(Lambda.rational(1, 1), terms=3)
        with pytest.raises(PreconditionError):
            convergence_region(S, [[0.5, 0.0]])

    def test_lambda_normalize(self):
        assert lambda_normalize(Lambda.rational(1, 1), [3.0, 4.0]) == approx(np.array([0.6, 0.8]))
        z = np.array([2.0, 4.0])
        expected = z * math.sqrt(20.0) ** -np.array([0.5, 1.0])
        assert lambda_normalize(Lambda.rational(1, 2), z) == approx(expected)
        with pytest.raises(PreconditionError):
            lambda_normalize(Lambda.rational(1, 2), [0.0, 0.0])

    def test_omega_prime_rejects_origin(self):
        F = sphere_grid(2, 4, 0)
        with pytest.raises(PreconditionError):
            omega_prime(F, Lambda.rational(1, 1), [[0.0, 0.0], [0.5, 0.0]], 2)

    def test_omega_hat_separates_small_and_large(self):
        base = sphere_grid(2, 60, 3)
        region = omega_hat(base, None, Lambda.rational(1, 1), [[0.1, 0.1], [2.0, 0.0]], 2)
        assert region.inside.tolist() == [True, False]
        assert region.values[1] >= 2.0 - 1e-6

    def test_capacity_ball_collapses_for_single_leaf(self):
        # 一条叶上 z2 恒为零
        F = SampledSet.from_points([[1.0, 0.0]])
        ball = omega_from_capacity(F, Lambda.rational(1, 1), 2, sphere_grid=sphere_grid(2, 5, 1))
        assert ball.radius == 0.0
        assert ball.to_json()["capacity"]["psi_sup"] == "inf"

    def test_omega_prime_is_scaled_green_value(self):
        lam = Lambda.rational(1, 1)
        F = sphere_grid(2, 60, 5)
        re_grid = (2.0**-4, 0.5, 2.0)
        grid = np.array([[0.2, 0.0], [0.0, 0.15j], [3.0, 0.0]], dtype=complex)
        region = omega_prime(F, lam, grid, 2, re_grid=re_grid, im_count=8)
        samples = Suspension(lam, F, re_grid, 8).samples()
        for z, value in zip(grid, region.values):
            norm = np.linalg.norm(z)
            assert value == approx(norm * green_estimate(samples, z / norm, 2).value, rel=1e-9)
        assert region.inside.tolist() == [True, True, False]
        assert region.inside.tolist() == (region.values < 1).tolist()

    @pytest.mark.slow
    def test_sphere_capacity_ball_lies_in_convergence_region(self):
        lam = Lambda.rational(1, 1)
        ball = omega_from_capacity(sphere_grid(2, 2000, 1), lam, 4, sphere_grid=sphere_grid(2, 100, 2))
        assert ball.re_t == 0.0
        assert 0.9 <= ball.radius <= 1.0 + 1e-4
        # z₁^m 在球面上模不超过 1，Ψ 意义下可行
        inner = sphere_grid(2, 50, 3).points * (0.99 * ball.radius)
        region = convergence_region(_geometric(lam), inner)
        assert region.inside.all()


class TestDivergentSeries:
    def test_builtin_family(self):
        p_seq, a, K, lam = builtin_divergent_family(10)
        result = build_divergent_series(p_seq, a, K, lam, kmax=10)
        assert result.indices == tuple(range(10))
        assert result.max_relative_error <= 1e-9
        for m, block in enumerate(result.series.blocks, start=1):
            for k, b in enumerate(result.points, start=1):
                assert abs(block.poly.evaluate(b)) == approx((m / k) ** m, rel=1e-9)
            assert np.abs(block.poly.evaluate_many(K[0].points)).max() == 0.0

    def test_partial_sums_blow_up_at_first_point(self):
        p_seq, a, K, lam = builtin_divergent_family(10)
        result = build_divergent_series(p_seq, a, K, lam)
        sums = result.series.partial_sums(result.points[0])
        assert abs(sums[-1]) > 1e6

    def test_divergence_points(self):
        pts = divergence_points(Lambda.rational(1, 2), [1.0, 1.0], 3)
        assert pts[2] == approx(np.array([1 / 3, 1 / 9]))

    def test_no_admissible_subsequence(self):
        lam = Lambda.rational(1, 1)
        p = HoloQHPolynomial.build(MixedPolynomial.monomial((1, 0)), lam)
        K = SampledSet.from_points([[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(PreconditionError):
            build_divergent_series([p], [1.0, 0.0], [K], lam)

    def test_empty_family_rejected(self):
        p_seq, a, _, lam = builtin_divergent_family(3)
        with pytest.raises(PreconditionError):
            build_divergent_series(p_seq, a, [], lam)
