"""
Chebyshev 线性规划、Ψ/Φ 估计、容量、凸包与诊断的测试。

    - 单位圆的 Green 函数在 |z| = 2 处为 2
    - 落在某个单项式零点集里的样本给出 +inf（unbounded）
    - 环面 K：原点在凸包内，(1,1) 在凸包外且分离比 ≥ 2
    - certified 见证满足 Bernstein–Walsh 不等式
"""

import math

import numpy as np
import pytest
from pytest import approx

from core.errors import DimensionError, PreconditionError
from core.extremal import (
    ChebyshevProblem,
    capacity,
    cheby_maximize,
    green_estimate,
    holomorphic_basis,
    hull_membership,
    l_regularity_estimate,
    pluripolar_diagnostic,
    psi_estimate,
    sandwich_check,
)
from core.qhpoly import bernstein_walsh_residual
from core.sets import SampledSet, ball_grid, circle_grid, disc_grid, sphere_grid, torus_grid
from core.weights import Lambda


@pytest.fixture
def torus() -> SampledSet:
    return torus_grid(16, n=2)


class TestChebyshev:
    def test_witness_bounded_on_samples(self):
        E = circle_grid(32)
        problem = ChebyshevProblem(target=[1.5], constraints=E.points, basis=((0,), (1,), (2,)))
        est = cheby_maximize(problem)
        assert est.status == "optimal"
        assert np.abs(est.witness.evaluate_many(E.points)).max() <= 1 + 1e-12
        assert abs(est.witness.evaluate([1.5])) == approx(est.value)
        assert est.value == approx(1.5 ** 2, rel=3e-2)

    def test_certified_mode_requires_mesh(self):
        problem = ChebyshevProblem(target=[1.5], constraints=circle_grid(16).points, basis=((1,),))
        with pytest.raises(PreconditionError):
            cheby_maximize(problem, mode="certified")

    def test_polygon_order_floor(self):
        with pytest.raises(PreconditionError):
            ChebyshevProblem(target=[1.0], constraints=[[1.0]], basis=((1,),), polygon_order=4)

    def test_dimension_checked(self):
        with pytest.raises(DimensionError):
            ChebyshevProblem(target=[1.0, 0.0], constraints=[[1.0]], basis=((1,),))

    def test_holomorphic_basis_size(self):
        # n = 2，次数 ≤ 3 的单项式共 C(5,2) = 10 个
        assert len(holomorphic_basis(2, 3)) == 10


class TestGreen:
    def test_unit_circle_green_at_two(self):
        est = green_estimate(circle_grid(64), [2.0], 4)
        assert est.value == approx(2.0, rel=3e-2)
        assert est.value >= 1.0

    def test_green_is_one_inside(self):
        est = green_estimate(disc_grid(200), [0.2 + 0.1j], 3)
        assert est.value == approx(1.0, abs=5e-2)

    def test_single_point_is_unbounded(self):
        est = green_estimate(SampledSet.from_points([[0.0]]), [0.5], 2)
        assert est.status == "unbounded"
        assert math.isinf(est.value)
        assert est.to_json()["value"] == "inf"

    def test_certified_witness_satisfies_bernstein_walsh(self):
        E = circle_grid(64)
        mesh = 2 * math.sin(math.pi / 128)
        est = green_estimate(E, [2.0], 4, mode="certified", mesh=mesh)
        assert est.mode == "CertifiedLower"
        rng = np.random.default_rng(0)
        for _ in range(100):
            r = 1.0 + 3.0 * rng.random()
            z = r * np.exp(2j * np.pi * rng.random())
            assert bernstein_walsh_residual(est.witness, 1.0, 1.0, [z]) <= 1e-6


class TestPsi:
    def test_zero_target(self, torus):
        est = psi_estimate(torus, Lambda.rational(1, 1), [0.0, 0.0], 4)
        assert est.status == "zero_target"
        assert est.value == 0.0

    def test_dimension_mismatch(self, torus):
        with pytest.raises(DimensionError):
            psi_estimate(torus, Lambda.rational(1, 1, 1), [1.0, 0.0, 0.0], 2)

    def test_torus_weighted(self, torus):
        est = psi_estimate(torus, Lambda.rational(1, 2), [1.0, 0.0], 4)
        assert est.value == approx(math.sqrt(2.0), rel=2e-2)

    def test_dead_monomial_is_unbounded(self):
        E = SampledSet.from_points([[x, 0.0] for x in np.linspace(-1, 1, 9)])
        est = psi_estimate(E, Lambda.rational(1, 1), [0.5, 0.5], 2)
        assert est.status == "unbounded"
        assert math.isinf(est.value)

    def test_vanishing_combination_is_unbounded(self):
        E = SampledSet.from_points([[x, x] for x in np.linspace(0.1, 1, 10)])
        est = psi_estimate(E, Lambda.rational(1, 1), [1.0, 0.0], 1)
        assert est.is_unbounded
        assert np.abs(est.witness.evaluate_many(E.points)).max() < 1e-6

    @pytest.mark.slow
    def test_adding_constraints_never_increases_psi(self):
        lam = Lambda.rational(1, 2)
        targets = sphere_grid(2, 5, 99).points * 1.3
        for trial in range(5):
            base = sphere_grid(2, 40, trial)
            extra = sphere_grid(2, 40, 100 + trial)
            bigger = base.union(extra)
            for z in targets:
                small = psi_estimate(base, lam, z, 3).value
                large = psi_estimate(bigger, lam, z, 3).value
                assert large <= small * (1 + 1e-2) + 1e-9


class TestHullAndCapacity:
    def test_origin_inside_torus_hull(self, torus):
        verdict = hull_membership(torus, Lambda.rational(1, 1), [0.0, 0.0], 4)
        assert verdict.inside
        assert verdict.to_json()["verdict"] == "Inside"

    def test_outside_point_has_separating_witness(self, torus):
        verdict = hull_membership(torus, Lambda.rational(1, 1), [1.0, 1.0], 4)
        assert not verdict.inside
        assert verdict.ratio >= 2 - 1e-3
        assert np.abs(verdict.witness.evaluate_many(torus.points)).max() <= 1 + 1e-9

    def test_hull_requires_circular_set(self):
        K = SampledSet.from_points([[0.6, 0.8], [0.8, 0.6]])
        with pytest.raises(PreconditionError):
            hull_membership(K, Lambda.rational(1, 1), [0.0, 0.0], 2)

    def test_capacity_needs_sphere_grid(self, torus):
        with pytest.raises(PreconditionError):
            capacity(torus, Lambda.rational(1, 1), ball_grid(2, 10, 0), 2)

    def test_capacity_zero_for_single_point(self):
        E = SampledSet.from_points([[1.0, 0.0]])
        est = capacity(E, Lambda.rational(1, 1), sphere_grid(2, 5, 1), 2)
        assert est.is_zero
        assert est.to_json()["psi_sup"] == "inf"

    @pytest.mark.slow
    def test_ball_capacity_is_one(self):
        E = ball_grid(2, 2000, 1)
        grid = sphere_grid(2, 500, 2)
        est = capacity(E, Lambda.rational(1, 1), grid, 6)
        assert 0.95 <= est.rho_lambda <= 1.0 + 1e-4


class TestDiagnostics:
    def test_disc_center_is_regular(self):
        report = l_regularity_estimate(disc_grid(200), [0.0], [0.5], 4)
        assert report.verdict == "consistent_with_L_regularity"

    def test_isolated_point_is_pluripolar(self):
        report = l_regularity_estimate(SampledSet.from_points([[0.0]]), [0.0], [0.5], 2)
        assert report.verdict == "pluripolar_signature"

    def test_far_point_rejected(self):
        with pytest.raises(PreconditionError):
            l_regularity_estimate(disc_grid(50), [5.0], [0.5], 2)

    def test_point_off_samples_rejected(self):
        # 离最近样本 0.01，仍在半径之内
        with pytest.raises(PreconditionError):
            l_regularity_estimate(disc_grid(200), [0.01], [0.5], 2)
        report = l_regularity_estimate(disc_grid(200), [0.01], [0.5], 2, anchor_tol=0.05)
        assert len(report.rows) == 1

    def test_trend_for_single_point(self):
        E = SampledSet.from_points([[1.0, 0.0]])
        report = pluripolar_diagnostic(E, Lambda.rational(1, 1), [1, 2], sphere_grid(2, 4, 3))
        assert report.signature == "lambda_pluripolar_signature"

    def test_trend_uses_default_sphere_grid(self):
        E = SampledSet.from_points([[1.0, 0.0]])
        report = pluripolar_diagnostic(E, Lambda.rational(1, 1), [1, 2])
        assert report.signature == "lambda_pluripolar_signature"
        assert report.capacities == (0.0, 0.0)

    @pytest.mark.slow
    def test_sandwich_on_torus(self, torus):
        grid = sphere_grid(2, 12, 4)
        report = sandwich_check(torus, Lambda.rational(1, 2), grid, 4)
        assert report.degree_cap == 4
        assert report.violations == 0

    @pytest.mark.slow
    def test_sandwich_degenerate_weights_agree(self, torus):
        grid = sphere_grid(2, 8, 5)
        report = sandwich_check(torus, Lambda.rational(1, 1), grid, 4)
        for row in report.rows:
            assert row.phi == approx(max(1.0, row.psi), rel=1e-2)
