"""
混合多项式、双次数分解与流映射的测试。
"""

from fractions import Fraction

import numpy as np
import pytest
from pytest import approx

from core.errors import DimensionError, PreconditionError
from core.qhpoly import (
    HoloQHPolynomial,
    MixedPolynomial,
    QHComponent,
    bernstein_walsh_residual,
    bidegree_decompose,
    equivariance_tolerance,
    flow_equivariance_residual,
    flow_map,
    reassemble,
    series_decompose,
    taylor_to_asymptotic,
)
from core.weights import Lambda


def _random_mixed(rng: np.random.Generator, n: int, terms: int, max_deg: int = 3) -> MixedPolynomial:
    items = []
    for _ in range(terms):
        k = rng.integers(0, max_deg + 1, size=n)
        m = rng.integers(0, max_deg + 1, size=n)
        c = complex(rng.standard_normal(), rng.standard_normal())
        items.append((k.tolist(), m.tolist(), c))
    return MixedPolynomial.from_terms(n, items)


class TestMixedPolynomial:
    def test_zero_coefficients_dropped(self):
        p = MixedPolynomial.from_terms(2, [((1, 0), (0, 0), 1.0), ((1, 0), (0, 0), -1.0)])
        assert p.is_zero

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            MixedPolynomial(2, {((1, 0, 0), (0, 0)): 1.0})

    def test_negative_index_rejected(self):
        with pytest.raises(PreconditionError):
            MixedPolynomial(2, {((-1, 0), (0, 0)): 1.0})

    def test_evaluate_conjugate_variables(self):
        z = np.array([1 + 2j, 0.5 - 1j])
        p = MixedPolynomial.monomial((2, 0), (0, 1), 3.0)
        assert p.evaluate(z) == approx(3.0 * z[0] ** 2 * np.conj(z[1]))

    def test_evaluate_many_matches_evaluate(self):
        rng = np.random.default_rng(7)
        p = _random_mixed(rng, 2, 8)
        pts = rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2))
        values = p.evaluate_many(pts)
        for pt, v in zip(pts, values):
            assert v == approx(p.evaluate(pt))

    def test_imag_part_is_real_valued(self):
        q = MixedPolynomial.monomial((2, 0), (0, 1)).imag_part()
        rng = np.random.default_rng(3)
        for _ in range(10):
            z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            assert abs(q.evaluate(z).imag) < 1e-12

    def test_power_and_product(self):
        z1 = MixedPolynomial.coordinate(2, 0)
        z2 = MixedPolynomial.coordinate(2, 1)
        p = (z1 - z2) ** 2
        assert p.coefficient((1, 1)) == approx(-2.0)
        assert p.degree == 2
        assert p.is_holomorphic

    def test_normalized_has_unit_norm(self):
        p = MixedPolynomial.from_terms(1, [((1,), (0,), 3j), ((0,), (1,), 4.0)])
        q = p.normalized()
        assert q.coefficient_norm == approx(1.0)
        assert q.coefficient((0,), (1,)).imag == approx(0.0)


class TestDecomposition:
    def test_reassembly_exact_on_random_polynomials(self):
        rng = np.random.default_rng(11)
        lam = Lambda.rational(1, Fraction(3, 2))
        for _ in range(50):
            p = _random_mixed(rng, 2, int(rng.integers(1, 31)))
            parts = bidegree_decompose(p, lam)
            assert reassemble(parts, 2) == p
            keys = [c.bidegree for c in parts]
            assert keys == sorted(keys)
            assert len(set(keys)) == len(keys)

    def test_equivariance_residual_within_scaled_tolerance(self):
        rng = np.random.default_rng(5)
        lam = Lambda.rational(1, Fraction(3, 2))
        p = _random_mixed(rng, 2, 20, max_deg=2)
        for comp in bidegree_decompose(p, lam):
            for _ in range(20):
                z = rng.uniform(-1, 1, 2) + 1j * rng.uniform(-1, 1, 2)
                t = complex(rng.uniform(-1, 2), rng.uniform(-3, 3))
                assert flow_equivariance_residual(comp, z, t) <= equivariance_tolerance(comp, z, t)

    def test_component_rejects_wrong_bidegree(self):
        lam = Lambda.rational(1, 2)
        p = MixedPolynomial.monomial((1, 0)) + MixedPolynomial.monomial((0, 1))
        with pytest.raises(PreconditionError):
            QHComponent(p, lam.degree(1), lam.zero(), lam)

    def test_holo_component_rejects_conjugates(self):
        lam = Lambda.rational(1, 1)
        with pytest.raises(PreconditionError):
            HoloQHPolynomial.build(MixedPolynomial.monomial((1, 0), (0, 1)), lam)

    def test_series_decompose_orders_blocks(self):
        lam = Lambda.rational(1, 2)
        f = (
            MixedPolynomial.monomial((0, 1))
            + MixedPolynomial.monomial((2, 0), coeff=2.0)
            + MixedPolynomial.monomial((1, 0))
        )
        blocks = series_decompose(f, lam)
        assert [b.d1 for b in blocks] == [Fraction(1), Fraction(2)]
        assert len(blocks[1].poly) == 2

    def test_series_decompose_requires_holomorphic(self):
        with pytest.raises(PreconditionError):
            series_decompose(MixedPolynomial.monomial((0, 0), (1, 0)), Lambda.rational(1, 1))

    def test_taylor_to_asymptotic_groups_by_total_degree(self):
        lam = Lambda.rational(1, 2)
        jet = MixedPolynomial.monomial((0, 1)) + MixedPolynomial.monomial((1, 0), (1, 0))
        z = np.array([1.0 + 0j, 2.0 + 0j])
        blocks = taylor_to_asymptotic(jet, lam, z)
        assert len(blocks) == 1
        assert blocks[0].rho == Fraction(2)
        assert sorted(complex(r.coeff).real for r in blocks[0].rows) == approx([1.0, 2.0])


class TestFlow:
    def test_flow_map_scales_coordinates(self):
        lam = Lambda.rational(1, 2)
        out = flow_map(lam, [1.0, 1.0], np.log(2.0))
        assert out == approx(np.array([0.5, 0.25]))

    def test_flow_dimension_checked(self):
        with pytest.raises(DimensionError):
            flow_map(Lambda.rational(1, 2), [1.0, 2.0, 3.0], 0.1)

    def test_bernstein_walsh_nonpositive_for_true_norm(self):
        # q = z₁² 在闭单位球上的上确界为 1
        q = MixedPolynomial.monomial((2, 0))
        for z in ([2.0, 0.0], [0.5, 0.5], [3.0, 1.0]):
            assert bernstein_walsh_residual(q, 1.0, 1.0, z) <= 1e-12
