"""
经典例子的复现测试。
"""

import math

import numpy as np
import pytest

from core.errors import PreconditionError
from core.gallery import (
    EXAMPLES,
    countable_fan,
    growing_angles,
    normality_verdict,
    run_example,
    shrinking_angles,
    twisted_circle,
)
from core.weights import Lambda


class TestRealSlice:
    def test_integer_weight_is_sparse(self):
        report = run_example("ex3.5", lambda2="2")
        assert report.matches, report.verdict
        assert report.details["witness_cosine"] > 1 - 1e-8

    def test_irrational_weight_is_nonsparse(self):
        report = run_example("ex3.5", lambda2="sqrt2", cap=4)
        assert report.matches, report.verdict
        assert report.details["certificate"]["verdict"] == "Certified-Nonsparse"


class TestTwistedCircles:
    def test_equal_frequency_gives_single_point(self):
        report = run_example("ex5.6", m=2, n=2)
        assert report.matches
        assert all(row["status"] == "unbounded" for row in report.details["green_trend"])

    @pytest.mark.slow
    def test_different_frequency_gives_circle(self):
        report = run_example("ex5.6", m=2, n=1)
        assert report.verdict.startswith("direction set: circle")
        lo, hi = report.details["modulus_range"]
        assert lo == pytest.approx(math.sqrt(2.0), rel=1e-9)
        assert hi == pytest.approx(math.sqrt(2.0), rel=1e-9)
        assert report.details["green_at_2R"] == pytest.approx(2.0, rel=5e-2)

    def test_bad_parameters(self):
        with pytest.raises(PreconditionError):
            run_example("ex5.6", m=0, n=1)

    def test_twisted_circle_lies_on_sphere(self):
        F = twisted_circle(3, count=16)
        assert F.on_sphere
        assert np.linalg.norm(F.points, axis=1) == pytest.approx(np.ones(16))


class TestCountableExamples:
    def test_rational_suspension(self):
        report = run_example("ex7.1", count=40)
        assert report.matches
        assert report.details["exact_on_sphere"] is True

    def test_formal_forelli(self):
        report = run_example("ex7.2", k_count=20, l_count=6)
        assert report.matches, report.verdict

    def test_fan_angles(self):
        r = shrinking_angles(4)
        s = growing_angles(4)
        assert r[0] == pytest.approx(math.pi / 4)
        assert np.all(np.diff(r) < 0)
        assert s[0] == pytest.approx(math.pi / 4)
        assert np.all(np.diff(s) > 0)
        assert np.all(s < math.pi / 2)

    def test_countable_fan_size(self):
        assert countable_fan(5, 3).size == 15


class TestNormality:
    def test_countable_is_nonnormal(self):
        verdict = normality_verdict(countable_fan(5, 3), Lambda.rational(1, 1), countable=True)
        assert verdict.signature == "Nonnormal"
        assert verdict.to_json()["reason"] == "countable F"

    def test_single_point_direction_set_is_nonnormal(self):
        verdict = normality_verdict(twisted_circle(2, count=16), Lambda.rational(1, 2))
        assert verdict.single_point
        assert verdict.signature == "Nonnormal"

    def test_unknown_example(self):
        assert set(EXAMPLES) == {"ex3.5", "ex5.6", "ex7.1", "ex7.2", "ex7.3"}
        with pytest.raises(PreconditionError):
            run_example("ex9.9")
