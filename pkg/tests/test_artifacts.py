"""
产物读写与 schema 校验的测试。
"""

import json
import math

import numpy as np
import pytest
from pydantic import ValidationError

from core.artifacts import dumps, load_grid, load_lambda, load_polynomial, load_set, write_csv, write_json
from core.errors import PreconditionError
from core.extremal import green_estimate
from core.schemas import EstimateModel, JobSpec, RegionModel
from core.sets import SampledSet
from core.series import FormalSeries, convergence_region
from core.qhpoly import MixedPolynomial
from core.weights import Lambda


class TestLoaders:
    def test_lambda_files(self, data_dir):
        assert load_lambda(data_dir / "lambda_1_2.json").approx == pytest.approx((1.0, 2.0))
        lam = load_lambda(data_dir / "lambda_1_sqrt2.json")
        assert lam.approx[1] == pytest.approx(math.sqrt(2.0))
        assert not lam.is_rational

    def test_torus_descriptor(self, data_dir):
        torus = load_set(data_dir / "torus.json")
        assert torus.size == 24 * 24
        assert torus.on_sphere

    def test_polynomial_file(self, data_dir):
        p = load_polynomial(data_dir / "holomorphic.json")
        assert p.is_holomorphic
        assert p.degree == 3

    def test_invalid_polynomial(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"n": 0, "terms": []}), encoding="utf-8")
        with pytest.raises(ValidationError):
            load_polynomial(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_lambda(tmp_path / "none.json")

    def test_unknown_builtin_grid(self):
        with pytest.raises(PreconditionError):
            load_grid("builtin:cube:10", 2)


class TestWriters:
    def test_dumps_handles_complex_and_inf(self):
        text = dumps({"z": np.array([1 + 2j]), "v": math.inf, "ok": np.bool_(True)})
        assert json.loads(text) == {"z": [[1.0, 2.0]], "v": "inf", "ok": True}

    def test_dumps_keeps_unicode(self):
        assert "λ" in dumps({"name": "λ"})

    def test_csv_uses_full_precision(self, tmp_path):
        path = write_csv(tmp_path, "t.csv", ["x", "flag"], [[0.1, True]])
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines == ["x,flag", "0.10000000000000001,1"]

    def test_write_json_creates_directory(self, tmp_path):
        path = write_json(tmp_path / "a" / "b", "x.json", {"v": 1.5})
        assert json.loads(path.read_text(encoding="utf-8")) == {"v": 1.5}


class TestSchemas:
    def test_unbounded_estimate_validates(self):
        est = green_estimate(SampledSet.from_points([[0.0]]), [0.5], 1)
        model = EstimateModel.model_validate(json.loads(dumps(est.to_json())))
        assert model.value == "inf"

    def test_region_validates(self):
        lam = Lambda.rational(1, 1)
        z1 = MixedPolynomial.coordinate(2, 0)
        S = FormalSeries.from_polynomial(z1 + z1**2 + z1**3 + z1**4, lam)
        region = convergence_region(S, [[0.5, 0.0]])
        model = RegionModel.model_validate(json.loads(dumps(region.to_json())))
        assert model.points[0].inside

    def test_job_spec_rejects_negative_seed(self):
        with pytest.raises(ValidationError):
            JobSpec.model_validate({"command": "rho", "seed": -3})
