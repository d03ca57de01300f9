"""
命令行入口的测试：子命令输出、产物文件与退出码。
"""

import csv
import json

import pytest
from pytest import approx

import pluriflow_cli
from core.errors import NumericFailure


def _run(capsys, argv):
    code = pluriflow_cli.run(argv)
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


class TestCommands:
    def test_rho_with_count_below(self, capsys, data_dir):
        code, payload = _run(
            capsys, ["rho", "--lambda", str(data_dir / "lambda_1_2.json"), "--cap", "4", "--count-below", "4"]
        )
        assert code == 0
        assert payload["ok"] is True
        assert payload["count_below"] == {"count": 9, "bound": 45}

    def test_deps_inline_irrational(self, capsys):
        code, payload = _run(capsys, ["deps", "--lambda", "1,tau", "--basis", "tau=1.618"])
        assert code == 0
        assert payload["dependence"] == {"verdict": "Independent"}

    def test_flow_image(self, capsys):
        code, payload = _run(capsys, ["flow", "--lambda", "1,2", "--point", "1,1", "--t", "0.6931471805599453"])
        assert code == 0
        image = [complex(re, im) for re, im in payload["image"]]
        assert image == approx([0.5, 0.25])

    def test_obstruction_on_real_slice(self, capsys, data_dir):
        code, payload = _run(
            capsys,
            [
                "obstruction",
                "--lambda", "1,2",
                "--poly", str(data_dir / "antisymmetric.json"),
                "--set", str(data_dir / "real_slice.json"),
            ],
        )
        assert code == 0
        assert payload["verdict"] == "ObstructedOnF"

    def test_hull_writes_artifact(self, capsys, data_dir, tmp_path):
        out = tmp_path / "hull"
        code, payload = _run(
            capsys,
            ["hull", "--lambda", "1,1", "--set", str(data_dir / "torus.json"), "--point", "0,0", "--out", str(out)],
        )
        assert code == 0
        assert payload["verdict"] == "Inside"
        written = json.loads((out / "hull.json").read_text(encoding="utf-8"))
        assert written["verdict"] == "Inside"

    def test_psi_grid_writes_csv(self, capsys, data_dir, tmp_path):
        code, payload = _run(
            capsys,
            [
                "psi",
                "--lambda", "1,1",
                "--set", str(data_dir / "torus.json"),
                "--cap", "2",
                "--grid", "builtin:sphere:3",
                "--out", str(tmp_path),
            ],
        )
        assert code == 0
        assert payload["grid_size"] == 3
        with open(tmp_path / "psi.csv", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["re_z1", "im_z1", "re_z2", "im_z2", "value"]
        assert len(rows) == 4

    def test_divergent_partial_sums(self, capsys):
        code, payload = _run(capsys, ["divergent", "--count", "8", "--kmax", "4"])
        assert code == 0
        assert payload["partial_sums_at_b1"][-1] > 1e6
        assert payload["sup_on_K"] == 0.0
        assert payload["max_relative_error"] <= 1e-9

    def test_schemas(self, capsys, tmp_path):
        code, payload = _run(capsys, ["schemas", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "schemas" / "job.schema.json").is_file()
        assert len(payload["schemas"]) == len(list((tmp_path / "schemas").glob("*.schema.json")))

    def test_json_job_spec(self, capsys, data_dir):
        job = json.dumps({"command": "deps", "lambda_file": str(data_dir / "lambda_1_2.json")})
        code, payload = _run(capsys, ["--json", job])
        assert code == 0
        assert payload["dependence"]["verdict"] == "Dependent"


class TestExitCodes:
    def test_missing_lambda(self, capsys):
        code, payload = _run(capsys, ["deps"])
        assert code == 2
        assert payload == {"ok": False, "error": payload["error"], "kind": "input"}

    def test_point_dimension_mismatch(self, capsys):
        code, payload = _run(capsys, ["flow", "--lambda", "1,2", "--point", "1,2,3"])
        assert code == 2
        assert payload["kind"] == "input"

    def test_missing_file(self, capsys, tmp_path):
        code, _ = _run(capsys, ["deps", "--lambda", "1,2", "--set", str(tmp_path / "nope.json")])
        # deps 不读集合文件
        assert code == 0
        code, payload = _run(capsys, ["direction-set", "--lambda", "1,2", "--set", str(tmp_path / "nope.json")])
        assert code == 2
        assert payload["kind"] == "input"

    def test_certified_without_mesh(self, capsys, data_dir):
        code, _ = _run(
            capsys,
            ["psi", "--lambda", "1,1", "--set", str(data_dir / "torus.json"), "--point", "1,1", "--mode", "certified"],
        )
        assert code == 2

    def test_bad_job_spec(self, capsys):
        code, payload = _run(capsys, ["--json", '{"command": "deps", "seed": -1}'])
        assert code == 2
        assert payload["kind"] == "input"

    def test_unknown_subcommand(self, capsys):
        assert pluriflow_cli.run(["nonsense"]) == 2

    def test_numeric_failure(self, capsys, monkeypatch):
        def boom(*args, **kwargs):
            raise NumericFailure("HiGHS 求解失败")

        monkeypatch.setattr(pluriflow_cli, "enumerate_rho", boom)
        code, payload = _run(capsys, ["rho", "--lambda", "1,2"])
        assert code == 3
        assert payload["kind"] == "numeric"

    def test_unbounded_psi_needs_require_finite(self, capsys, tmp_path):
        # z2 在单点集上为零而在 (0, 1) 处为 1
        set_file = tmp_path / "point.json"
        set_file.write_text(json.dumps({"descriptor": {"type": "explicit", "points": [[1.0, 0.0]]}}), encoding="utf-8")
        argv = ["psi", "--lambda", "1,1", "--set", str(set_file), "--cap", "2", "--point", "0,1"]
        code, payload = _run(capsys, argv)
        assert code == 0
        assert payload["estimate"]["status"] == "unbounded"
        assert payload["estimate"]["value"] == "inf"
        code, payload = _run(capsys, argv + ["--require-finite"])
        assert code == 3
        assert payload["kind"] == "numeric"


@pytest.mark.parametrize("command", sorted(pluriflow_cli.HANDLERS))
def test_every_command_has_parser(command):
    parser = pluriflow_cli.build_parser()
    extra = ["ex7.1"] if command == "examples" else []
    required = {"decompose": ["--poly", "x"], "obstruction": ["--poly", "x"], "flow": ["--point", "1"],
                "hull": ["--point", "1"], "lreg": ["--point", "1"]}
    args = parser.parse_args([command] + extra + required.get(command, []))
    assert args.command == command
