import json

from click.testing import CliRunner

from dyadic import __version__
from dyadic.cli import cli

CANTOR = "{kind: digits, m: 2, digits: [0, 3]}"


def test_version():
    result = CliRunner().invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_list_presets():
    result = CliRunner().invoke(cli, ["list-presets"])
    assert result.exit_code == 0
    assert "cantor-half" in result.output
    assert "mdp-certify" in result.output


def test_run_and_explain(tmp_path):
    runner = CliRunner()
    result = runner.invoke(cli, ["run", "cantor-half", "--out-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert "All steps passed" in result.output
    assert "00-cover.rle" in result.output

    explained = runner.invoke(cli, ["explain", "--run", str(tmp_path)])
    assert explained.exit_code == 0
    assert "02-classify.json" in explained.output

    (tmp_path / "02-classify.json").write_text("{}\n", encoding="utf-8")
    explained = runner.invoke(cli, ["explain", "--run", str(tmp_path)])
    assert explained.exit_code == 2
    assert "MISMATCH" in explained.output


def test_run_scenario_file_with_overrides(tmp_path):
    scenario = tmp_path / "s.yaml"
    scenario.write_text(
        f"version: 1\nname: s\nspec: {CANTOR}\nplan:\n  - op: cover\n    params: {{j: 6}}\n",
        encoding="utf-8",
    )
    out = tmp_path / "out"
    result = CliRunner().invoke(cli, ["run", str(scenario), "--set", "j=4", "--out-dir", str(out)])
    assert result.exit_code == 0, result.output
    assert "count=4" in (out / "00-cover.rle").read_text(encoding="utf-8")


def test_run_errors(tmp_path):
    runner = CliRunner()
    assert runner.invoke(cli, ["run", "no-such-preset"]).exit_code == 1
    result = runner.invoke(cli, ["run", "cantor-half", "--set", "novalue", "--out-dir", str(tmp_path)])
    assert result.exit_code == 1


def test_dims_exit_codes(tmp_path):
    runner = CliRunner()
    ok = runner.invoke(cli, ["dims", "--spec", CANTOR, "--j-max", "12", "--eps", "0.3",
                             "--out-dir", str(tmp_path)])
    assert ok.exit_code == 0, ok.output
    payload = json.loads((tmp_path / "dims.json").read_text(encoding="utf-8"))
    assert abs(payload["H_hat"] - 0.5) < 1e-9
    assert payload["audit"]["all_passed"] is True

    bad = runner.invoke(cli, ["dims", "--spec", CANTOR, "--j-max", "10", "--eps", "0.1", "--H", "0.9",
                              "--format", "csv", "--out-dir", str(tmp_path)])
    assert bad.exit_code == 2
    assert "AUDIT FAILED" in bad.output
    assert (tmp_path / "dims.csv").read_text(encoding="utf-8").startswith("# H_hat=")


def test_cover_command(tmp_path):
    spec_file = tmp_path / "spec.yaml"
    spec_file.write_text(CANTOR, encoding="utf-8")
    result = CliRunner().invoke(cli, ["cover", "--spec", f"@{spec_file}", "--j", "4", "--format", "csv",
                                      "--out-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "cover-4.rle").read_text(encoding="utf-8").splitlines()[1:] == [
        "0 1", "3 1", "12 1", "15 1",
    ]


def test_j_max_caps_cover_and_classify():
    runner = CliRunner()
    capped = runner.invoke(cli, ["cover", "--spec", CANTOR, "--j", "10", "--j-max", "8"])
    assert capped.exit_code == 1
    assert "scale 10 exceeds the configured maximum 8" in capped.output
    assert runner.invoke(cli, ["cover", "--spec", CANTOR, "--j", "8", "--j-max", "8"]).exit_code == 0

    args = ["classify", "--spec", CANTOR, "--j", "6", "--beta", "1", "--eps", "0.1"]
    too_deep = runner.invoke(cli, args + ["--j-max", "10"])
    assert too_deep.exit_code == 1
    assert "child scale 12" in too_deep.output
    ok = runner.invoke(cli, args + ["--j-max", "12"])
    assert ok.exit_code == 0, ok.output


def test_bad_spec_is_an_error():
    result = CliRunner().invoke(cli, ["cover", "--spec", "{kind: digits, m: 2, digits: [0, 9]}", "--j", "4"])
    assert result.exit_code == 1
    assert "Error" in result.output


def test_explicit_spec_needs_H():
    result = CliRunner().invoke(cli, ["classify", "--spec", "{kind: explicit, levels: {2: [0, 1]}}",
                                      "--j", "1", "--beta", "1", "--eps", "0.1"])
    assert result.exit_code == 1


def test_quasicantor_command(tmp_path):
    result = CliRunner().invoke(cli, ["quasicantor", "--spec", CANTOR, "--J", "8", "--b", "0.5",
                                      "--eps", "0.04", "--j-max", "24", "--format", "csv",
                                      "--out-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "quasicantor.csv").exists()
    assert (tmp_path / "quasicantor-rung2.rle").exists()


def test_mdp_command(tmp_path):
    result = CliRunner().invoke(cli, ["mdp", "--J", "6", "--b", "0.5", "--eps", "0.05", "--b-n", "0.05",
                                      "--j-max", "20", "--out-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    payload = json.loads((tmp_path / "mdp.json").read_text(encoding="utf-8"))
    assert payload["certificate"]["self_check"] is True
    assert payload["certificate"]["t_certified"] >= payload["target"] - 0.05
