import json

import numpy as np
import pytest

from conftest import SEEDS
from dyadic.covers import DigitRestricted, FullInterval
from dyadic.errors import ScenarioError
from dyadic.scenarios import (
    DEFAULT_PRESETS,
    PlanStep,
    Scenario,
    dump_scenario,
    get_preset,
    list_presets,
    load_scenario,
    parse_scenario,
    run_scenario,
    verify_manifest,
)

CANTOR_YAML = """\
version: 1
name: cantor
spec: {kind: digits, m: 2, digits: [3, 0]}
seed: 7
plan:
  - op: cover
    params: {j: 6}
  - op: dims
    params: {j_min: 2, j_max: 12, eps: 0.3}
"""


def _artifacts(run_dir):
    return {p.relative_to(run_dir).as_posix(): p.read_bytes()
            for p in sorted(run_dir.iterdir()) if p.name != "manifest.json"}


def test_parse_scenario():
    scenario = parse_scenario(CANTOR_YAML)
    assert scenario.spec == DigitRestricted(m=2, digits=(0, 3))
    assert [s.op for s in scenario.plan] == ["cover", "dims"]
    assert scenario.seed == 7
    assert parse_scenario(dump_scenario(scenario)) == scenario


def test_parse_errors_carry_position():
    with pytest.raises(ScenarioError) as err:
        parse_scenario("name: broken\nspec: {kind: full\nplan: []\n")
    assert err.value.line is not None and err.value.line >= 2
    assert "line" in str(err.value)
    with pytest.raises(ScenarioError) as err:
        parse_scenario("- just\n- a list\n")
    assert err.value.line == 1


def test_unknown_keys_are_rejected():
    with pytest.raises(ScenarioError):
        parse_scenario(CANTOR_YAML + "colour: blue\n")
    with pytest.raises(ScenarioError) as err:
        parse_scenario(CANTOR_YAML.replace("{j: 6}", "{j: 6, k: 1}"))
    assert "plan step 0 (cover)" in str(err.value)
    with pytest.raises(ScenarioError):
        parse_scenario(CANTOR_YAML.replace("op: cover", "op: paint"))
    with pytest.raises(ScenarioError):
        parse_scenario(CANTOR_YAML.replace("version: 1", "version: 2"))


def test_validation_errors_carry_position():
    with pytest.raises(ScenarioError) as err:
        parse_scenario(CANTOR_YAML + "colour: blue\n")
    assert (err.value.line, err.value.column) == (10, 1)
    with pytest.raises(ScenarioError) as err:
        parse_scenario(CANTOR_YAML.replace("seed: 7", "seed: abc"))
    assert (err.value.line, err.value.column) == (4, 7)
    assert "line 4, column 7" in str(err.value)
    with pytest.raises(ScenarioError) as err:
        parse_scenario(CANTOR_YAML.replace("m: 2,", "m: x,"))
    assert err.value.line == 3


def test_step_errors_carry_position():
    with pytest.raises(ScenarioError) as err:
        parse_scenario(CANTOR_YAML.replace("{j: 6}", "{j: 6, k: 1}"))
    assert (err.value.line, err.value.column) == (7, 20)
    with pytest.raises(ScenarioError) as err:
        parse_scenario(CANTOR_YAML.replace("{j: 6}", "{j: six}"))
    assert (err.value.line, err.value.column) == (7, 17)
    assert "plan step 0 (cover)" in str(err.value)


def test_load_scenario(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(CANTOR_YAML, encoding="utf-8")
    assert load_scenario(path).name == "cantor"
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "missing.yaml")


def test_preset_catalog():
    names = [name for name, _ in list_presets()]
    assert names == sorted(DEFAULT_PRESETS)
    assert {"cantor-half", "jaffard-unit", "union-kn", "ifs-overlap-outer",
            "quasicantor-audit", "mdp-certify"} <= set(names)
    for name in names:
        assert get_preset(name).name == name
    assert list_presets({}) == []
    with pytest.raises(ScenarioError) as err:
        get_preset("nope")
    assert "cantor-half" in str(err.value)
    with pytest.raises(ScenarioError) as err:
        get_preset("nope", {})
    assert "(none)" in str(err.value)


def test_run_writes_manifest(tmp_path):
    result = run_scenario(parse_scenario(CANTOR_YAML), out_dir=tmp_path)
    assert result.exit_code == 0
    manifest = json.loads(result.manifest.read_text(encoding="utf-8"))
    assert manifest["exit_code"] == 0
    assert manifest["seed"] == 7
    paths = [a["path"] for a in manifest["artifacts"]]
    assert paths == ["00-cover.rle", "00-cover.bits", "01-dims.csv", "01-dims.json"]
    assert [s["status"] for s in manifest["steps"]] == ["ok", "ok"]
    entries, mismatches = verify_manifest(tmp_path)
    assert len(entries) == 4 and mismatches == []

    (tmp_path / "01-dims.csv").write_text("tampered\n", encoding="utf-8")
    (tmp_path / "00-cover.bits").unlink()
    _, mismatches = verify_manifest(tmp_path)
    assert mismatches == ["00-cover.bits: missing", "01-dims.csv: hash mismatch"]


def test_run_is_deterministic(tmp_path):
    scenario = get_preset("cantor-half")
    a = run_scenario(scenario, out_dir=tmp_path / "a", threads=1)
    b = run_scenario(scenario, out_dir=tmp_path / "b", threads=4)
    assert a.exit_code == b.exit_code == 0
    assert _artifacts(tmp_path / "a") == _artifacts(tmp_path / "b")


def test_seeded_runs_repeat(tmp_path):
    scenario = Scenario(
        name="lws", spec=FullInterval(),
        plan=[PlanStep(op="lws", params={"alpha": 1.0, "eta": 0.5, "j_max": 12}),
              PlanStep(op="leaders", params={"bins": 8})],
    )
    run_scenario(scenario, 3, out_dir=tmp_path / "a")
    run_scenario(scenario, 3, out_dir=tmp_path / "b")
    run_scenario(scenario, 4, out_dir=tmp_path / "c")
    assert _artifacts(tmp_path / "a") == _artifacts(tmp_path / "b")
    assert _artifacts(tmp_path / "a")["00-lws.csv"] != _artifacts(tmp_path / "c")["00-lws.csv"]


def test_overrides_reach_matching_steps(tmp_path):
    result = run_scenario(parse_scenario(CANTOR_YAML), overrides={"j": 4, "unknown": 1}, out_dir=tmp_path)
    assert result.exit_code == 0
    header = (tmp_path / "00-cover.rle").read_text(encoding="utf-8").splitlines()[0]
    assert "j=4 count=4" in header
    manifest = json.loads(result.manifest.read_text(encoding="utf-8"))
    assert manifest["overrides"] == {"j": 4, "unknown": 1}


def test_audit_failure_exits_two(tmp_path):
    scenario = Scenario(
        name="bad-H", spec=DigitRestricted(m=2, digits=(0, 3)),
        plan=[PlanStep(op="dims", params={"j_min": 2, "j_max": 10, "H": 0.9, "eps": 0.1})],
    )
    result = run_scenario(scenario, out_dir=tmp_path)
    assert result.exit_code == 2
    assert result.failures and result.failures[0].startswith("00-dims:")


def test_missing_prerequisite_exits_one(tmp_path):
    scenario = Scenario(
        name="orphan", spec=FullInterval(),
        plan=[PlanStep(op="cover", params={"j": 3}), PlanStep(op="spectrum", params={"h_grid": [1.0]})],
    )
    result = run_scenario(scenario, out_dir=tmp_path)
    assert result.exit_code == 1
    assert "earlier 'lws' step" in result.error
    manifest = json.loads(result.manifest.read_text(encoding="utf-8"))
    assert [s["status"] for s in manifest["steps"]] == ["ok", "error"]
    assert run_scenario(tmp_path / "nope.yaml", out_dir=tmp_path).exit_code == 1


@pytest.mark.parametrize("name", ["quasicantor-audit", "mdp-certify"])
def test_presets_pass(name, tmp_path):
    result = run_scenario(get_preset(name), out_dir=tmp_path)
    assert result.exit_code == 0, result.failures or result.error


def test_jaffard_unit_checks_the_whole_grid(tmp_path):
    preset = get_preset("jaffard-unit")
    step = next(s for s in preset.plan if s.op == "spectrum")
    assert step.params["check_h"] == [1.0, 1.2, 1.4, 1.6, 1.8]
    assert step.params["tolerance"] == 0.1

    estimates, predicted = [], None
    for seed in SEEDS:
        result = run_scenario(preset, seed, out_dir=tmp_path / str(seed))
        assert result.exit_code in (0, 2), result.error
        assert all(f.startswith("01-spectrum: spectrum at h=") for f in result.failures)
        summary = json.loads((tmp_path / str(seed) / "01-spectrum.json").read_text(encoding="utf-8"))
        estimates.append([level["D_leq"] for level in summary["levels"]])
        predicted = summary["predicted"]
    mean = np.mean(estimates, axis=0)
    assert predicted == pytest.approx([0.5, 0.6, 0.7, 0.8, 0.9])
    assert np.max(np.abs(mean - np.array(predicted))) <= 0.1, mean


def test_jaffard_unit_tolerance_failure_exits_two(tmp_path):
    result = run_scenario(get_preset("jaffard-unit"), overrides={"tolerance": 1e-6}, out_dir=tmp_path)
    assert result.exit_code == 2
    assert any(f.startswith("01-spectrum: spectrum at h=1.0 off by") for f in result.failures)
