import csv
import json
import math

import pytest

from multiergodic.cli import ExperimentConfig, main, preset_configs, read_float, spec_from_dict, spec_to_dict

GOLDEN = {
    "weight": "bump",
    "observables": [{"kind": "sin"}, {"kind": "sin"}],
    "rotations": ["golden", 1.0],
    "theta0": [0.1],
    "mode": "discrete",
    "scale": 100,
}


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


def test_average(tmp_path, capsys):
    code, out, err = run(["average", write(tmp_path, "s.json", GOLDEN)], capsys)
    assert code == 0 and err == ""
    res = json.loads(out)
    assert res["abs_error"] <= 1e-8 and res["scale"] == 100


def test_sweep_csv(tmp_path, capsys):
    code, out, _ = run(["sweep", write(tmp_path, "s.json", GOLDEN), "--scales", "10,100,1000"], capsys)
    assert code == 0
    assert "\r" not in out
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["scale", "value", "target", "abs_error", "floor"]
    assert [float(r[0]) for r in rows[1:]] == [10, 100, 1000]


def test_fit_round_trip(tmp_path, capsys):
    lines = ["scale,value,target,abs_error,floor"]
    for n in range(10, 200, 5):
        lines.append(f"{n},{3 * n**-2.0!r},0.0,{3 * n**-2.0!r},0.0")
    p = write(tmp_path, "c.csv", "\n".join(lines) + "\n")
    code, out, _ = run(["fit", p, "--model", "power"], capsys)
    assert code == 0
    fit = json.loads(out)
    assert set(fit) == {"model", "params", "residual", "points_used"}
    assert fit["params"]["m"] == pytest.approx(2.0, abs=1e-10)


def test_audit(capsys):
    code, out, _ = run(["audit", "boundedness", "--delta", "power:1", "--tilde", "exp:1", "--m", "1",
                        "--grid", "10,20,40,80"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"] == "plateauing"
    assert rep["table"][-1]["value"] == pytest.approx(2 * math.e / (math.e - 1) ** 2)


def test_divisors(capsys):
    code, out, _ = run(["divisors", "--rho", "golden", "--rho", "1", "--K", "5"], capsys)
    assert code == 0
    scan = json.loads(out)
    assert scan["argmin_k"] == [5, 0] and scan["argmin_n"] == 3


def test_shells(capsys):
    code, out, _ = run(["shells", "--max-nu", "7"], capsys)
    assert code == 0
    assert out.splitlines() == ["nu,count", "1,4", "2,8", "3,12", "4,18", "5,28", "6,40", "7,52"]


def test_counterexample(capsys):
    code, out, _ = run(["counterexample", "--T", "10"], capsys)
    assert code == 0
    assert float(out.splitlines()[1].split(",")[1]) == pytest.approx(-1.294882024662807e-06, rel=1e-12)


def test_malformed_json(tmp_path, capsys):
    code, out, err = run(["average", write(tmp_path, "bad.json", "{nope")], capsys)
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "usage"


def test_missing_field(tmp_path, capsys):
    code, _, err = run(["average", write(tmp_path, "s.json", {"weight": "bump"})], capsys)
    assert code == 2 and "observables" in json.loads(err)["message"]


def test_bad_arguments(capsys):
    code, _, err = run(["frobnicate"], capsys)
    assert code == 2
    json.loads(err)


def test_module_error(tmp_path, capsys):
    spec = dict(GOLDEN, weight="sin2", rotations=[0.5, 0.5], mode="continuous", scale=1e9)
    code, out, err = run(["average", write(tmp_path, "s.json", spec)], capsys)
    assert code == 3 and out == ""
    assert json.loads(err)["type"] == "BudgetExceededError"


def test_io_error(tmp_path, capsys):
    code, _, err = run(["average", tmp_path / "missing.json"], capsys)
    assert code == 4


def test_io_error_on_write(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, _ = run(["--out", blocker / "sub", "shells"], capsys)
    assert code == 4


def test_hex_floats_accepted():
    assert read_float((0.1).hex()) == 0.1
    assert read_float("0.25") == 0.25
    assert read_float(3) == 3.0


def test_spec_round_trip_bit_exact():
    spec, _ = spec_from_dict(dict(GOLDEN, theta0=[0.1 + 1e-17 * 3]))
    again, _ = spec_from_dict(json.loads(json.dumps(spec_to_dict(spec))))
    assert again == spec


def test_config_round_trip():
    cfg = preset_configs("fig1_golden")[0]
    cfg.scales = [10, 0.1 + 0.2]
    cfg.fit_range = [20, 1000.5]
    back = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert [read_float(s) for s in back.scales] == [10, 0.1 + 0.2]
    assert [read_float(v) for v in back.fit_range] == [20, 1000.5]
    assert back.spec == cfg.spec and back.name == cfg.name


def test_config_matches_preset_bytes(tmp_path, capsys):
    assert run(["--out", tmp_path / "a", "preset", "fig1_golden"], capsys)[0] == 0
    cfg = preset_configs("fig1_golden")[0].to_dict()
    code, out, _ = run(["--out", tmp_path / "b", "run", write(tmp_path, "cfg.json", cfg)], capsys)
    assert code == 0
    name = cfg["output"] + ".csv"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert json.loads(out)["files"]


def test_reruns_are_byte_identical(tmp_path, capsys):
    for d in ("x", "y"):
        assert run(["--out", tmp_path / d, "preset", "cex_degree3"], capsys)[0] == 0
    for name in ("cex_degree3.csv", "cex_degree3.fits.json"):
        assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()
    assert not list((tmp_path / "x").glob("*.tmp"))


def test_resonant_config_error_column_does_not_decay(tmp_path, capsys):
    cfg = {
        "name": "resonant",
        "spec": dict(GOLDEN, weight="sin2", rotations=["golden", "golden"], theta0=[0.0], mode="continuous"),
        "scales": [100, 200, 400, 800],
    }
    code, _, _ = run(["--out", tmp_path, "run", write(tmp_path, "r.json", cfg)], capsys)
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "resonant.csv").open()))
    assert all(float(r["abs_error"]) > 0.49 for r in rows)


@pytest.mark.parametrize("name", ["fig1_golden", "fig2_liouville", "cex_resonant", "shells", "bump_growth"])
def test_presets_run(tmp_path, capsys, name):
    code, out, _ = run(["--out", tmp_path, "preset", name], capsys)
    assert code == 0
    for f in json.loads(out)["files"]:
        text = open(f).read()
        assert text.endswith("\n") and "\r" not in text


def test_fig1_preset_records_weighted_error(tmp_path, capsys):
    run(["--out", tmp_path, "preset", "fig1_golden"], capsys)
    rows = {float(r["scale"]): r for r in csv.DictReader((tmp_path / "fig1_golden_bump.csv").open())}
    assert float(rows[100.0]["abs_error"]) <= 1e-8


def test_cex_resonant_final_distance(tmp_path, capsys):
    run(["--out", tmp_path, "preset", "cex_resonant"], capsys)
    last = list(csv.DictReader((tmp_path / "cex_resonant.csv").open()))[-1]
    assert float(last["scale"]) == 1e4
    assert abs(float(last["value"]) - 0.5) < 1e-6
