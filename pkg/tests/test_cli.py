import json
import shutil
import subprocess
import sys

import pytest

from ergolab import cli

PODVIGIN_CFG = {
    "command": "podvigin",
    "rate": {"kind": "power", "param": "1/2"},
    "masses": ["3/10", "3/10", "2/10", "2/10"],
    "delta": "3/4",
    "seed": 7,
}

KRENGEL_CFG = {
    "command": "krengel",
    "rate": {"kind": "power", "param": "1/2"},
    "J": 2,
}

ALPERN_CFG = {
    "command": "alpern",
    "heights": [2, 3],
    "masses": ["1/2", "1/2"],
    "n": 12,
}


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def manifest(outdir):
    return json.loads((outdir / "manifest.json").read_text())


# ---------------------------------------------------------------------------
# happy paths


def test_krengel_run(tmp_path, capsys):
    out = tmp_path / "run"
    code = cli.run("krengel", write_cfg(tmp_path, KRENGEL_CFG), str(out))
    assert code == 0
    for name in ("witness.json", "rows.csv", "manifest.json", "ratios.svg"):
        assert (out / name).exists()
    man = manifest(out)
    assert man["verdict"] == "pass"
    assert man["failure_count"] == 0
    assert man["artifacts"]["plot"] == "ratios.svg"
    assert man["engine"] in ("py", "cy")
    header = (out / "rows.csv").read_text().splitlines()[0]
    assert header.startswith("j,height,eps_h")
    assert "PASS krengel" in capsys.readouterr().out


def test_podvigin_run_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, PODVIGIN_CFG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.run("podvigin", cfg, str(out1)) == 0
    assert cli.run("podvigin", cfg, str(out2)) == 0
    for name in ("witness.json", "rows.csv", "ratios.svg"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    m1, m2 = manifest(out1), manifest(out2)
    m1.pop("wall_clock_s"), m2.pop("wall_clock_s")
    assert m1 == m2
    assert m1["config"]["seed"] == 7
    assert m1["refinements"] == [1, 17, 57]
    assert m1["length"] == 96900


def test_alpern_run_no_plot(tmp_path):
    out = tmp_path / "run"
    assert cli.run("alpern", write_cfg(tmp_path, ALPERN_CFG), str(out)) == 0
    assert not (out / "ratios.svg").exists()
    man = manifest(out)
    assert "plot" not in man["artifacts"]
    assert man["n"] == 12
    rows = (out / "rows.csv").read_text().splitlines()
    assert rows[0] == "family,height,multiplicity,realized_mass,target_mass,error,display"
    assert len(rows) == 3


def test_alpern_searches_n_when_missing(tmp_path):
    cfg = dict(ALPERN_CFG)
    del cfg["n"]
    out = tmp_path / "run"
    assert cli.run("alpern", write_cfg(tmp_path, cfg), str(out)) == 0
    assert manifest(out)["n"] == 12


def test_out_from_config(tmp_path):
    cfg = dict(ALPERN_CFG, out=str(tmp_path / "from_cfg"))
    assert cli.run("alpern", write_cfg(tmp_path, cfg)) == 0
    assert (tmp_path / "from_cfg" / "manifest.json").exists()


def test_verify_clean_witness(tmp_path):
    run_out = tmp_path / "run"
    assert cli.run("podvigin", write_cfg(tmp_path, PODVIGIN_CFG), str(run_out)) == 0
    vcfg = write_cfg(tmp_path, {"witness": str(run_out / "witness.json")},
                     "verify.json")
    ver_out = tmp_path / "ver"
    assert cli.run("verify", vcfg, str(ver_out)) == 0
    rows = (ver_out / "rows.csv").read_text().splitlines()
    assert rows == ["module,check,j,lhs,relation,rhs,display"]
    assert manifest(ver_out)["witness_kind"] == "podvigin"


def test_verify_corrupted_witness(tmp_path, capsys):
    run_out = tmp_path / "run"
    assert cli.run("podvigin", write_cfg(tmp_path, PODVIGIN_CFG), str(run_out)) == 0
    doc = json.loads((run_out / "witness.json").read_text())
    for node in doc["system"]["nodes"]:
        if node["kind"] == "refine":
            node["factor"] = str(int(node["factor"]) + 1)
            break
    bad = tmp_path / "bad_witness.json"
    bad.write_text(json.dumps(doc))
    vcfg = write_cfg(tmp_path, {"witness": str(bad)}, "verify.json")
    ver_out = tmp_path / "ver"
    assert cli.run("verify", vcfg, str(ver_out)) == 1
    err = capsys.readouterr().err
    assert "FAIL" in err
    man = manifest(ver_out)
    assert man["verdict"] == "fail"
    assert man["failure_count"] >= 1
    body = (ver_out / "rows.csv").read_text()
    assert "system_structure" in body
    assert "eq2_final" in body


def test_report_regenerates_rows(tmp_path):
    run_out = tmp_path / "run"
    assert cli.run("krengel", write_cfg(tmp_path, KRENGEL_CFG), str(run_out)) == 0
    rcfg = write_cfg(tmp_path, {"witness": str(run_out / "witness.json")},
                     "report.json")
    rep_out = tmp_path / "rep"
    assert cli.run("report", rcfg, str(rep_out)) == 0
    assert (rep_out / "rows.csv").read_bytes() == (run_out / "rows.csv").read_bytes()
    assert (rep_out / "ratios.svg").read_bytes() == (run_out / "ratios.svg").read_bytes()


# ---------------------------------------------------------------------------
# pipeline failures (exit 1)


def test_plan_too_large_aborts_with_manifest(tmp_path, capsys):
    cfg = dict(KRENGEL_CFG, J=3, height_cap=100)
    out = tmp_path / "run"
    assert cli.run("krengel", write_cfg(tmp_path, cfg), str(out)) == 1
    assert "FAIL krengel" in capsys.readouterr().err
    assert not (out / "witness.json").exists()
    man = manifest(out)
    assert man["verdict"] == "fail"
    assert man["aborted"] == "PlanTooLarge"
    assert man["first_failure"]


def test_alpern_tolerance_breach_aborts(tmp_path):
    cfg = {"command": "alpern", "heights": [3, 5],
           "masses": ["1/2", "1/2"], "n": 17, "tol": "1/10"}
    out = tmp_path / "run"
    assert cli.run("alpern", write_cfg(tmp_path, cfg), str(out)) == 1
    assert manifest(out)["aborted"] == "ToleranceError"


# ---------------------------------------------------------------------------
# config errors (exit 2)


@pytest.mark.parametrize("mangle", [
    lambda c: {**c, "masses": ["3/0", "3/10", "2/10", "2/10"]},
    lambda c: {**c, "surprise": 1},
    lambda c: {**c, "command": "krengel"},
    lambda c: {**c, "delta": "3/2"},
    lambda c: {**c, "eps_schedule": ["1/50"]},
    lambda c: {**c, "seed": True},
    lambda c: {**c, "retry_cap": "many"},
    lambda c: {k: v for k, v in c.items() if k != "masses"},
])
def test_config_errors(tmp_path, capsys, mangle):
    cfg = write_cfg(tmp_path, mangle(dict(PODVIGIN_CFG)))
    assert cli.run("podvigin", cfg, str(tmp_path / "out")) == 2
    assert "config error" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_config_file_missing(tmp_path):
    assert cli.run("alpern", str(tmp_path / "nope.json"), None) == 2


def test_config_not_an_object(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("[1, 2]")
    assert cli.run("alpern", str(path), None) == 2


def test_alpern_bad_heights(tmp_path):
    cfg = dict(ALPERN_CFG, heights=[2, "3"])
    assert cli.run("alpern", write_cfg(tmp_path, cfg), str(tmp_path / "o")) == 2


def test_verify_unknown_kind(tmp_path):
    w = tmp_path / "w.json"
    w.write_text(json.dumps({"kind": "mystery"}))
    cfg = write_cfg(tmp_path, {"witness": str(w)}, "v.json")
    assert cli.run("verify", cfg, str(tmp_path / "o")) == 2


def test_verify_malformed_witness(tmp_path):
    w = tmp_path / "w.json"
    w.write_text(json.dumps({"kind": "podvigin", "spec": {}}))
    cfg = write_cfg(tmp_path, {"witness": str(w)}, "v.json")
    assert cli.run("verify", cfg, str(tmp_path / "o")) == 2


# ---------------------------------------------------------------------------
# entry points


def test_main_requires_subcommand():
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2


def test_main_dispatches(tmp_path):
    cfg = write_cfg(tmp_path, ALPERN_CFG)
    assert cli.main(["alpern", "--config", cfg,
                     "--out", str(tmp_path / "run")]) == 0


def test_module_invocation(tmp_path):
    cfg = write_cfg(tmp_path, ALPERN_CFG)
    proc = subprocess.run(
        [sys.executable, "-m", "ergolab.cli", "alpern", "--config", cfg,
         "--out", str(tmp_path / "run")],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "PASS alpern" in proc.stdout


@pytest.mark.skipif(shutil.which("ergolab") is None,
                    reason="console script not on PATH")
def test_console_script(tmp_path):
    cfg = write_cfg(tmp_path, ALPERN_CFG)
    proc = subprocess.run(
        ["ergolab", "alpern", "--config", cfg, "--out", str(tmp_path / "run")],
        capture_output=True, text=True)
    assert proc.returncode == 0
