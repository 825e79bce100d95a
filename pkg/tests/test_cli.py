import json
import subprocess
import sys

import pytest

from twistedtriples import cli


def run_main(tmp_path, *argv):
    code = cli.main([*argv, "--out", str(tmp_path)])
    return code, tmp_path


def report(path, command):
    return json.loads((path / f"{command}.json").read_text())


@pytest.mark.parametrize("command", cli.SUBCOMMANDS)
def test_every_subcommand_runs_clean(tmp_path, command):
    code, out = run_main(tmp_path, command)
    assert code == 0
    rep = report(out, command)
    assert rep["status"] == "ok" and rep["violations"] == []
    assert rep["subcommand"] == command and rep["tool"] == "twistedtriples"
    assert set(rep) == {"tool", "version", "subcommand", "scenario_hash", "scenario", "result", "violations", "status"}
    assert (out / f"{command}.csv").read_text().count("\n") >= 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "twistedtriples", "covering-analyze", "--scenario", "m2", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "covering-analyze: ok" in proc.stdout


def test_covering_verdicts(tmp_path):
    run_main(tmp_path / "a", "covering-analyze", "--scenario", "m2")
    m2 = report(tmp_path / "a", "covering-analyze")["result"]
    assert m2["rank1_regular"] and m2["elwood"]["free"] and m2["phi"]["ok"] and m2["intertwining"]["ok"]
    run_main(tmp_path / "b", "covering-analyze", "--scenario", "c3-swap")
    c3 = report(tmp_path / "b", "covering-analyze")["result"]
    assert c3["verdict"] == "not rank-1 regular" and not c3["elwood"]["free"]


def test_verify_cocycle_modes(tmp_path):
    run_main(tmp_path / "a", "verify-cocycle", "--scenario", "clifford-3")
    r = report(tmp_path / "a", "verify-cocycle")["result"]
    assert r["mode"] == "exhaustive" and r["tolerance"] == 0 and r["violation_count"] == 0
    run_main(tmp_path / "b", "verify-cocycle", "--scenario", "theta-z2")
    r = report(tmp_path / "b", "verify-cocycle")["result"]
    assert r["mode"] == "sampled" and r["checked"] == 10_000


def test_torus_flags(tmp_path):
    code, out = run_main(tmp_path, "torus-demo", "--M", "2,1,0,3", "--emit", "rep-check")
    assert code == 0
    rep = report(out, "torus-demo")
    assert rep["scenario"]["torus"]["M"] == [[2, 1], [0, 3]]
    assert all(v <= 1e-11 for v in rep["result"]["checks"].values())


@pytest.mark.parametrize("emit", ["spectrum", "regularity", "summability"])
def test_torus_emits(tmp_path, emit):
    code, out = run_main(tmp_path, "torus-demo", "--emit", emit)
    assert code == 0, report(out, "torus-demo")["violations"]


def test_violation_exit_code(tmp_path):
    sc = tmp_path / "strict.json"
    sc.write_text(json.dumps({"slack": -1.0}))
    code, out = run_main(tmp_path / "o", "summability", "--scenario", str(sc))
    assert code == 1
    rep = report(out, "summability")
    assert rep["status"] == "violation" and any("exceeds bound" in v for v in rep["violations"])


@pytest.mark.parametrize(
    "argv",
    [
        ["growth", "--scenario", "no-such-scenario"],
        ["torus-demo", "--M", "1,2,3"],
        ["torus-demo", "--M", "1,0,0,1"],
        ["covering-analyze", "--scenario", "BAD_JSON"],
        ["spectrum", "--scenario", "HUGE"],
        ["growth", "--scenario", "DESCENDING"],
        ["order-estimate", "--input", "missing.txt"],
        ["regularity-sweep", "--kmax", "4"],
    ],
)
def test_bad_input_exit_code(tmp_path, argv, capsys):
    (tmp_path / "bad.json").write_text("{not json")
    (tmp_path / "huge.json").write_text(json.dumps({"triple": {"kind": "group", "radius": 80}}))
    (tmp_path / "desc.json").write_text(json.dumps({"radii": [10, 5, 20, 30]}))
    subst = {"BAD_JSON": str(tmp_path / "bad.json"), "HUGE": str(tmp_path / "huge.json"), "DESCENDING": str(tmp_path / "desc.json"),
             "missing.txt": str(tmp_path / "missing.txt")}
    argv = [subst.get(a, a) for a in argv]
    assert cli.main([*argv, "--out", str(tmp_path / "o")]) == 2
    assert "error:" in capsys.readouterr().err


@pytest.mark.parametrize("command, extra", [("summability", []), ("regularity-sweep", []), ("torus-demo", ["--emit", "rep-check"])])
def test_byte_identical_across_runs_and_threads(tmp_path, command, extra):
    outs = []
    for i, threads in enumerate(["1", "1", "4"]):
        d = tmp_path / str(i)
        assert cli.main([command, *extra, "--threads", threads, "--out", str(d)]) == 0
        outs.append(((d / f"{command}.json").read_bytes(), (d / f"{command}.csv").read_bytes()))
    assert outs[0] == outs[1] == outs[2]


def test_hash_depends_on_scenario_only(tmp_path):
    cli.main(["growth", "--out", str(tmp_path / "a"), "--threads", "1"])
    cli.main(["growth", "--out", str(tmp_path / "b"), "--threads", "3"])
    cli.main(["growth", "--out", str(tmp_path / "c"), "--seed", "5"])
    h = [report(tmp_path / x, "growth")["scenario_hash"] for x in "abc"]
    assert h[0] == h[1] != h[2]


def test_order_estimate_from_files(tmp_path):
    seq = tmp_path / "seq.txt"
    seq.write_text("\n".join(str((n + 1) ** -0.5) for n in range(20_000)))
    assert cli.main(["order-estimate", "--input", str(seq), "--out", str(tmp_path / "a")]) == 0
    r = report(tmp_path / "a", "order-estimate")["result"]
    assert r["source"] == "sequence" and abs(r["estimates"]["lambda_slope"] - 2) < 0.1

    # a spectrum dump written by the spectrum subcommand
    assert cli.main(["spectrum", "--scenario", "z-clifford", "--out", str(tmp_path / "s")]) == 0
    spec = tmp_path / "s" / "spectrum.csv"
    assert cli.main(["order-estimate", "--input", str(spec), "--out", str(tmp_path / "b")]) == 0
    r = report(tmp_path / "b", "order-estimate")["result"]
    assert r["source"] == "spectrum" and r["dropped_zeros"] == 1 and r["terms"] == 10


def test_rounding_and_clean():
    assert cli._round(1 / 3) == 0.333333333333
    assert cli._round(float("nan")) == "nan" and cli._round(float("-inf")) == "-inf"
    assert cli.clean({"a": (1, 2.0, 1j)}) == {"a": [1, 2.0, [0.0, 1.0]]}
    assert cli.dumps({"b": 1, "a": 2}).index('"a"') < cli.dumps({"b": 1, "a": 2}).index('"b"')


def test_parse_helpers():
    assert cli._parse_M("2,1,0,3") == [[2, 1], [0, 3]]
    assert cli._parse_M("[[2,0],[0,2]]") == [[2, 0], [0, 2]]
    assert cli._parse_grid("-1,0,1") == [-1.0, 0.0, 1.0]
    with pytest.raises(cli.ScenarioError):
        cli._parse_grid("a,b")


def test_builtin_scenarios_resolve():
    for name in cli.BUILTIN_SCENARIOS:
        assert isinstance(cli.load_scenario(name), dict)
