import json
import subprocess
import sys

import pytest

from ringtrap.cli import EXIT_ASSERTION, EXIT_CAP, EXIT_OK, EXIT_USAGE, main

SUBCOMMANDS = ("simulate", "map", "coupling", "spectral", "oracle",
               "transience", "theta", "cutoff", "mixing", "negdep")


def test_help_lists_every_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for name in SUBCOMMANDS:
        assert name in text
    for flag in ("--seed", "--workers", "--out", "--format", "--assert"):
        with pytest.raises(SystemExit):
            main(["simulate", "--help"])
        sub_text = capsys.readouterr().out
        assert flag in sub_text


def test_usage_error_exits_2():
    proc = subprocess.run(
        [sys.executable, "-m", "ringtrap.cli", "simulate", "--config",
         "S:1,-1"],  # missing required --horizon
        capture_output=True)
    assert proc.returncode == EXIT_USAGE


def test_bad_config_is_usage_error(tmp_path):
    code = main(["simulate", "--config", "S:2,0", "--horizon", "1",
                 "--out", str(tmp_path)])
    assert code == EXIT_USAGE


def test_simulate_deterministic(tmp_path):
    args = ["simulate", "--process", "swt", "--config", "S:1,-1",
            "--horizon", "10", "--seed", "7"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(out1)]) == EXIT_OK
    assert main(args + ["--out", str(out2)]) == EXIT_OK
    t1 = (out1 / "simulate.trajectory.ndjson").read_bytes()
    t2 = (out2 / "simulate.trajectory.ndjson").read_bytes()
    assert t1 == t2
    manifest = json.loads((out1 / "simulate.manifest.json").read_text())
    assert manifest["subcommand"] == "simulate"
    assert manifest["master_seed"] == 7
    assert manifest["outputs"]


def test_simulate_aggregate_engine(tmp_path):
    code = main(["simulate", "--config", "S:1,-1", "--horizon", "5",
                 "--engine", "aggregate", "--samples", "100",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "simulate.exits.csv").exists()


def test_map_subcommand(tmp_path):
    code = main(["map", "--direction", "fep2swt", "--config",
                 "F:1,1,0,0,1,0", "--out", str(tmp_path)])
    assert code == EXIT_OK
    payload = json.loads((tmp_path / "map.json").read_text())
    assert payload["output"] == "S:1,-1,0"


def test_map_trajectory_dynamic(tmp_path):
    sim_out = tmp_path / "sim"
    main(["simulate", "--process", "fep", "--config", "F:1,1,0,0,1,0",
          "--horizon", "8", "--seed", "3", "--out", str(sim_out)])
    code = main(["map", "--direction", "fep2swt", "--trajectory",
                 str(sim_out / "simulate.trajectory.ndjson"),
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "map.trajectory.ndjson").exists()


def test_spectral_row_and_figure(tmp_path):
    code = main(["spectral", "--K", "100", "--s", "0", "--constant", "1.0",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    lines = (tmp_path / "spectral.csv").read_text().splitlines()
    assert lines[0].startswith("K,s,tau_star")
    assert len(lines) == 2
    assert (tmp_path / "spectral.png").exists()


def test_oracle_subcommand(tmp_path):
    code = main(["oracle", "--seed-config", "S:-3,1,1,1,0,-1,0",
                 "--observable", "occupied:6", "--power", "5",
                 "--format", "json", "--out", str(tmp_path)])
    assert code == EXIT_OK
    rows = json.loads((tmp_path / "oracle.json").read_text())
    powers = [r["value"] for r in rows]
    assert powers == [0, 0, 0, 0, 0, 2]


def test_oracle_cap_exit(tmp_path):
    code = main(["oracle", "--seed-config", "S:1,1,1,-1,-1,0,0",
                 "--time", "1.0", "--max-states", "3", "--out",
                 str(tmp_path)])
    assert code == EXIT_CAP


def test_coupling_assert_ok(tmp_path):
    code = main(["coupling", "--kind", "labelled", "--config", "S:1,1,-1",
                 "--seeds", "20", "--horizon", "20", "--assert",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    payload = json.loads((tmp_path / "coupling.report.json").read_text())
    assert payload["violations"] == 0
    assert payload["checks"] > 0


def test_transience_and_theta(tmp_path):
    code = main(["transience", "--config", "S:1,-1", "--t", "0.5", "1.0",
                 "--samples", "20000", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "transience.csv").exists()
    assert (tmp_path / "transience.png").exists()
    code = main(["theta", "--config", "S:1,-1", "--eps", "0.25",
                 "--t-hi", "4.0", "--width-tol", "0.1",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    payload = json.loads((tmp_path / "theta.json").read_text())
    assert payload["lower"] <= payload["point"] <= payload["upper"]


def test_cutoff_subcommand(tmp_path):
    code = main(["cutoff", "--K", "6", "--grid", "0", "1", "2",
                 "--samples", "2000", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "cutoff.csv").exists()
    assert (tmp_path / "cutoff.png").exists()
    assert (tmp_path / "cutoff.slopes.json").exists()


def test_mixing_subcommand(tmp_path):
    code = main(["mixing", "--K", "4", "--s", "2", "--samples", "200",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    payload = json.loads((tmp_path / "mixing.json").read_text())
    assert "exact_ssep_mixing" in payload
    assert payload["meeting_bound"] is not None
    assert (tmp_path / "mixing.png").exists()


def test_negdep_assert(tmp_path):
    code = main(["negdep", "--assert", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "negdep.powers.csv").exists()
    payload = json.loads((tmp_path / "negdep.json").read_text())
    assert payload["case1"]["strict"] and payload["case2"]["strict"]


def test_every_output_has_manifest(tmp_path):
    main(["spectral", "--K", "8", "--constant", "1.0", "--out",
          str(tmp_path)])
    manifest = json.loads((tmp_path / "spectral.manifest.json").read_text())
    for path in manifest["outputs"]:
        assert json.dumps(path)  # paths are serializable strings
    assert manifest["version"]
    assert manifest["started"] <= manifest["finished"]


def test_params_file_with_flag_precedence(tmp_path):
    params = tmp_path / "exp.json"
    params.write_text(json.dumps({
        "K": [6], "grid": [0.0, 1.0, 2.0], "samples": 1000,
        "family": "SingleDeepTrapCritical"}))
    code = main(["cutoff", "--params", str(params), "--samples", "500",
                 "--no-plot", "--out", str(tmp_path)])
    assert code == EXIT_OK
    rows = (tmp_path / "cutoff.csv").read_text().splitlines()
    assert rows[1].split(",")[0] == "6"
    manifest = json.loads((tmp_path / "cutoff.manifest.json").read_text())
    assert manifest["params"]["samples"] == 500   # explicit flag wins


def test_params_file_unknown_key_is_usage_error(tmp_path):
    params = tmp_path / "bad.json"
    params.write_text(json.dumps({"no_such_parameter": 1}))
    code = main(["theta", "--params", str(params), "--config", "S:1,-1",
                 "--out", str(tmp_path)])
    assert code == EXIT_USAGE
