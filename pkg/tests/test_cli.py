"""CLI contract tests: config handling, determinism, artifacts, exit codes."""

import json

import pytest

from wiesnerlab import cli
from wiesnerlab.cli import RunConfig, dumps_summary, format_float


def run_cli(args, capsys=None):
    code = cli.main(args)
    return code


def test_config_roundtrip():
    cfg = RunConfig(subcommand="bt-attack", n=16, epsilon=0.1, trials=7,
                    master_seed=3, mode="sampled", variant="parallel")
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


def test_config_rejects_unknown_keys():
    with pytest.raises(cli.ConfigError):
        RunConfig.from_dict({"subcommand": "figure", "bogus": 1})


def test_config_validation_errors():
    for bad in (
        {"subcommand": "nope"},
        {"subcommand": "bt-attack", "mode": "psychic"},
        {"subcommand": "bt-attack", "epsilon": 2.0},
        {"subcommand": "bt-attack", "n": 0},
        {"subcommand": "bt-attack", "return_frac": 0.5, "reissue_frac": 0.1},
        {"subcommand": "pm-identify", "policy": "noisy", "mode": "fastforward"},
    ):
        with pytest.raises(cli.ConfigError):
            RunConfig.from_dict(bad).validate()


def test_float_formatting():
    assert format_float(0.1) == "0.1"
    assert format_float(1 / 3) == "0.333333333333"
    assert format_float(1e-9) == "1e-09"
    with pytest.raises(ValueError):
        format_float(float("nan"))


def test_dumps_summary_is_valid_json():
    doc = {"a": 1, "b": [0.5, None, True], "c": {"d": 1 / 7}}
    text = dumps_summary(doc)
    parsed = json.loads(text)
    assert parsed["b"][0] == 0.5
    assert abs(parsed["c"]["d"] - 1 / 7) < 1e-12


def test_figure_csv_contract(tmp_path):
    out = tmp_path / "fig.csv"
    code = run_cli(["figure", "--N", "1000", "--points", "200",
                    "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "theta,N,delta,theta_sqrtN,p_caught,p_probe0,p_probe1"
    assert len(lines) == 201


def test_same_seed_same_bytes(tmp_path):
    """The same command run twice produces identical output bytes."""
    out = tmp_path / "summary.json"
    args = ["bt-attack", "--n", "4", "--epsilon", "0.2", "--trials", "10",
            "--seed", "11", "--out", str(out)]
    outs = []
    for _ in range(2):
        assert run_cli(args) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_worker_count_does_not_change_output(tmp_path):
    out = tmp_path / "summary.json"
    outs = []
    for workers in (1, 2):
        code = run_cli(["bt-attack", "--n", "3", "--epsilon", "0.2",
                        "--trials", "6", "--seed", "5", "--workers",
                        str(workers), "--out", str(out)])
        assert code == 0
        body = json.loads(out.read_text())
        body["config"]["workers"] = None  # the only field allowed to differ
        outs.append(json.dumps(body, sort_keys=True))
    assert outs[0] == outs[1]


def test_config_file_with_flag_override(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"n": 2, "trials": 3, "master_seed": 9,
                                    "epsilon": 0.2}))
    out = tmp_path / "s.json"
    code = run_cli(["bt-attack", "--config", str(cfg_path), "--trials", "4",
                    "--out", str(out)])
    assert code == 0
    body = json.loads(out.read_text())
    assert body["config"]["n"] == 2          # from file
    assert body["config"]["trials"] == 4     # flag overrides file
    assert body["config"]["master_seed"] == 9
    assert body["results"]["trials"] == 4


def test_summary_embeds_config_and_rng(tmp_path):
    out = tmp_path / "s.json"
    run_cli(["ev-bomb", "--n-rounds", "50", "--trials", "20", "--seed", "2",
             "--out", str(out)])
    body = json.loads(out.read_text())
    assert body["rng"]["family"] == "philox4x64-10"
    assert body["config"]["subcommand"] == "ev-bomb"
    assert body["backend"] in ("cython", "python")
    assert 0.0 <= body["results"]["survival_frequency"] <= 1.0


def test_exit_code_2_on_config_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli(["bt-attack", "--config", str(bad)]) == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"epsilon": 7.0}))
    assert run_cli(["bt-attack", "--config", str(cfg)]) == 2


def test_exit_code_3_on_numerical_failure(tmp_path):
    # a coupling budget far outside the weak regime breaks the 1/N error
    # scaling, which the bounds report flags as a numerical failure
    code = run_cli(["bounds", "--coupling-budget", "200", "--seed", "1",
                    "--out", str(tmp_path / "x.json")])
    assert code == 3


def test_exit_code_3_on_estimation_failure(tmp_path, monkeypatch):
    from wiesnerlab.pm_attack import EstimationFailedError

    def boom(cfg_dict, idx):
        raise EstimationFailedError("every repetition was caught")

    monkeypatch.setitem(cli._TRIAL_FNS, "pm-tomography", boom)
    code = run_cli(["pm-tomography", "--n", "1", "--eta", "0.3",
                    "--nu-final", "3.0", "--n-rounds", "20000", "--trials", "1",
                    "--seed", "0", "--out", str(tmp_path / "y.json")])
    assert code == 3


def test_transcript_jsonl(tmp_path):
    out = tmp_path / "s.json"
    tr = tmp_path / "transcript.jsonl"
    code = run_cli(["bt-attack", "--n", "2", "--epsilon", "0.2", "--seed", "4",
                    "--transcript", str(tr), "--out", str(out)])
    assert code == 0
    lines = tr.read_text().strip().split("\n")
    rows = [json.loads(line) for line in lines]
    assert all({"round", "perturbation_gate", "pass"} <= set(r) for r in rows)
    assert rows[0]["round"] == 1
    assert any(r["perturbation_gate"] == "X" for r in rows)
    body = json.loads(out.read_text())
    assert body["results"]["transcript_rounds"] == len(rows)


def test_dump_db(tmp_path):
    db = tmp_path / "db.json"
    run_cli(["bt-attack", "--n", "3", "--epsilon", "0.2", "--trials", "1",
             "--seed", "1", "--dump-db", str(db),
             "--out", str(tmp_path / "s.json")])
    doc = json.loads(db.read_text())
    entry = next(iter(doc.values()))
    assert entry["scheme"] == "four-state"
    assert len(entry["key_symbols"]) == 3


def test_pm_tomography_artifacts(tmp_path):
    recon = tmp_path / "recon.json"
    traces = tmp_path / "traces.csv"
    out = tmp_path / "s.json"
    code = run_cli(["pm-tomography", "--n", "1", "--eta", "0.3",
                    "--nu-final", "3.0", "--n-rounds", "20000",
                    "--trials", "2", "--seed", "6",
                    "--reconstruction", str(recon), "--traces", str(traces),
                    "--out", str(out)])
    assert code == 0
    rec = json.loads(recon.read_text())
    if rec:  # present unless every trial was caught
        assert "est" in rec["0"] and "bloch" in rec["0"]
        assert len(rec["0"]["est"]) == 3
    header = traces.read_text().split("\n")[0]
    assert header == "qubit,observable,repetition,passed,y_outcome"


def test_bt_list_cli_runs(tmp_path):
    out = tmp_path / "s.json"
    code = run_cli(["bt-list", "--n", "1", "--epsilon", "0.2", "--trials", "5",
                    "--seed", "8", "--out", str(out)])
    assert code == 0
    body = json.loads(out.read_text())
    assert body["results"]["success_frequency"] >= 0.6


def test_bounds_cli(tmp_path):
    out = tmp_path / "s.json"
    code = run_cli(["bounds", "--out", str(out), "--seed", "1"])
    assert code == 0
    body = json.loads(out.read_text())
    assert body["results"]["bound_fit"]["satisfied"] is True
    assert body["results"]["bound_fit"]["c_fit"] <= 1e3
    assert body["results"]["pm_scaling"]["bounded"] is True
