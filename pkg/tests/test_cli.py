import json
import subprocess
import sys

import numpy as np
import pytest

from weierlab.cli import csv_text, main, parse_scales


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    lines = [l for l in out.out.splitlines() if l.strip()]
    return code, (json.loads(lines[-1]) if lines else None), out.err


def test_constants(tmp_path, capsys):
    code, s, _ = run(capsys, "constants", "--b", "3", "--beta", "0.3", "--s", "2.2",
                     "--out", str(tmp_path))
    assert code == 0
    for key in ("C2", "C3", "C1", "C0", "c_holder", "I"):
        assert key in s["result"]
    assert s["result"]["C0"] == pytest.approx(1205.7, rel=1e-4)


def test_bad_b_is_usage_error(tmp_path, capsys):
    code, s, err = run(capsys, "boxdim", "--b", "0.5", "--out", str(tmp_path))
    assert code == 2 and "b > 1" in err and "b > 1" in s["error"]


def test_argparse_usage_errors(capsys):
    assert main(["nonsense"]) == 2
    assert main(["boxdim", "--b", "abc"]) == 2
    assert main([]) == 2
    capsys.readouterr()


def test_bad_scale_grammar(tmp_path, capsys):
    code, s, _ = run(capsys, "boxdim", "--scales", "8:1024:2", "--out", str(tmp_path))
    assert code == 2 and "lo:hi:x" in s["error"]


def test_scale_grammar():
    assert parse_scales("8:1024:x2") == [8, 16, 32, 64, 128, 256, 512, 1024]
    assert parse_scales("3:100:x3") == [3, 9, 27, 81]
    assert parse_scales("4,9,20") == [4, 9, 20]


def test_csv_format():
    text = csv_text(("a", "b"), [(1, 0.1), (2, 1 / 3)])
    assert text == "a,b\n1,0.1\n2,0.3333333333333333\n"


def test_boxdim_end_to_end(tmp_path, capsys):
    code, s, _ = run(capsys, "boxdim", "--b", "3", "--beta", "0.3", "--seed", "42",
                     "--scales", "8:1024:x2", "--step", "1.5e-5", "--emit-plot",
                     "--out", str(tmp_path))
    assert code == 0
    assert abs(s["result"]["slope"] - 2.4) <= 0.15
    assert s["result"]["cover_bound_violations"] == 0
    text = (tmp_path / "boxdim.csv").read_text()
    assert text.splitlines()[0] == "m,count,log10_m,log10_count"
    assert len(text.splitlines()) == 9
    assert "\r" not in text
    assert (tmp_path / "boxdim.gp").exists()
    saved = json.loads((tmp_path / "boxdim.json").read_text())
    assert saved["result"] == s["result"]


def test_config_round_trip(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    code, s, _ = run(capsys, "gen", "--step", "0.001", "--seed", "9", "--out", str(a))
    assert code == 0
    code, s2, _ = run(capsys, "--config", str(a / "gen.json"), "--out", str(b))
    assert code == 0 and s2["config"] == s["config"]
    assert (a / "gen.csv").read_bytes() == (b / "gen.csv").read_bytes()
    # a plain config object works too, and explicit flags win
    cfg = tmp_path / "plain.json"
    cfg.write_text(json.dumps({"subcommand": "gen", "step": 0.01, "seed": 9}))
    code, s3, _ = run(capsys, "--config", str(cfg), "--step", "0.5", "--out", str(b))
    assert s3["config"]["step"] == 0.5 and s3["result"]["points"] == 3


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"subcommand": "gen", "colour": "red"}))
    code, s, _ = run(capsys, "--config", str(cfg), "--out", str(tmp_path))
    assert code == 2 and "colour" in s["error"]


def test_worker_count_byte_identity(tmp_path, capsys):
    outs = []
    for k in (1, 3):
        d = tmp_path / f"w{k}"
        code, _, _ = run(capsys, "gen", "--step", str(2.0 ** -17), "--workers", str(k),
                         "--out", str(d))
        assert code == 0
        outs.append(((d / "gen.csv").read_bytes(), (d / "gen.json").read_bytes()))
    assert outs[0] == outs[1]


def test_env_workers_and_bad_workers(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("WEIERLAB_WORKERS", "2")
    code, _, _ = run(capsys, "constants", "--s", "2.2", "--out", str(tmp_path))
    assert code == 0
    code, _, _ = run(capsys, "constants", "--s", "2.2", "--workers", "0", "--out", str(tmp_path))
    assert code == 2


def test_gen_scalar(tmp_path, capsys):
    code, s, _ = run(capsys, "gen-scalar", "--a", "0.6", "--b", "4", "--out", str(tmp_path))
    assert code == 0
    data = np.loadtxt(tmp_path / "gen-scalar.csv", delimiter=",", skiprows=1)
    assert data.shape == (4096, 2)
    assert abs(data[0, 1] - 2.5) <= 1e-6 and abs(data[2048, 1] - 0.5) <= 1e-6
    assert data[2048, 0] == 0.5


def test_json_format_embeds_table(tmp_path, capsys):
    code, s, _ = run(capsys, "gen-scalar", "--n-samples", "8", "--format", "json",
                     "--out", str(tmp_path))
    full = json.loads((tmp_path / "gen-scalar.json").read_text())
    assert full["table"]["columns"] == ["t", "w"] and len(full["table"]["rows"]) == 8
    assert not (tmp_path / "gen-scalar.csv").exists()


def test_check_failure_exit_code(tmp_path, capsys, monkeypatch):
    from weierlab import cli
    monkeypatch.setitem(cli.HANDLERS, "holder-check",
                        lambda cfg, workers: ({"violations": 3}, ("k",), [], False))
    code, s, _ = run(capsys, "holder-check", "--out", str(tmp_path))
    assert code == 1 and s["pass"] is False


def test_checks_pass(tmp_path, capsys):
    for cmd in ("holder-check", "expectation-check"):
        code, s, _ = run(capsys, cmd, "--n-samples", "20000", "--s", "2.2",
                         "--out", str(tmp_path))
        assert code == 0 and s["pass"] is True


def test_energy_and_corrdim(tmp_path, capsys):
    code, s, _ = run(capsys, "energy", "--s", "2.2,2.8", "--delta", "0.1,0.01",
                     "--n-samples", "20000", "--emit-plot", "--out", str(tmp_path))
    assert code == 0 and set(s["result"]["trend"]) == {"2.2", "2.8"}
    head = (tmp_path / "energy.csv").read_text().splitlines()
    assert head[0] == "s,delta,mean,stderr,n_accepted" and len(head) == 5
    code, s, _ = run(capsys, "corrdim", "--step", str(2.0 ** -14), "--n-samples", "20000",
                     "--r-min", "0.01", "--out", str(tmp_path))
    assert code == 0 and "slope" in s["result"]


def test_runtime_error_exit(tmp_path, capsys):
    code, s, _ = run(capsys, "energy", "--s", "2.2", "--delta", "0.99999", "--n-samples", "1000",
                     "--out", str(tmp_path))
    assert code == 3


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "weierlab", "constants", "--s", "2.2",
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["result"]["C2"] > 0


def test_selftest_deterministic(tmp_path, capsys):
    files = {}
    for k in (1, 2):
        d = tmp_path / f"s{k}"
        code, s, _ = run(capsys, "selftest", "--workers", str(k), "--out", str(d))
        assert code == 0, s["result"]["failed"]
        files[k] = {p.name: p.read_bytes() for p in d.iterdir()}
    assert files[1] == files[2]
