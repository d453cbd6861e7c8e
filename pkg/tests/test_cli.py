import os
import subprocess
import sys

from monotonelab.cli import main


def run_cli(args, out_dir, extra_env=None):
    env = dict(os.environ, MONOTONELAB_OUT_DIR=str(out_dir))
    env.update(extra_env or {})
    return subprocess.run(
        [sys.executable, "-m", "monotonelab.cli", *args],
        capture_output=True, text=True, env=env,
    )


def test_construct_verify_roundtrip(tmp_path):
    rc = run_cli(
        ["construct", "--set", "n=400", "--set", "ell=20", "--set", "gamma=0.3",
         "--set", "length=300", "--set", "seed=5", "--out", "seq.wseq"],
        tmp_path,
    )
    assert rc.returncode == 0, rc.stderr
    assert (tmp_path / "seq.wseq").exists()
    assert "overlap_failure_bound" in rc.stdout
    ok = run_cli(
        ["verify", "--set", f"sequence={tmp_path}/seq.wseq", "--set", "gamma=0.3"],
        tmp_path,
    )
    assert ok.returncode == 0, ok.stdout + ok.stderr
    assert "property_ii=pass" in ok.stdout


def test_verify_reports_overlap_failure(tmp_path):
    rc = run_cli(
        ["construct", "--set", "n=200", "--set", "ell=10", "--set", "gamma=0.3",
         "--set", "length=400", "--set", "seed=3", "--out", "dense.wseq"],
        tmp_path,
    )
    assert rc.returncode == 0
    bad = run_cli(
        ["verify", "--set", f"sequence={tmp_path}/dense.wseq", "--set", "gamma=0.3"],
        tmp_path,
    )
    assert bad.returncode == 1
    assert "property_ii=FAIL" in bad.stdout


def test_check_monotone_pass_and_config_file(tmp_path):
    cfg = tmp_path / "check.cfg"
    cfg.write_text("function=window_path\npreset=small\nn=10\nmode=exhaustive\n")
    rc = run_cli(["check-monotone", "--config", str(cfg)], tmp_path)
    assert rc.returncode == 0
    assert "monotone=pass" in rc.stdout


def test_set_overrides_config_file(tmp_path):
    cfg = tmp_path / "check.cfg"
    cfg.write_text("function=onemax\nn=6\nmode=exhaustive\n")
    rc = run_cli(["check-monotone", "--config", str(cfg), "--set", "n=4"], tmp_path)
    assert rc.returncode == 0
    assert "checked_pairs" in rc.stdout


def test_unknown_key_is_config_error(tmp_path):
    rc = run_cli(["check-monotone", "--set", "function=onemax", "--set", "n=6",
                  "--set", "bogus=1"], tmp_path)
    assert rc.returncode == 2
    assert "unknown configuration" in rc.stderr


def test_run_writes_trace(tmp_path):
    rc = run_cli(
        ["run", "--set", "function=onemax", "--set", "n=40", "--set", "c=1.0",
         "--set", "budget=30*nlogn", "--set", "seed=7"],
        tmp_path,
    )
    assert rc.returncode == 0
    text = (tmp_path / "run_trace.csv").read_text()
    assert text.startswith("generation,ones,")
    assert "# schema: trace-v1" in text


def test_scaling_deterministic_reruns(tmp_path):
    args = ["scaling", "--set", "function=onemax", "--set", "n_values=24,32",
            "--set", "c_values=0.5", "--set", "replicates=3",
            "--set", "budget=30*nlogn", "--set", "seed=9"]
    rc1 = run_cli([*args, "--out", "a.csv"], tmp_path)
    rc2 = run_cli([*args, "--out", "b.csv"], tmp_path)
    assert rc1.returncode == 0 and rc2.returncode == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_stagnation_cli(tmp_path):
    rc = run_cli(
        ["stagnation", "--set", "alpha=0.08", "--set", "beta=0.4", "--set", "gamma=0.45",
         "--set", "length=300", "--set", "n_values=40", "--set", "c_values=6.0,0.5",
         "--set", "replicates=2", "--set", "budget=8000", "--set", "seed=12"],
        tmp_path,
    )
    assert rc.returncode == 0, rc.stderr
    text = (tmp_path / "stagnation.csv").read_text()
    assert text.startswith("kind,n,c,replicate,")
    assert "# config: kind=stagnation" in text


def test_drift_subcommand_outside_loss(tmp_path):
    rc = run_cli(
        ["drift", "--set", "quantity=outside_loss", "--set", "alpha=0.05",
         "--set", "beta=0.4", "--set", "c=4.0", "--set", "n=200",
         "--set", "samples=20000", "--set", "seed=2"],
        tmp_path,
    )
    assert rc.returncode == 0
    lines = (tmp_path / "drift.csv").read_text().splitlines()
    assert lines[0] == "quantity,parameters,mean,std_error,samples,acceptance_rate,bound_value,bound_relation"
    cells = lines[1].split(",")
    assert cells[0] == "outside_loss" and cells[7] == "upper"
    assert float(cells[2]) >= 1.0


def test_io_error_exit_code(tmp_path):
    rc = run_cli(
        ["drift", "--set", "quantity=harmonic_bound", "--set", "n=10", "--set", "c=0.5",
         "--out", str(tmp_path / "no-such-dir" / "x.csv")],
        tmp_path,
    )
    assert rc.returncode == 3
    assert "i/o error" in rc.stderr


def test_main_callable_directly(tmp_path, monkeypatch):
    monkeypatch.setenv("MONOTONELAB_OUT_DIR", str(tmp_path))
    rc = main(["drift", "--set", "quantity=harmonic_bound", "--set", "n=100",
               "--set", "c=0.5"])
    assert rc == 0
    assert (tmp_path / "drift.csv").exists()
