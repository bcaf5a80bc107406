import pytest

from ftl_theta.cli import main


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["run", "--particles", "20", "--steps", "10", "--snapshots", "0,0.5", "--out", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["config.txt", "density_t0.5.csv", "density_t0.csv", "diagnostics.csv", "trajectory.csv"]
    assert "theta = 0.0" in (out / "config.txt").read_text()


def test_cfl_rejection_exit_code(tmp_path, capsys):
    assert main(["run", "--theta", "1", "--steps", "83", "--out", str(tmp_path)]) == 2
    assert "minimal admissible M = 84" in capsys.readouterr().out


def test_bad_configuration(tmp_path, capsys):
    assert main(["run", "--velocity", "affine:a=1,b=-1", "--out", str(tmp_path)]) == 2
    assert main(["run", "--initial", "steps:0:2,1", "--out", str(tmp_path)]) == 2
    assert main(["study", "--oracle", "magic"]) == 2


def test_config_file_with_override(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("theta = 1\nsteps = 90\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", str(cfg), "--steps", "83", "--out", str(tmp_path / "b")]) == 2
    cfg.write_text("bogus = 1\n")
    assert main(["run", "--config", str(cfg)]) == 2


def test_study_is_byte_reproducible(tmp_path):
    args = ["study", "--levels", "20,40", "--steps-list", "10,30", "--no-timing", "--jobs", "2"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_run_is_byte_reproducible(tmp_path):
    for name in ("a", "b"):
        assert main(["run", "--theta", "0.5", "--particles", "30", "--steps", "40",
                     "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_oracle_command(tmp_path, capsys):
    assert main(["oracle", "--oracle", "riemann:rl=0.4,rr=0.8", "--samples", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "x,value" and len(lines) == 4
    res = tmp_path / "r.csv"
    assert main(["oracle", "--initial", "steps:-1:0.4,0:0.8,1", "--residuals", str(res), "--out",
                 str(tmp_path / "p.csv")]) == 0
    assert res.read_text().startswith("k,bump_id,residual")


def test_check_command(capsys):
    assert main(["check", "--trials", "5"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_empty_study(capsys):
    assert main(["study", "--levels", ""]) == 0
    assert capsys.readouterr().out.splitlines()[-1].startswith("N,M,")


@pytest.mark.parametrize("argv", [[], ["frobnicate"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
