"""Command-line interface tests.

Exit codes under test: 0 success, 2 usage, 3 configuration, 4 runtime.
Most cases drive main() in process; one subprocess test exercises the
installed console script end to end.
"""

import json
import subprocess
import sys

import pytest

from vcoreservoir.cli import main, parse_duration, parse_frequency, _parse_sweep


# ---------------------------------------------------------------------------
# unit parsing


def test_parse_duration_units():
    assert parse_duration("120us") == pytest.approx(1.2e-4)
    assert parse_duration("2 ms") == pytest.approx(2e-3)
    assert parse_duration("0.05") == pytest.approx(0.05)
    assert parse_duration("30ns") == pytest.approx(3e-8)
    assert parse_duration("1e-3s") == pytest.approx(1e-3)


def test_parse_duration_rejects_garbage():
    import argparse

    for bad in ("fast", "12 parsecs", "", "1.2.3us"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_duration(bad)


def test_parse_frequency_units():
    assert parse_frequency("220") == pytest.approx(220.0)
    assert parse_frequency("220Hz") == pytest.approx(220.0)
    assert parse_frequency("1.5 kHz") == pytest.approx(1500.0)
    assert parse_frequency("1MHz") == pytest.approx(1e6)


def test_parse_sweep():
    import argparse

    assert list(_parse_sweep("seed=2..4")) == [2, 3, 4]
    assert list(_parse_sweep("seed=7..7")) == [7]
    with pytest.raises(argparse.ArgumentTypeError):
        _parse_sweep("seed=5..3")
    with pytest.raises(argparse.ArgumentTypeError):
        _parse_sweep("seeds 1-10")


# ---------------------------------------------------------------------------
# gen


def _gen(tmp_path, *extra):
    out = tmp_path / "cfg" / "net"
    code = main(
        ["gen", "--n", "12", "--density", "0.2", "--seed", "3", "--out", str(out), *extra]
    )
    assert code == 0
    return out


def test_gen_writes_all_three_files(tmp_path, capsys):
    out = _gen(tmp_path)
    assert out.with_suffix(".rcfg").exists()
    assert out.with_suffix(".cfg").exists()
    assert out.with_suffix(".manifest.json").exists()
    assert "wrote" in capsys.readouterr().out


def test_gen_outputs_agree(tmp_path):
    from vcoreservoir.config import deserialize, read_text_config

    out = _gen(tmp_path)
    binary = deserialize(out.with_suffix(".rcfg").read_bytes())
    with out.with_suffix(".cfg").open() as fh:
        text = read_text_config(fh)
    assert binary.matrix == text.matrix
    manifest = json.loads(out.with_suffix(".manifest.json").read_text())
    assert manifest["seeds"]["config"] == 3
    assert len(manifest["config_sha256"]) == 64


def test_gen_fixed_weight(tmp_path):
    import numpy as np
    from vcoreservoir.config import deserialize

    out = _gen(tmp_path, "--fixed-weight", "9")
    config = deserialize(out.with_suffix(".rcfg").read_bytes())
    weights = config.matrix.weight[config.matrix.kind != 0]
    assert np.all(weights == 9)


# ---------------------------------------------------------------------------
# run: success paths


def _run_mc(tmp_path, config_path, out_name="out", *extra):
    out_dir = tmp_path / out_name
    code = main(
        [
            "run", "mc",
            "--config", str(config_path),
            "--out-dir", str(out_dir),
            "--samples", "40",
            "--k-max", "3",
            "--ts", "120us",
            *extra,
        ]
    )
    return code, out_dir


def test_run_mc_emits_results(tmp_path, capsys):
    out = _gen(tmp_path)
    code, out_dir = _run_mc(tmp_path, out.with_suffix(".cfg"))
    assert code == 0
    names = {p.name for p in out_dir.iterdir()}
    assert {"mc_series.csv", "mc_summary.json", "manifest.json"} <= names
    summary = json.loads((out_dir / "mc_summary.json").read_text())
    assert set(summary["mc_k"]) == {"1", "2", "3"}
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["command"] == "run mc"
    assert manifest["parameters"]["sample_period_s"] == pytest.approx(1.2e-4)
    assert manifest["duration_s"] > 0.0


def test_run_accepts_binary_config(tmp_path):
    out = _gen(tmp_path)
    code, out_dir = _run_mc(tmp_path, out.with_suffix(".rcfg"))
    assert code == 0
    assert (out_dir / "mc_summary.json").exists()


def test_run_rerun_is_byte_identical_except_manifest(tmp_path):
    out = _gen(tmp_path)
    _, d1 = _run_mc(tmp_path, out.with_suffix(".cfg"), "one")
    _, d2 = _run_mc(tmp_path, out.with_suffix(".cfg"), "two")
    names = sorted(p.name for p in d1.iterdir())
    assert names == sorted(p.name for p in d2.iterdir())
    for name in names:
        if name == "manifest.json":
            continue  # wall-clock duration differs by design
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes(), name


def test_run_save_recording(tmp_path):
    out = _gen(tmp_path)
    code, out_dir = _run_mc(tmp_path, out.with_suffix(".cfg"), "rec", "--save-recording")
    assert code == 0
    lines = (out_dir / "recording.csv").read_text().splitlines()
    assert len(lines) == 41
    assert lines[0].startswith("sample_index,u,v0")


def test_run_force_task(tmp_path):
    out = _gen(tmp_path)
    out_dir = tmp_path / "force"
    code = main(
        [
            "run", "force",
            "--config", str(out.with_suffix(".cfg")),
            "--out-dir", str(out_dir),
            "--freq", "500Hz",
            "--ts", "100us",
            "--teach-cycles", "2",
            "--test-cycles", "1",
        ]
    )
    assert code == 0
    summary = json.loads((out_dir / "force_summary.json").read_text())
    assert summary["frequency_hz"] == 500.0
    assert summary["n_teach"] == 40


def test_run_narma10_task(tmp_path):
    out = _gen(tmp_path)
    out_dir = tmp_path / "n10"
    code = main(
        [
            "run", "narma10",
            "--config", str(out.with_suffix(".cfg")),
            "--out-dir", str(out_dir),
            "--samples", "60",
            "--ts", "120us",
        ]
    )
    assert code == 0
    assert (out_dir / "narma10_summary.json").exists()


def test_run_nlmc_task(tmp_path):
    out = _gen(tmp_path)
    out_dir = tmp_path / "nl"
    code = main(
        [
            "run", "nlmc",
            "--config", str(out.with_suffix(".cfg")),
            "--out-dir", str(out_dir),
            "--samples", "50",
            "--d-max", "2",
            "--family-limit", "20",
            "--ts", "120us",
        ]
    )
    assert code == 0
    summary = json.loads((out_dir / "nlmc_summary.json").read_text())
    assert set(summary["mc_d"]) == {"1", "2"}


def test_run_sweep_writes_per_seed_dirs(tmp_path):
    out = _gen(tmp_path)
    out_dir = tmp_path / "sweep"
    code = main(
        [
            "run", "mc",
            "--config", str(out.with_suffix(".cfg")),
            "--out-dir", str(out_dir),
            "--samples", "40",
            "--k-max", "2",
            "--sweep", "seed=1..2",
        ]
    )
    assert code == 0
    assert (out_dir / "seed_1" / "mc_summary.json").exists()
    assert (out_dir / "seed_2" / "mc_summary.json").exists()
    a = json.loads((out_dir / "seed_1" / "manifest.json").read_text())
    b = json.loads((out_dir / "seed_2" / "manifest.json").read_text())
    assert (a["seeds"]["input"], b["seeds"]["input"]) == (1, 2)


def test_default_out_dir_env(tmp_path, monkeypatch):
    out = _gen(tmp_path)
    monkeypatch.setenv("VCORESERVOIR_OUT", str(tmp_path / "envout"))
    code = main(
        [
            "run", "mc",
            "--config", str(out.with_suffix(".cfg")),
            "--samples", "40",
            "--k-max", "2",
        ]
    )
    assert code == 0
    assert (tmp_path / "envout" / "mc" / "mc_summary.json").exists()


# ---------------------------------------------------------------------------
# run: failure exit codes


def test_usage_errors_exit_2(tmp_path):
    for argv in (
        ["run"],  # missing task and config
        ["run", "dance", "--config", "x"],  # unknown task
        ["run", "mc"],  # missing --config
        ["bench"],  # unknown command
        ["run", "mc", "--config", "x", "--ts", "12 parsecs"],
        ["run", "mc", "--config", "x", "--sweep", "seed=9..1"],
    ):
        with pytest.raises(SystemExit) as err:
            main(argv)
        assert err.value.code == 2, argv


def test_missing_config_exits_3(tmp_path, capsys):
    code = main(["run", "mc", "--config", str(tmp_path / "nope.cfg")])
    assert code == 3
    assert "not found" in capsys.readouterr().err


def test_corrupt_bitstream_exits_3(tmp_path, capsys):
    out = _gen(tmp_path)
    data = bytearray(out.with_suffix(".rcfg").read_bytes())
    data[7] ^= 0xFF
    bad = tmp_path / "bad.rcfg"
    bad.write_bytes(bytes(data))
    code = main(["run", "mc", "--config", str(bad)])
    assert code == 3
    assert "cannot parse config" in capsys.readouterr().err


def test_invalid_config_exits_3(tmp_path, capsys):
    out = _gen(tmp_path)
    text = out.with_suffix(".cfg").read_text()
    bad = tmp_path / "selfloop.cfg"
    bad.write_text(text + "2 2 exc 1\n")
    code = main(["run", "mc", "--config", str(bad)])
    assert code == 3
    assert "[self]" in capsys.readouterr().err


def test_unparseable_text_exits_3(tmp_path, capsys):
    bad = tmp_path / "garbage.cfg"
    bad.write_text("not a config at all\n")
    code = main(["run", "mc", "--config", str(bad)])
    assert code == 3


def test_runtime_error_exits_4(tmp_path, capsys):
    out = _gen(tmp_path)
    # 100.1us is not a whole number of 0.2us microsteps
    code = main(
        [
            "run", "mc",
            "--config", str(out.with_suffix(".cfg")),
            "--out-dir", str(tmp_path / "x"),
            "--samples", "40",
            "--ts", "100.1us",
        ]
    )
    assert code == 4
    assert "error" in capsys.readouterr().err


def test_force_bad_frequency_exits_4(tmp_path, capsys):
    out = _gen(tmp_path)
    code = main(
        [
            "run", "force",
            "--config", str(out.with_suffix(".cfg")),
            "--out-dir", str(tmp_path / "x"),
            "--freq", "0",
        ]
    )
    assert code == 4


# ---------------------------------------------------------------------------
# installed console script


def test_console_script_end_to_end(tmp_path):
    out = tmp_path / "net"
    gen = subprocess.run(
        [
            "vcoreservoir", "gen", "--n", "10", "--density", "0.2",
            "--seed", "5", "--out", str(out),
        ],
        capture_output=True,
        text=True,
    )
    assert gen.returncode == 0, gen.stderr
    run = subprocess.run(
        [
            "vcoreservoir", "run", "mc",
            "--config", str(out.with_suffix(".rcfg")),
            "--out-dir", str(tmp_path / "res"),
            "--samples", "40", "--k-max", "2", "--ts", "120us",
        ],
        capture_output=True,
        text=True,
    )
    assert run.returncode == 0, run.stderr
    assert (tmp_path / "res" / "mc_summary.json").exists()
    usage = subprocess.run(
        ["vcoreservoir", "run", "mc", "--ts", "nonsense", "--config", "x"],
        capture_output=True,
        text=True,
    )
    assert usage.returncode == 2
    missing = subprocess.run(
        ["vcoreservoir", "run", "mc", "--config", str(tmp_path / "ghost.cfg")],
        capture_output=True,
        text=True,
    )
    assert missing.returncode == 3
