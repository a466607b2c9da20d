import os
import subprocess
import sys

import numpy as np
import pytest

from su11modes import pipeline
from su11modes.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, EXIT_VERIFY, main
from su11modes.config import load_config
from su11modes.fileio import read_csv, read_stack

SMALL = """
[source]
mu = 0.5
waist = 5e-3
l_max = 4
p_max = 2
order_max = 6
n_x = 32
n_y = 32
[synthesis]
n_frames = 200
seed = 7
[analysis]
azimuthal_bins = 64
radial_bins = 16
radial_modes = 3
n_phases = 16
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(SMALL)
    return str(p)


def _files(d):
    return {f: open(os.path.join(d, f), "rb").read() for f in sorted(os.listdir(d))}


def test_simulate_writes_stack_and_truth(cfg_path, tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", cfg_path, "--out", str(out)]) == EXIT_OK
    st = read_stack(out / "stack.fstk")
    ref = pipeline.run_simulate(load_config(cfg_path))
    assert st.frames.tobytes() == ref.frames.tobytes()
    hdr, rows = read_csv(out / "truth.csv")
    assert hdr == ["l", "p", "lambda", "Lambda"] and len(rows) > 0


def test_fixed_seed_outputs_are_byte_identical(cfg_path, tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["report", "--config", cfg_path, "--out", str(a)]) == EXIT_OK
    assert main(["report", "--config", cfg_path, "--out", str(b)]) == EXIT_OK
    assert main(["report", "--config", cfg_path, "--out", str(c), "--seed", "8"]) == EXIT_OK
    fa, fb, fc = _files(a), _files(b), _files(c)
    assert fa == fb
    assert "mode_counts.csv" in fa and "radial_modes.csv" in fa and "oam_average.csv" in fa
    assert fa["covariance_curves.csv"] != fc["covariance_curves.csv"]


def test_stack_file_analysis_matches_in_memory(cfg_path, tmp_path):
    sim, mem, disk = tmp_path / "sim", tmp_path / "mem", tmp_path / "disk"
    assert main(["simulate", "--config", cfg_path, "--out", str(sim)]) == EXIT_OK
    assert main(["oam", "--config", cfg_path, "--out", str(mem)]) == EXIT_OK
    assert main(["oam", "--config", cfg_path, "--out", str(disk),
                 "--stack", str(sim / "stack.fstk")]) == EXIT_OK
    assert _files(mem) == _files(disk)


def test_phase_sweep_minimum_near_dark_fringe(cfg_path, tmp_path):
    assert main(["phase-sweep", "--config", cfg_path, "--out", str(tmp_path)]) == EXIT_OK
    _, rows = read_csv(tmp_path / "phase_sweep.csv")
    phi, n = np.array(rows, dtype=float).T
    assert phi[np.argmin(n)] == pytest.approx(np.pi, abs=2 * np.pi / 16)


def test_single_azimuthal_mode_stack(tmp_path):
    p = tmp_path / "l0.ini"
    p.write_text(SMALL.replace("l_max = 4", "l_max = 0").replace("n_frames = 200", "n_frames = 300"))
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(p), "--out", str(out)]) == EXIT_OK
    assert main(["oam", "--config", str(p), "--out", str(out),
                 "--stack", str(out / "stack.fstk")]) == EXIT_OK
    _, rows = read_csv(out / "oam_average.csv")
    w = {int(l): float(v) for l, v in rows}
    assert w[0] > 0.95
    assert 1.0 / sum(v * v for v in w.values()) == pytest.approx(1.0, abs=0.1)


def test_svg_format(cfg_path, tmp_path):
    assert main(["radial", "--config", cfg_path, "--out", str(tmp_path), "--format", "svg"]) == EXIT_OK
    names = os.listdir(tmp_path)
    assert "radial_shapes.svg" in names and not any(n.endswith(".csv") for n in names)


def test_verify_exit_codes(cfg_path, tmp_path):
    assert main(["verify", "--out", str(tmp_path / "v")]) == EXIT_OK
    strict = tmp_path / "strict.ini"
    strict.write_text(SMALL + "tv_tolerance = 1e-6\n")
    assert main(["verify", "--config", str(strict), "--out", str(tmp_path / "s")]) == EXIT_VERIFY


def test_config_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[source]\nmu = 2\n[bogus]\n")
    assert main(["oam", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "source.mu" in err and "[bogus]" in err
    assert main(["oam", "--config", str(tmp_path / "missing.ini")]) == EXIT_CONFIG


def test_data_error_exit(cfg_path, tmp_path, capsys):
    sim = tmp_path / "sim"
    main(["simulate", "--config", cfg_path, "--out", str(sim)])
    data = (sim / "stack.fstk").read_bytes()
    (sim / "cut.fstk").write_bytes(data[:-10])
    assert main(["oam", "--config", cfg_path, "--out", str(tmp_path / "o"),
                 "--stack", str(sim / "cut.fstk")]) == EXIT_DATA
    assert "expected" in capsys.readouterr().err
    assert main(["oam", "--config", cfg_path, "--stack", str(sim / "none.fstk"),
                 "--out", str(tmp_path / "o")]) == EXIT_DATA


def test_usage_error_and_module_entry(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["transmogrify"])
    assert info.value.code == 2
    res = subprocess.run([sys.executable, "-m", "su11modes", "phase-sweep", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and (tmp_path / "phase_sweep.csv").exists()


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv(pipeline.THREADS_ENV, "3")
    assert pipeline.thread_count() == 3
    monkeypatch.setenv(pipeline.THREADS_ENV, "zero")
    assert pipeline.thread_count() == 1
