import json
import os
import subprocess
import sys

import numpy as np
import pytest

from tcemu.cli import main
from tcemu.gemm import GemmConfig, gemm_mixed, round_matrix
from tcemu.matio import read_matrix, write_matrix
from tcemu.refinement import split


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_sweep_csv(capsys):
    code, out, _ = run(capsys, "sweep", "--sizes", "16,32", "--modes", "mixed,kahan",
                       "--trials", "3", "--quiet")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "n,mode,trial,max_norm_error,flops,wall_time_s,seed"
    assert len(lines) == 13


def test_sweep_json_to_file(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, _, err = run(capsys, "sweep", "--sizes", "16", "--modes", "mixed:one-sided",
                       "--trials", "2", "--format", "json", "--out", str(path))
    assert code == 0
    data = json.loads(path.read_text())
    assert [d["mode"] for d in data] == ["mixed:one-sided"] * 2
    assert "hmean" in err


def test_env_override(capsys, monkeypatch):
    monkeypatch.setenv("TCEMU_TRIALS", "4")
    monkeypatch.setenv("TCEMU_SEED", "11")
    code, out, _ = run(capsys, "sweep", "--sizes", "16", "--modes", "mixed", "--quiet")
    assert code == 0
    rows = out.splitlines()[1:]
    assert len(rows) == 4 and all(r.endswith(",11") for r in rows)
    code, out, _ = run(capsys, "sweep", "--sizes", "16", "--modes", "mixed", "--quiet",
                       "--trials", "1")
    assert len(out.splitlines()) == 2


def test_bad_env_value(capsys, monkeypatch):
    monkeypatch.setenv("TCEMU_TRIALS", "many")
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--sizes", "16"])
    assert exc.value.code == 2


@pytest.mark.parametrize("argv", [
    ["sweep", "--modes", "fp16-accum:two-sided"],
    ["sweep", "--sizes", "a,b"],
    ["sweep", "--dist", "normal:0:1"],
    ["sweep", "--format", "xml"],
    ["convert", "x", "y"],
    ["frobnicate"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_runtime_errors_exit_1(capsys, tmp_path):
    code, _, err = run(capsys, "sweep", "--sizes", "8192", "--trials", "1", "--quiet")
    assert code == 1 and "tcemu: error:" in err
    code, _, err = run(capsys, "sweep", "--sizes", "16", "--trials", "0", "--quiet")
    assert code == 1
    code, _, err = run(capsys, "convert", str(tmp_path / "missing"), str(tmp_path / "o"),
                       "--to", "half")
    assert code == 1 and "tcemu: error:" in err
    bad = tmp_path / "bad"
    bad.write_bytes(b"NOPE" + bytes(20))
    code, _, err = run(capsys, "split-demo", str(bad))
    assert code == 1 and "magic" in err


def test_no_command(capsys):
    code, _, err = run(capsys)
    assert code == 2 and "usage" in err


def test_backend_info(capsys):
    code, out, _ = run(capsys, "--backend-info")
    assert code == 0 and out.startswith("backend=")


def test_batched(capsys):
    code, out, _ = run(capsys, "batched", "--batch-sizes", "8,64", "--trials", "2", "--quiet")
    assert code == 0
    rows = out.splitlines()
    assert len(rows) == 3 and rows[1].startswith("16,batched:8,0,")


def test_gemm_and_convert(capsys, tmp_path, rng):
    a = rng.uniform(-1, 1, (20, 12)).astype(np.float32)
    b = rng.uniform(-1, 1, (12, 9)).astype(np.float32)
    c = rng.uniform(-1, 1, (20, 9)).astype(np.float32)
    for name, m in (("a", a), ("b", b), ("c", c)):
        write_matrix(m, tmp_path / name)
    out = tmp_path / "d"
    code, text, _ = run(capsys, "gemm", str(tmp_path / "a"), str(tmp_path / "b"),
                        "--c", str(tmp_path / "c"), "--beta", "0.5", "--out", str(out),
                        "--report-error")
    assert code == 0 and text.startswith("max_norm_error=")
    want = gemm_mixed(round_matrix(a), round_matrix(b), c, GemmConfig(beta=0.5))
    assert read_matrix(out).tobytes() == want.tobytes()

    code, _, _ = run(capsys, "convert", str(tmp_path / "a"), str(tmp_path / "ah"), "--to", "half")
    ah = read_matrix(tmp_path / "ah")
    assert ah.dtype == np.float16 and ah.tobytes() == round_matrix(a).tobytes()
    code, _, _ = run(capsys, "convert", str(tmp_path / "ah"), str(tmp_path / "as"),
                     "--to", "single")
    assert read_matrix(tmp_path / "as").tobytes() == ah.astype(np.float32).tobytes()

    code, _, _ = run(capsys, "gemm", str(tmp_path / "a"), str(tmp_path / "b"),
                     "--mode", "mixed:two-sided", "--out", str(out))
    assert code == 0


def test_split_demo(capsys, tmp_path):
    m = np.array([[1.0, 1.00048828125], [1e-9, -3.14159]], dtype=np.float32)
    write_matrix(m, tmp_path / "m")
    code, out, _ = run(capsys, "split-demo", str(tmp_path / "m"), "--limit", "4",
                       "--half-out", str(tmp_path / "h"), "--residual-out", str(tmp_path / "r"))
    assert code == 0
    assert "0.00048828125" in out and "entries: 4" in out
    pair = split(m)
    assert read_matrix(tmp_path / "h").tobytes() == pair.half_part.tobytes()
    assert read_matrix(tmp_path / "r").tobytes() == pair.residual.tobytes()


def test_module_entry_point():
    env = dict(os.environ, TCEMU_TRIALS="1")
    proc = subprocess.run([sys.executable, "-m", "tcemu", "sweep", "--sizes", "16", "--quiet",
                           "--modes", "mixed"], capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert len(proc.stdout.splitlines()) == 2
