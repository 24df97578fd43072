import pytest

from wbecdma.cli import main
from wbecdma.codebook import read_code, tsc


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_bounds(capsys):
    assert run(capsys, "bounds", "8", "9") == (0, "welch=10.125 kp=11 equal=false\n", "")
    code, out, _ = run(capsys, "bounds", "7", "8")
    assert code == 0 and out == "welch=9.14285714286 kp=9.14285714286 equal=true\n"


def test_gen_and_inject_7x8(capsys, tmp_path):
    path = tmp_path / "c78.txt"
    code, out, _ = run(capsys, "gen", "7", "8", "-o", str(path))
    assert code == 0 and "class=BWBE" in out and "wbe=true" in out
    c, kron = read_code(path)
    assert kron is None and c.shape == (7, 8)
    code, out, _ = run(capsys, "inject", "-c", str(path))
    assert code == 0
    assert out == "injective=false pairs=1 floor=0.00390625\n"
    code, out, _ = run(capsys, "inject", "-c", str(path), "--list")
    assert out.splitlines()[1] == "-1 -1 -1 -1 -1 -1 -1 -1 | 1 1 1 1 1 1 1 1"


def test_gen_variants(capsys, tmp_path):
    code, out, _ = run(capsys, "gen", "8", "9", "--variant", "collide", "-o", str(tmp_path / "c.txt"))
    assert code == 0 and "class=ABWBE" in out and "tsc=11 " in out
    code, out, _ = run(capsys, "inject", "-c", str(tmp_path / "c.txt"))
    assert out.startswith("injective=false pairs=128 ")
    assert run(capsys, "gen", "8", "12", "--variant", "collide")[0] == 2


def test_enlarge(capsys, tmp_path):
    core = tmp_path / "core.txt"
    big = tmp_path / "big.txt"
    run(capsys, "gen", "7", "8", "-o", str(core))
    code, _, _ = run(capsys, "enlarge", "-c", str(core), "-d", "8", "--hadamard", "-o", str(big))
    assert code == 0
    c, kron = read_code(big)
    assert c.binary_antipodal and c.shape == (56, 64)
    assert (kron.d, kron.core_L, kron.core_K) == (8, 7, 8)
    assert tsc(c) == pytest.approx(512 / 7, abs=1e-9)
    code, out, _ = run(capsys, "enlarge", "-c", str(core), "-d", "2")
    assert code == 0 and out.splitlines()[0] == "14 16 binary:0" and out.splitlines()[-1] == "kron d=2 core=7x8"
    assert run(capsys, "enlarge", "-c", str(core), "-d", "3", "--hadamard")[0] == 2
    assert run(capsys, "enlarge", "-c", str(big), "-d", "2")[0] == 2


def test_sim(capsys, tmp_path):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("L = 4\nK = 4\ndecoders = ml, iterative\nebn0_db = 0, inf\nframes_per_point = 50\n")
    code, out, _ = run(capsys, "sim", "-f", str(cfg))
    lines = out.splitlines()
    assert code == 0 and lines[0] == "decoder,ebn0_db,bits_sent,bit_errors,ber" and len(lines) == 5
    assert lines[2] == "ml,inf,200,0,0"
    out_csv = tmp_path / "o.csv"
    assert run(capsys, "sim", "-f", str(cfg), "-o", str(out_csv))[0] == 0
    assert out_csv.read_text() == out


def test_sim_threads_env_does_not_change_output(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("L = 8\nK = 9\nd = 2\ndecoders = decoupled, aml\nebn0_db = 2, 5\nframes_per_point = 200\n")
    monkeypatch.setenv("WBE_THREADS", "1")
    a = run(capsys, "sim", "-f", str(cfg))[1]
    monkeypatch.setenv("WBE_THREADS", "3")
    b = run(capsys, "sim", "-f", str(cfg))[1]
    assert a == b


@pytest.mark.parametrize(
    "argv",
    [
        ["frobnicate"],
        [],
        ["bounds", "8"],
        ["bounds", "0", "4"],
        ["gen", "4", "4", "--variant", "magic"],
        ["sim"],
        ["bounds", "8", "9", "--bogus"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "usage" in err


def test_validation_and_runtime_errors(capsys, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("L = 4\nK = 4\nebn0_db = 1\nframes_per_point = 0\n")
    assert run(capsys, "sim", "-f", str(bad))[0] == 2
    malformed = tmp_path / "bad.txt"
    malformed.write_text("2 2 binary:1\n1 1\n")
    assert run(capsys, "inject", "-c", str(malformed))[0] == 2
    assert run(capsys, "inject", "-c", str(tmp_path / "missing.txt"))[0] == 1
    assert run(capsys, "sim", "-f", str(tmp_path / "missing.cfg"))[0] == 1


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "wbecdma", "bounds", "64", "96"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout == "welch=144 kp=144 equal=true\n"
