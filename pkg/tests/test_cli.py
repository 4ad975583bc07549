import subprocess
import sys
from pathlib import Path

import pytest

from afrelay.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, text, name="c.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


QUICK = "R: 2\nsnr_grid: [0, 6]\ntarget_errors: 30\nseed: 3\nbit_algorithm: FullSearch\n"


def test_run_writes_csv(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["run", write(tmp_path, QUICK), "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "snr_db,trials,bit_errors,ber,ber_stderr,block_errors,bler"
    assert [l.split(",")[0] for l in lines[1:]] == ["0", "6"]


def test_run_is_byte_identical(tmp_path):
    cfg = write(tmp_path, QUICK)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", cfg, "-o", str(a)]) == 0
    assert main(["run", cfg, "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("text,key", [
    ("R: 2\nsnr_gird: [0]\n", "snr_gird"),
    ("R: two\n", "R"),
    ("R: 3\nscheme: AlamoutiPairs\n", "R"),
    ("R: 2\nfeedback_error_prob: 2\n", "feedback_error_prob"),
    ("R: [1\n", "<file>"),
])
def test_config_error_exit_code(tmp_path, capsys, text, key):
    assert main(["run", write(tmp_path, text)]) == 2
    assert key in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.cfg")]) == 2


def test_sweep_compare(tmp_path):
    text = QUICK + "curves:\n  - {label: full, bit_algorithm: FullSearch}\n  - {label: greedy, bit_algorithm: Greedy}\n"
    out = tmp_path / "s.csv"
    assert main(["sweep-compare", write(tmp_path, text), "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("label,snr_db")
    assert len(lines) == 5 and sum(l.startswith("label") for l in lines) == 1
    # run accepts comparison files as well
    out2 = tmp_path / "r.csv"
    assert main(["run", write(tmp_path, text), "-o", str(out2)]) == 0
    assert out2.read_bytes() == out.read_bytes()


def test_sweep_compare_error_names_curve(tmp_path, capsys):
    text = QUICK + "curves:\n  - {label: a, scheme: Nope}\n"
    assert main(["sweep-compare", write(tmp_path, text)]) == 2
    assert "curves[0].scheme" in capsys.readouterr().err


def test_bound(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bound", write(tmp_path, "R: 2\nsnr_grid: [0, 20]\n"), "-n", "2000", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "snr_db,chernoff,chernoff_stderr,closed_form"
    assert lines[1].endswith(",nan") and float(lines[2].split(",")[3]) > 0


def test_validate(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 7


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.cfg")))
def test_shipped_configs_parse(name):
    from afrelay.config import load_comparison, load_config, load_mapping

    path = CONFIGS / name
    if "curves" in load_mapping(path):
        assert load_comparison(path)
    else:
        load_config(path)


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "afrelay.cli", "run", write(tmp_path, "R: 0\n")],
                       capture_output=True, text=True)
    assert r.returncode == 2 and "R" in r.stderr
