"""Figure scripts consume runner CSVs through the file interface only.

The fixtures produce real CSVs by invoking the gibbslab CLI (the gap sweep
uses the shipped criterion config; the adversarial sweep is the shipped
config verbatim), then both scripts are exercised as subprocesses and via
their module entry points.
"""

import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

FIGS_DIR = Path(__file__).resolve().parents[1]
REPO = FIGS_DIR.parent
sys.path.insert(0, str(FIGS_DIR))

import plot_adversarial  # noqa: E402
import plot_gap  # noqa: E402

def run_cli(config, tmp_path, name):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(config))
    out = tmp_path / name
    proc = subprocess.run(
        [sys.executable, "-m", "gibbslab.cli", "run", str(path), "--out", str(out)],
        capture_output=True, text=True, cwd=REPO,
    )
    assert proc.returncode == 0, proc.stderr
    return out / f"{name}.csv"


@pytest.fixture(scope="module")
def gap_csv(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("gap")
    config = json.loads((REPO / "configs" / "gap_sweep_tfim.json").read_text())
    return run_cli(config, tmp, "gap_sweep")


@pytest.fixture(scope="module")
def adversarial_csv(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("adv")
    config = json.loads((REPO / "configs" / "adversarial.json").read_text())
    return run_cli(config, tmp, "adversarial")


class TestGapFigure:
    def test_series_count_and_output(self, gap_csv, tmp_path):
        out = tmp_path / "gap.png"
        info = plot_gap.plot_gap(gap_csv, out)
        # one line per (branch, j) plus the ideal reference
        with open(gap_csv, newline="") as fh:
            groups = {(r["branch"], r["j"]) for r in csv.DictReader(fh)}
        assert info["series"] == len(groups) + 1
        assert out.stat().st_size > 0

    def test_cli_exit_code(self, gap_csv, tmp_path):
        out = tmp_path / "gap.svg"
        proc = subprocess.run(
            [sys.executable, str(FIGS_DIR / "plot_gap.py"), str(gap_csv), str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert out.stat().st_size > 0

    def test_input_not_mutated_and_deterministic(self, gap_csv, tmp_path):
        before = gap_csv.read_bytes()
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        plot_gap.plot_gap(gap_csv, a)
        plot_gap.plot_gap(gap_csv, b)
        assert gap_csv.read_bytes() == before
        assert a.read_bytes() == b.read_bytes()

    def test_empty_input_rejected(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        proc = subprocess.run(
            [sys.executable, str(FIGS_DIR / "plot_gap.py"), str(empty), str(tmp_path / "x.png")],
            capture_output=True, text=True,
        )
        assert proc.returncode != 0

    def test_schema_mismatch_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        with pytest.raises(plot_gap.SchemaMismatch):
            plot_gap.plot_gap(bad, tmp_path / "x.png")


class TestAdversarialFigure:
    def test_series_count_and_output(self, adversarial_csv, tmp_path):
        out = tmp_path / "adv.png"
        info = plot_adversarial.plot_adversarial(adversarial_csv, out)
        assert info["series"] == 3  # m_med in {1, 3, 5}
        assert info["points"] == 15
        assert out.stat().st_size > 0

    def test_cli_exit_code(self, adversarial_csv, tmp_path):
        out = tmp_path / "adv.svg"
        proc = subprocess.run(
            [sys.executable, str(FIGS_DIR / "plot_adversarial.py"),
             str(adversarial_csv), str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert out.stat().st_size > 0

    def test_header_only_rejected(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("q,n,alpha,m_med,beta,seed,distance,residual,kernel_dim\n")
        with pytest.raises(plot_adversarial.EmptyInput):
            plot_adversarial.plot_adversarial(empty, tmp_path / "x.png")

    def test_deterministic(self, adversarial_csv, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        plot_adversarial.plot_adversarial(adversarial_csv, a)
        plot_adversarial.plot_adversarial(adversarial_csv, b)
        assert a.read_bytes() == b.read_bytes()
