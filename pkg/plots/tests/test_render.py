"""Tests for the figure renderer.

The renderer consumes only the results-CSV contract, so these tests drive the
producer through its command-line interface (never as a library) and compare
the sidecar values against the producer's own summarize output.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

RENDER = Path(__file__).resolve().parent.parent / "render.py"

HEADER = "scenario,n,delta,beta,alpha,eps,mode,trial,seed,outcome,exactness,bound,wall_ms"


def render(args):
    return subprocess.run(
        [sys.executable, str(RENDER), *args], capture_output=True, text=True
    )


def write_csv(path: Path, rows: list[str]):
    path.write_text(HEADER + "\n" + "".join(r + "\n" for r in rows))


def fake_row(scenario="s-a", n=10, outcome="holds", trial=0, beta="0.5", delta=2):
    return (
        f"{scenario},{n},{delta},{beta},1.0,3,subset,{trial},1:2,{outcome},exact,0.006,0"
    )


class TestUnitLevel:
    def test_missing_column_is_named(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("scenario,n\ns,4\n")
        res = render(["--csv", str(bad), "--out", str(tmp_path / "figs")])
        assert res.returncode != 0
        assert "missing column" in res.stderr and "outcome" in res.stderr

    def test_empty_csv_warns_and_exits_zero(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text(HEADER + "\n")
        out = tmp_path / "figs"
        res = render(["--csv", str(empty), "--out", str(out)])
        assert res.returncode == 0
        assert "nothing rendered" in res.stderr
        assert not list(out.glob("*.svg"))

    def test_one_figure_per_scenario_group(self, tmp_path):
        csv_path = tmp_path / "r.csv"
        rows = [fake_row("s-a", n, trial=t) for n in (4, 6, 8) for t in range(3)]
        rows += [fake_row("s-b", 5, trial=t) for t in range(3)]
        write_csv(csv_path, rows)
        out = tmp_path / "figs"
        res = render(["--csv", str(csv_path), "--out", str(out)])
        assert res.returncode == 0, res.stderr
        svgs = sorted(p.name for p in out.glob("*.svg"))
        assert svgs == ["s-a_delta2_beta0p5.svg", "s-b_delta2_beta0p5.svg"]
        values = json.loads((out / "s-a_delta2_beta0p5.values.json").read_text())
        assert [v["n"] for v in values] == [4, 6, 8]
        assert all(v["failure_rate"] == 0.0 for v in values)

    def test_confidence_band_values(self, tmp_path):
        csv_path = tmp_path / "r.csv"
        rows = [fake_row("s", 4, outcome="violated" if t < 2 else "holds", trial=t)
                for t in range(8)]
        write_csv(csv_path, rows)
        out = tmp_path / "figs"
        render(["--csv", str(csv_path), "--out", str(out)])
        (vals,) = json.loads((out / "s_delta2_beta0p5.values.json").read_text())
        assert vals["violations"] == 2 and vals["trials"] == 8
        from scipy.stats import beta as beta_dist

        assert vals["ci95_lo"] == pytest.approx(float(beta_dist.ppf(0.025, 2, 7)))
        assert vals["ci95_hi"] == pytest.approx(float(beta_dist.ppf(0.975, 3, 6)))

    def test_png_output(self, tmp_path):
        csv_path = tmp_path / "r.csv"
        write_csv(csv_path, [fake_row("s", 4, trial=t) for t in range(2)])
        out = tmp_path / "figs"
        res = render(["--csv", str(csv_path), "--out", str(out), "--format", "png"])
        assert res.returncode == 0
        assert list(out.glob("*.png"))

    def test_log_scale_flag(self, tmp_path):
        csv_path = tmp_path / "r.csv"
        write_csv(csv_path, [fake_row("s", n, trial=t) for n in (4, 6) for t in range(2)])
        out = tmp_path / "figs"
        res = render(["--csv", str(csv_path), "--out", str(out), "--log-y"])
        assert res.returncode == 0
        svg = next(out.glob("*.svg")).read_text()
        assert "matplotlib" in svg


@pytest.fixture(scope="module")
def decay_csv(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("decay")
    cfg = tmp / "decay.toml"
    cfg.write_text(
        """
scenario = "event-random-S-subset"
n = [20, 40, 80]
delta = 2
beta = "0.5"
alpha = 1.0
eps = "floor(0.1*N)"
trials = 60
master_seed = 9090
"""
    )
    out = tmp / "decay.csv"
    res = subprocess.run(
        ["recon-lab", "experiment", "--config", str(cfg), "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr
    return out


class TestAcceptanceSecondary:
    """Render the decay-scenario CSV produced through the producer's CLI:
    plotted values must match its summarize output exactly, and re-rendering
    must be byte-identical."""

    def test_values_match_summarize_and_rerun_is_byte_identical(self, decay_csv, tmp_path):
        out_a = tmp_path / "figs_a"
        out_b = tmp_path / "figs_b"
        res_a = render(["--csv", str(decay_csv), "--out", str(out_a)])
        res_b = render(["--csv", str(decay_csv), "--out", str(out_b)])
        assert res_a.returncode == 0 and res_b.returncode == 0

        svgs = sorted(out_a.glob("*.svg"))
        assert len(svgs) == 1  # one scenario group in the decay CSV
        for svg in svgs:
            assert svg.read_bytes() == (out_b / svg.name).read_bytes()

        summ = subprocess.run(
            ["recon-lab", "summarize", "--csv", str(decay_csv), "--json"],
            capture_output=True,
            text=True,
        )
        assert summ.returncode == 0, summ.stderr
        table = {
            (s["scenario"], s["n"], s["delta"], s["beta"], s["alpha"], s["eps"], s["mode"]): s
            for s in json.loads(summ.stdout)
        }
        plotted = []
        for sidecar in out_a.glob("*.values.json"):
            plotted.extend(json.loads(sidecar.read_text()))
        assert len(plotted) == len(table) == 3
        for p in plotted:
            key = (p["scenario"], p["n"], p["delta"], p["beta"], p["alpha"], p["eps"], p["mode"])
            s = table[key]
            for field in ("trials", "violations", "failure_rate", "ci95_lo", "ci95_hi", "bound"):
                assert p[field] == s[field], (field, p[field], s[field])
