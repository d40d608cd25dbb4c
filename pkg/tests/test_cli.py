import io
import json
import subprocess
import sys

import numpy as np
import pytest

from ekmu import cli
from ekmu.model import ExtKuParams, cdf_envelope


def run(*argv, env_seed=None, monkeypatch=None):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    lines = text.strip().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def test_curve_pdf_origin():
    code, out, _ = run("curve", "--quantity", "pdf", "--k", "0.1", "--u", "2", "--p", "1",
                       "--x-max", "3", "--points", "4")
    header, body = rows(out)
    assert code == 0 and header == ["rho", "pdf"] and len(body) == 4
    assert float(body[0][1]) == 0.0


def test_curve_cdf_tail():
    code, out, _ = run("curve", "--quantity", "cdf", "--k", "0.1", "--u", "2", "--p", "1",
                       "--x-max", "10", "--points", "11")
    assert abs(float(rows(out)[1][-1][1]) - 1) < 1e-9


def test_curve_round_trip_precision():
    code, out, _ = run("curve", "--quantity", "cdf", "--k", "2", "--u", "1.5", "--p", "0.4",
                       "--x-min", "0.1", "--x-max", "2", "--points", "7")
    _, body = rows(out)
    grid = np.linspace(0.1, 2.0, 7)
    for (r, v), x in zip(body, grid):
        assert v == f"{cdf_envelope(ExtKuParams(2, 1.5, 0.4), x):.12g}"
        # re-reading and re-printing is the identity
        assert f"{float(v):.12g}" == v and f"{float(r):.12g}" == r


def test_peak_flattens_as_p_decreases():
    # u(1+p) < 2 here, so the density also rises toward the origin; the
    # interior mode is what flattens, and vanishes at p = 0
    peaks = []
    for p in ("1", "0.5", "0"):
        _, out, _ = run("curve", "--k", "1", "--u", "0.75", "--p", p, "--x-min", "0.01",
                        "--x-max", "3", "--points", "300")
        f = np.array([float(v) for _, v in rows(out)[1]])
        inner = [f[i] for i in range(1, f.size - 1) if f[i - 1] < f[i] >= f[i + 1]]
        peaks.append(max(inner, default=0.0))
    assert peaks[0] > peaks[1] > peaks[2] == 0.0


def test_moments_and_af():
    code, out, _ = run("af", "--k", "1", "--u", "2", "--p", "1")
    assert code == 0 and out.strip() == "0.375"
    code, out, _ = run("moments", "--k", "1", "--u", "2", "--p", "0.5", "--orders", "2,4")
    assert [r[1] for r in rows(out)[1]] == ["1", "1.5"]


def test_aber_sweep_monotone():
    code, out, _ = run("aber", "--k", "3", "--u", "4", "--p", "1", "--g", "1", "--snr-db", "0:20:1")
    header, body = rows(out)
    assert header == ["snr_db", "aber", "method"] and len(body) == 21
    vals = np.array([float(r[1]) for r in body])
    assert np.all(np.diff(vals) < 0)
    assert {r[2] for r in body} <= {"series", "quadrature"}


def test_outage_sweep_negative_thresholds():
    code, out, _ = run("outage", "--k", "1", "--u", "2", "--p", "0.75", "--snr", "5",
                       "--threshold-db", "-10:-5:5")
    header, body = rows(out)
    assert header == ["threshold_db", "outage"]
    ratio = float(body[0][1]) / float(body[1][1])
    assert abs(ratio - 0.131) < 0.015


def test_effrate_sweep():
    code, out, _ = run("effrate", "--k", "1", "--u", "1", "--p", "1", "--snr", "10", "--a-qos", "1")
    header, body = rows(out)
    assert header == ["snr", "effective_rate", "method"]
    assert abs(float(body[0][1]) - 2.45893533866) < 1e-10


def test_snr_flags_exclusive():
    assert run("aber", "--k", "1", "--u", "1", "--p", "1", "--snr", "1", "--snr-db", "0")[0] == 2
    assert run("aber", "--k", "1", "--u", "1", "--p", "1")[0] == 2
    assert run("aber", "--k", "1", "--u", "1", "--p", "1", "--snr-db", "5:1:1")[0] == 2


def test_domain_error_exit_code():
    code, _, err = run("af", "--k", "-1", "--u", "1", "--p", "1")
    assert code == 2 and "k must be" in err


def test_simulate_deterministic():
    a = run("simulate", "--k", "0", "--u", "1", "--p", "1", "--samples", "1000", "--seed", "7")
    b = run("simulate", "--k", "0", "--u", "1", "--p", "1", "--samples", "1000", "--seed", "7")
    assert a == b and a[0] == 0
    assert len(a[1].splitlines()) == 1001


def test_simulate_env_seed(monkeypatch):
    monkeypatch.setenv("EKMU_SEED", "7")
    a = run("simulate", "--k", "0", "--u", "1", "--p", "1", "--samples", "50")
    monkeypatch.delenv("EKMU_SEED")
    b = run("simulate", "--k", "0", "--u", "1", "--p", "1", "--samples", "50", "--seed", "7")
    c = run("simulate", "--k", "0", "--u", "1", "--p", "1", "--samples", "50")
    d = run("simulate", "--k", "0", "--u", "1", "--p", "1", "--samples", "50", "--seed", "0")
    assert a == b and c == d and a != c


def test_simulate_ks_rayleigh():
    code, out, _ = run("simulate", "--k", "0", "--u", "1", "--p", "1", "--samples", "1000000", "--ks")
    report = json.loads(out)
    assert set(report) >= {"n", "ks", "threshold"}
    assert report["n"] == 1_000_000
    # recorded run, seed 0
    assert abs(report["ks"] - 0.000729972269049195) < 1e-12
    assert report["ks"] < 0.003


def test_simulate_integrality_gate():
    code, _, err = run("simulate", "--k", "0", "--u", "1.5", "--p", "1")
    assert code == 2 and "integer" in err


def test_fit_missing_file(tmp_path):
    assert run("fit", "--input", str(tmp_path / "nope.csv"))[0] == 3


def test_fit_bad_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("rho,cdf\n0.1,0.1\n0.2,0.2\n0.3,1.2\n0.4,0.5\n0.5,0.6\n")
    code, _, err = run("fit", "--input", str(path))
    assert code == 3 and "line 4" in err


def test_fit_numerical_failure_exit_code(tmp_path, monkeypatch):
    from ekmu import fit as fm
    from ekmu.errors import ConvergenceError

    def broken(*args, **kwargs):
        raise ConvergenceError("all starts failed")
    monkeypatch.setattr(fm, "fit", broken)
    path = tmp_path / "d.csv"
    path.write_text("rho,cdf\n" + "\n".join(f"{r},{r / 2}" for r in (0.2, 0.4, 0.6, 0.8, 1.0)))
    assert run("fit", "--input", str(path), "--model", "ku")[0] == 4


@pytest.fixture
def fixture_csv(tmp_path):
    rho = np.linspace(0.05, 3.0, 50)
    f = cdf_envelope(ExtKuParams(2, 1.5, 0.4), rho)
    path = tmp_path / "synthetic.csv"
    path.write_text("# synthetic k=2 u=1.5 p=0.4\nrho,cdf\n"
                    + "\n".join(f"{r!r},{v!r}" for r, v in zip(rho.tolist(), f.tolist())) + "\n")
    return path


def test_fit_single_model_json(fixture_csv, tmp_path):
    out_path = tmp_path / "report.json"
    code, _, _ = run("fit", "--input", str(fixture_csv), "--model", "extku", "--starts", "4",
                     "--seed", "1", "--out", str(out_path))
    report = json.loads(out_path.read_text())
    assert code == 0
    for key in ("model_kind", "k", "u", "p", "sse", "r2", "n_points", "starts_used",
                "best_start_index", "converged", "curve"):
        assert key in report
    assert report["n_points"] == 50 and report["sse"] < 1e-10
    assert abs(report["k"] - 2) < 1e-3
    assert abs(report["u"] * (1 + report["p"]) - 2.1) < 1e-4
    assert set(report["curve"][0]) == {"rho", "cdf_model"}


def test_fit_both_reports_nested_dominance(fixture_csv):
    code, out, _ = run("fit", "--input", str(fixture_csv), "--model", "both", "--starts", "4")
    report = json.loads(out)
    assert code == 0
    assert report["sse_ku"] >= report["sse_extku"] - 1e-12
    assert report["nested_dominance"] is True
    assert [f["model_kind"] for f in report["fits"]] == ["ext_ku", "ku"]


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ekmu.cli", "af", "--k", "0", "--u", "1", "--p", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "1"
    proc = subprocess.run([sys.executable, "-m", "ekmu.cli", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 2
