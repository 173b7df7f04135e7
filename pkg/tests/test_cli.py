"""Command-line front end: config round trip, exit codes, reproducibility."""

import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsigma.cli import RunConfig, UsageError, fmt_number, main, parse_config_text


@given(st.builds(
    RunConfig,
    command=st.sampled_from(["verify-algebra", "verify-geometry", "solve", "scan"]),
    model=st.sampled_from(["weighted-sphere", "const-v-qe", "elliptic-gaussian", "round-lcf"]),
    n=st.integers(2, 5), m=st.floats(0.1, 10, allow_nan=False), k=st.integers(1, 2),
    grid=st.integers(65, 2001), tol=st.floats(1e-14, 1e-2), seed=st.integers(0, 2**31),
    perturb=st.floats(0, 0.5), symbolic=st.booleans(), mu=st.none() | st.floats(-2, 2),
))
@settings(max_examples=60, deadline=None)
def test_config_round_trip(cfg):
    assert RunConfig.from_text(cfg.to_text()) == cfg


def test_config_rejects_unknown_keys():
    with pytest.raises(UsageError):
        parse_config_text("colour=blue\n")


def test_fmt_number_17_digits():
    assert fmt_number(0.1) == "0.10000000000000001"
    assert float(fmt_number(1 / 3)) == 1 / 3


def test_usage_errors_exit_2(tmp_path):
    assert main(["solve", "--m", "-1", "-o", str(tmp_path)]) == 2
    assert main(["no-such-command"]) == 2
    assert main(["solve", "--model", "const-v-qe", "--k", "3", "-o", str(tmp_path)]) == 2
    assert main(["verify-geometry", "--model", "weighted-sphere", "--mu", "1", "-o", str(tmp_path)]) == 2
    # nothing was computed for rejected configurations
    assert not list(tmp_path.glob("*.json"))


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("model=weighted-sphere\nn=2\nm=2\ngrid=401\n")
    out = tmp_path / "out"
    assert main(["verify-geometry", "--config", str(cfg), "--grid", "801", "-o", str(out)]) == 0
    data = json.loads((out / "verify-geometry.json").read_text())
    assert data["config"]["grid"] == 801
    rows = {r["name"]: r for r in data["checks"]}
    # weighted sphere n = m = 2: kappa = 2, lambda = 1
    assert float(rows["einstein-scale"]["kappa"]) == pytest.approx(2.0, abs=1e-9)
    assert float(rows["einstein-scale"]["lambda"]) == pytest.approx(1.0, abs=1e-9)
    assert all(r["anchor"] for r in data["checks"])


def _solve(out: Path) -> int:
    return main(["solve", "--model", "const-v-qe", "--n", "2", "--m", "3", "--k", "2", "--perturb", "0.1",
                 "--seed", "7", "--grid", "401", "-o", str(out)])


def test_solve_reproducible(tmp_path):
    assert _solve(tmp_path / "a") == 0
    assert _solve(tmp_path / "b") == 0
    for name in ("solve.json", "trajectory.csv", "solution.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    data = json.loads((tmp_path / "a" / "solve.json").read_text())
    assert data["converged"] and data["certificate"]["pass"]
    assert len(data["initial_data_sha256"]) == 64 and data["seed"] == 7
    header = (tmp_path / "a" / "trajectory.csv").read_text().splitlines()[0]
    assert header == "iteration,residual,functional,cone_margin"


def test_report_summarizes(tmp_path):
    assert main(["report", "-o", str(tmp_path / "empty")]) == 2
    assert _solve(tmp_path) == 0
    assert main(["report", "-o", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "solve.json").read_text())
    data["all_passed"] = False
    (tmp_path / "solve.json").write_text(json.dumps(data))
    assert main(["report", "-o", str(tmp_path)]) == 1


def test_verify_algebra_small(tmp_path):
    assert main(["verify-algebra", "--symbolic", "--samples", "3", "--kmax", "3", "--nmax", "3",
                 "-o", str(tmp_path)]) == 0


def test_scan_proven_regime(tmp_path):
    assert main(["scan", "--model", "weighted-sphere", "--grid", "401", "-o", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "scan.json").read_text())
    assert data["proven_regime"] and float(data["min_ratio"]) >= 1 - 1e-6
