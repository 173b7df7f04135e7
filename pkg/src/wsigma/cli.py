"""Command-line front end.

Subcommands run a verification suite, a solver or a scan and write JSON (and
CSV for solver trajectories) into the output directory.  Exit codes: 0 when
every check passes, 1 when a check fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import suites as S
from .geometry import ModelKind, build_model, export_csv
from .solver import (
    ConeExitError,
    FlowMode,
    FlowState,
    flow_solve,
    obata_pairing,
    rayleigh_inf,
    sobolev_scan,
    standard_families,
    yk_solve,
)

COMMANDS = ("verify-algebra", "verify-geometry", "verify-variation", "solve", "scan", "report")

# keys whose values depend on wall-clock time; kept out of files so output is reproducible
VOLATILE_KEYS = frozenset({"seconds", "elapsed"})


class UsageError(ValueError):
    """Invalid configuration, detected before any computation."""


@dataclass
class RunConfig:
    command: str = "report"
    model: str = "weighted-sphere"
    n: int = 2
    m: float = 2.0
    mu: Optional[float] = None
    kappa: Optional[float] = None
    k: int = 1
    grid: int = 801
    tol: float = 1e-8
    seed: int = 0
    perturb: float = 0.1
    mode: str = "fk"
    symbolic: bool = False
    kmax: int = 5
    nmax: int = 5
    samples: int = 200
    basis: int = 12
    max_iter: int = 50
    output: str = "wsigma-out"

    # serialization: flat key=value lines
    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            lines.append(f"{f.name}={'' if val is None else _fmt_scalar(val)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls(**parse_config_text(text))

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        try:
            ModelKind(self.model)
        except ValueError:
            raise UsageError(f"unknown model {self.model!r}; choose from "
                             + ", ".join(k.value for k in ModelKind)) from None
        if self.n < 2:
            raise UsageError("n must be at least 2")
        if not self.m > 0:
            raise UsageError("m must be positive")
        if self.grid < 65:
            raise UsageError("grid must have at least 65 nodes")
        if not 1 <= self.k <= self.m + self.n:
            raise UsageError("k must satisfy 1 <= k <= m + n")
        if self.mode not in ("fk", "yk"):
            raise UsageError("mode must be fk or yk")
        if not self.tol > 0:
            raise UsageError("tol must be positive")
        if self.perturb < 0:
            raise UsageError("perturb must be nonnegative")
        if self.kmax < 0 or self.nmax < 1 or self.samples < 1 or self.basis < 2 or self.max_iter < 1:
            raise UsageError("kmax, nmax, samples, basis and max-iter must be positive")
        if self.command == "solve":
            if self.mode == "fk" and self.k > 2 and self.model != "round-lcf":
                raise UsageError("k >= 3 needs a locally conformally flat base (model round-lcf)")
            if self.mode == "yk" and self.model != "weighted-sphere":
                raise UsageError("mode yk needs a scale-positive, mu = 0 base (model weighted-sphere)")
        if self.mu is not None or self.kappa is not None:
            base = build_model(self.model, self.n, self.m, max(self.intervals, 64))
            if self.mu is not None and not math.isclose(self.mu, base.mu, abs_tol=1e-12):
                raise UsageError(f"model {self.model} has mu = {base.mu}, not {self.mu}")
            if self.kappa is not None and not math.isclose(self.kappa, base.kappa, abs_tol=1e-12):
                raise UsageError(f"model {self.model} has kappa = {base.kappa}, not {self.kappa}")
        return self

    @property
    def intervals(self) -> int:
        """Grid intervals; ``grid`` counts nodes including both ends."""
        return self.grid - 1


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _fmt_scalar(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return repr(val)
    return str(val)


def _coerce(name: str, raw: str):
    typ = _FIELD_TYPES[name]
    if raw == "" and "Optional" in str(typ):
        return None
    if "bool" in str(typ):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"{name}: expected a boolean, got {raw!r}")
    try:
        if "int" in str(typ):
            return int(raw)
        if "float" in str(typ):
            return float(raw)
    except ValueError:
        raise UsageError(f"{name}: cannot parse {raw!r}") from None
    return raw


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key=value")
        key, raw = (t.strip() for t in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, raw)
    return out


# ---------------------------------------------------------------------------
# output

def fmt_number(x) -> str:
    """Decimal string with 17 significant digits (exact for Fraction)."""
    if isinstance(x, Fraction):
        return str(x)
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return str(x)
    return format(x, ".17g")


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items() if k not in VOLATILE_KEYS}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        return int(obj)
    if isinstance(obj, (float, np.floating, Fraction)):
        return fmt_number(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if dataclasses.is_dataclass(obj):
        return jsonable(dataclasses.asdict(obj))
    return str(obj)


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n")


def _summary(rows: Sequence[S.Check], out=sys.stdout) -> None:
    failed = [r for r in rows if not r.passed]
    width = max([len(r.name) for r in rows] + [4])
    print(f"{'check':<{width}}  {'value':>24}  {'tol':>10}  status", file=out)
    for r in rows:
        print(f"{r.name:<{width}}  {fmt_number(r.value):>24}  {r.tol:>10.3g}  {'PASS' if r.passed else 'FAIL'}",
              file=out)
    print(f"{len(rows) - len(failed)}/{len(rows)} checks passed", file=out)


def config_echo(cfg: RunConfig) -> dict:
    """Config as written into reports; the output path is left out so reports compare across directories."""
    d = parse_config_text(cfg.to_text())
    d.pop("output")
    return d


def _rows_payload(cfg: RunConfig, rows: Sequence[S.Check], **extra) -> dict:
    return {"command": cfg.command, "config": config_echo(cfg),
            "all_passed": all(r.passed for r in rows), "checks": [r.as_dict() for r in rows], **extra}


def threads() -> int:
    try:
        return max(1, int(os.environ.get("WSIGMA_THREADS", "1")))
    except ValueError:
        return 1


def run_parallel(tasks: Sequence[Callable[[], list]]) -> list:
    """Run independent suites; results are concatenated in submission order."""
    if threads() == 1 or len(tasks) == 1:
        return [row for t in tasks for row in t()]
    with ThreadPoolExecutor(max_workers=threads()) as pool:
        futures = [pool.submit(t) for t in tasks]
        return [row for f in futures for row in f.result()]


# ---------------------------------------------------------------------------
# commands

def cmd_verify_algebra(cfg: RunConfig, outdir: Path) -> int:
    rows = run_parallel([
        lambda: S.algebra_suite(cfg.kmax, cfg.nmax, cfg.samples, cfg.seed, cfg.symbolic),
        lambda: S.integer_m_suite(seed=cfg.seed + 1),
        lambda: S.newton_inequality_suite(seed=cfg.seed + 2),
    ])
    _summary(rows)
    write_json(outdir / "verify-algebra.json", _rows_payload(cfg, rows))
    return 0 if all(r.passed for r in rows) else 1


def cmd_verify_geometry(cfg: RunConfig, outdir: Path) -> int:
    rows = S.geometry_suite(cfg.model, cfg.n, cfg.m, cfg.intervals)
    s = build_model(cfg.model, cfg.n, cfg.m, cfg.intervals)
    outdir.mkdir(parents=True, exist_ok=True)
    export_csv(s, outdir / f"structure-{cfg.model}.csv")
    _summary(rows)
    write_json(outdir / "verify-geometry.json", _rows_payload(cfg, rows))
    return 0 if all(r.passed for r in rows) else 1


def cmd_verify_variation(cfg: RunConfig, outdir: Path) -> int:
    N = cfg.intervals
    rows = run_parallel([
        lambda: S.first_variation_checks(N, seed=cfg.seed),
        lambda: S.criticality_checks(N, seed=cfg.seed),
        lambda: S.stability_checks(N),
        lambda: S.self_adjointness_checks(N),
        lambda: S.we_second_variation_checks(N),
    ])
    _summary(rows)
    write_json(outdir / "verify-variation.json", _rows_payload(cfg, rows))
    return 0 if all(r.passed for r in rows) else 1


def initial_data_hash(state: FlowState) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(state.coeffs, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(state.base.r, dtype="<f8").tobytes())
    h.update(f"{state.base.label}|{state.base.n}|{state.base.m!r}|{state.k}".encode())
    return h.hexdigest()


def _write_trajectory(path: Path, residuals, functionals, margins) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "residual", "functional", "cone_margin"])
        for i, res in enumerate(residuals):
            fv = functionals[i] if i < len(functionals) else float("nan")
            mg = margins[i] if i < len(margins) else float("nan")
            w.writerow([i, fmt_number(res), fmt_number(fv), fmt_number(mg)])


def cmd_solve(cfg: RunConfig, outdir: Path) -> int:
    base = build_model(cfg.model, cfg.n, cfg.m, cfg.intervals)
    mode = FlowMode.FIX_SCALE_YK if cfg.mode == "yk" else FlowMode.FIX_VOLUME_FK
    state = FlowState.from_perturbation(base, cfg.k, cfg.perturb, seed=cfg.seed, mode=mode)
    manifest = {"command": "solve", "config": config_echo(cfg),
                "initial_data_sha256": initial_data_hash(state), "seed": cfg.seed}
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        if mode is FlowMode.FIX_VOLUME_FK:
            res = flow_solve(state, max_iter=cfg.max_iter, tol=cfg.tol)
            pairing = obata_pairing(res.structure, 1.0 / state.u, cfg.k, "qe")
            manifest.update(res.manifest())
            manifest["pairing"] = {"integral": pairing.integral, "one_signed": pairing.one_signed}
            cert = res.certificate
            ok = res.converged and cert is not None and cert.passed
            _write_trajectory(outdir / "trajectory.csv", res.state.residual_history,
                              res.functional_history, res.margin_history)
            structure = res.structure
            print(f"converged={res.converged} iterations={state.iteration} residual={fmt_number(res.residual)}")
            if cert is not None:
                print(f"certificate={'PASS' if cert.passed else 'FAIL'} fit={fmt_number(cert.fit_residual)} "
                      f"divergence={fmt_number(cert.divergence_residual)} a={fmt_number(cert.a)} "
                      f"b={fmt_number(cert.b)}")
        else:
            res = yk_solve(state, base.kappa, max_iter=cfg.max_iter, tol=cfg.tol)
            manifest.update({"k": cfg.k, "mode": mode.value, "iterations": state.iteration,
                             "converged": res.converged, "reason": res.reason,
                             "pointwise_residual": res.pointwise_residual,
                             "integral_residual": res.integral_residual,
                             "fit": {"a": res.fit[0], "b": res.fit[1], "residual": res.fit[2]},
                             "einstein_residual": res.einstein_residual,
                             "residual_history": list(res.residual_history)})
            ok = res.converged
            _write_trajectory(outdir / "trajectory.csv", res.residual_history, [], [])
            structure = res.structure
            print(f"converged={res.converged} iterations={state.iteration} "
                  f"pointwise={fmt_number(res.pointwise_residual)} integral={fmt_number(res.integral_residual)} "
                  f"einstein={fmt_number(res.einstein_residual)}")
    except ConeExitError as exc:
        manifest.update({"converged": False, "all_passed": False, "reason": f"cone exit: {exc}"})
        write_json(outdir / "solve.json", manifest)
        print(f"aborted: cone exit ({exc})", file=sys.stderr)
        return 1
    export_csv(structure, outdir / "solution.csv", kmax=max(2, cfg.k))
    manifest["all_passed"] = bool(ok)
    write_json(outdir / "solve.json", manifest)
    return 0 if ok else 1


def cmd_scan(cfg: RunConfig, outdir: Path) -> int:
    """Conjecture explorers.  Only the proven k = 1 Sobolev regime decides the exit code;
    the other rows are findings."""
    base = build_model(cfg.model, cfg.n, cfg.m, cfg.intervals)
    findings = []
    if base.mu == 0 and base.kappa > 0:
        with np.errstate(all="ignore"):
            for which in ("I1", "I2"):
                findings.append(rayleigh_inf(base, which, cfg.basis).as_dict())
    rows = sobolev_scan(base, cfg.k, standard_families(base, seed=cfg.seed))
    kept = [r.ratio for r in rows if not r.excluded]
    proven = cfg.k == 1 and base.mu == 0
    worst = min(kept) if kept else float("nan")
    ok = (not proven) or (bool(kept) and worst >= 1 - 1e-6)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "scan.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "parameter", "ratio", "kappa", "excluded", "cone_nodes_failed"])
        for r in rows:
            w.writerow([r.family, fmt_number(r.parameter), fmt_number(r.ratio), fmt_number(r.kappa),
                        int(r.excluded), r.cone_nodes_failed])
    write_json(outdir / "scan.json", {"command": "scan", "config": config_echo(cfg),
                                      "proven_regime": proven, "min_ratio": worst, "all_passed": ok,
                                      "sobolev": [dataclasses.asdict(r) for r in rows], "rayleigh": findings})
    for f in findings:
        print(f"rayleigh {f['which']}: infimum={fmt_number(f['value'])} "
              f"null_directions={f['null_directions']} modulo_null={fmt_number(f['value_modulo_null'])}")
    print(f"sobolev k={cfg.k}: min ratio {fmt_number(worst)} over {len(kept)} members "
          f"({len(rows) - len(kept)} excluded){' [proven regime]' if proven else ' [finding]'}")
    return 0 if ok else 1


def cmd_report(cfg: RunConfig, outdir: Path) -> int:
    """Summarize the JSON reports already present in the output directory."""
    files = sorted(outdir.glob("*.json")) if outdir.is_dir() else []
    if not files:
        print(f"no reports in {outdir}", file=sys.stderr)
        return 2
    ok = True
    for p in files:
        data = json.loads(p.read_text())
        passed = bool(data.get("all_passed", data.get("converged", False)))
        ok = ok and passed
        checks = data.get("checks", [])
        failed = [c["name"] for c in checks if not c.get("pass")]
        print(f"{p.name}: {'PASS' if passed else 'FAIL'}"
              + (f" ({len(checks) - len(failed)}/{len(checks)} checks)" if checks else ""))
        for name in failed:
            print(f"    FAIL {name}")
    return 0 if ok else 1


HANDLERS = {
    "verify-algebra": cmd_verify_algebra,
    "verify-geometry": cmd_verify_geometry,
    "verify-variation": cmd_verify_variation,
    "solve": cmd_solve,
    "scan": cmd_scan,
    "report": cmd_report,
}


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wsigma", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file; flags override it")
    common.add_argument("--output", "-o", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--grid", type=int, help="number of radial nodes")
    common.add_argument("--tol", type=float)
    sub = p.add_subparsers(dest="command", required=True)

    def model_flags(sp):
        sp.add_argument("--model", choices=[k.value for k in ModelKind])
        sp.add_argument("--n", type=int)
        sp.add_argument("--m", type=float)
        sp.add_argument("--mu", type=float, help="asserted value; rejected if the model disagrees")
        sp.add_argument("--kappa", type=float, help="asserted value; rejected if the model disagrees")

    sp = sub.add_parser("verify-algebra", parents=[common], help="exact weighted symmetric-function identities")
    sp.add_argument("--symbolic", action="store_true", default=None, help="keep m as a formal variable")
    sp.add_argument("--kmax", type=int)
    sp.add_argument("--nmax", type=int)
    sp.add_argument("--samples", type=int)
    sp = sub.add_parser("verify-geometry", parents=[common], help="curvature of a model structure")
    model_flags(sp)
    sub.add_parser("verify-variation", parents=[common], help="variation formulas against finite differences")
    sp = sub.add_parser("solve", parents=[common], help="constant sigma_k solver from a perturbed model")
    model_flags(sp)
    sp.add_argument("--k", type=int)
    sp.add_argument("--perturb", type=float, help="perturbation amplitude")
    sp.add_argument("--mode", choices=["fk", "yk"])
    sp.add_argument("--max-iter", dest="max_iter", type=int)
    sp = sub.add_parser("scan", parents=[common], help="conjecture explorers (report-only findings)")
    model_flags(sp)
    sp.add_argument("--k", type=int)
    sp.add_argument("--basis", type=int, help="harmonic basis size for the Rayleigh quotient")
    sub.add_parser("report", parents=[common], help="summarize reports in the output directory")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        try:
            values.update(parse_config_text(Path(args.config).read_text()))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    for key, val in vars(args).items():
        if key in _FIELD_TYPES and val is not None:
            values[key] = val
    values["command"] = args.command
    return RunConfig(**values).validate()


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
    except UsageError as exc:
        print(f"wsigma: error: {exc}", file=sys.stderr)
        return 2
    outdir = Path(cfg.output)
    if cfg.command != "report":
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / f"{cfg.command}.config").write_text(cfg.to_text())
    return HANDLERS[cfg.command](cfg, outdir)


if __name__ == "__main__":
    sys.exit(main())
