"""Command-line front end: ``hfsc {evaluate,verify,propagate,features}``."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__, _kernels
from .config import RunConfig, load_config
from .errors import ConfigError, HFSCError
from .nlsprop import init_from_closed_form, propagate
from .soliton import EVALUATORS, Axis, GridSpec, eval_grid, sampler
from .verify import (
    VerificationReport,
    corrupted,
    mass,
    residual_norms,
    track_features,
    zero_curvature_residual,
)
from .model import SpaceTimePoint

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_TOLERANCE = 0, 1, 2, 3


# ------------------------------------------------------------ output

def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    umask = os.umask(0)
    os.umask(umask)
    try:
        os.fchmod(fd, 0o666 & ~umask)
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def field_csv(columns, values) -> str:
    """Header + rows; floats as shortest round-trip decimals."""
    names = list(columns) + ["re_u", "im_u", "abs_u"]
    values = np.asarray(values, dtype=np.complex128)
    cols = [np.asarray(c, float) for c in columns.values()] + [values.real, values.imag, np.abs(values)]
    lines = [",".join(names)]
    for row in zip(*cols):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def report_json(kind, cfg: RunConfig, body: dict, **extra) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "version": __version__,
        "backend": _kernels.BACKEND,
        "config": cfg.to_dict(),
        **extra,
        **body,
    }
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


# ------------------------------------------------------------ commands

def cmd_evaluate(cfg: RunConfig, out_dir, evaluator=None):
    evaluator = evaluator or (cfg.grid.evaluator if cfg.grid else "general")
    grid = cfg.grid_spec()
    fg = eval_grid(cfg.soliton_spectrum(), cfg.physical_model(), grid, evaluator)
    x, y, t = grid.coordinates()
    coord = {"x": x, "y": y, "t": t}
    columns = {ax.name: coord[ax.name] for ax in grid.axes}
    stem = os.path.join(out_dir, cfg.output.stem)
    files = {stem + ".csv": field_csv(columns, fg.values)}
    files[stem + ".json"] = report_json(
        "field_grid",
        cfg,
        {"evaluator": evaluator, "shape": list(grid.shape), "columns": list(columns) + ["re_u", "im_u", "abs_u"]},
    )
    return files, fg


def run_verification(cfg: RunConfig) -> VerificationReport:
    model = cfg.physical_model()
    spec = cfg.soliton_spectrum()
    v = cfg.verify
    u = sampler(spec, model)
    if v.corrupt_eps:
        u = corrupted(u, model, v.corrupt_eps)
    xs = np.linspace(*v.x[:2], v.x[2])
    ts = np.linspace(*v.t[:2], v.t[2])
    X, T = np.meshgrid(xs, ts, indexing="ij")
    report = VerificationReport()
    res = residual_norms(u, model, X, v.y, T, h=v.h, coarse_h=v.coarse_h)
    report.residual = res
    report.add("pde_residual_max", res.max_abs, v.residual_tol)
    report.add("pde_residual_order", res.order, (v.order_min, v.order_max), "within")
    zc = max(
        zero_curvature_residual(u, complex(*s), SpaceTimePoint(px, v.y, pt), model, v.h)
        for s in v.sigma_tests
        for px, pt in v.zc_points
    )
    report.add("zero_curvature", zc, v.zero_curvature_tol)
    line = np.linspace(*v.mass_domain, v.mass_nodes)
    dx = line[1] - line[0]
    # along x at fixed y; x~ = x + k*y shifts the line rigidly
    m0, m1 = (mass(u(line, v.y, tm), dx) for tm in v.mass_times)
    report.add("mass_drift", abs(m1 - m0) / m0, v.mass_tol, note="standard L2 invariant of NLS-type equations")
    return report


def cmd_verify(cfg: RunConfig, out_dir):
    report = run_verification(cfg)
    stem = os.path.join(out_dir, cfg.output.stem)
    files = {stem + "_verify.json": report_json("verification_report", cfg, {"report": report.to_dict()})}
    return files, report


def cmd_propagate(cfg: RunConfig, out_dir):
    p = cfg.propagate
    model = cfg.physical_model()
    spec = cfg.soliton_spectrum()
    state = init_from_closed_form(spec, model, p.domain, p.n_modes, p.t0)
    final, rep = propagate(state, p.t_final, p.dt, spec)
    stem = os.path.join(out_dir, cfg.output.stem)
    body = rep.to_dict()
    body.pop("wall_time")  # keep the JSON deterministic
    failed = []
    if p.l_inf_tol is not None and not rep.l_inf_error < p.l_inf_tol:
        failed.append("l_inf_error")
    if p.mass_drift_tol is not None and not rep.mass_drift < p.mass_drift_tol:
        failed.append("mass_drift")
    files = {
        stem + "_initial.csv": field_csv({"x": state.x}, state.field),
        stem + "_final.csv": field_csv({"x": final.x}, final.field),
        stem + "_propagate.json": report_json(
            "propagation_report", cfg, {"report": body, "passed": not failed, "failed": failed}
        ),
    }
    return files, rep, failed


def cmd_features(cfg: RunConfig, out_dir):
    f = cfg.features
    model = cfg.physical_model()
    spec = cfg.soliton_spectrum()
    grid = GridSpec((Axis("x", *f.x), Axis("t", *f.t)), {"y": f.y})
    movie = eval_grid(spec, model, grid)
    rep = track_features(movie, n_peaks=f.n_peaks, breather=f.breather)
    checks = []
    if f.expected_velocity is not None:
        if f.expected_velocity == "theory":
            re = {e.sigma.real for e in spec}
            if len(re) != 1:
                raise ConfigError("theory velocity needs equal Re(sigma) for all entries", key="features.expected_velocity")
            expected = 2.0 * model.alpha4 * re.pop()
        else:
            expected = float(f.expected_velocity)
        err = abs(rep.fitted_velocity - expected) / abs(expected) if expected else abs(rep.fitted_velocity)
        checks.append({"name": "velocity", "expected": expected, "value": rep.fitted_velocity,
                       "relative_error": err, "passed": err < f.velocity_rtol})
    if f.n_peaks >= 2:
        err = max(abs(a - b) / b for a, b in zip(rep.pre_amplitudes, rep.post_amplitudes))
        checks.append({"name": "elastic", "relative_error": err, "passed": err < f.elastic_rtol})
    failed = [c["name"] for c in checks if not c["passed"]]
    stem = os.path.join(out_dir, cfg.output.stem)
    files = {
        stem + "_features.json": report_json(
            "feature_report", cfg, {"report": rep.to_dict(), "checks": checks, "passed": not failed}
        )
    }
    return files, rep, failed


# ------------------------------------------------------------ entry point

def build_parser():
    parser = argparse.ArgumentParser(prog="hfsc", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("evaluate", "evaluate the closed-form field on a grid (CSV + JSON sidecar)"),
        ("verify", "finite-difference, zero-curvature and mass checks"),
        ("propagate", "split-step propagation compared with the closed form"),
        ("features", "peak tracking: velocity, elasticity, breather period"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--quiet", action="store_true")
        if name == "evaluate":
            p.add_argument("--evaluator", choices=EVALUATORS, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    say = (lambda *a: None) if args.quiet else (lambda *a: print(*a, file=sys.stderr))
    try:
        cfg = load_config(args.config)
        failed = []
        if args.command == "evaluate":
            files, _ = cmd_evaluate(cfg, args.out, args.evaluator)
        elif args.command == "verify":
            files, report = cmd_verify(cfg, args.out)
            failed = report.failed
        elif args.command == "propagate":
            files, rep, failed = cmd_propagate(cfg, args.out)
            say(f"propagation: {rep.steps} steps in {rep.wall_time:.2f} s, l_inf error {rep.l_inf_error:.3e}")
        else:
            files, _, failed = cmd_features(cfg, args.out)
        for path, text in files.items():
            _atomic_write(path, text)
            say(f"wrote {path}")
    except HFSCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if failed:
        print("FAILED: " + ", ".join(failed), file=sys.stderr)
        return EXIT_TOLERANCE
    say("all checks passed" if args.command != "evaluate" else "done")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
