"""Command line front end: ``bbw <command> --config <path|figure1|figure2> ...``.

Exit codes: 0 success, 1 a numerical check failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

import numpy as np

from .basis import build_basis, project
from .checks import run_checks
from .config import ExperimentConfig, load_config
from .errors import BBWError, ConfigError, DomainError, ShapeError, SizeError
from .smooth import function_from_descriptor
from .transform import CoefficientPyramid, TransformPlan, forward, inverse

EXIT_OK, EXIT_CHECK, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Bad command line input; reported with exit code 2."""


def _fmt(v) -> str:
    return f"{v:.17g}"


def _csv(header, columns) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in zip(*columns):
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _level(cfg: ExperimentConfig, level, default, top):
    j = default if level is None else level
    if not 0 <= j <= top:
        raise InputError(f"--level must lie in 0..{top}, got {j}")
    return j


def _label(name, families):
    return f"{name}:" if len(families) > 1 else ""


def cmd_basis(cfg, args):
    j = _level(cfg, args.level, 0, cfg.hierarchy.depth)
    fams = cfg.select(args.family)
    x = np.linspace(0.0, 1.0, args.samples or cfg.sample_count)
    header, cols = ["x"], [x]
    for name, fam in fams.items():
        V = build_basis(fam, cfg.hierarchy[j]).evaluate(x)
        header += [f"{_label(name, fams)}phi_{k}" for k in range(V.shape[1])]
        cols += list(V.T)
    _emit(_csv(header, cols), args.out)
    return EXIT_OK


def cmd_wavelets(cfg, args):
    if cfg.hierarchy.depth < 1:
        raise InputError("wavelets need a config with at least one refinement level")
    j = _level(cfg, args.level, 0, cfg.hierarchy.depth - 1)
    fams = cfg.select(args.family)
    x = np.linspace(0.0, 1.0, args.samples or cfg.sample_count)
    header, cols = ["x"], [x]
    for name, fam in fams.items():
        plan = TransformPlan(fam, cfg.hierarchy, cfg.vanishing_moments)
        W = plan.wavelets(j).evaluate(x)
        header += [f"{_label(name, fams)}psi_{k}" for k in range(W.shape[1])]
        cols += list(W.T)
    _emit(_csv(header, cols), args.out)
    return EXIT_OK


def cmd_refine(cfg, args):
    if cfg.hierarchy.depth < 1:
        raise InputError("refine needs a config with at least one refinement level")
    j = _level(cfg, args.level, 0, cfg.hierarchy.depth - 1)
    out = {}
    for name, fam in cfg.select(args.family).items():
        plan = TransformPlan(fam, cfg.hierarchy, cfg.vanishing_moments)
        lv = plan.levels[j]
        H, scheme, det = lv.H, lv.scheme, lv.details
        U = det.final_update.tocoo()
        out[name] = {
            "level": j,
            "H": H.to_dict(),
            "scheme": scheme.to_dict(),
            "final_update": [[int(a), int(b), float(v)] for a, b, v in zip(U.row, U.col, U.data)],
        }
    _emit(json.dumps(out, indent=1) + "\n", args.out)
    return EXIT_OK


def _target(args):
    if args.target is None:
        return function_from_descriptor({"kind": "cos", "freq": 1})
    try:
        desc = json.loads(args.target)
    except json.JSONDecodeError:
        path = Path(args.target)
        if not path.exists():
            raise InputError(f"--target is neither JSON nor a file: {args.target!r}") from None
        desc = json.loads(path.read_text())
    try:
        return function_from_descriptor(desc)
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from None


def cmd_project(cfg, args):
    j = _level(cfg, args.level, 0, cfg.hierarchy.depth)
    target = _target(args)
    fams = cfg.select(args.family)
    x = np.linspace(0.0, 1.0, args.samples or cfg.sample_count)
    header, cols = ["x"], [x]
    for name, fam in fams.items():
        _, err = project(build_basis(fam, cfg.hierarchy[j]), target, x)
        header.append(f"{_label(name, fams)}error")
        cols.append(err)
        print(f"{name}: max |error| = {np.max(np.abs(err)):.3e}", file=sys.stderr)
    _emit(_csv(header, cols), args.out)
    return EXIT_OK


def _single_family(cfg, args):
    fams = cfg.select(args.family)
    if len(fams) > 1:
        raise InputError(f"config has several families {sorted(fams)}; pick one with --family")
    return next(iter(fams.values()))


def _read_vector(path: str):
    """Numbers from a one-column CSV; a non-numeric first line is taken as a header."""
    try:
        lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    except OSError as exc:
        raise InputError(f"cannot read data file: {exc}") from None
    if lines:
        try:
            float(lines[0].split(",")[-1])
        except ValueError:
            lines = lines[1:]
    try:
        return np.array([float(ln.split(",")[-1]) for ln in lines])
    except ValueError as exc:
        raise InputError(f"data file holds a non-numeric entry: {exc}") from None


def cmd_forward(cfg, args):
    if args.data is None:
        raise InputError("forward needs --data")
    fam = _single_family(cfg, args)
    s = _read_vector(args.data)
    expected = cfg.finest_size
    if s.size != expected:
        raise InputError(
            f"data has {s.size} values; expected n_L + order - 2 = {cfg.hierarchy[-1].count} + {cfg.order} - 2 = {expected}"
        )
    pyr = forward(TransformPlan(fam, cfg.hierarchy, cfg.vanishing_moments), s)
    text = pyr.to_csv() if args.out and args.out.endswith(".csv") else pyr.to_json() + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_inverse(cfg, args):
    if args.data is None:
        raise InputError("inverse needs --data")
    fam = _single_family(cfg, args)
    try:
        text = Path(args.data).read_text()
        pyr = CoefficientPyramid.from_csv(text) if args.data.endswith(".csv") else CoefficientPyramid.from_json(text)
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"cannot read pyramid: {exc}") from None
    plan = TransformPlan(fam, cfg.hierarchy, cfg.vanishing_moments)
    if pyr.total_size != cfg.finest_size:
        raise InputError(f"pyramid holds {pyr.total_size} coefficients; expected n_L + order - 2 = {cfg.finest_size}")
    s = inverse(plan, pyr)
    _emit(_csv(["value"], [s]), args.out)
    return EXIT_OK


def cmd_check(cfg, args):
    if cfg.hierarchy.depth < 1:
        raise InputError("check needs a config with at least one refinement level")
    ok = True
    lines = []
    for name, fam in cfg.select(args.family).items():
        for res in run_checks(fam, cfg.hierarchy, cfg.vanishing_moments, prefix=f"[{name}] "):
            lines.append(res.line())
            ok &= res.passed
    lines.append("all checks passed" if ok else "some checks FAILED")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_CHECK


COMMANDS = {
    "basis": cmd_basis,
    "wavelets": cmd_wavelets,
    "refine": cmd_refine,
    "project": cmd_project,
    "forward": cmd_forward,
    "inverse": cmd_inverse,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bbw", description="Broken-basis wavelets on nonequispaced knots.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="config JSON path or bundled name (figure1, figure2)")
    ap.add_argument("--level", type=int, help="resolution level (0 = coarsest)")
    ap.add_argument("--data", help="input data file for forward/inverse")
    ap.add_argument("--out", help="output file (default: standard output)")
    ap.add_argument("--samples", type=int, help="number of sample points for curves")
    ap.add_argument("--target", help="target function descriptor (JSON text or file) for project")
    ap.add_argument("--family", help="restrict to one named family of the config")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.samples is not None and args.samples < 2:
        print("bbw: --samples must be at least 2", file=sys.stderr)
        return EXIT_INPUT
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except (InputError, ConfigError, ShapeError, SizeError, DomainError) as exc:
        print(f"bbw: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BBWError as exc:
        print(f"bbw: numerical failure: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except ValueError as exc:
        print(f"bbw: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
