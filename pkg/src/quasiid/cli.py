"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 negative verdict (not QID, failed
check, not DPCP), 3 undecided.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import analysis, cuppens, lattice
from .errors import QidError
from .lattice import DEFAULT_CIRCLE_TOL, DEFAULT_TRUNC_TOL, LatticeDistribution, Verdict
from .triplet import CharacteristicTriplet, validate_necessary

EXIT_OK, EXIT_INPUT, EXIT_NEGATIVE, EXIT_UNDECIDED = 0, 1, 2, 3
VERDICT_EXIT = {Verdict.QID: EXIT_OK, Verdict.NOT_QID: EXIT_NEGATIVE, Verdict.UNDECIDED: EXIT_UNDECIDED}


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _clean(obj):
    """Make a report JSON-safe: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _table(report: dict) -> str:
    """Fixed-width rendering: scalars as key/value rows, atoms one per row."""
    rows: list[str] = []

    def atoms(name, measure):
        rows.append(f"{name}:")
        rows.append(f"  {'location':>20}  {'weight':>20}")
        for atom in measure.get("atoms", []):
            rows.append(f"  {_fmt(float(atom[0])):>20}  {_fmt(float(atom[1])):>20}")

    def walk(prefix, node):
        for key, val in node.items():
            name = f"{prefix}{key}"
            if isinstance(val, dict) and "atoms" in val:
                atoms(name, val)
            elif isinstance(val, dict):
                walk(name + ".", val)
            elif isinstance(val, list) and val and all(isinstance(v, (int, float)) for v in val):
                rows.append(f"{name}:")
                rows.extend(f"  {i:>20}  {_fmt(v):>20}" for i, v in enumerate(val))
            else:
                rows.append(f"{name:<32}  {_fmt(val)}")

    walk("", report)
    return "\n".join(rows)


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load_dist(path: str) -> LatticeDistribution:
    try:
        return LatticeDistribution.from_dict(_read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid distribution in {path}: {exc}") from exc


def _load_triplet(path: str) -> CharacteristicTriplet:
    try:
        return CharacteristicTriplet.from_dict(_read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid triplet in {path}: {exc}") from exc


def _natural_key(path: Path):
    return [int(s) if s.isdigit() else s for s in re.split(r"(\d+)", path.name)]


# -- subcommands: each returns (report dict, exit code) ----------------------


def cmd_analyze(args):
    res = lattice.analyze(_load_dist(args.dist), args.method, args.trunc_tol, args.circle_tol)
    return res.to_dict(), VERDICT_EXIT[res.verdict]


def cmd_katti(args):
    return lattice.katti_extract(_load_dist(args.dist), args.max_n).to_dict(), EXIT_OK


def cmd_dpcp(args):
    res = lattice.dpcp_check(_load_dist(args.dist), trunc_tol=args.trunc_tol)
    code = EXIT_OK if res.is_dpcp else EXIT_NEGATIVE
    if res.result is not None and res.result.verdict is Verdict.UNDECIDED:
        code = EXIT_UNDECIDED
    return res.to_dict(), code


def cmd_moments(args):
    return analysis.moments(_load_triplet(args.triplet), args.alpha).to_dict(), EXIT_OK


def cmd_laplace(args):
    t = _load_triplet(args.triplet)
    values = np.atleast_1d(analysis.laplace_eval(t, args.u))
    return {"u": list(args.u), "laplace": values.tolist()}, EXIT_OK


def cmd_cuppens(args):
    t = cuppens.cuppens_series(_load_dist(args.dist), args.tail_tol)
    return t.to_dict(), EXIT_OK


def cmd_approximate(args):
    mu = _load_dist(args.dist)
    approx = lattice.qid_approximate(mu, args.h)
    res = lattice.analyze_finite(approx)
    return {"distribution": approx.to_dict(), "verdict": res.verdict.value,
            "l1_distance": mu.l1_distance(approx)}, EXIT_OK


def cmd_converge(args):
    folder = Path(args.directory)
    if not folder.is_dir():
        raise InputError(f"{folder} is not a directory")
    files = sorted(folder.glob("*.json"), key=_natural_key)
    if not files:
        raise InputError(f"no .json distributions in {folder}")
    results = [lattice.analyze(_load_dist(str(f))) for f in files]
    target = lattice.analyze(_load_dist(args.target))
    for res in results + [target]:
        if not res.is_qid:
            return {"verdict": res.verdict.value, "reason": res.reason}, VERDICT_EXIT[res.verdict]
    rep = analysis.convergence_diag(results, target, args.threshold).to_dict()
    rep["files"] = [f.name for f in files]
    return rep, EXIT_OK


def cmd_validate(args):
    rep = validate_necessary(_load_triplet(args.triplet))
    return rep.to_dict(), EXIT_OK if rep.passed else EXIT_NEGATIVE


def cmd_synth(args):
    return analysis.synthesize(_load_triplet(args.triplet), args.grid).to_dict(), EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "table"), default=argparse.SUPPRESS)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    parser = _Parser(prog="quasiid", description="Quasi-infinite divisibility of lattice distributions.")
    parser.add_argument("--format", choices=("json", "table"), default="json")
    parser.add_argument("--quiet", action="store_true", help="print nothing, only set the exit code")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text, first, first_help):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument(first, help=first_help)
        p.set_defaults(func=func)
        return p

    p = add("analyze", cmd_analyze, "decide QID and extract the triplet", "dist", "distribution JSON")
    p.add_argument("--method", choices=("root", "fft", "auto"), default="auto")
    p.add_argument("--trunc-tol", type=float, default=DEFAULT_TRUNC_TOL)
    p.add_argument("--circle-tol", type=float, default=DEFAULT_CIRCLE_TOL)

    p = add("katti", cmd_katti, "solve the Katti recursion", "dist", "distribution JSON")
    p.add_argument("--max-n", type=int, default=50)

    p = add("dpcp", cmd_dpcp, "test for a pseudo-compound Poisson law on N0", "dist", "distribution JSON")
    p.add_argument("--trunc-tol", type=float, default=DEFAULT_TRUNC_TOL)

    p = add("moments", cmd_moments, "mean, variance and exponential moment", "triplet", "triplet JSON")
    p.add_argument("--alpha", type=float, default=None)

    p = add("laplace", cmd_laplace, "Laplace transform from a triplet", "triplet", "triplet JSON")
    p.add_argument("--u", type=float, nargs="+", required=True)

    p = add("cuppens", cmd_cuppens, "series for a law with a dominant atom", "dist", "distribution JSON")
    p.add_argument("--tail-tol", type=float, default=cuppens.DEFAULT_TAIL_TOL)

    p = add("approximate", cmd_approximate, "nearby QID law by shifting roots", "dist", "distribution JSON")
    p.add_argument("--h", type=float, required=True)

    p = add("converge", cmd_converge, "convergence diagnostics for a sequence", "directory",
            "directory of distribution JSON files, taken in natural name order")
    p.add_argument("--target", required=True)
    p.add_argument("--threshold", type=float, default=0.25)

    add("validate-triplet", cmd_validate, "necessary inequalities for a triplet", "triplet", "triplet JSON")

    p = add("synth", cmd_synth, "sample exp(Psi) and recover lattice masses", "triplet", "triplet JSON")
    p.add_argument("--grid", type=int, default=1024)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        report, code = args.func(args)
    except InputError as exc:
        print(str(exc), file=stderr)
        return EXIT_INPUT
    except (QidError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INPUT
    if not args.quiet:
        report = _clean(report)
        text = json.dumps(report, indent=2) if args.format == "json" else _table(report)
        print(text, file=stdout)
    return code


def main() -> None:
    sys.exit(run())
