"""Command-line front end.

Exit codes: 0 pass/feasible, 1 fail/infeasible, 2 input or resource error.
Every report carries the arithmetic mode and tolerance it was produced with.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import io
from .lhv import DEFAULT_CAP, ResourceError, lhv_check_from_correlations, lhv_feasibility
from .locality import check_epr_local, check_nonsignaling, make_pr_box
from .quantum import (
    DensityOperator,
    MeasurementSetup,
    born_behavior,
    isotropic_state,
    noisy_state,
    qubit_spin_povm,
    source_operator,
    source_positivity_bound,
    verify_source_operator,
    visibility_threshold,
)
from .scenario import DEFAULT_EPS, EXACT, FLOAT, validate_behavior

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class InputError(Exception):
    pass


def _default_epsilon() -> float:
    raw = os.environ.get("CORRLAB_EPSILON")
    if raw is None:
        return DEFAULT_EPS
    try:
        value = float(raw)
    except ValueError:
        raise InputError(f"CORRLAB_EPSILON={raw!r} is not a number") from None
    if not value > 0:
        raise InputError("CORRLAB_EPSILON must be positive")
    return value


def _read_json(path: str | None):
    try:
        if path is None or path == "-":
            text = sys.stdin.read()
            where = "<stdin>"
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
            where = path
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{where}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _num(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    return v


def _render_text(obj, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    items = obj.items() if isinstance(obj, dict) else (("-", v) for v in obj)
    for k, v in items:
        label = k if k == "-" else f"{k}:"
        if isinstance(v, (dict, list)) and v:
            lines.append(pad + label)
            lines.extend(_render_text(v, indent + 1))
        else:
            lines.append(f"{pad}{label} {v}")
    return lines


def _emit(report: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(report, indent=2))
    else:
        print("\n".join(_render_text(report)))


def _cmd_validate(args) -> int:
    b = io.behavior_from_json(_read_json(args.file), args.mode, args.epsilon)
    issues = validate_behavior(b)
    report = {
        "verdict": "pass" if not issues else "fail",
        "issues": [{"kind": i.kind, "setting": list(i.setting) if i.setting is not None else None,
                    "detail": i.detail, "magnitude": _num(i.magnitude)} for i in issues],
        "mode": b.mode, "epsilon": b.eps,
    }
    _emit(report, args.format)
    return EXIT_PASS if not issues else EXIT_FAIL


def _cmd_nonsignaling(args) -> int:
    b = io.behavior_from_json(_read_json(args.file), args.mode, args.epsilon)
    rep = check_nonsignaling(b)
    report = rep.to_dict() | {"mode": b.mode, "epsilon": b.eps}
    _emit(report, args.format)
    return EXIT_PASS if rep.ok else EXIT_FAIL


def _cmd_epr_local(args) -> int:
    c = io.collection_from_json(_read_json(args.file), args.mode, args.epsilon)
    rep = check_epr_local(c)
    report = rep.to_dict() | {
        "contexts": {label: ("pass" if r.ok else "fail") for label, r in zip(c.context_labels, rep.details)},
        "mode": c.experiments[0].mode, "epsilon": max(e.eps for e in c.experiments),
    }
    _emit(report, args.format)
    return EXIT_PASS if rep.ok else EXIT_FAIL


def _lhv_report(res, mode: str, eps: float) -> dict:
    report = {"verdict": res.status, "mode": mode, "epsilon": eps}
    if res.model is not None:
        report["model"] = io.model_to_json(res.model)
    if res.certificate is not None:
        report["certificate"] = res.certificate.to_dict()
        if res.certificate.scenario.is_dichotomic:
            const, coeffs = res.certificate.correlator_form()
            report["certificate"]["correlator_form"] = {
                "constant": _num(const),
                "coefficients": {f"{','.join(map(str, s))}|{','.join(map(str, t))}": _num(v)
                                 for (s, t), v in coeffs.items() if v != 0},
            }
    if res.issues:
        report["issues"] = [{"kind": i.kind, "detail": i.detail} for i in res.issues]
    if res.phase1 is not None:
        report["phase1_objective"] = _num(res.phase1)
    return report


def _cmd_lhv_check(args) -> int:
    b = io.behavior_from_json(_read_json(args.file), args.mode, args.epsilon)
    res = lhv_feasibility(b, cap=args.cap)
    _emit(_lhv_report(res, b.mode, b.eps), args.format)
    return EXIT_PASS if res.feasible else EXIT_FAIL


def _cmd_lhv_from_correlations(args) -> int:
    c = io.correlations_from_json(_read_json(args.file), args.mode, args.epsilon)
    res = lhv_check_from_correlations(c, cap=args.cap)
    _emit(_lhv_report(res, c.mode, c.eps), args.format)
    return EXIT_PASS if res.feasible else EXIT_FAIL


def _cmd_quantum_behavior(args) -> int:
    rho = io.state_from_json(_read_json(args.state))
    setup = io.setup_from_json(_read_json(args.setup))
    b = born_behavior(rho, setup)
    doc = io.behavior_to_json(b)
    _emit(doc, "json" if args.format == "json" else "text")
    return EXIT_PASS


def _cmd_threshold(args) -> int:
    rho = io.state_from_json(_read_json(args.file))
    if len(rho.dims) != 2:
        raise InputError("threshold needs a bipartite state")
    report = {
        "threshold": visibility_threshold(rho, args.s1, args.s2),
        "right_bound": source_positivity_bound(rho, args.s1, args.s2, "right"),
        "left_bound": source_positivity_bound(rho, args.s1, args.s2, "left"),
        "s1": args.s1, "s2": args.s2, "mode": FLOAT, "epsilon": args.epsilon,
    }
    _emit(report, args.format)
    return EXIT_PASS


def _cmd_source_op(args) -> int:
    rho = io.state_from_json(_read_json(args.file))
    if len(rho.dims) != 2:
        raise InputError("source-op needs a bipartite state")
    copies = args.copies
    if args.gamma is None:
        s1, s2 = (1, copies) if args.direction == "right" else (copies, 1)
        gamma = source_positivity_bound(rho, s1, s2, args.direction)
    else:
        gamma = args.gamma
    src = source_operator(rho, gamma, args.direction, copies)
    rep = verify_source_operator(src, noisy_state(rho, gamma), tol=args.epsilon)
    report = rep.to_dict() | {"direction": args.direction, "copies": copies, "gamma": gamma,
                              "dimension": src.matrix.shape[0], "mode": FLOAT, "epsilon": args.epsilon}
    _emit(report, args.format)
    return EXIT_PASS if rep.ok else EXIT_FAIL


def chsh_setup() -> MeasurementSetup:
    """Spin directions maximizing the CHSH violation of the singlet."""
    r = 1 / np.sqrt(2)
    return MeasurementSetup({
        (0, 0): qubit_spin_povm([0, 0, 1]),
        (0, 1): qubit_spin_povm([1, 0, 0]),
        (1, 0): qubit_spin_povm([r, 0, r]),
        (1, 1): qubit_spin_povm([-r, 0, r]),
    })


def singlet() -> DensityOperator:
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    return DensityOperator((2, 2), np.outer(psi, psi))


def _cmd_demo(args) -> int:
    if args.name == "pr-box":
        doc = io.behavior_to_json(make_pr_box())
    elif args.name == "chsh-singlet":
        if args.part == "state":
            doc = io.state_to_json(singlet())
        elif args.part == "setup":
            doc = io.setup_to_json(chsh_setup())
        else:
            doc = io.behavior_to_json(born_behavior(singlet(), chsh_setup()))
    else:
        doc = io.state_to_json(isotropic_state(args.d, args.gamma))
    print(json.dumps(doc, indent=2))
    return EXIT_PASS


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser(default_eps: float) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--epsilon", type=_positive_float, default=default_eps,
                        help="float-mode tolerance (default 1e-9, or CORRLAB_EPSILON)")
    common.add_argument("--cap", type=_positive_int, default=DEFAULT_CAP,
                        help="maximum number of deterministic strategies")
    common.add_argument("--mode", choices=(EXACT, FLOAT), default=None,
                        help="arithmetic mode; defaults to the document's own")

    parser = argparse.ArgumentParser(prog="corrlab", description="Local hidden variable analysis of correlations.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, file_arg=True):
        p = sub.add_parser(name, parents=[common], help=help_text)
        if file_arg:
            p.add_argument("file", nargs="?", default=None, help="JSON input (stdin if omitted)")
        p.set_defaults(func=func)
        return p

    add("validate", _cmd_validate, "check a behavior document")
    add("nonsignaling", _cmd_nonsignaling, "check the nonsignaling conditions")
    add("epr-local", _cmd_epr_local, "check EPR locality of a multi-context collection")
    add("lhv-check", _cmd_lhv_check, "decide LHV feasibility; emit a model or a Bell certificate")
    add("lhv-from-correlations", _cmd_lhv_from_correlations, "LHV decision from +-1 means")
    p = add("quantum-behavior", _cmd_quantum_behavior, "Born-rule behavior of a state and setup", file_arg=False)
    p.add_argument("state", help="state JSON ('-' for stdin)")
    p.add_argument("setup", help="setup JSON")
    p = add("threshold", _cmd_threshold, "visibility threshold of the noisy state")
    p.add_argument("--s1", type=_positive_int, required=True)
    p.add_argument("--s2", type=_positive_int, required=True)
    p = add("source-op", _cmd_source_op, "build and verify a source operator")
    p.add_argument("--gamma", type=float, default=None, help="mixing weight (default: positivity bound)")
    p.add_argument("--copies", type=_positive_int, default=2)
    p.add_argument("--direction", choices=("right", "left"), default="right")
    p = add("demo", _cmd_demo, "emit a ready-made input", file_arg=False)
    p.add_argument("name", choices=("pr-box", "chsh-singlet", "isotropic"))
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--part", choices=("behavior", "state", "setup"), default="behavior",
                   help="for chsh-singlet: which document to emit")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    try:
        default_eps = _default_epsilon()
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    parser = build_parser(default_eps)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_PASS
    try:
        return args.func(args)
    except (InputError, io.SchemaError, ResourceError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
