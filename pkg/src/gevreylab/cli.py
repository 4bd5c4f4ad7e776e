"""Command-line entry point: ``gevreylab <command> [options]``.

Exit codes: 0 success, 1 a check failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from ._arith import EXACT, FLOAT, default_bits, rational
from .analysis import (
    check_combinatorial_lemmas,
    check_lower_bound,
    check_norm_properties,
    estimate_gevrey,
)
from .eqdsl import DslError, parse
from .equation import EquationSpec, SpecError, errors, load, spec_hash, validate
from .polygon import MalformedSpecError, build, format_sigma, hull_csv
from .solver import SolveError, SolveRequest, build_counterexample, check_majorant, solve

# specs used by ``verify`` when no input is given
BUILTIN = {
    "heat": "init 0 = geom\nDt u - Dx^2 u = 0\n",
    "burgers": "init 0 = geom\nDt u - Dx^2 u - 2*u*Dx u = 0\n",
}

DEFAULT_DEGREE = {"solve": 0, "estimate": 0, "counterexample": 0, "verify": 8}
DEFAULT_ORDER = {"solve": 20, "estimate": 40, "counterexample": 40, "verify": 20}


class InputError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return rational(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _window(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"window must look like lo:hi, got {text!r}") from exc
    return lo, hi


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gevreylab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("polygon", "print sigma_c, the set S and the Newton polygon as CSV"),
        ("solve", "compute u_0 .. u_J and write them as JSON"),
        ("estimate", "solve and estimate the Gevrey order from the coefficients"),
        ("verify", "run the norm, majorant and lemma checks"),
        ("counterexample", "build the sharpness counterexample and check its lower bound"),
    ]:
        c = sub.add_parser(name, help=help_text)
        src = c.add_mutually_exclusive_group(required=name != "verify")
        src.add_argument("--dsl", type=Path, help="equation in the text format")
        src.add_argument("--json", type=Path, help="equation as JSON")
        c.add_argument("--out", type=Path, help="write the JSON report (or CSV for polygon) here")
        if name == "polygon":
            continue
        c.add_argument("--order", "-J", type=int, default=DEFAULT_ORDER[name], help="highest t-index J")
        c.add_argument("--degree", "-D", type=int, default=DEFAULT_DEGREE[name], help="output x-degree")
        c.add_argument("--mode", choices=[EXACT, FLOAT], help="arithmetic (default: exact when possible)")
        c.add_argument("--bits", type=int, default=None, help="mpmath precision for float mode")
        c.add_argument("--seed", type=int, default=0)
        if name in ("estimate", "counterexample"):
            c.add_argument("--rho", type=_fraction, default=Fraction(1, 2))
            c.add_argument("--window", type=_window, default=None, help="lo:hi (default J/2:J)")
        if name == "verify":
            c.add_argument("--radius", type=_fraction, default=Fraction(1, 2))
            c.add_argument("--trials", type=int, default=200)
            c.add_argument(
                "--s-override",
                type=_fraction,
                default=None,
                help="replace every moment order in the norm checks (s < 1 should fail)",
            )
    return p


def _load(args) -> EquationSpec:
    path = args.dsl or args.json
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        if args.dsl is not None:
            spec = parse(data.decode("utf-8"))
        else:
            spec = load(data)
    except DslError as exc:
        raise InputError(f"{path}:{exc}") from exc
    except (SpecError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    diags = validate(spec)
    for d in diags:
        if d.level != "error":
            print(f"{path}: {d}", file=sys.stderr)
    bad = errors(diags)
    if bad:
        raise InputError("\n".join(f"{path}: {d}" for d in bad))
    return spec


def _mode(args, spec: EquationSpec) -> str:
    if args.mode:
        return args.mode
    return EXACT if all(m.exact for m in spec.moments) else FLOAT


def _bits(args) -> int:
    return args.bits if args.bits is not None else default_bits()


def _emit(args, doc: dict):
    if args.out is not None:
        args.out.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def _check_order(args, spec: EquationSpec):
    if args.order < spec.kappa:
        raise InputError(f"--order {args.order} must be >= kappa = {spec.kappa}")
    if args.degree < 0:
        raise InputError("--degree must be >= 0")


def cmd_polygon(args) -> int:
    spec = _load(args)
    poly = build(spec)
    csv_text = hull_csv(poly)
    print(f"sigma_c = {format_sigma(poly.sigma_c)} ({float(poly.sigma_c):.6f})")
    print(f"S = {{{', '.join(str(t) for t in poly.S)}}}")
    print(f"kstar = {'none' if poly.kstar is None else poly.kstar}")
    print(f"spec_hash = {spec_hash(spec)}")
    if args.out is not None:
        args.out.write_text(csv_text)
    else:
        sys.stdout.write(csv_text)
    return 0


def cmd_solve(args) -> int:
    spec = _load(args)
    _check_order(args, spec)
    sol = solve(SolveRequest(spec, args.order, args.degree, _mode(args, spec), _bits(args)))
    doc = sol.to_json()
    doc["seed"] = args.seed
    doc["J"] = args.order
    doc["D_out"] = args.degree
    nonzero = sum(1 for j in range(args.order + 1) if sol.u[j])
    print(f"solved J = {args.order}, D = {args.degree}, mode = {sol.mode}: {nonzero} nonzero entries")
    print(f"spec_hash = {sol.spec_hash}")
    if args.out is not None:
        _emit(args, doc)
    else:
        print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def cmd_estimate(args) -> int:
    spec = _load(args)
    _check_order(args, spec)
    sigma_c = build(spec).sigma_c
    sol = solve(SolveRequest(spec, args.order, args.degree, _mode(args, spec), _bits(args)))
    try:
        est = estimate_gevrey(sol.u, args.rho, args.window)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    note = " (degenerate: series terminates in the window)" if est.degenerate else ""
    print(f"sigma_hat = {est.sigma_hat:.4f}  sigma_c = {format_sigma(sigma_c)}{note}")
    print(f"window = {est.window[0]}:{est.window[1]}  residual = {est.residual:.3g}")
    _emit(
        args,
        {
            "command": "estimate",
            "seed": args.seed,
            "spec_hash": sol.spec_hash,
            "J": args.order,
            "D_out": args.degree,
            "sigma_c": format_sigma(sigma_c),
            "estimate": est.to_json(),
        },
    )
    return 0


def cmd_counterexample(args) -> int:
    template = _load(args)
    _check_order(args, template)
    poly = build(template)
    try:
        ce = build_counterexample(template, args.order, args.degree, _mode(args, template))
    except SolveError as exc:
        raise InputError(str(exc)) from exc
    est = estimate_gevrey(ce.solution.u, args.rho, args.window)
    lb = check_lower_bound(ce, poly)
    print(f"sigma_hat = {est.sigma_hat:.4f}  sigma_c = {format_sigma(poly.sigma_c)}")
    print(f"kstar = {ce.kstar}  indices n_j = {ce.indices[:4]}...  log K = {lb.log_K:.4f}")
    for t in lb.tested:
        state = "violated" if t["violated"] else "NOT violated"
        print(f"sigma' = {t['sigma_prime']}: envelope {state} (first j = {t['first_j']})")
    print(f"lower bound {'PASS' if lb.ok else 'FAIL'}")
    _emit(
        args,
        {
            "command": "counterexample",
            "seed": args.seed,
            "spec_hash": spec_hash(ce.spec),
            "template_hash": spec_hash(template),
            "J": args.order,
            "estimate": est.to_json(),
            "lower_bound": lb.to_json(),
        },
    )
    return 0 if lb.ok else 1


def cmd_verify(args) -> int:
    report = {"command": "verify", "seed": args.seed}
    ok = True
    norms = check_norm_properties(seed=args.seed, trials=args.trials, s_override=args.s_override)
    report["norms"] = norms.to_json()
    for c in norms.checks:
        print(f"norm {c.name}: {'PASS' if c.ok else 'FAIL'} ({c.trials} trials, {len(c.failures)} failures)")
    ok &= norms.ok

    if args.dsl or args.json:
        specs = {str(args.dsl or args.json): _load(args)}
    else:
        specs = {name: parse(text) for name, text in BUILTIN.items()}
    report["majorant"] = {}
    for name, spec in specs.items():
        _check_order(args, spec)
        errs = errors(validate(spec, nagumo=True))
        if errs:
            raise InputError("; ".join(str(d) for d in errs))
        sigma = build(spec).sigma_c
        ms = check_majorant(spec, sigma, args.radius, args.order, args.degree)
        doc = ms.to_json()
        doc["spec_hash"] = spec_hash(spec)
        report["majorant"][name] = doc
        print(f"majorant {name}: {'PASS' if ms.ok else 'FAIL'} (sigma = {format_sigma(sigma)}, J = {args.order})")
        ok &= ms.ok

    lemmas = check_combinatorial_lemmas()
    report["lemmas"] = [c.to_json() for c in lemmas]
    for c in lemmas:
        print(f"lemma {c.name}: {'PASS' if c.ok else 'FAIL'} ({c.trials} cases)")
        ok &= c.ok
    report["ok"] = ok
    _emit(args, report)
    print("all checks passed" if ok else "some checks FAILED")
    return 0 if ok else 1


COMMANDS = {
    "polygon": cmd_polygon,
    "solve": cmd_solve,
    "estimate": cmd_estimate,
    "verify": cmd_verify,
    "counterexample": cmd_counterexample,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, MalformedSpecError, SolveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
