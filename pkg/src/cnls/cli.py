"""Command-line entry point: check / solve / solve-odd / branch / oracle / greens.

Configuration documents are INI-style text with one section per
coefficient field::

    [grid]            ; optional, defaults L=15, N=3001
    L = 15
    N = 3001

    [a]               ; required, likewise [d]
    kind = constant   ; or piecewise
    value = 1.0
    ; piecewise: breakpoints = -1, 1   values = 1, 2, 1

    [b]               ; optional coupling sections: [b] [c] [e] [f]
    kind = bump
    values = 0.5      ; one value per support interval, ';'-separated
    support = [-1, 1] ; intervals, ';'-separated

    [nonlinearity]
    kind = weakly-coupled   ; or spinor

    [solver]          ; optional, defaults below
    theta = 0.5
    tol = 1e-8
    max_iter = 200
    ladder = 8
    newton_fallback = true
    symmetry = none

Exit codes: 0 success, 1 hypothesis failure, 2 solver failure, 3 input
errors.  All numeric output is written in full double precision with
locale-independent formatting.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import replace as dc_replace
from pathlib import Path

import numpy as np

from . import continuation, hypotheses, oracle
from .errors import (
    CnlsError,
    DivisionDomain,
    EmptySupport,
    HypothesisFailure,
    IntegrationOverflow,
    InvalidCoefficient,
    InvalidGrid,
    NewtonDivergence,
    NoNontrivialSolution,
    ParameterOutOfRange,
    ParseError,
    SingularJacobian,
    SupportContainsOrigin,
    SymmetryViolation,
)
from .fixed_point import WavePair
from .greens import build_kernel, greens_eval
from .model import CoefficientField, Grid, Nonlinearity, Problem
from .solver import SolverConfig, solve_ground_state, solve_odd

_INPUT_ERRORS = (
    ParseError,
    InvalidCoefficient,
    InvalidGrid,
    EmptySupport,
    SymmetryViolation,
    SupportContainsOrigin,
    DivisionDomain,
    ParameterOutOfRange,
)
_SOLVER_ERRORS = (
    NoNontrivialSolution,
    NewtonDivergence,
    SingularJacobian,
    IntegrationOverflow,
)

_NL_ALIASES = {
    "weakly-coupled": "decoupled-cubic",
    "decoupled-cubic": "decoupled-cubic",
    "spinor": "spinor-cubic",
    "spinor-cubic": "spinor-cubic",
}

_SOLVER_DEFAULTS = SolverConfig()


def _fmt(value: float) -> str:
    return repr(float(value))


def _floats(text: str, sep: str = ",") -> list[float]:
    try:
        return [float(tok) for tok in text.split(sep) if tok.strip()]
    except ValueError as exc:
        raise ParseError(f"bad number list {text!r}") from exc


def _parse_intervals(text: str) -> list[tuple[float, float]]:
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip().strip("[]()")
        if not chunk:
            continue
        vals = _floats(chunk)
        if len(vals) != 2:
            raise ParseError(f"interval {chunk!r} needs exactly two endpoints")
        out.append((vals[0], vals[1]))
    return out


def _parse_field(cp: configparser.ConfigParser, name: str, role: str) -> CoefficientField:
    if not cp.has_section(name):
        if role == "potential":
            raise ParseError(f"missing required section [{name}]")
        return CoefficientField.zero()
    sec = cp[name]
    kind = sec.get("kind", "bump" if role == "coupling" else "constant").strip()
    try:
        if kind == "constant":
            return CoefficientField.constant(float(sec["value"]))
        if kind == "piecewise":
            return CoefficientField.piecewise(
                _floats(sec["breakpoints"]), _floats(sec["values"])
            )
        if kind == "bump":
            intervals = _parse_intervals(sec["support"])
            raw = sec.get("values", sec.get("value", ""))
            values = _floats(raw, sep=";") if ";" in raw else _floats(raw)
            if len(values) == 1 and len(intervals) > 1:
                values = values * len(intervals)
            if len(values) != len(intervals):
                raise ParseError(
                    f"section [{name}]: {len(values)} values for "
                    f"{len(intervals)} support intervals"
                )
            return CoefficientField.bumps(
                [(v, lo, hi) for v, (lo, hi) in zip(values, intervals)]
            )
    except KeyError as exc:
        raise ParseError(f"section [{name}] is missing key {exc}") from exc
    except ValueError as exc:
        raise ParseError(f"section [{name}]: {exc}") from exc
    raise ParseError(f"section [{name}]: unknown kind {kind!r}")


def parse_config(text: str) -> tuple[Problem, SolverConfig]:
    """Problem and solver settings from a configuration document."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError(str(exc)) from exc

    if cp.has_section("grid"):
        try:
            L = float(cp["grid"].get("L", "15"))
            n = int(cp["grid"].get("N", "3001"))
        except ValueError as exc:
            raise ParseError(f"section [grid]: {exc}") from exc
    else:
        L, n = 15.0, 3001
    grid = Grid(L=L, n=n)

    if not cp.has_section("nonlinearity"):
        raise ParseError("missing required section [nonlinearity]")
    nl_kind = cp["nonlinearity"].get("kind", "").strip()
    if nl_kind not in _NL_ALIASES:
        raise ParseError(f"unknown nonlinearity kind {nl_kind!r}")
    nl = Nonlinearity.from_kind(_NL_ALIASES[nl_kind])

    problem = Problem(
        a=_parse_field(cp, "a", "potential"),
        b=_parse_field(cp, "b", "coupling"),
        c=_parse_field(cp, "c", "coupling"),
        d=_parse_field(cp, "d", "potential"),
        e=_parse_field(cp, "e", "coupling"),
        f=_parse_field(cp, "f", "coupling"),
        nonlinearity=nl,
        grid=grid,
    )

    kwargs = {}
    if cp.has_section("solver"):
        sec = cp["solver"]
        try:
            if "theta" in sec:
                kwargs["theta"] = float(sec["theta"])
            if "tol" in sec:
                kwargs["tol"] = float(sec["tol"])
            if "max_iter" in sec:
                kwargs["max_iter"] = int(sec["max_iter"])
            if "ladder" in sec:
                kwargs["ladder"] = int(sec["ladder"])
            if "newton_fallback" in sec:
                kwargs["newton_fallback"] = sec.getboolean("newton_fallback")
            if "symmetry" in sec:
                kwargs["symmetry"] = sec["symmetry"].strip()
            if "tail_tolerance" in sec:
                kwargs["tail_tolerance"] = float(sec["tail_tolerance"])
        except ValueError as exc:
            raise ParseError(f"section [solver]: {exc}") from exc
    try:
        cfg = SolverConfig(**kwargs)
    except ValueError as exc:
        raise ParseError(f"section [solver]: {exc}") from exc
    return problem, cfg


def _field_to_lines(name: str, fld: CoefficientField) -> list[str]:
    if fld.kind == "constant":
        if fld.values[0] == 0.0:
            return []
        return [f"[{name}]", "kind = constant", f"value = {_fmt(fld.values[0])}", ""]
    if fld.kind == "piecewise":
        return [
            f"[{name}]",
            "kind = piecewise",
            "breakpoints = " + ", ".join(_fmt(t) for t in fld.breakpoints),
            "values = " + ", ".join(_fmt(v) for v in fld.values),
            "",
        ]
    return [
        f"[{name}]",
        "kind = bump",
        "values = " + "; ".join(_fmt(v) for v in fld.values),
        "support = "
        + "; ".join(f"[{_fmt(lo)}, {_fmt(hi)}]" for lo, hi in fld.intervals),
        "",
    ]


def problem_to_config(
    problem: Problem, cfg: SolverConfig | None = None
) -> str:
    """Serialize a problem (and optional solver settings) as config text.

    Floats are written in full precision, so parsing the output
    reproduces the problem field by field.
    """
    lines = [
        "[grid]",
        f"L = {_fmt(problem.grid.L)}",
        f"N = {problem.grid.n}",
        "",
    ]
    for name in ("a", "b", "c", "d", "e", "f"):
        lines.extend(_field_to_lines(name, getattr(problem, name)))
    lines.extend(
        ["[nonlinearity]", f"kind = {problem.nonlinearity.kind}", ""]
    )
    if cfg is not None:
        lines.extend(
            [
                "[solver]",
                f"theta = {_fmt(cfg.theta)}",
                f"tol = {_fmt(cfg.tol)}",
                f"max_iter = {cfg.max_iter}",
                f"ladder = {cfg.ladder}",
                f"newton_fallback = {str(cfg.newton_fallback).lower()}",
                f"symmetry = {cfg.symmetry}",
                "",
            ]
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _write_profile(path: str, wave: WavePair) -> None:
    rows = ["x,u1,u2"]
    for x, u1, u2 in zip(wave.x, wave.u1, wave.u2):
        rows.append(f"{_fmt(x)},{_fmt(u1)},{_fmt(u2)}")
    Path(path).write_text("\n".join(rows) + "\n")


def _write_report(path: str | None, lines: list[str]) -> None:
    if path is not None:
        Path(path).write_text("\n".join(lines) + "\n")


def _solution_lines(sol) -> list[str]:
    lines = [
        f"solution.norm={_fmt(sol.norm)}",
        f"solution.update_norm={_fmt(sol.update_norm)}",
        f"solution.residual_sup={_fmt(sol.residual_sup)}",
        f"solution.cone_gap_1={_fmt(sol.cone_gaps[0])}",
        f"solution.cone_gap_2={_fmt(sol.cone_gaps[1])}",
        f"solution.iterations={sol.iterations}",
        f"solution.newton_iterations={sol.newton_iterations}",
        f"solution.method={sol.method}",
        f"solution.clip_magnitude={_fmt(sol.clip_magnitude)}",
        f"solution.annulus_inner={_fmt(sol.inner)}",
        f"solution.annulus_outer={_fmt(sol.outer)}",
    ]
    if sol.report is not None:
        lines.extend(sol.report.lines())
    return lines


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _load(args) -> tuple[Problem, SolverConfig]:
    text = Path(args.config).read_text()
    problem, cfg = parse_config(text)
    if args.grid_N is not None or args.grid_L is not None:
        grid = Grid(
            L=args.grid_L if args.grid_L is not None else problem.grid.L,
            n=args.grid_N if args.grid_N is not None else problem.grid.n,
        )
        problem = dc_replace(problem, grid=grid)
    return problem, cfg


_CHECK_REQUIRED = ("i", "ii", "iii", "iv", "v", "vi", "annulus")


def _cmd_check(args) -> int:
    problem, _ = _load(args)
    report = hypotheses.full_report(problem)
    lines = report.lines()
    for line in lines:
        print(line)
    _write_report(args.report, lines)
    ok = all(
        report.entries[n].status == "pass"
        for n in _CHECK_REQUIRED
        if n in report.entries
    ) and all(n in report.entries for n in ("i", "ii", "iii", "vi"))
    return 0 if ok else 1


def _cmd_solve(args, odd: bool) -> int:
    problem, cfg = _load(args)
    solve = solve_odd if odd else solve_ground_state
    sol = solve(problem, cfg, override_hypotheses=args.override_hypotheses)
    lines = _solution_lines(sol)
    for line in lines:
        print(line)
    if args.out:
        _write_profile(args.out, sol.wave)
    _write_report(args.report, lines)
    return 0


def _cmd_oracle(args) -> int:
    problem, cfg = _load(args)
    if not args.override_hypotheses:
        report = hypotheses.full_report(problem)
        bad = [
            n
            for n in ("i", "ii", "iii", "vi")
            if report.entries[n].status != "pass"
        ]
        if bad:
            raise HypothesisFailure(f"hypotheses failed: {', '.join(bad)}")
    from .model import support_pieces
    from .solver import _indicator, _ladder

    pieces = support_pieces(problem)
    if not pieces:
        raise NoNontrivialSolution("all couplings vanish")
    k1 = build_kernel(problem.a, problem.grid)
    k2 = build_kernel(problem.d, problem.grid)
    window = (pieces[0][0], pieces[-1][1])
    from .greens import cone_constants

    cone = cone_constants(k1.basis, k2.basis, window)
    gc = hypotheses.growth_constants(problem.nonlinearity, cone)
    radii = hypotheses.annulus_radii(problem, (k1, k2), gc, window)
    ones = np.ones(len(k1.x))
    ind = _indicator(pieces)
    w1 = k1.apply(ones, weight=ind)
    w2 = k2.apply(ones, weight=ind)
    w1 /= np.max(w1)
    w2 /= np.max(w2)
    for s in _ladder(radii.inner, radii.outer, cfg.ladder):
        seed = WavePair(problem.grid.x, s * w1, s * w2)
        try:
            wave, iters = oracle.oracle_solve(problem, init=seed, details=True)
        except (NewtonDivergence, SingularJacobian):
            continue
        if wave.norm >= 0.5 * radii.inner:
            lines = [
                f"oracle.norm={_fmt(wave.norm)}",
                f"oracle.newton_iterations={iters}",
                f"oracle.seed_norm={_fmt(s)}",
            ]
            for line in lines:
                print(line)
            if args.out:
                _write_profile(args.out, wave)
            _write_report(args.report, lines)
            return 0
    raise NoNontrivialSolution("every oracle seed collapsed to zero")


_VARIANTS = {
    "nonlinear": "nonlinear-scaled",
    "nonlinear-scaled": "nonlinear-scaled",
    "full": "fully-scaled",
    "fully-scaled": "fully-scaled",
}


def _cmd_branch(args) -> int:
    problem, cfg = _load(args)
    if args.variant not in _VARIANTS:
        raise ParseError(f"unknown variant {args.variant!r}")
    lams = _floats(args.lambdas)
    if not lams:
        raise ParseError("empty parameter list")
    points = continuation.trace_branch(
        problem, lams, _VARIANTS[args.variant], cfg
    )
    rows = ["lambda,norm,r_lambda,R_lambda,converged"]
    for pt in points:
        rows.append(
            f"{_fmt(pt.lam)},{_fmt(pt.norm)},{_fmt(pt.inner)},"
            f"{_fmt(pt.outer)},{str(pt.converged).lower()}"
        )
    text = "\n".join(rows)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
        base = args.out[:-4] if args.out.endswith(".csv") else args.out
        for idx, pt in enumerate(points):
            if pt.wave is not None:
                _write_profile(f"{base}_point{idx:03d}.csv", pt.wave)
    return 0 if all(pt.converged for pt in points) else 2


def _cmd_greens(args) -> int:
    problem, _ = _load(args)
    field = problem.a if args.component == 1 else problem.d
    kernel = build_kernel(field, problem.grid)
    x = problem.grid.x
    stride = args.stride or max(1, (problem.grid.n - 1) // 100)
    sample = x[::stride]
    rows = ["x,s,G"]
    for xv in sample:
        gv = greens_eval(kernel, np.full(sample.shape, xv), sample)
        for sv, g in zip(sample, gv):
            rows.append(f"{_fmt(xv)},{_fmt(sv)},{_fmt(g)}")
    text = "\n".join(rows)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cnls",
        description=(
            "Solitary-wave solver for two linearly coupled stationary "
            "NLS equations with spatially varying coefficients"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, hyp=False):
        sp.add_argument("config", help="configuration document path")
        sp.add_argument("--grid-N", type=int, default=None)
        sp.add_argument("--grid-L", type=float, default=None)
        sp.add_argument("--report", default=None, help="key=value report path")
        sp.add_argument("--out", default=None, help="output CSV path")
        if hyp:
            sp.add_argument(
                "--override-hypotheses", action="store_true", default=False
            )

    common(sub.add_parser("check", help="verify existence hypotheses"))
    common(sub.add_parser("solve", help="positive wave"), hyp=True)
    common(sub.add_parser("solve-odd", help="odd wave"), hyp=True)
    br = sub.add_parser("branch", help="trace a parameter branch")
    common(br, hyp=True)
    br.add_argument("--lambdas", required=True, help="comma-separated list")
    br.add_argument("--variant", default="nonlinear")
    orc = sub.add_parser("oracle", help="independent banded-Newton solve")
    common(orc, hyp=True)
    gr = sub.add_parser("greens", help="dump kernel samples as CSV")
    common(gr)
    gr.add_argument("--stride", type=int, default=None)
    gr.add_argument("--component", type=int, choices=(1, 2), default=1)
    return parser


def run(argv) -> int:
    """Dispatch a command line; returns the exit status."""
    try:
        args = _parser().parse_args(list(argv))
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 3
    try:
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "solve":
            return _cmd_solve(args, odd=False)
        if args.command == "solve-odd":
            return _cmd_solve(args, odd=True)
        if args.command == "branch":
            return _cmd_branch(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "greens":
            return _cmd_greens(args)
        raise ParseError(f"unknown command {args.command!r}")
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except HypothesisFailure as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return 1
    except _SOLVER_ERRORS as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))
