"""Parameter branches for the two scaled families.

``nonlinear-scaled`` multiplies only the cubic weights by the parameter;
those solutions obey an exact scaling map (dividing a solution by the
square root of the parameter ratio transports it between parameter
values), so branch points can be seeded exactly and their norms follow
the inverse square-root law.  ``fully-scaled`` multiplies the whole
coupling side, has no exact scaling, and is continued naturally from
the previous converged point; its parameter is confined below the
reciprocal of the linear smallness witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from . import hypotheses, oracle
from .errors import (
    CnlsError,
    NewtonDivergence,
    NoNontrivialSolution,
    ParameterOutOfRange,
    SingularJacobian,
)
from .fixed_point import WavePair, residual
from .model import Problem
from .solver import SolverConfig, solve_ground_state, solve_odd

VARIANTS = ("nonlinear-scaled", "fully-scaled")


@dataclass(eq=False)
class BranchPoint:
    """One converged (or failed) branch sample."""

    lam: float
    wave: WavePair | None
    inner: float
    outer: float
    norm: float
    converged: bool
    note: str = ""


def scaling_seed(u: WavePair, lam: float) -> WavePair:
    """Exact transport of a reference solution to parameter ``lam``.

    For the nonlinear-scaled family, dividing by sqrt(lam) maps a
    solution at parameter 1 to a solution at parameter ``lam``: the
    linear terms scale linearly while the cubic term picks up exactly
    the parameter factor.
    """
    if lam <= 0:
        raise ParameterOutOfRange("scaling parameter must be positive")
    s = 1.0 / math.sqrt(lam)
    return WavePair(u.x, s * u.u1, s * u.u2)


def scaled_problem(p: Problem, lam: float, variant: str) -> Problem:
    """Problem with the coupling side scaled for the given family."""
    if variant == "nonlinear-scaled":
        return dc_replace(p, c=p.c.scaled(lam), f=p.f.scaled(lam))
    if variant == "fully-scaled":
        return dc_replace(
            p,
            b=p.b.scaled(lam),
            c=p.c.scaled(lam),
            e=p.e.scaled(lam),
            f=p.f.scaled(lam),
        )
    raise ValueError(f"unknown branch variant {variant!r}")


def trace_branch(
    p: Problem,
    lambdas,
    variant: str,
    cfg: SolverConfig | None = None,
) -> list[BranchPoint]:
    """Solve along a parameter list, seeding each point from the last.

    Points are returned in input order.  A failed point is recorded with
    ``converged=False`` and the branch continues; an inadmissible
    parameter for the fully-scaled family raises before any solve.
    """
    cfg = cfg or SolverConfig()
    lams = [float(v) for v in lambdas]
    if not lams:
        return []
    if any(v <= 0 for v in lams):
        raise ParameterOutOfRange("branch parameters must be positive")
    if variant not in VARIANTS:
        raise ValueError(f"unknown branch variant {variant!r}")
    bounds = {lam: hypotheses.branch_bounds(p, lam, variant) for lam in lams}

    odd = cfg.symmetry == "odd"
    points: list[BranchPoint] = []
    prev: tuple[float, WavePair] | None = None
    for lam in lams:
        plam = scaled_problem(p, lam, variant)
        bb = bounds[lam]
        wave = None
        note = ""
        if prev is not None:
            lam0, wave0 = prev
            if variant == "nonlinear-scaled":
                seed = scaling_seed(wave0, lam / lam0)
            else:
                seed = wave0
            wave = _polish(plam, seed, odd, bb.inner)
            if wave is None:
                note = "seeded solve failed; retrying from scratch"
        if wave is None:
            try:
                solve = solve_odd if odd else solve_ground_state
                wave = solve(plam, cfg).wave
            except CnlsError as exc:
                points.append(
                    BranchPoint(
                        lam=lam,
                        wave=None,
                        inner=bb.inner,
                        outer=bb.outer,
                        norm=math.nan,
                        converged=False,
                        note=f"{note + '; ' if note else ''}{exc}",
                    )
                )
                continue
        points.append(
            BranchPoint(
                lam=lam,
                wave=wave,
                inner=bb.inner,
                outer=bb.outer,
                norm=wave.norm,
                converged=True,
                note=note,
            )
        )
        prev = (lam, wave)
    return points


def _polish(
    problem: Problem, seed: WavePair, odd: bool, inner: float
) -> WavePair | None:
    """Newton from a transported seed; None when it fails or trivializes."""
    try:
        wave = oracle.oracle_solve(
            problem, init=seed, bc="half-line" if odd else "full-line"
        )
    except (NewtonDivergence, SingularJacobian):
        return None
    if wave.norm < 0.5 * inner:
        return None
    rep = residual(problem, wave, half=False)
    if not math.isfinite(rep.sup):
        return None
    return wave
