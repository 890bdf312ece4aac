"""Ground-state and odd-wave solvers.

The search follows the structure of the existence argument: seeds are
kernel images of the coupling-window indicator (hence inside the cone),
scaled to a geometric ladder of norms across the annulus.  Each seed is
iterated with damped, cone-projected Picard steps on the coupling
operator; when the iteration stalls (the radial direction of a cubic
fixed point is typically repelling), the banded-Newton oracle polishes
the current iterate.  Accepted solutions satisfy the fixed-point gap,
the difference residual, positivity, the cone shell inequality, and the
boundary decay, all at the configured tolerance.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from . import hypotheses, oracle
from .errors import (
    CnlsError,
    HypothesisFailure,
    NewtonDivergence,
    NoNontrivialSolution,
    SingularJacobian,
    SupportContainsOrigin,
    SymmetryViolation,
)
from .fixed_point import WavePair, cone_gap, fixed_point_gap, residual
from .greens import (
    build_halfline_kernel,
    build_kernel,
    cone_constants,
    discrete_cone_constants,
)
from .model import CoefficientField, Problem, support_pieces

_REQUIRED = ("i", "ii", "iii", "iv", "v", "vi")


@dataclass(frozen=True)
class SolverConfig:
    theta: float = 0.5
    tol: float = 1e-8
    max_iter: int = 200
    ladder: int = 8
    newton_fallback: bool = True
    symmetry: str = "none"
    stall_window: int = 10
    tail_tolerance: float = 1e-8

    def __post_init__(self) -> None:
        if not (0.0 < self.theta <= 1.0):
            raise ValueError("damping theta must lie in (0, 1]")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.ladder < 1 or self.max_iter < 1 or self.stall_window < 2:
            raise ValueError("iteration counts must be positive")
        if self.symmetry not in ("none", "odd"):
            raise ValueError("symmetry must be 'none' or 'odd'")


@dataclass(eq=False)
class Solution:
    """Converged wave with its acceptance diagnostics."""

    wave: WavePair
    norm: float
    update_norm: float
    residual_sup: float
    cone_gaps: tuple[float, float]
    iterations: int
    newton_iterations: int
    method: str
    clip_magnitude: float
    inner: float
    outer: float
    report: hypotheses.HypothesisReport | None = None


def _odd_extend(grid_x: np.ndarray, half: WavePair) -> WavePair:
    u1 = np.concatenate((-half.u1[:0:-1], half.u1))
    u2 = np.concatenate((-half.u2[:0:-1], half.u2))
    return WavePair(grid_x, u1, u2)


def _indicator(pieces) -> CoefficientField:
    return CoefficientField.bumps([(1.0, lo, hi) for lo, hi in pieces])


def _even_violation(problem: Problem) -> str | None:
    """Name of the first field that is not even, sampled at cell midpoints.

    Midpoints avoid breakpoint nodes, where the right-closed evaluation
    convention would flag an artificial asymmetry; evenness is an
    almost-everywhere property.
    """
    x = problem.grid.x
    mids = 0.5 * (x[:-1] + x[1:])
    mids = mids[mids > 0]
    for name in ("a", "b", "c", "d", "e", "f"):
        fld = getattr(problem, name)
        if not np.array_equal(fld.evaluate(mids), fld.evaluate(-mids)):
            return name
    return None


class _Attempt:
    """One seed: Picard phase, optional Newton polish, validation."""

    def __init__(self, problem, kernels, cfg, half, cone_d, inner):
        self.problem = problem
        self.kernels = kernels
        self.cfg = cfg
        self.half = half
        self.cone_d = cone_d
        self.inner = inner
        self.grid = problem.grid

    def _to_full(self, u: WavePair) -> WavePair:
        return _odd_extend(self.grid.x, u) if self.half else u

    def _from_full(self, wave: WavePair) -> WavePair:
        if not self.half:
            return wave
        mid = self.grid.center_index
        return WavePair(self.grid.x[mid:], wave.u1[mid:], wave.u2[mid:])

    def run(self, seed: WavePair) -> Solution | None:
        cfg = self.cfg
        u = seed
        updates: deque[float] = deque(maxlen=cfg.stall_window)
        clip_mag = 0.0
        picard_iters = 0
        converged = False
        best = u
        best_relgap = math.inf
        for _ in range(cfg.max_iter):
            tu, gap = fixed_point_gap(self.problem, self.kernels, u)
            relgap = gap / max(u.norm, 1e-30)
            if relgap < best_relgap:
                best, best_relgap = u, relgap
            if gap <= cfg.tol:
                converged = True
                break
            new1 = (1.0 - cfg.theta) * u.u1 + cfg.theta * tu.u1
            new2 = (1.0 - cfg.theta) * u.u2 + cfg.theta * tu.u2
            clip_mag = max(0.0, -float(min(new1.min(), new2.min())))
            np.maximum(new1, 0.0, out=new1)
            np.maximum(new2, 0.0, out=new2)
            new = WavePair(u.x, new1, new2)
            upd = max(
                float(np.max(np.abs(new.u1 - u.u1))),
                float(np.max(np.abs(new.u2 - u.u2))),
            )
            picard_iters += 1
            if not math.isfinite(upd) or new.norm > 100.0 * max(1.0, seed.norm):
                break
            if len(updates) == cfg.stall_window and upd >= updates[0]:
                break
            updates.append(upd)
            u = new
        if not converged:
            u = best

        newton_iters = 0
        method = "picard"
        wave = self._to_full(u)
        res = residual(self.problem, u, half=self.half)
        tu, gap = fixed_point_gap(self.problem, self.kernels, u)
        if gap > cfg.tol or res.sup > cfg.tol or not converged:
            if not cfg.newton_fallback:
                return None
            try:
                wave, newton_iters = oracle.oracle_solve(
                    self.problem,
                    init=wave,
                    bc="half-line" if self.half else "full-line",
                    details=True,
                )
            except (NewtonDivergence, SingularJacobian):
                return None
            method = "newton-polished"
            u = self._from_full(wave)
            res = residual(self.problem, u, half=self.half)
            tu, gap = fixed_point_gap(self.problem, self.kernels, u)
            if gap > cfg.tol or res.sup > cfg.tol:
                return None

        if u.norm < 0.5 * self.inner:
            return None
        if min(u.u1.min(), u.u2.min()) < -1e-9:
            return None
        gaps = cone_gap(u, self.cone_d)
        if min(gaps) < -1e-9:
            return None
        full_res = res
        if self.half:
            full_res = residual(self.problem, wave, half=False)
            if full_res.sup > cfg.tol:
                return None
        if full_res.boundary > cfg.tail_tolerance:
            return None
        return Solution(
            wave=wave,
            norm=u.norm,
            update_norm=gap,
            residual_sup=full_res.sup,
            cone_gaps=gaps,
            iterations=picard_iters,
            newton_iterations=newton_iters,
            method=method,
            clip_magnitude=clip_mag,
            inner=self.inner,
            outer=math.nan,  # filled by the driver
        )


def _ladder(inner: float, outer: float, count: int) -> np.ndarray:
    if count == 1:
        return np.array([math.sqrt(inner * outer)])
    return np.geomspace(inner, outer, count)


def solve_ground_state(
    problem: Problem,
    config: SolverConfig | None = None,
    *,
    override_hypotheses: bool = False,
) -> Solution:
    """Positive wave inside the cone annulus.

    Raises ``HypothesisFailure`` when a required existence hypothesis
    fails (unless overridden) and ``NoNontrivialSolution`` when every
    seed collapses to zero or runs out of iterations.
    """
    cfg = config or SolverConfig()
    if cfg.symmetry == "odd":
        return solve_odd(problem, cfg, override_hypotheses=override_hypotheses)
    pieces = support_pieces(problem)
    if not pieces:
        raise NoNontrivialSolution(
            "all couplings vanish: the operator is identically zero"
        )
    k1 = build_kernel(problem.a, problem.grid)
    k2 = build_kernel(problem.d, problem.grid)
    kernels = (k1, k2)
    report = None
    if not override_hypotheses:
        report = hypotheses.full_report(problem, kernels)
        bad = [n for n in _REQUIRED if not report.passed([n])]
        if "annulus" in report.entries and report.entries["annulus"].status == "fail":
            bad.append("annulus")
        if any(report.entries[n].status == "not-applicable" for n in ("iv", "v")):
            bad.extend(n for n in ("iv", "v") if n not in bad)
        if bad:
            raise HypothesisFailure(
                f"hypotheses failed or unavailable: {', '.join(sorted(set(bad)))}"
            )
    window = (pieces[0][0], pieces[-1][1])
    cone_d = discrete_cone_constants(k1, k2, window)
    try:
        cone_c = cone_constants(k1.basis, k2.basis, window)
        gc = hypotheses.growth_constants(problem.nonlinearity, cone_c)
        radii = hypotheses.annulus_radii(problem, kernels, gc, window)
        inner, outer = radii.inner, radii.outer
    except CnlsError:
        if not override_hypotheses:
            raise
        inner, outer = 1e-3, 10.0
    return _drive(problem, kernels, cfg, False, cone_d, inner, outer, report, pieces)


def solve_odd(
    problem: Problem,
    config: SolverConfig | None = None,
    *,
    override_hypotheses: bool = False,
) -> Solution:
    """Odd wave for even coefficients whose support avoids the origin.

    Solves on [0, L] with zero values at both ends and returns the odd
    extension, which satisfies the full-line system by symmetry.
    """
    cfg = config or SolverConfig()
    bad_field = _even_violation(problem)
    if bad_field is not None:
        raise SymmetryViolation(f"coefficient {bad_field!r} is not even")
    pieces = support_pieces(problem)
    if not pieces:
        raise NoNontrivialSolution(
            "all couplings vanish: the operator is identically zero"
        )
    for lo, hi in pieces:
        if lo <= 0.0 <= hi:
            raise SupportContainsOrigin(
                f"coupling support piece [{lo}, {hi}] contains the origin"
            )
    k1 = build_halfline_kernel(problem.a, problem.grid)
    k2 = build_halfline_kernel(problem.d, problem.grid)
    kernels = (k1, k2)
    pos = [(lo, hi) for lo, hi in pieces if lo > 0.0]
    report = None
    if not override_hypotheses:
        report = hypotheses.check_structural(problem)
        report.add(hypotheses.check_linear_smallness(problem, kernels))
        bad = [n for n in ("i", "ii", "iii", "vi") if not report.passed([n])]
        if bad:
            raise HypothesisFailure(
                f"hypotheses failed on the half-line: {', '.join(bad)}"
            )
    window = (pos[0][0], pos[-1][1])
    cone_d = discrete_cone_constants(k1, k2, window)
    try:
        cone_c = cone_constants(k1.basis, k2.basis, window)
        gc = hypotheses.growth_constants(problem.nonlinearity, cone_c)
        radii = hypotheses.annulus_radii(problem, kernels, gc, window)
        inner, outer = radii.inner, radii.outer
    except CnlsError:
        if not override_hypotheses:
            raise
        inner, outer = 1e-3, 10.0
    return _drive(problem, kernels, cfg, True, cone_d, inner, outer, report, pos)


def _drive(
    problem, kernels, cfg, half, cone_d, inner, outer, report, pieces
) -> Solution:
    k1, k2 = kernels
    indicator = _indicator(pieces)
    ones = np.ones(len(k1.x))
    w1 = k1.apply(ones, weight=indicator)
    w2 = k2.apply(ones, weight=indicator)
    w1 /= np.max(w1)
    w2 /= np.max(w2)
    attempt = _Attempt(problem, kernels, cfg, half, cone_d, inner)
    for s in _ladder(inner, outer, cfg.ladder):
        seed = WavePair(k1.x, s * w1, s * w2)
        sol = attempt.run(seed)
        if sol is not None:
            sol.outer = outer
            sol.report = report
            return sol
    raise NoNontrivialSolution(
        "every seed converged to zero or exhausted its iteration budget"
    )
