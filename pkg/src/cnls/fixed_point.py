"""Fixed-point operator, cone membership gap, and differential residual."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .greens import GreensKernel, _hat_load, _p1_moments, hat_average
from .model import CoefficientField, Problem


def _is_zero(field: CoefficientField) -> bool:
    return all(v == 0.0 for v in field.values)


@dataclass(eq=False)
class WavePair:
    """Grid-sampled candidate or solution pair with cached norms."""

    x: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    residual_sup: float | None = None

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.u1 = np.asarray(self.u1, dtype=float)
        self.u2 = np.asarray(self.u2, dtype=float)
        if self.u1.shape != self.x.shape or self.u2.shape != self.x.shape:
            raise ValueError("component samples must match the axis")

    @cached_property
    def sup1(self) -> float:
        return float(np.max(np.abs(self.u1)))

    @cached_property
    def sup2(self) -> float:
        return float(np.max(np.abs(self.u2)))

    @property
    def norm(self) -> float:
        """Pair norm: the larger of the two sup-norms."""
        return max(self.sup1, self.sup2)

    def scaled(self, t: float) -> "WavePair":
        return WavePair(self.x, t * self.u1, t * self.u2)

    def copy(self) -> "WavePair":
        return WavePair(self.x, self.u1.copy(), self.u2.copy())


def apply_T(
    problem: Problem, kernels: tuple[GreensKernel, GreensKernel], u: WavePair
) -> WavePair:
    """One application of the coupling operator.

    Component 1 is the kernel image of ``b u2 + c F(u1,u2) u1``,
    component 2 that of ``e u1 + f H(u1,u2) u2``; both integrands vanish
    off the coupling support, so the output decays at the ends.
    """
    k1, k2 = kernels
    low = float(min(u.u1.min(), u.u2.min()))
    if low < -1e-12 * max(1.0, u.norm):
        warnings.warn(
            f"operator applied to a sign-indefinite pair (min {low:.3e})",
            stacklevel=2,
        )
    nl = problem.nonlinearity
    zero = np.zeros_like(u.u1)
    t1 = zero.copy()
    if not _is_zero(problem.b):
        t1 += k1.apply(u.u2, weight=problem.b)
    if not _is_zero(problem.c):
        t1 += k1.apply(nl.f(u.u1, u.u2) * u.u1, weight=problem.c)
    t2 = zero.copy()
    if not _is_zero(problem.e):
        t2 += k2.apply(u.u1, weight=problem.e)
    if not _is_zero(problem.f):
        t2 += k2.apply(nl.h(u.u1, u.u2) * u.u2, weight=problem.f)
    return WavePair(u.x, t1, t2)


def fixed_point_gap(
    problem: Problem, kernels: tuple[GreensKernel, GreensKernel], u: WavePair
) -> tuple[WavePair, float]:
    """Image of ``u`` and the sup-norm distance to it."""
    tu = apply_T(problem, kernels, u)
    gap = max(
        float(np.max(np.abs(u.u1 - tu.u1))), float(np.max(np.abs(u.u2 - tu.u2)))
    )
    return tu, gap


def cone_gap(u: WavePair, cone) -> tuple[float, float]:
    """Distance of each component from the cone shell inequality.

    Returns ``min over the window of u_i  -  shell_i * sup|u_i|`` per
    component; non-negative values certify cone membership.
    """
    lo, hi = cone.window
    mask = (u.x >= lo) & (u.x <= hi)
    if not np.any(mask):
        raise ValueError("cone window contains no grid nodes")
    g1 = float(np.min(u.u1[mask])) - cone.shell1 * u.sup1
    g2 = float(np.min(u.u2[mask])) - cone.shell2 * u.sup2
    return g1, g2


@dataclass(eq=False)
class ResidualReport:
    """Difference-equation defect of a candidate pair."""

    r1: np.ndarray
    r2: np.ndarray
    sup: float
    boundary: float


class _AssemblyData:
    """Per-problem discretization data for the residual."""

    def __init__(self, problem: Problem, half: bool):
        x = problem.grid.x
        if half:
            x = x[problem.grid.center_index :]
        self.x = x
        self.h = float(x[1] - x[0])
        self.abar1 = hat_average(x, problem.a)
        self.abar2 = hat_average(x, problem.d)
        self.mb = _p1_moments(x, problem.b)
        self.mc = _p1_moments(x, problem.c)
        self.me = _p1_moments(x, problem.e)
        self.mf = _p1_moments(x, problem.f)


@lru_cache(maxsize=16)
def _assembly(problem: Problem, half: bool) -> _AssemblyData:
    return _AssemblyData(problem, half)


def residual(problem: Problem, u: WavePair, *, half: bool = False) -> ResidualReport:
    """Centered-difference defect of the governing system at every node.

    Interior nodes carry the full stencil; the two end nodes only report
    the boundary values, which a decayed solution keeps below the tail
    tolerance.  Coefficients enter through their hat averages, matching
    the assembly used by the solvers, so converged solutions have defects
    at roundoff level.
    """
    asm = _assembly(problem, half)
    if len(asm.x) != len(u.x):
        raise ValueError("wave sampled on a different axis than the problem")
    nl = problem.nonlinearity
    h2 = asm.h * asm.h
    fvals = nl.f(u.u1, u.u2)
    hvals = nl.h(u.u1, u.u2)

    def defect(uu, abar, m_lin, lin_src, m_nl, nl_src):
        r = np.zeros_like(uu)
        d2 = (-uu[:-2] + 2.0 * uu[1:-1] - uu[2:]) / h2
        r[1:-1] = d2 + abar[1:-1] * uu[1:-1]
        r -= _hat_load(m_lin, lin_src)
        r -= _hat_load(m_nl, nl_src)
        r[0] = 0.0
        r[-1] = 0.0
        return r

    r1 = defect(u.u1, asm.abar1, asm.mb, u.u2, asm.mc, fvals * u.u1)
    r2 = defect(u.u2, asm.abar2, asm.me, u.u1, asm.mf, hvals * u.u2)
    sup = max(float(np.max(np.abs(r1))), float(np.max(np.abs(r2))))
    boundary = max(
        abs(float(u.u1[0])),
        abs(float(u.u1[-1])),
        abs(float(u.u2[0])),
        abs(float(u.u2[-1])),
    )
    u.residual_sup = sup
    return ResidualReport(r1=r1, r2=r2, sup=sup, boundary=boundary)
