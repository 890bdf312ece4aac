"""Numerical verification of the existence hypotheses and shell radii.

The existence argument needs: positive potentials, a non-empty compact
coupling support, sign conditions on the nonlinearity, power bounds on
F and H near zero and near infinity, and strict smallness of the linear
coupling measured through the kernels.  This module evaluates each
condition on a concrete problem, derives the power-bound constants for
the built-in nonlinearities, and turns the proof inequalities into the
annulus radii that bracket solution norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DivisionDomain,
    EmptySupport,
    HypothesisFailure,
    ParameterOutOfRange,
    UnsupportedNonlinearity,
)
from .greens import GreensKernel, build_kernel, cone_constants
from .model import Nonlinearity, Problem, support_pieces, support_union

_STRICT_MARGIN = 1e-9  # guard for strict inequalities decided on a grid


@dataclass
class HypothesisEntry:
    name: str
    status: str  # "pass" | "fail" | "not-applicable"
    witness: dict[str, float] = field(default_factory=dict)
    note: str = ""


@dataclass
class HypothesisReport:
    entries: dict[str, HypothesisEntry] = field(default_factory=dict)

    def add(self, entry: HypothesisEntry) -> None:
        self.entries[entry.name] = entry

    def passed(self, names=None) -> bool:
        names = names if names is not None else list(self.entries)
        return all(
            self.entries[n].status in ("pass", "not-applicable")
            for n in names
            if n in self.entries
        )

    def failed_names(self) -> list[str]:
        return [n for n, e in self.entries.items() if e.status == "fail"]

    def lines(self) -> list[str]:
        out = []
        for name, e in self.entries.items():
            out.append(f"hypothesis.{name}.status={e.status}")
            for key, val in e.witness.items():
                out.append(f"hypothesis.{name}.{key}={val!r}")
            if e.note:
                out.append(f"hypothesis.{name}.note={e.note}")
        return out


def _refined_max(x: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    """Grid maximum with a clamped parabolic correction at the peak."""
    i = int(np.argmax(v))
    best = float(v[i])
    pos = float(x[i])
    if 0 < i < len(v) - 1:
        denom = v[i - 1] - 2.0 * v[i] + v[i + 1]
        if denom < 0.0:
            num = v[i + 1] - v[i - 1]
            vertex = float(v[i] - num * num / (8.0 * denom))
            shift = 0.5 * (v[i - 1] - v[i + 1]) / denom
            if abs(shift) <= 1.0:
                best = max(best, vertex)
                pos = float(x[i] + shift * (x[1] - x[0]))
    return best, pos


def check_structural(p: Problem) -> HypothesisReport:
    """Positivity of the potentials, compact support, sign of F and H."""
    report = HypothesisReport()
    inf_a = p.a.essential_infimum
    inf_d = p.d.essential_infimum
    report.add(
        HypothesisEntry(
            name="i",
            status="pass" if (inf_a > 0 and inf_d > 0) else "fail",
            witness={"inf_a": inf_a, "inf_d": inf_d},
        )
    )
    pieces = support_pieces(p)
    if pieces:
        report.add(
            HypothesisEntry(
                name="ii",
                status="pass",
                witness={"hull_lo": pieces[0][0], "hull_hi": pieces[-1][1]},
            )
        )
    else:
        report.add(
            HypothesisEntry(
                name="ii",
                status="fail",
                note="EmptySupport: every coupling coefficient vanishes",
            )
        )
    grid_vals = np.linspace(0.0, 10.0, 101)
    U1, U2 = np.meshgrid(grid_vals, grid_vals, indexing="ij")
    fvals = np.asarray(p.nonlinearity.f(U1, U2), dtype=float)
    hvals = np.asarray(p.nonlinearity.h(U1, U2), dtype=float)
    fmin_idx = np.unravel_index(np.argmin(fvals), fvals.shape)
    hmin_idx = np.unravel_index(np.argmin(hvals), hvals.shape)
    fmin = float(fvals[fmin_idx])
    hmin = float(hvals[hmin_idx])
    entry = HypothesisEntry(
        name="iii",
        status="pass" if (fmin >= 0.0 and hmin >= 0.0) else "fail",
        witness={
            "min_F": fmin,
            "min_H": hmin,
            "argmin_F_u1": float(U1[fmin_idx]),
            "argmin_F_u2": float(U2[fmin_idx]),
            "argmin_H_u1": float(U1[hmin_idx]),
            "argmin_H_u2": float(U2[hmin_idx]),
        },
    )
    report.add(entry)
    return report


def check_linear_smallness(
    p: Problem, kernels: tuple[GreensKernel, GreensKernel]
) -> HypothesisEntry:
    """Kernel images of the linear couplings must stay strictly below 1.

    The image of ``b`` under the first kernel is the decaying solution of
    ``-v'' + a v = b``; its maximum (and the mirror quantity for ``e``)
    decides the smallness condition.
    """
    k1, k2 = kernels
    ones1 = np.ones(len(k1.x))
    ones2 = np.ones(len(k2.x))
    v1 = k1.apply(ones1, weight=p.b)
    v2 = k2.apply(ones2, weight=p.e)
    max1, arg1 = _refined_max(k1.x, v1)
    max2, arg2 = _refined_max(k2.x, v2)
    ok = max1 < 1.0 - _STRICT_MARGIN and max2 < 1.0 - _STRICT_MARGIN
    return HypothesisEntry(
        name="vi",
        status="pass" if ok else "fail",
        witness={
            "max_v1": max1,
            "argmax_v1": arg1,
            "max_v2": max2,
            "argmax_v2": arg2,
        },
    )


def check_ratio_condition(p: Problem) -> HypothesisEntry:
    """Pointwise ratio test: sup b/a < 1 and sup e/d < 1 on the grid.

    Strictly stronger than the kernel smallness condition; a ratio equal
    to 1 fails here even when the kernel image stays below 1.
    """
    x = p.grid.x
    av = np.asarray(p.a.evaluate(x))
    dv = np.asarray(p.d.evaluate(x))
    if np.any(av <= 0) or np.any(dv <= 0):
        raise DivisionDomain("potential vanishes on the grid")
    rb = float(np.max(p.b.evaluate(x) / av))
    re = float(np.max(p.e.evaluate(x) / dv))
    return HypothesisEntry(
        name="vi-prime",
        status="pass" if (rb < 1.0 and re < 1.0) else "fail",
        witness={"sup_b_over_a": rb, "sup_e_over_d": re},
    )


@dataclass(frozen=True)
class PowerBound:
    """One-sided power bound coef * t^power valid past the given limit."""

    coef: float
    power: float
    limit: float


@dataclass(frozen=True)
class GrowthConstants:
    """Power bounds of F and H near zero and near infinity.

    ``near_zero``: F, H < coef * r^power for pair norms below the limit
    (infinite for pure powers).  ``near_large``: F, H > coef * R^power on
    the cone shell for norms above the limit (zero for pure powers); the
    coefficient takes the componentwise reading, using the shell floor of
    whichever component carries the large norm.
    """

    near_zero: PowerBound
    near_large: PowerBound
    componentwise: bool = True


def growth_constants(nl: Nonlinearity, cone) -> GrowthConstants:
    if nl.kind == "decoupled-cubic":
        small_coef = 1.0
    elif nl.kind == "spinor-cubic":
        small_coef = 2.0
    else:
        raise UnsupportedNonlinearity(
            "growth constants are derived only for the built-in cubic kinds; "
            "supply bounds explicitly for custom nonlinearities"
        )
    large_coef = min(cone.shell1**2, cone.shell2**2)
    return GrowthConstants(
        near_zero=PowerBound(coef=small_coef, power=2.0, limit=math.inf),
        near_large=PowerBound(coef=large_coef, power=2.0, limit=0.0),
    )


@dataclass(frozen=True)
class AnnulusRadii:
    """Norm shells r < R between which a nontrivial fixed point exists."""

    inner: float
    outer: float
    linear_max: float       # largest kernel image of b, e
    nonlinear_max: float    # largest kernel image of c, f over the line
    nonlinear_window_min: float  # smaller per-component max over the window


def _window_max(x: np.ndarray, v: np.ndarray, window) -> float:
    lo, hi = window
    mask = (x >= lo) & (x <= hi)
    idx = np.nonzero(mask)[0]
    sub, _ = _refined_max(x[idx], v[idx])
    return sub


def annulus_radii(
    p: Problem,
    kernels: tuple[GreensKernel, GreensKernel],
    gc: GrowthConstants,
    window: tuple[float, float] | None = None,
) -> AnnulusRadii:
    """Shell radii from the two proof inequalities.

    The inner radius solves ``k r^gamma C_max + B <= 1``, the outer one
    ``K R^delta C_min >= 1``; the outer radius is enlarged past the inner
    one if the raw formulas cross (any larger outer shell works).
    """
    k1, k2 = kernels
    if window is None:
        window = support_union(p)
    ones1 = np.ones(len(k1.x))
    ones2 = np.ones(len(k2.x))
    vb = k1.apply(ones1, weight=p.b)
    ve = k2.apply(ones2, weight=p.e)
    vc = k1.apply(ones1, weight=p.c)
    vf = k2.apply(ones2, weight=p.f)
    B = max(_refined_max(k1.x, vb)[0], _refined_max(k2.x, ve)[0])
    c_max = max(_refined_max(k1.x, vc)[0], _refined_max(k2.x, vf)[0])
    c_min = min(_window_max(k1.x, vc, window), _window_max(k2.x, vf, window))
    if B >= 1.0 - _STRICT_MARGIN:
        raise HypothesisFailure(
            f"linear smallness fails: max kernel image {B:.6f} >= 1"
        )
    if c_min <= 0.0:
        raise HypothesisFailure(
            "a nonlinear weight vanishes on the window; the large-norm "
            "bound cannot hold"
        )
    kz = gc.near_zero
    kl = gc.near_large
    inner = ((1.0 - B) / (kz.coef * c_max)) ** (1.0 / kz.power)
    outer = (1.0 / (kl.coef * c_min)) ** (1.0 / kl.power)
    if outer <= inner:
        outer = 2.0 * inner
    return AnnulusRadii(
        inner=inner,
        outer=outer,
        linear_max=B,
        nonlinear_max=c_max,
        nonlinear_window_min=c_min,
    )


@dataclass(frozen=True)
class BranchBounds:
    """Parameter-dependent shell radii and the admissible parameter cap."""

    inner: float
    outer: float
    parameter_cap: float


def branch_bounds(
    p: Problem,
    lam: float,
    variant: str,
    kernels: tuple[GreensKernel, GreensKernel] | None = None,
) -> BranchBounds:
    """Shell radii for the parametrized families.

    ``nonlinear-scaled`` multiplies only the cubic weights by the
    parameter; ``fully-scaled`` multiplies the whole coupling side, which
    confines the parameter below the reciprocal of the linear witness.
    """
    if lam <= 0:
        raise ParameterOutOfRange("branch parameter must be positive")
    if variant not in ("nonlinear-scaled", "fully-scaled"):
        raise ValueError(f"unknown branch variant {variant!r}")
    if kernels is None:
        kernels = (build_kernel(p.a, p.grid), build_kernel(p.d, p.grid))
    k1, k2 = kernels
    window = support_union(p)
    ones1 = np.ones(len(k1.x))
    ones2 = np.ones(len(k2.x))
    vb = k1.apply(ones1, weight=p.b)
    ve = k2.apply(ones2, weight=p.e)
    vc = k1.apply(ones1, weight=p.c)
    vf = k2.apply(ones2, weight=p.f)
    B = max(_refined_max(k1.x, vb)[0], _refined_max(k2.x, ve)[0])
    c_max = max(_refined_max(k1.x, vc)[0], _refined_max(k2.x, vf)[0])
    if c_max <= 0.0:
        raise HypothesisFailure("both nonlinear weights vanish identically")
    gc_window = _window_max(k1.x, vc, window)
    basis1 = k1.basis
    basis2 = k2.basis
    cone = cone_constants(basis1, basis2, window)
    if gc_window <= 0.0:
        raise HypothesisFailure(
            "first nonlinear weight vanishes on the window"
        )
    if variant == "nonlinear-scaled":
        if B >= 1.0 - _STRICT_MARGIN:
            raise HypothesisFailure(
                f"linear smallness fails: max kernel image {B:.6f} >= 1"
            )
        cap = math.inf
        inner = math.sqrt((1.0 - B) / (lam * c_max))
    else:
        cap = math.inf if B == 0.0 else 1.0 / B
        if lam >= cap:
            raise ParameterOutOfRange(
                f"parameter {lam} outside the admissible interval (0, {cap})"
            )
        inner = math.sqrt((1.0 - lam * B) / (lam * c_max))
    outer = math.sqrt(1.0 / (lam * cone.shell1 * gc_window))
    outer = max(outer, inner)
    return BranchBounds(inner=inner, outer=outer, parameter_cap=cap)


def full_report(
    p: Problem, kernels: tuple[GreensKernel, GreensKernel] | None = None
) -> HypothesisReport:
    """All hypothesis checks plus derived constants in one report."""
    if kernels is None:
        kernels = (build_kernel(p.a, p.grid), build_kernel(p.d, p.grid))
    report = check_structural(p)
    report.add(check_linear_smallness(p, kernels))
    report.add(check_ratio_condition(p))
    try:
        window = support_union(p)
        cone = cone_constants(kernels[0].basis, kernels[1].basis, window)
        gc = growth_constants(p.nonlinearity, cone)
        report.add(
            HypothesisEntry(
                name="iv",
                status="pass",
                witness={
                    "coef": gc.near_zero.coef,
                    "power": gc.near_zero.power,
                },
            )
        )
        report.add(
            HypothesisEntry(
                name="v",
                status="pass",
                witness={
                    "coef": gc.near_large.coef,
                    "power": gc.near_large.power,
                    "shell1": cone.shell1,
                    "shell2": cone.shell2,
                },
            )
        )
        radii = annulus_radii(p, kernels, gc, window)
        report.add(
            HypothesisEntry(
                name="annulus",
                status="pass",
                witness={
                    "inner": radii.inner,
                    "outer": radii.outer,
                    "linear_max": radii.linear_max,
                    "nonlinear_max": radii.nonlinear_max,
                    "nonlinear_window_min": radii.nonlinear_window_min,
                },
            )
        )
    except EmptySupport:
        report.add(
            HypothesisEntry(
                name="iv", status="not-applicable", note="empty coupling support"
            )
        )
        report.add(
            HypothesisEntry(
                name="v", status="not-applicable", note="empty coupling support"
            )
        )
    except UnsupportedNonlinearity as exc:
        report.add(HypothesisEntry(name="iv", status="not-applicable", note=str(exc)))
        report.add(HypothesisEntry(name="v", status="not-applicable", note=str(exc)))
    except HypothesisFailure as exc:
        report.add(
            HypothesisEntry(name="annulus", status="fail", note=str(exc))
        )
    return report
