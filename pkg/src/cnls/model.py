"""Coefficient fields, nonlinearity presets, grids, and validated problems.

The library solves the stationary system

    -u1'' + a(x) u1 = b(x) u2 + c(x) F(u1, u2) u1
    -u2'' + d(x) u2 = e(x) u1 + f(x) H(u1, u2) u2

on the real line with decay at infinity.  The potentials ``a`` and ``d``
must stay uniformly positive; the coupling weights ``b, c, e, f`` are
non-negative with compact support.  Coefficients are restricted to exact
piecewise-constant profiles so supports are known exactly; smoothly
decaying tails would never have a compact support.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EmptySupport, InvalidCoefficient, InvalidGrid

# A truncation window [-L, L] keeps the relative tail error below
# exp(-margin).  Below SOFT_DECAY_MARGIN construction warns, below
# HARD_DECAY_MARGIN it refuses: tails of order exp(-8) ~ 3e-4 would
# corrupt every solver tolerance.
SOFT_DECAY_MARGIN = 20.0
HARD_DECAY_MARGIN = 8.0


@dataclass(frozen=True)
class CoefficientField:
    """Piecewise-constant coefficient profile.

    Three kinds are supported:

    * ``constant``: one value on the whole line,
    * ``piecewise``: values between sorted breakpoints, right-closed
      (the value at a breakpoint is the right limit),
    * ``bump``: constant values on disjoint closed intervals, zero outside.
    """

    kind: str
    values: tuple[float, ...]
    breakpoints: tuple[float, ...] = ()
    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "piecewise", "bump"):
            raise InvalidCoefficient(f"unknown field kind {self.kind!r}")
        if any(not math.isfinite(v) for v in self.values):
            raise InvalidCoefficient("field values must be finite")
        if any(v < 0 for v in self.values):
            raise InvalidCoefficient("field values must be non-negative")
        if self.kind == "constant" and len(self.values) != 1:
            raise InvalidCoefficient("constant field takes exactly one value")
        if self.kind == "piecewise":
            if len(self.values) != len(self.breakpoints) + 1:
                raise InvalidCoefficient(
                    "piecewise field needs one more value than breakpoints"
                )
            if any(
                t1 <= t0 for t0, t1 in zip(self.breakpoints, self.breakpoints[1:])
            ):
                raise InvalidCoefficient("breakpoints must be strictly increasing")
        if self.kind == "bump":
            if len(self.values) != len(self.intervals):
                raise InvalidCoefficient("bump field needs one value per interval")
            for lo, hi in self.intervals:
                if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                    raise InvalidCoefficient(f"bad bump interval [{lo}, {hi}]")
            for (_, hi0), (lo1, _) in zip(self.intervals, self.intervals[1:]):
                if lo1 < hi0:
                    raise InvalidCoefficient("bump intervals must be disjoint")

    # -- constructors -------------------------------------------------

    @classmethod
    def constant(cls, value: float) -> "CoefficientField":
        return cls(kind="constant", values=(float(value),))

    @classmethod
    def piecewise(
        cls, breakpoints: Sequence[float], values: Sequence[float]
    ) -> "CoefficientField":
        return cls(
            kind="piecewise",
            values=tuple(float(v) for v in values),
            breakpoints=tuple(float(t) for t in breakpoints),
        )

    @classmethod
    def bump(cls, value: float, lo: float, hi: float) -> "CoefficientField":
        return cls.bumps([(value, lo, hi)])

    @classmethod
    def bumps(
        cls, pieces: Sequence[tuple[float, float, float]]
    ) -> "CoefficientField":
        """Build a multi-bump field from ``(value, lo, hi)`` triples."""
        ordered = sorted(pieces, key=lambda p: p[1])
        return cls(
            kind="bump",
            values=tuple(float(v) for v, _, _ in ordered),
            intervals=tuple((float(lo), float(hi)) for _, lo, hi in ordered),
        )

    @classmethod
    def zero(cls) -> "CoefficientField":
        return cls.constant(0.0)

    # -- evaluation ---------------------------------------------------

    def evaluate(self, x):
        """Pointwise value at ``x`` (scalar or array), right-closed at jumps."""
        arr = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = np.full(arr.shape, self.values[0])
        elif self.kind == "piecewise":
            idx = np.searchsorted(np.asarray(self.breakpoints), arr, side="right")
            out = np.asarray(self.values)[idx]
        else:
            out = np.zeros(arr.shape)
            for value, (lo, hi) in zip(self.values, self.intervals):
                out = np.where((arr >= lo) & (arr <= hi), value, out)
        return out if arr.shape else float(out)

    @property
    def essential_infimum(self) -> float:
        if self.kind == "constant":
            return self.values[0]
        if self.kind == "piecewise":
            return min(self.values)
        return 0.0

    def support_intervals(self) -> tuple[tuple[float, float], ...] | None:
        """Closed intervals where the field is nonzero, ``None`` if unbounded."""
        if self.kind == "constant":
            return None if self.values[0] > 0 else ()
        if self.kind == "bump":
            return _merge_intervals(
                [(lo, hi) for v, (lo, hi) in zip(self.values, self.intervals) if v > 0]
            )
        # Piecewise: unbounded unless both outer pieces vanish.
        if self.values[0] > 0 or self.values[-1] > 0:
            return None
        runs: list[tuple[float, float]] = []
        edges = (-math.inf,) + self.breakpoints + (math.inf,)
        for v, lo, hi in zip(self.values, edges[:-1], edges[1:]):
            if v > 0:
                runs.append((lo, hi))
        return _merge_intervals(runs)

    def pieces(self, lo: float, hi: float) -> list[tuple[float, float, float]]:
        """Partition ``[lo, hi]`` into ``(left, right, value)`` spans."""
        cuts = [t for t in self.jump_positions() if lo < t < hi]
        edges = [lo] + cuts + [hi]
        out = []
        for x0, x1 in zip(edges[:-1], edges[1:]):
            out.append((x0, x1, float(self.evaluate(0.5 * (x0 + x1)))))
        return out

    def jump_positions(self) -> tuple[float, ...]:
        """Sorted positions where the field may jump."""
        if self.kind == "constant":
            return ()
        if self.kind == "piecewise":
            return self.breakpoints
        pts: list[float] = []
        for lo, hi in self.intervals:
            pts.extend((lo, hi))
        return tuple(sorted(pts))

    def scaled(self, factor: float) -> "CoefficientField":
        """Field with every value multiplied by a non-negative factor."""
        if factor < 0:
            raise InvalidCoefficient("scaling factor must be non-negative")
        return CoefficientField(
            kind=self.kind,
            values=tuple(factor * v for v in self.values),
            breakpoints=self.breakpoints,
            intervals=self.intervals,
        )


def _merge_intervals(
    intervals: list[tuple[float, float]],
) -> tuple[tuple[float, float], ...]:
    if not intervals:
        return ()
    intervals = sorted(intervals)
    merged = [list(intervals[0])]
    for lo, hi in intervals[1:]:
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return tuple((lo, hi) for lo, hi in merged)


def eval_coefficient(field: CoefficientField, x):
    """Exact field value at finite position(s); zero outside declared support."""
    if not np.all(np.isfinite(np.asarray(x, dtype=float))):
        raise ValueError("position must be finite")
    return field.evaluate(x)


@dataclass(frozen=True)
class Nonlinearity:
    """Nonlinear factors F(u1,u2) and H(u1,u2) with optional partials.

    Both must be non-negative on the non-negative quadrant.  Partial
    derivatives are needed for Newton solves; the built-in cubic presets
    provide them analytically.
    """

    kind: str
    f: Callable = field(compare=False)
    h: Callable = field(compare=False)
    df: tuple[Callable, Callable] | None = field(default=None, compare=False)
    dh: tuple[Callable, Callable] | None = field(default=None, compare=False)

    @classmethod
    def decoupled_cubic(cls) -> "Nonlinearity":
        """F = u1^2, H = u2^2: self-interaction of each component alone."""
        return cls(
            kind="decoupled-cubic",
            f=lambda u1, u2: u1 * u1,
            h=lambda u1, u2: u2 * u2,
            df=(lambda u1, u2: 2.0 * u1, lambda u1, u2: 0.0 * u2),
            dh=(lambda u1, u2: 0.0 * u1, lambda u1, u2: 2.0 * u2),
        )

    @classmethod
    def spinor_cubic(cls) -> "Nonlinearity":
        """F = H = u1^2 + u2^2: both components feel the total density."""
        sq = lambda u1, u2: u1 * u1 + u2 * u2
        return cls(
            kind="spinor-cubic",
            f=sq,
            h=sq,
            df=(lambda u1, u2: 2.0 * u1, lambda u1, u2: 2.0 * u2),
            dh=(lambda u1, u2: 2.0 * u1, lambda u1, u2: 2.0 * u2),
        )

    @classmethod
    def custom(cls, f: Callable, h: Callable, df=None, dh=None) -> "Nonlinearity":
        return cls(kind="custom", f=f, h=h, df=df, dh=dh)

    @classmethod
    def from_kind(cls, kind: str) -> "Nonlinearity":
        if kind == "decoupled-cubic":
            return cls.decoupled_cubic()
        if kind == "spinor-cubic":
            return cls.spinor_cubic()
        raise InvalidCoefficient(f"unknown nonlinearity kind {kind!r}")


@dataclass(frozen=True)
class Grid:
    """Uniform symmetric grid: N odd nodes on [-L, L], spacing 2L/(N-1)."""

    L: float
    n: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.L) and self.L > 0):
            raise InvalidGrid("half-width L must be positive and finite")
        if self.n < 5 or self.n % 2 == 0:
            raise InvalidGrid("node count N must be odd and at least 5")

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n)

    @property
    def center_index(self) -> int:
        return (self.n - 1) // 2


@dataclass(frozen=True)
class Problem:
    """Validated coefficient bundle: fields, nonlinearity and grid.

    Field roles: ``a, d`` are the component potentials (uniformly
    positive), ``b, e`` the linear cross-couplings and ``c, f`` the
    nonlinear weights (all compactly supported, non-negative).
    """

    a: CoefficientField
    b: CoefficientField
    c: CoefficientField
    d: CoefficientField
    e: CoefficientField
    f: CoefficientField
    nonlinearity: Nonlinearity
    grid: Grid

    def __post_init__(self) -> None:
        for name in ("a", "d"):
            if getattr(self, name).essential_infimum <= 0:
                raise InvalidCoefficient(
                    f"potential {name!r} must have positive infimum"
                )
        for name in ("b", "c", "e", "f"):
            if getattr(self, name).support_intervals() is None:
                raise InvalidCoefficient(
                    f"coupling {name!r} must have bounded support"
                )
        pieces = support_pieces(self)
        if pieces:
            reach = max(abs(pieces[0][0]), abs(pieces[-1][1]))
            if reach >= self.grid.L:
                raise InvalidGrid(
                    f"grid half-width {self.grid.L} does not contain the "
                    f"coupling support (reach {reach})"
                )
            rate = math.sqrt(
                min(self.a.essential_infimum, self.d.essential_infimum)
            )
            margin = rate * (self.grid.L - reach)
            if margin < HARD_DECAY_MARGIN:
                raise InvalidGrid(
                    f"decay margin {margin:.2f} below {HARD_DECAY_MARGIN}; "
                    "enlarge L"
                )
            if margin < SOFT_DECAY_MARGIN:
                warnings.warn(
                    f"decay margin {margin:.2f} below {SOFT_DECAY_MARGIN}; "
                    f"tail truncation error ~ {math.exp(-margin):.2e}",
                    stacklevel=2,
                )


def support_pieces(p: Problem) -> tuple[tuple[float, float], ...]:
    """Merged closed intervals carrying any of the four coupling fields."""
    runs: list[tuple[float, float]] = []
    for fld in (p.b, p.c, p.e, p.f):
        sup = fld.support_intervals()
        if sup:
            runs.extend(sup)
    return _merge_intervals(runs)


def support_union(p: Problem) -> tuple[float, float]:
    """Smallest closed interval containing all coupling supports."""
    pieces = support_pieces(p)
    if not pieces:
        raise EmptySupport("all coupling coefficients vanish")
    return (pieces[0][0], pieces[-1][1])


def preset_problem(kind: str, *, a, b, c, d, e, f, grid) -> Problem:
    """Problem with a built-in nonlinearity and user-supplied fields."""
    presets = {"weakly-coupled": "decoupled-cubic", "spinor": "spinor-cubic"}
    if kind not in presets:
        raise InvalidCoefficient(f"unknown preset {kind!r}")
    return Problem(
        a=a, b=b, c=c, d=d, e=e, f=f,
        nonlinearity=Nonlinearity.from_kind(presets[kind]),
        grid=grid,
    )
