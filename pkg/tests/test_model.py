import math

import numpy as np
import pytest

from cnls.errors import EmptySupport, InvalidCoefficient, InvalidGrid
from cnls.model import (
    CoefficientField,
    Grid,
    Nonlinearity,
    Problem,
    eval_coefficient,
    preset_problem,
    support_pieces,
    support_union,
)


def grid15():
    return Grid(L=15.0, n=1501)


def test_constant_field_everywhere():
    fld = CoefficientField.constant(1.0)
    assert eval_coefficient(fld, 3.7) == 1.0
    assert fld.essential_infimum == 1.0
    assert fld.support_intervals() is None


def test_bump_outside_support_is_zero():
    fld = CoefficientField.bump(2.0, -1.0, 1.0)
    assert eval_coefficient(fld, 2.0) == 0.0
    assert eval_coefficient(fld, 1.0) == 2.0  # closed interval
    assert eval_coefficient(fld, -1.0) == 2.0
    assert fld.support_intervals() == ((-1.0, 1.0),)


def test_piecewise_right_closed_at_breakpoint():
    fld = CoefficientField.piecewise([0.0], [1.0, 4.0])
    assert eval_coefficient(fld, 0.0) == 4.0
    assert eval_coefficient(fld, -1e-12) == 1.0
    vals = eval_coefficient(fld, np.array([-1.0, 0.0, 1.0]))
    assert list(vals) == [1.0, 4.0, 4.0]


def test_eval_requires_finite_position():
    fld = CoefficientField.constant(1.0)
    with pytest.raises(ValueError):
        eval_coefficient(fld, math.inf)


def test_negative_values_rejected():
    with pytest.raises(InvalidCoefficient):
        CoefficientField.constant(-1.0)
    with pytest.raises(InvalidCoefficient):
        CoefficientField.bump(-0.5, 0.0, 1.0)


def test_piecewise_support_with_zero_tails():
    fld = CoefficientField.piecewise([-1.0, 1.0], [0.0, 2.0, 0.0])
    assert fld.support_intervals() == ((-1.0, 1.0),)
    assert fld.essential_infimum == 0.0


def test_support_union_hull():
    grid = grid15()
    one = CoefficientField.constant(1.0)
    p = preset_problem(
        "weakly-coupled",
        a=one,
        b=CoefficientField.bump(1.0, -1.0, 1.0),
        c=CoefficientField.bump(1.0, 0.0, 2.0),
        d=one,
        e=CoefficientField.zero(),
        f=CoefficientField.zero(),
        grid=grid,
    )
    assert support_union(p) == (-1.0, 2.0)


def test_support_union_empty_raises():
    grid = grid15()
    one = CoefficientField.constant(1.0)
    zero = CoefficientField.zero()
    p = preset_problem(
        "weakly-coupled", a=one, b=zero, c=zero, d=one, e=zero, f=zero, grid=grid
    )
    with pytest.raises(EmptySupport):
        support_union(p)


def test_support_union_offset_interval():
    grid = grid15()
    one = CoefficientField.constant(1.0)
    zero = CoefficientField.zero()
    p = preset_problem(
        "weakly-coupled",
        a=one,
        b=CoefficientField.bump(1.0, 1.0, 2.0),
        c=zero,
        d=one,
        e=zero,
        f=zero,
        grid=grid,
    )
    assert support_union(p) == (1.0, 2.0)
    # origin not inside the support pieces
    assert all(not (lo <= 0.0 <= hi) for lo, hi in support_pieces(p))


def test_preset_wiring():
    grid = grid15()
    one = CoefficientField.constant(1.0)
    b = CoefficientField.bump(0.5, -1.0, 1.0)
    c = CoefficientField.bump(1.0, -1.0, 1.0)
    p = preset_problem("weakly-coupled", a=one, b=b, c=c, d=one, e=b, f=c, grid=grid)
    assert p.nonlinearity.kind == "decoupled-cubic"
    assert p.nonlinearity.f(2.0, 3.0) == 4.0
    assert p.nonlinearity.h(2.0, 3.0) == 9.0
    p2 = preset_problem("spinor", a=one, b=b, c=c, d=one, e=b, f=c, grid=grid)
    assert p2.nonlinearity.kind == "spinor-cubic"
    assert p2.nonlinearity.f(2.0, 3.0) == 13.0
    assert p2.nonlinearity.h(2.0, 3.0) == 13.0


def test_preset_rejects_degenerate_potential():
    grid = grid15()
    zero = CoefficientField.constant(0.0)
    c = CoefficientField.bump(1.0, -1.0, 1.0)
    with pytest.raises(InvalidCoefficient):
        preset_problem(
            "weakly-coupled",
            a=zero,
            b=c,
            c=c,
            d=CoefficientField.constant(1.0),
            e=c,
            f=c,
            grid=grid,
        )


def test_unbounded_coupling_rejected():
    grid = grid15()
    one = CoefficientField.constant(1.0)
    c = CoefficientField.bump(1.0, -1.0, 1.0)
    with pytest.raises(InvalidCoefficient):
        preset_problem(
            "weakly-coupled", a=one, b=one, c=c, d=one, e=c, f=c, grid=grid
        )


def test_grid_validation():
    with pytest.raises(InvalidGrid):
        Grid(L=15.0, n=1500)  # even
    with pytest.raises(InvalidGrid):
        Grid(L=-1.0, n=1501)
    g = Grid(L=15.0, n=3001)
    assert g.h == pytest.approx(0.01)
    assert g.x[g.center_index] == 0.0


def test_grid_must_contain_support():
    one = CoefficientField.constant(1.0)
    c = CoefficientField.bump(1.0, -1.0, 1.0)
    with pytest.raises(InvalidGrid):
        preset_problem(
            "weakly-coupled",
            a=one,
            b=c,
            c=CoefficientField.bump(1.0, 14.0, 16.0),
            d=one,
            e=c,
            f=c,
            grid=Grid(L=15.0, n=1501),
        )


def test_nonnegativity_of_presets_on_quadrant():
    lattice = np.linspace(0.0, 10.0, 51)
    U1, U2 = np.meshgrid(lattice, lattice)
    for nl in (Nonlinearity.decoupled_cubic(), Nonlinearity.spinor_cubic()):
        assert np.all(nl.f(U1, U2) >= 0.0)
        assert np.all(nl.h(U1, U2) >= 0.0)


def test_fields_outside_hull_vanish():
    grid = grid15()
    one = CoefficientField.constant(1.0)
    b = CoefficientField.bump(0.5, -1.0, 1.0)
    c = CoefficientField.bump(1.0, 0.5, 2.0)
    p = preset_problem("weakly-coupled", a=one, b=b, c=c, d=one, e=b, f=c, grid=grid)
    lo, hi = support_union(p)
    xs = np.concatenate((np.linspace(-14, lo - 1e-9, 40), np.linspace(hi + 1e-9, 14, 40)))
    for name in ("b", "c", "e", "f"):
        assert np.all(getattr(p, name).evaluate(xs) == 0.0)


def test_field_scaling():
    fld = CoefficientField.bump(1.5, -1.0, 1.0)
    assert fld.scaled(2.0).evaluate(0.0) == 3.0
    assert fld.scaled(0.0).evaluate(0.0) == 0.0
