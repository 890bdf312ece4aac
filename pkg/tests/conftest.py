import warnings

import pytest

from cnls.model import CoefficientField, Grid, preset_problem

# Default grids trade tail margin for speed; the margin warning is
# expected and not under test here.
warnings.filterwarnings("ignore", message="decay margin")


def make_problem(kind="weakly-coupled", n=1501, L=15.0, b_height=0.5, sym2=False):
    """Canonical test problem: unit potentials, bumps on [-1, 1] or +/-[1, 2]."""
    grid = Grid(L=L, n=n)
    one = CoefficientField.constant(1.0)
    if sym2:
        b = CoefficientField.bumps(
            [(b_height, -2.0, -1.0), (b_height, 1.0, 2.0)]
        )
        c = CoefficientField.bumps([(1.0, -2.0, -1.0), (1.0, 1.0, 2.0)])
    else:
        b = CoefficientField.bump(b_height, -1.0, 1.0)
        c = CoefficientField.bump(1.0, -1.0, 1.0)
    return preset_problem(
        kind, a=one, b=b, c=c, d=one, e=b, f=c, grid=grid
    )


@pytest.fixture
def canonical():
    return make_problem()


@pytest.fixture
def canonical_fine():
    return make_problem(n=3001)
