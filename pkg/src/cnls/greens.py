"""Decaying linear bases, Green's kernels, and cone constants.

For each potential field ``a`` with positive infimum the operator
``-u'' + a(x) u`` has a pair of positive solutions: ``phi_left``
(increasing, vanishing at the left end) and ``phi_right`` (decreasing,
vanishing at the right end).  Normalized so that their Wronskian
``phi_left * phi_right' - phi_left' * phi_right`` equals -1, they define
the kernel

    G(x, s) = phi_left(min(x, s)) * phi_right(max(x, s))

which inverts the operator with decay at both ends.

Two representations coexist in a :class:`GreensKernel`:

* a continuum basis integrated in log-derivative form (exact for
  constant potentials), used for pointwise kernel evaluation and the
  cone constants;
* the discrete factorization of the second-order finite-difference
  operator on the grid, used by :func:`greens_apply`.  The discrete
  route makes ``greens_apply`` the exact inverse of the difference
  operator, so fixed points of the integral operator coincide with
  solutions of the discretized differential system at any resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .errors import (
    EmptySupport,
    IntegrationOverflow,
    NonPositivePotential,
)
from .model import CoefficientField, Grid

_LOG_CAP = 700.0  # exp overflow threshold for double precision
_FULL_CELL = (1.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0)


# ---------------------------------------------------------------------------
# continuum basis
# ---------------------------------------------------------------------------


def _segments(field: CoefficientField, x0: float, x1: float):
    """Constant-coefficient spans partitioning [x0, x1]."""
    return field.pieces(x0, x1)


def _rk4_riccati(v: float, ell: float, a: float, step: float, nsub: int):
    """Advance (v, ell) with v' = a - v^2, ell' = v over one span."""
    hsub = step / nsub
    for _ in range(nsub):
        k1v = a - v * v
        k1l = v
        v2 = v + 0.5 * hsub * k1v
        k2v = a - v2 * v2
        v3 = v + 0.5 * hsub * k2v
        k3v = a - v3 * v3
        v4 = v + hsub * k3v
        k4v = a - v4 * v4
        ell += hsub / 6.0 * (k1l + 2.0 * v2 + 2.0 * v3 + v4)
        v += hsub / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return v, ell


def _integrate_riccati(field: CoefficientField, nodes: np.ndarray, nsub: int):
    """Log-derivative integration of the growing solution, left to right.

    Returns (ell, v): log of the solution normalized to ell=0 at the first
    node, and its logarithmic slope v = phi'/phi.  Within spans where the
    slope has locked onto sqrt(a) the update is exact and vectorized.
    """
    n = len(nodes)
    ell = np.empty(n)
    vout = np.empty(n)
    v = math.sqrt(float(field.evaluate(nodes[0] + 1e-300)))
    cur = 0.0
    ell[0] = 0.0
    vout[0] = v
    jumps = field.jump_positions()
    j = 0
    while j < n - 1:
        x0, x1 = nodes[j], nodes[j + 1]
        spans = _segments(field, x0, x1)
        if len(spans) == 1:
            a = spans[0][2]
            root = math.sqrt(a)
            if abs(v - root) <= 8.0 * np.finfo(float).eps * root:
                # Slope locked: phi is exactly exponential until the next
                # jump, so fill the whole run in closed form.
                nxt = [t for t in jumps if t > x0 + 1e-300]
                reach = nxt[0] if nxt else np.inf
                jend = int(np.searchsorted(nodes, reach + 1e-300)) - 1
                jend = max(j + 1, min(jend, n - 1))
                ell[j + 1 : jend + 1] = cur + root * (
                    nodes[j + 1 : jend + 1] - x0
                )
                vout[j + 1 : jend + 1] = root
                cur = ell[jend]
                v = root
                j = jend
                continue
            v, cur = _rk4_riccati(v, cur, a, x1 - x0, nsub)
        else:
            for s0, s1, a in spans:
                v, cur = _rk4_riccati(v, cur, a, s1 - s0, nsub)
        j += 1
        ell[j] = cur
        vout[j] = v
    return ell, vout


def _reflected(field: CoefficientField) -> CoefficientField:
    """Field mirrored through the origin."""
    if field.kind == "constant":
        return field
    if field.kind == "piecewise":
        return CoefficientField(
            kind="piecewise",
            values=tuple(reversed(field.values)),
            breakpoints=tuple(-t for t in reversed(field.breakpoints)),
        )
    return CoefficientField(
        kind="bump",
        values=tuple(reversed(field.values)),
        intervals=tuple((-hi, -lo) for lo, hi in reversed(field.intervals)),
    )


def _integrate_linear_from_zero(
    field: CoefficientField, nodes: np.ndarray, nsub: int
):
    """Solution with phi(0)=0, phi'(0)=1, integrated as (phi, phi') with
    running renormalization; returns (ell, v) with ell[0] = -inf."""
    n = len(nodes)
    ell = np.empty(n)
    vout = np.empty(n)
    p, dp, shift = 0.0, 1.0, 0.0
    ell[0] = -np.inf
    vout[0] = np.inf
    for j in range(n - 1):
        for s0, s1, a in _segments(field, nodes[j], nodes[j + 1]):
            hsub = (s1 - s0) / nsub
            for _ in range(nsub):
                k1p, k1d = dp, a * p
                p2, d2 = p + 0.5 * hsub * k1p, dp + 0.5 * hsub * k1d
                k2p, k2d = d2, a * p2
                p3, d3 = p + 0.5 * hsub * k2p, dp + 0.5 * hsub * k2d
                k3p, k3d = d3, a * p3
                p4, d4 = p + hsub * k3p, dp + hsub * k3d
                k4p, k4d = d4, a * p4
                p += hsub / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
                dp += hsub / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)
            if p > 1e150:
                shift += math.log(p)
                dp /= p
                p = 1.0
        ell[j + 1] = math.log(p) + shift
        vout[j + 1] = dp / p
    return ell, vout


@dataclass(frozen=True)
class LinearBasis:
    """Normalized decaying pair for one potential on one axis."""

    x: np.ndarray
    log_left: np.ndarray
    slope_left: np.ndarray
    log_right: np.ndarray
    slope_right: np.ndarray
    crossing: float
    wronskian_error: float
    refinement_error: float
    ode_residual: float

    @property
    def phi_left(self) -> np.ndarray:
        return np.exp(self.log_left)

    @property
    def phi_right(self) -> np.ndarray:
        return np.exp(self.log_right)

    def log_left_at(self, xq):
        return np.interp(xq, self.x, self.log_left)

    def log_right_at(self, xq):
        return np.interp(xq, self.x, self.log_right)


def _finish_basis(
    x: np.ndarray,
    ell1: np.ndarray,
    v1: np.ndarray,
    ell2: np.ndarray,
    v2: np.ndarray,
    refinement_error: float,
    field: CoefficientField,
) -> LinearBasis:
    """Normalize a raw pair to Wronskian -1 and certify it."""
    interior = np.isfinite(ell1) & np.isfinite(ell2)
    # W(x) = -phi1*phi2*(v1 - v2); v1 > 0 > v2 so log|W| is well defined.
    logw = ell1[interior] + ell2[interior] + np.log(v1[interior] - v2[interior])
    delta = -0.5 * float(np.median(logw))
    ell1 = ell1 + delta
    ell2 = ell2 + delta
    wron_err = float(np.max(np.abs(np.exp(logw + 2.0 * delta) - 1.0)))

    if max(ell1.max(), ell2.max()) > _LOG_CAP:
        raise IntegrationOverflow(
            "basis solution exceeds double range; shrink L or the potential"
        )

    diff = ell1 - ell2
    pos = np.nonzero(diff > 0)[0]
    if len(pos) == 0 or pos[0] == 0:
        raise IntegrationOverflow("no interior crossing of the basis pair")
    i = pos[0]
    d0, d1 = diff[i - 1], diff[i]
    if not np.isfinite(d0):
        crossing = float(x[i])
    else:
        crossing = float(x[i - 1] + (x[i] - x[i - 1]) * (-d0) / (d1 - d0))

    # Fourth-order check of v' + v^2 = a away from jumps of the field.
    h = float(x[1] - x[0])
    res = 0.0
    if len(x) >= 5:
        for v in (v1, v2):
            dv = (-v[4:] + 8.0 * v[3:-1] - 8.0 * v[1:-3] + v[:-4]) / (12.0 * h)
            mid = x[2:-2]
            avals = field.evaluate(mid)
            ok = np.isfinite(v[2:-2]) & np.isfinite(v[1:-3]) & np.isfinite(v[:-4])
            for t in field.jump_positions():
                ok &= (mid + 2.0 * h < t) | (mid - 2.0 * h >= t)
            if np.any(ok):
                r = np.abs(dv[ok] + v[2:-2][ok] ** 2 - avals[ok]) / np.maximum(
                    1.0, avals[ok]
                )
                res = max(res, float(r.max()))

    return LinearBasis(
        x=x,
        log_left=ell1,
        slope_left=v1,
        log_right=ell2,
        slope_right=v2,
        crossing=crossing,
        wronskian_error=wron_err,
        refinement_error=refinement_error,
        ode_residual=res,
    )


def build_linear_basis(field: CoefficientField, grid: Grid) -> LinearBasis:
    """Decaying pair for -phi'' + a(x) phi = 0 on the full line.

    The growing direction is integrated in log-derivative form (no
    overflow); one half-step re-integration certifies the accuracy.
    """
    if field.essential_infimum <= 0:
        raise NonPositivePotential("potential must have positive infimum")
    x = grid.x
    ell1, v1 = _integrate_riccati(field, x, nsub=2)
    e1f, _ = _integrate_riccati(field, x, nsub=4)
    refl = _reflected(field)
    ell2r, v2r = _integrate_riccati(refl, x, nsub=2)
    e2f, _ = _integrate_riccati(refl, x, nsub=4)
    ell2 = ell2r[::-1].copy()
    v2 = -v2r[::-1]
    ref_err = float(
        max(np.max(np.abs(ell1 - e1f)), np.max(np.abs(ell2r - e2f)))
    )
    return _finish_basis(x, ell1, v1, ell2, v2, ref_err, field)


def build_halfline_basis(field: CoefficientField, grid: Grid) -> LinearBasis:
    """Basis on [0, L]: left solution vanishes at 0, right solution decays.

    The left solution starts from an exact zero, so it is integrated in
    linear (phi, phi') form with running renormalization; the
    log-derivative form is singular at a Dirichlet zero.
    """
    if field.essential_infimum <= 0:
        raise NonPositivePotential("potential must have positive infimum")
    half = grid.x[grid.center_index :]
    ell1, v1 = _integrate_linear_from_zero(field, half, nsub=2)
    e1f, _ = _integrate_linear_from_zero(field, half, nsub=4)
    refl = _reflected(field)
    tnodes = -half[::-1]
    ell2r, v2r = _integrate_riccati(refl, tnodes, nsub=2)
    e2f, _ = _integrate_riccati(refl, tnodes, nsub=4)
    ell2 = ell2r[::-1].copy()
    v2 = -v2r[::-1]
    fin = np.isfinite(ell1)
    ref_err = float(
        max(
            np.max(np.abs(ell1[fin] - e1f[fin])),
            np.max(np.abs(ell2r - e2f)),
        )
    )
    return _finish_basis(half, ell1, v1, ell2, v2, ref_err, field)


# ---------------------------------------------------------------------------
# P1 moments of piecewise-constant fields (load assembly)
# ---------------------------------------------------------------------------


def _p1_moments(x: np.ndarray, field: CoefficientField | None):
    """Per-cell moments (m00, m01, m11) of the weighted P1 products.

    ``mab[j] = (1/h) * integral over cell j of psi_a psi_b w(s) ds`` where
    psi_0, psi_1 are the descending/ascending hat restrictions on the
    cell.  Sub-cell pieces of ``w`` are integrated exactly, so support
    boundaries need not sit on grid nodes.
    """
    ncell = len(x) - 1
    if field is None:
        return (
            np.full(ncell, _FULL_CELL[0]),
            np.full(ncell, _FULL_CELL[1]),
            np.full(ncell, _FULL_CELL[2]),
        )
    h = float(x[1] - x[0])
    m00 = np.zeros(ncell)
    m01 = np.zeros(ncell)
    m11 = np.zeros(ncell)
    for lo, hi, val in field.pieces(float(x[0]), float(x[-1])):
        if val == 0.0 or hi <= lo:
            continue
        ja = min(max(int(np.searchsorted(x, lo, side="right")) - 1, 0), ncell - 1)
        jb = min(max(int(np.searchsorted(x, hi, side="left")) - 1, 0), ncell - 1)
        full_lo, full_hi = ja, jb
        for j in (ja, jb) if ja != jb else (ja,):
            a1 = max((lo - x[j]) / h, 0.0)
            b1 = min((hi - x[j]) / h, 1.0)
            if b1 <= a1:
                continue
            i11 = (b1**3 - a1**3) / 3.0
            m00[j] += val * (((1 - a1) ** 3 - (1 - b1) ** 3) / 3.0)
            m01[j] += val * ((b1**2 - a1**2) / 2.0 - i11)
            m11[j] += val * i11
            if j == ja:
                full_lo = ja + 1
            if j == jb:
                full_hi = jb - 1
        if full_hi >= full_lo:
            m00[full_lo : full_hi + 1] += val * _FULL_CELL[0]
            m01[full_lo : full_hi + 1] += val * _FULL_CELL[1]
            m11[full_lo : full_hi + 1] += val * _FULL_CELL[2]
    return m00, m01, m11


def hat_average(x: np.ndarray, field: CoefficientField) -> np.ndarray:
    """Hat-function average of a field at every node.

    Equals the nodal value where the field is continuous and the
    two-sided average at a jump sitting on a node; keeps the difference
    scheme second-order accurate for discontinuous coefficients.
    """
    m00, m01, m11 = _p1_moments(x, field)
    out = np.empty(len(x))
    out[1:-1] = m01[:-1] + m11[:-1] + m00[1:] + m01[1:]
    out[0] = m00[0] + m01[0]
    out[-1] = m11[-1] + m01[-1]
    # end nodes only see one cell; rescale their half hats to full mass
    out[0] *= 2.0
    out[-1] *= 2.0
    return out


def _hat_load(moments, u: np.ndarray) -> np.ndarray:
    """Weighted P1 load of nodal values ``u``; end entries are zero."""
    m00, m01, m11 = moments
    rhs = np.zeros_like(u)
    rhs[1:-1] = (
        m01[:-1] * u[:-2] + (m11[:-1] + m00[1:]) * u[1:-1] + m01[1:] * u[2:]
    )
    return rhs


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@dataclass
class GreensKernel:
    """Continuum basis plus the discrete inverse of -D2 + a on one axis."""

    basis: LinearBasis
    field: CoefficientField
    x: np.ndarray
    h: float
    abar: np.ndarray
    log_p: np.ndarray
    log_q: np.ndarray
    crossing_disc: float
    _chol: np.ndarray
    _moment_cache: dict = dc_field(default_factory=dict)

    def moments(self, weight: CoefficientField | None):
        key = weight
        if key not in self._moment_cache:
            self._moment_cache[key] = _p1_moments(self.x, weight)
        return self._moment_cache[key]

    def apply(
        self, values: np.ndarray, weight: CoefficientField | None = None
    ) -> np.ndarray:
        """Solve (-D2 + abar) u = load(weight * values), zero at the ends."""
        rhs = _hat_load(self.moments(weight), np.asarray(values, dtype=float))
        out = np.zeros_like(rhs)
        out[1:-1] = cho_solve_banded((self._chol, False), rhs[1:-1])
        return out

    def load(
        self, values: np.ndarray, weight: CoefficientField | None = None
    ) -> np.ndarray:
        return _hat_load(self.moments(weight), np.asarray(values, dtype=float))


def _discrete_pair(x: np.ndarray, abar: np.ndarray, h: float):
    """Homogeneous solutions of the difference recurrence, in log scale.

    ``p`` vanishes at the left node and increases; ``q`` vanishes at the
    right node and decreases.  The ratio recurrences stay bounded, so no
    overflow occurs for any grid length.
    """
    n = len(x)
    h2 = h * h
    lp = np.full(n, -np.inf)
    lq = np.full(n, -np.inf)
    lp[1] = 0.0
    r = 0.0
    for j in range(1, n - 1):
        denom = (2.0 + h2 * abar[j]) - r
        lp[j + 1] = lp[j] + math.log(denom)
        r = 1.0 / denom
    lq[n - 2] = 0.0
    s = 0.0
    for j in range(n - 2, 0, -1):
        denom = (2.0 + h2 * abar[j]) - s
        lq[j - 1] = lq[j] + math.log(denom)
        s = 1.0 / denom
    # The raw sequences vanish AT the end nodes, so away from the ends
    # they behave like exp(mu (x -/+ end)) / (2 sinh(mu h)).  Restore the
    # amplitude-one-at-the-boundary convention of the continuum basis so
    # that the two normalizations agree to discretization order even for
    # asymmetric potentials.
    mu_l = math.acosh(1.0 + 0.5 * h2 * abar[1]) / h
    mu_r = math.acosh(1.0 + 0.5 * h2 * abar[n - 2]) / h
    lp += math.log(2.0 * math.sinh(mu_l * h))
    lq += math.log(2.0 * math.sinh(mu_r * h))
    # normalize: |W_h| = (p_{j+1} q_j - p_j q_{j+1})/h == 1, equal at crossing
    j = np.arange(1, n - 2)
    logw = (
        lp[j + 1]
        + lq[j]
        + np.log1p(-np.exp(lp[j] - lp[j + 1] + lq[j + 1] - lq[j]))
        - math.log(h)
    )
    delta = -0.5 * float(np.median(logw))
    lp += delta
    lq += delta
    diff = lp - lq
    pos = np.nonzero(diff > 0)[0]
    i = pos[0] if len(pos) else n - 1
    if i == 0 or not np.isfinite(diff[i - 1]):
        crossing = float(x[i])
    else:
        crossing = float(
            x[i - 1] + (x[i] - x[i - 1]) * (-diff[i - 1]) / (diff[i] - diff[i - 1])
        )
    return lp, lq, crossing


def _build_kernel_on_axis(
    field: CoefficientField, x: np.ndarray, basis: LinearBasis
) -> GreensKernel:
    h = float(x[1] - x[0])
    abar = hat_average(x, field)
    n = len(x)
    diag = 2.0 / h**2 + abar[1 : n - 1]
    band = np.zeros((2, n - 2))
    band[0, 1:] = -1.0 / h**2
    band[1, :] = diag
    chol = cholesky_banded(band, lower=False)
    lp, lq, crossing = _discrete_pair(x, abar, h)
    return GreensKernel(
        basis=basis,
        field=field,
        x=x,
        h=h,
        abar=abar,
        log_p=lp,
        log_q=lq,
        crossing_disc=crossing,
        _chol=chol,
    )


@lru_cache(maxsize=32)
def build_kernel(field: CoefficientField, grid: Grid) -> GreensKernel:
    """Full-line kernel for -u'' + a(x) u with decay at both ends."""
    basis = build_linear_basis(field, grid)
    return _build_kernel_on_axis(field, grid.x, basis)


@lru_cache(maxsize=32)
def build_halfline_kernel(field: CoefficientField, grid: Grid) -> GreensKernel:
    """Kernel on [0, L] with a Dirichlet zero at the origin."""
    basis = build_halfline_basis(field, grid)
    return _build_kernel_on_axis(field, basis.x, basis)


def greens_eval(kernel: GreensKernel, x, s):
    """Pointwise kernel value phi_left(min) * phi_right(max).

    Off-grid positions use linear interpolation of the log of the basis,
    which preserves positivity and is exact for constant potentials.
    """
    xa = np.asarray(x, dtype=float)
    sa = np.asarray(s, dtype=float)
    axis = kernel.basis.x
    tol = 1e-9 * (axis[-1] - axis[0])
    if (
        xa.min() < axis[0] - tol
        or xa.max() > axis[-1] + tol
        or sa.min() < axis[0] - tol
        or sa.max() > axis[-1] + tol
    ):
        raise ValueError("kernel evaluated outside its axis")
    lo = np.minimum(xa, sa)
    hi = np.maximum(xa, sa)
    out = np.exp(kernel.basis.log_left_at(lo) + kernel.basis.log_right_at(hi))
    return out if out.shape else float(out)


def greens_apply(
    kernel: GreensKernel,
    values: np.ndarray,
    weight: CoefficientField | None = None,
) -> np.ndarray:
    """Image of a grid function under the kernel, computed in O(N).

    Implements the two-sweep factorization of the kernel product: the
    banded Cholesky back-substitution is the discrete form of
    ``phi_right(x) * int_{left}^x phi_left h + phi_left(x) * int_x^{right}
    phi_right h``.  The optional ``weight`` field multiplies the integrand
    exactly, with sub-cell resolution at its support boundaries.
    """
    return kernel.apply(values, weight)


# ---------------------------------------------------------------------------
# cone constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConeConstants:
    """Shell constants of the positivity cone over a compact window.

    ``m_i`` is the smaller of the two basis values at the window edges,
    ``p0_i`` the infimum over the window of the reciprocal basis weight;
    their product in (0, 1) fixes the lower shell of the cone."""

    window: tuple[float, float]
    m1: float
    p01: float
    m2: float
    p02: float

    @property
    def shell1(self) -> float:
        return self.m1 * self.p01

    @property
    def shell2(self) -> float:
        return self.m2 * self.p02


def _cone_half(
    x: np.ndarray,
    log_left: np.ndarray,
    log_right: np.ndarray,
    crossing: float,
    window: tuple[float, float],
) -> tuple[float, float]:
    lo, hi = window
    m = math.exp(
        min(np.interp(lo, x, log_left), np.interp(hi, x, log_right))
    )

    def weight(pt: float) -> float:
        if pt <= crossing:
            return math.exp(-np.interp(pt, x, log_right))
        return math.exp(-np.interp(pt, x, log_left))

    p0 = min(weight(lo), weight(hi))
    return m, p0


def cone_constants(
    basis1: LinearBasis, basis2: LinearBasis, window: tuple[float, float]
) -> ConeConstants:
    """Cone shell constants from two continuum bases over a window."""
    lo, hi = window
    for b in (basis1, basis2):
        if not (b.x[0] <= lo < hi <= b.x[-1]):
            raise EmptySupport(
                f"window [{lo}, {hi}] empty or outside the axis"
            )
    m1, p01 = _cone_half(
        basis1.x, basis1.log_left, basis1.log_right, basis1.crossing, window
    )
    m2, p02 = _cone_half(
        basis2.x, basis2.log_left, basis2.log_right, basis2.crossing, window
    )
    cone = ConeConstants(window=(lo, hi), m1=m1, p01=p01, m2=m2, p02=p02)
    for prod in (cone.shell1, cone.shell2):
        if not (0.0 < prod < 1.0):
            raise EmptySupport(
                f"cone shell product {prod} outside (0, 1); window too wide"
            )
    return cone


def discrete_cone_constants(
    kernel1: GreensKernel, kernel2: GreensKernel, window: tuple[float, float]
) -> ConeConstants:
    """Cone constants of the discrete kernels backing ``greens_apply``.

    The shell inequality for images of the discrete operator holds
    exactly (up to roundoff) with these constants, whereas the continuum
    constants match them only to the discretization order."""
    lo, hi = window
    m1, p01 = _cone_half(
        kernel1.x, kernel1.log_p, kernel1.log_q, kernel1.crossing_disc, window
    )
    m2, p02 = _cone_half(
        kernel2.x, kernel2.log_p, kernel2.log_q, kernel2.crossing_disc, window
    )
    return ConeConstants(window=(lo, hi), m1=m1, p01=p01, m2=m2, p02=p02)
