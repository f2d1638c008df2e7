"""Comparison differentiators: trigonometric series, Tikhonov, cubic spline.

Three standard 1D methods used as baselines for the spectral
differentiator:

* truncated trigonometric Fourier series with termwise differentiation
  (the constant term has no derivative contribution, which is precisely
  why the polynomial-exponential basis exists);
* Tikhonov-regularized antiderivative fitting, u = argmin
  ||A u - (f - f(-R))||^2 + gamma ||u||^2 with A the cumulative trapezoid
  operator, gamma picked at the L-curve corner;
* natural cubic-spline interpolation on a coarsened grid, differentiated
  piecewise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError
from .grids import Grid1D, SampledFunction1D, trapezoid_weights
from .spectral import DerivativeResult

TRIG_CUTOFF_RANGE = (3, 25)

# gamma scan: uniform partition of (1e-5, 1e-2) with step 5e-4
DEFAULT_GAMMA_GRID = np.arange(1e-5, 1e-2, 5e-4)

NORMAL_EQUATION_TOL = 1e-8
LOW_CONFIDENCE_CURVATURE = 0.05


# ---------------------------------------------------------------------------
# trigonometric basis
# ---------------------------------------------------------------------------


@dataclass
class TrigCoeffs:
    R: float
    a0: float
    a: np.ndarray = field(repr=False)  # cosine coefficients, n = 1..N
    b: np.ndarray = field(repr=False)  # sine coefficients, n = 1..N

    @property
    def N_trig(self) -> int:
        return self.a.size


def _trig_tables(grid: Grid1D, N: int):
    x = grid.nodes()
    n = np.arange(1, N + 1)
    arg = np.outer(n, x) * (np.pi / grid.R)
    return np.cos(arg), np.sin(arg)


def trig_project(f: SampledFunction1D, N: int) -> TrigCoeffs:
    """Fourier coefficients a0, a_n, b_n by quadrature on f's grid."""
    if N < 1:
        raise ValueError("N must be at least 1")
    from .spectral import projection_weights

    R = f.grid.R
    w = projection_weights(f.grid.n_points, f.grid.h)
    C, S = _trig_tables(f.grid, N)
    return TrigCoeffs(
        R=R,
        a0=float(w @ f.values) / (2 * R),
        a=(C * w) @ f.values / R,
        b=(S * w) @ f.values / R,
    )


def trig_partial_sum(coeffs: TrigCoeffs, grid: Grid1D, N: int | None = None) -> np.ndarray:
    N = coeffs.N_trig if N is None else N
    C, S = _trig_tables(grid, N)
    return coeffs.a0 + coeffs.a[:N] @ C + coeffs.b[:N] @ S


def trig_select_cutoff(f: SampledFunction1D, n_range=TRIG_CUTOFF_RANGE) -> int:
    """Cut-off in ``n_range`` minimizing the sup misfit of the partial sum."""
    n_lo, n_hi = n_range
    coeffs = trig_project(f, n_hi)
    C, S = _trig_tables(f.grid, n_hi)
    partial = np.full(f.grid.n_points, coeffs.a0)
    partial += coeffs.a[: n_lo - 1] @ C[: n_lo - 1] + coeffs.b[: n_lo - 1] @ S[: n_lo - 1]
    misfits = []
    for N in range(n_lo, n_hi + 1):
        partial = partial + coeffs.a[N - 1] * C[N - 1] + coeffs.b[N - 1] * S[N - 1]
        misfits.append(np.abs(f.values - partial).max())
    misfits = np.asarray(misfits)
    # near-ties at rounding level resolve to the smallest N
    tie_tol = 1e-12 * max(np.abs(f.values).max(), misfits.min())
    return n_lo + int(np.flatnonzero(misfits <= misfits.min() + tie_tol)[0])


def trig_derivative(coeffs: TrigCoeffs, grid: Grid1D, order: int) -> DerivativeResult:
    """Termwise derivative of the truncated series at the grid nodes.

    The constant term drops out of the differentiated series, so constant
    offsets in the data leave no trace in the result.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    N = coeffs.N_trig
    C, S = _trig_tables(grid, N)
    k = np.pi * np.arange(1, N + 1) / coeffs.R
    if order == 1:
        values = -(k * coeffs.a) @ S + (k * coeffs.b) @ C
    else:
        values = -(k**2 * coeffs.a) @ C - (k**2 * coeffs.b) @ S
    return DerivativeResult(
        samples=SampledFunction1D(grid, values),
        method="trig",
        order=("d1", "d2")[order - 1],
        parameter_record={"cutoff": N},
    )


# ---------------------------------------------------------------------------
# Tikhonov-regularized antiderivative fitting
# ---------------------------------------------------------------------------


@dataclass
class TikhonovScan:
    gamma_grid: np.ndarray
    l_values: np.ndarray  # squared weighted residual ||A u - g||^2 per gamma
    chosen_gamma: float
    minimizer: SampledFunction1D
    corner_index: int
    low_confidence: bool


def _cumtrapz_ops(n: int, h: float):
    """Matvec closures for the cumulative trapezoid operator A and A^T."""

    def A_mv(u):
        v = np.empty_like(u)
        v[0] = 0.0
        v[1:] = np.cumsum((u[:-1] + u[1:])) * (h / 2)
        return v

    def AT_mv(r):
        s = np.cumsum(r[::-1])[::-1]  # s_j = sum_{k >= j} r_k
        out = np.empty_like(r)
        out[0] = (h / 2) * s[1]
        out[1:-1] = (h / 2) * (s[1:-1] + s[2:])
        out[-1] = (h / 2) * s[-1]
        return out

    return A_mv, AT_mv


def lcurve_corner(gamma_grid: np.ndarray, l_values: np.ndarray):
    """Corner of the (log gamma, log l) polyline by discrete curvature.

    Returns ``(gamma, index, low_confidence)``; the corner is the interior
    point of maximum three-point curvature, ties resolving to the smaller
    gamma.  A flat scan (no pronounced corner) is flagged low confidence.
    """
    gamma_grid = np.asarray(gamma_grid, dtype=float)
    l_values = np.asarray(l_values, dtype=float)
    if gamma_grid.size < 5:
        raise ValueError("the L-curve scan needs at least 5 points")
    x = np.log(gamma_grid)
    y = np.log(np.maximum(l_values, np.finfo(float).tiny))
    dx, dy = np.gradient(x), np.gradient(y)
    kappa = (dx * np.gradient(dy) - dy * np.gradient(dx)) / (dx**2 + dy**2) ** 1.5
    interior = kappa[1:-1]
    idx = 1 + int(np.argmax(interior))
    low_confidence = bool(interior.max() < LOW_CONFIDENCE_CURVATURE)
    return float(gamma_grid[idx]), idx, low_confidence


class _TikhonovSystem:
    """Normal equations (A^T W A + gamma W) u = A^T W g on a fixed grid.

    Solved matrix-free with preconditioned CG: A^T W A is, up to boundary
    weights, the Green's matrix of the 1D Laplacian with one Neumann and
    one Dirichlet end, so (gamma L + I)^{-1} composed with L (tridiagonal
    solves) approximates the inverse well and CG converges in a handful
    of iterations.
    """

    def __init__(self, n: int, h: float):
        self.n, self.h = n, h
        self.A_mv, self.AT_mv = _cumtrapz_ops(n, h)
        self.w = trapezoid_weights(n, h)
        main = np.full(n, 2.0)
        main[0] = 1.0  # Neumann at -R; Dirichlet at R via the last row
        self.lap = sp.diags(
            [-np.ones(n - 1), main, -np.ones(n - 1)], [-1, 0, 1], format="csc"
        ) / h**2

    def solve(self, g: np.ndarray, gamma: float) -> tuple[np.ndarray, float]:
        w, n = self.w, self.n
        b = self.AT_mv(w * g)

        def M_mv(u):
            return self.AT_mv(w * self.A_mv(u)) + gamma * (w * u)

        M = spla.LinearOperator((n, n), matvec=M_mv)
        lu = spla.splu((gamma * self.lap + sp.eye(n, format="csc")).tocsc())
        precond = spla.LinearOperator((n, n), matvec=lambda r: self.lap @ lu.solve(r) / self.h)
        u, _ = spla.cg(M, b, rtol=1e-13, atol=0.0, maxiter=400, M=precond)
        b_norm = np.linalg.norm(b)
        residual = np.linalg.norm(M_mv(u) - b)
        if not residual <= NORMAL_EQUATION_TOL * b_norm:
            raise SolverError(
                f"normal-equation residual {residual / b_norm:.2e} above "
                f"{NORMAL_EQUATION_TOL:.0e} at gamma={gamma:.3e}"
            )
        return u, float(self.w @ (self.A_mv(u) - g) ** 2)


_SYSTEM_CACHE: dict = {}


def _system_for(grid: Grid1D) -> _TikhonovSystem:
    key = (grid.n_points, grid.R)
    if key not in _SYSTEM_CACHE:
        _SYSTEM_CACHE[key] = _TikhonovSystem(grid.n_points, grid.h)
    return _SYSTEM_CACHE[key]


def tikhonov_first_derivative(
    f: SampledFunction1D, gamma_grid: np.ndarray | None = None
) -> tuple[TikhonovScan, DerivativeResult]:
    """First derivative via the regularized antiderivative fit.

    Scans the gamma grid, records l(gamma) = ||A u - g||^2, picks the
    L-curve corner and returns the minimizer there.
    """
    gamma_grid = DEFAULT_GAMMA_GRID if gamma_grid is None else np.asarray(gamma_grid, float)
    if gamma_grid.size == 0 or np.any(gamma_grid <= 0) or np.any(np.diff(gamma_grid) <= 0):
        raise ValueError("gamma_grid must be non-empty, positive and increasing")
    system = _system_for(f.grid)
    g = f.values - f.values[0]
    minimizers, l_values = [], []
    for gamma in gamma_grid:
        u, l_val = system.solve(g, float(gamma))
        minimizers.append(u)
        l_values.append(l_val)
    l_values = np.asarray(l_values)
    if gamma_grid.size >= 5:
        chosen_gamma, idx, low_confidence = lcurve_corner(gamma_grid, l_values)
    else:
        idx, chosen_gamma, low_confidence = 0, float(gamma_grid[0]), True
    minimizer = SampledFunction1D(f.grid, minimizers[idx])
    scan = TikhonovScan(
        gamma_grid=gamma_grid,
        l_values=l_values,
        chosen_gamma=chosen_gamma,
        minimizer=minimizer,
        corner_index=idx,
        low_confidence=low_confidence,
    )
    result = DerivativeResult(
        samples=minimizer,
        method="tikhonov",
        order="d1",
        parameter_record={"gamma": chosen_gamma, "low_confidence": low_confidence},
    )
    return scan, result


def tikhonov_second_derivative(
    f: SampledFunction1D, gamma_grid: np.ndarray | None = None
) -> DerivativeResult:
    """Second derivative: regularized differentiation applied twice.

    The first-stage minimizer is differentiated again with a fresh
    L-curve scan.
    """
    scan1, first = tikhonov_first_derivative(f, gamma_grid)
    scan2, second = tikhonov_first_derivative(first.samples, gamma_grid)
    return DerivativeResult(
        samples=second.samples,
        method="tikhonov",
        order="d2",
        parameter_record={
            "gamma_first": scan1.chosen_gamma,
            "gamma_second": scan2.chosen_gamma,
            "low_confidence": scan1.low_confidence or scan2.low_confidence,
        },
    )


# ---------------------------------------------------------------------------
# natural cubic spline
# ---------------------------------------------------------------------------


@dataclass
class SplineCurve:
    """Piecewise cubic S(x) = sum c_k (x - x_i)^k on [x_i, x_{i+1}].

    ``coeffs`` has one row (c0, c1, c2, c3) per interval; natural end
    conditions S''(x_0) = S''(x_n) = 0.
    """

    knots: np.ndarray
    coeffs: np.ndarray = field(repr=False)


def spline_fit(f: SampledFunction1D) -> SplineCurve:
    """Natural cubic interpolating spline through the samples."""
    xk, yk = f.grid.nodes(), f.values
    n = xk.size
    if n < 4:
        raise ValueError("spline fitting needs at least 4 knots")
    hk = np.diff(xk)
    # tridiagonal system for the interior second derivatives
    ab = np.zeros((3, n - 2))
    ab[0, 1:] = hk[1:-1]
    ab[1] = 2 * (hk[:-1] + hk[1:])
    ab[2, :-1] = hk[1:-1]
    rhs = 6 * ((yk[2:] - yk[1:-1]) / hk[1:] - (yk[1:-1] - yk[:-2]) / hk[:-1])
    m = np.zeros(n)
    m[1:-1] = sla.solve_banded((1, 1), ab, rhs)
    coeffs = np.column_stack(
        [
            yk[:-1],
            (yk[1:] - yk[:-1]) / hk - hk * (2 * m[:-1] + m[1:]) / 6,
            m[:-1] / 2,
            (m[1:] - m[:-1]) / (6 * hk),
        ]
    )
    return SplineCurve(knots=xk.copy(), coeffs=coeffs)


def spline_eval(spline: SplineCurve, x: np.ndarray, order: int = 0) -> np.ndarray:
    xk = spline.knots
    x = np.asarray(x, dtype=float)
    tol = 1e-9 * (xk[-1] - xk[0])
    if x.min() < xk[0] - tol or x.max() > xk[-1] + tol:
        raise ValueError("evaluation outside the knot range")
    idx = np.clip(np.searchsorted(xk, x, side="right") - 1, 0, xk.size - 2)
    t = x - xk[idx]
    c0, c1, c2, c3 = spline.coeffs[idx].T
    if order == 0:
        return c0 + t * (c1 + t * (c2 + t * c3))
    if order == 1:
        return c1 + t * (2 * c2 + t * 3 * c3)
    if order == 2:
        return 2 * c2 + 6 * c3 * t
    raise ValueError("order must be 0, 1 or 2")


def spline_derivative(spline: SplineCurve, grid: Grid1D, order: int) -> DerivativeResult:
    """Piecewise-polynomial derivative evaluated at the grid nodes."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    values = spline_eval(spline, grid.nodes(), order)
    return DerivativeResult(
        samples=SampledFunction1D(grid, values),
        method="spline",
        order=("d1", "d2")[order - 1],
        parameter_record={"knots": int(spline.knots.size)},
    )


def coarsen(f: SampledFunction1D, step: int) -> SampledFunction1D:
    """Every ``step``-th sample (endpoints preserved) as a coarse function."""
    if (f.grid.n_points - 1) % step != 0:
        raise ValueError(f"step {step} does not evenly coarsen {f.grid.n_points} nodes")
    values = f.values[::step]
    return SampledFunction1D(Grid1D(f.grid.R, values.size), values.copy())
