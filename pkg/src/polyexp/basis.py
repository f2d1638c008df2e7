"""Orthonormal polynomial-exponential basis of L2(-R, R).

The generating family is phi_n(x) = x^(n-1) * e^x.  Gram-Schmidt runs in
coefficient space against the exact moment Gram matrix

    <phi_i, phi_j> = m_{i+j-2},    m_k = integral_{-R}^{R} x^k e^{2x} dx,

with the moments produced by the closed form for m_0 and the
integration-by-parts recurrence

    m_k = [R^k e^{2R} - (-R)^k e^{-2R}] / 2 - (k/2) m_{k-1}.

The moment Gram matrix is Hankel-like and catastrophically ill-conditioned,
so the whole construction runs in software multi-precision and only the
final coefficient matrix is rounded to float64.  Evaluation of the basis
functions and their first two derivatives uses the three-term recurrence of
the underlying orthonormal polynomials (weight e^{2x}), which is stable in
double precision where direct monomial summation is not.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from .errors import BasisConstructionError

DEFAULT_PRECISION_DPS = 60
DEFAULT_ORTHONORMALITY_TOL = 1e-8
DEFAULT_CHECK_NODES = 2_000_001
HARD_CAP_N_MAX = 30
MIN_PRECISION_DPS = 15


@dataclass(frozen=True)
class MomentTable:
    """Moments m_k of e^{2x} on (-R, R), kept at construction precision."""

    R: float
    k_max: int
    values: tuple  # mpmath.mpf entries, m_0 .. m_{k_max}
    precision_dps: int

    def as_floats(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])


def compute_moments(R: float, k_max: int, precision_dps: int = DEFAULT_PRECISION_DPS) -> MomentTable:
    """Moments m_k = int_{-R}^{R} x^k e^{2x} dx for k = 0..k_max."""
    if R <= 0:
        raise ValueError("R must be positive")
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    if not isinstance(precision_dps, int) or precision_dps < MIN_PRECISION_DPS:
        raise ValueError(f"precision_dps must be an integer >= {MIN_PRECISION_DPS}")
    with mp.workdps(precision_dps):
        Rm = mp.mpf(repr(float(R)))
        e2R = mp.exp(2 * Rm)
        em2R = mp.exp(-2 * Rm)
        m = [(e2R - em2R) / 2]
        for k in range(1, k_max + 1):
            boundary = (Rm**k * e2R - (-Rm) ** k * em2R) / 2
            m.append(boundary - mp.mpf(k) / 2 * m[-1])
    return MomentTable(float(R), k_max, tuple(m), precision_dps)


@dataclass
class BasisSpec:
    """Coefficient representation of the orthonormal basis.

    Row n of ``coeffs`` gives Psi_{n+1} = sum_k coeffs[n, k] * phi_{k+1}
    (lower triangular, positive diagonal).  ``alpha``/``beta`` are the
    three-term recurrence coefficients of the polynomial parts, used for
    stable evaluation; ``beta[0]`` is unused.
    """

    R: float
    n_max: int
    coeffs: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    orthonormality_tol: float
    orthonormality_defect: float
    construction_dps: int
    _table_cache: dict = field(default_factory=dict, repr=False, compare=False)


def _gram_schmidt_mp(moments: MomentTable, n_max: int):
    """Modified Gram-Schmidt with one reorthogonalization pass.

    Works on coefficient vectors over the monomial-times-exponential family,
    with inner products taken through the moment Gram matrix.  Returns the
    multi-precision coefficient rows and recurrence data.
    """
    m = moments.values
    N = n_max

    def dot(u, v, nu, nv):
        # <sum u_i phi_{i+1}, sum v_j phi_{j+1}>; nu/nv bound the nonzeros
        acc = mp.mpf(0)
        for i in range(nu):
            ui = u[i]
            if ui:
                acc += ui * mp.fsum(v[j] * m[i + j] for j in range(nv) if v[j])
        return acc

    rows = []
    for n in range(N):
        v = [mp.mpf(0)] * N
        v[n] = mp.mpf(1)
        for _ in range(2):
            for l in range(n):
                r = dot(v, rows[l], n + 1, l + 1)
                cl = rows[l]
                for j in range(l + 1):
                    v[j] -= r * cl[j]
        nrm2 = dot(v, v, n + 1, n + 1)
        if nrm2 <= 0:
            raise BasisConstructionError(
                f"Gram matrix lost positive definiteness at n={n + 1}; "
                f"increase the construction precision"
            )
        nrm = mp.sqrt(nrm2)
        rows.append([vi / nrm for vi in v])

    # recurrence for the polynomial parts p_n (Psi_n = p_n * e^x):
    #   x p_n = beta_{n+1} p_{n+1} + alpha_n p_n + beta_n p_{n-1}
    # alpha from the moment contraction of x * p_n^2, beta from the ratio
    # of leading coefficients.
    alpha = []
    beta = [mp.mpf(0)]
    for n in range(N):
        c = rows[n]
        a = mp.fsum(
            c[i] * c[j] * m[i + j + 1] for i in range(n + 1) for j in range(n + 1)
        )
        alpha.append(a)
        if n + 1 < N:
            beta.append(rows[n][n] / rows[n + 1][n + 1])
    return rows, alpha, beta


def _tables_from_recurrence(alpha, beta, p1, x, orders=(0, 1, 2)):
    """Evaluate Psi_n and requested derivatives at ``x`` for all n.

    Returns a dict order -> array of shape (n_max, x.size).
    """
    N = alpha.size
    x = np.asarray(x, dtype=float)
    max_order = max(orders)
    P = np.zeros((N, x.size))
    P[0] = p1
    D = np.zeros_like(P) if max_order >= 1 else None
    S = np.zeros_like(P) if max_order >= 2 else None
    if N > 1:
        P[1] = (x - alpha[0]) * P[0] / beta[1]
        if D is not None:
            D[1] = P[0] / beta[1]
    for n in range(1, N - 1):
        t = x - alpha[n]
        P[n + 1] = (t * P[n] - beta[n] * P[n - 1]) / beta[n + 1]
        if D is not None:
            D[n + 1] = (P[n] + t * D[n] - beta[n] * D[n - 1]) / beta[n + 1]
        if S is not None:
            S[n + 1] = (2 * D[n] + t * S[n] - beta[n] * S[n - 1]) / beta[n + 1]
    ex = np.exp(x)
    out = {}
    if 0 in orders:
        out[0] = P * ex
    if 1 in orders:
        out[1] = (D + P) * ex
    if 2 in orders:
        out[2] = (S + 2 * D + P) * ex
    return out


def basis_tables(spec: BasisSpec, x: np.ndarray, orders=(0, 1, 2)):
    """Tables Psi_n^(order)(x_i), shape (n_max, len(x)), per order."""
    return _tables_from_recurrence(spec.alpha, spec.beta, spec.coeffs[0, 0], x, orders)


def grid_tables(spec: BasisSpec, grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cached (order 0, 1, 2) tables on a Grid1D / one 2D axis."""
    key = (grid.n_points if hasattr(grid, "n_points") else grid.n_points_per_axis, grid.R)
    if key not in spec._table_cache:
        n = key[0]
        x = -grid.R + (2 * grid.R / (n - 1)) * np.arange(n)
        t = basis_tables(spec, x)
        spec._table_cache[key] = (t[0], t[1], t[2])
    return spec._table_cache[key]


def orthonormality_defect(spec: BasisSpec, n_nodes: int = DEFAULT_CHECK_NODES,
                          chunk: int = 250_000) -> float:
    """max |<Psi_m, Psi_n> - delta_mn| with an n_nodes trapezoid rule."""
    if n_nodes < 100_000:
        raise ValueError("the orthonormality check needs at least 1e5 nodes")
    N = spec.n_max
    h = 2 * spec.R / (n_nodes - 1)
    G = np.zeros((N, N))
    for start in range(0, n_nodes, chunk):
        idx = np.arange(start, min(start + chunk, n_nodes))
        x = -spec.R + idx * h
        w = np.full(idx.size, h)
        if idx[0] == 0:
            w[0] = h / 2
        if idx[-1] == n_nodes - 1:
            w[-1] = h / 2
        T0 = basis_tables(spec, x, orders=(0,))[0]
        G += (T0 * w) @ T0.T
    if not np.all(np.isfinite(G)):
        return float("inf")
    return float(np.abs(G - np.eye(N)).max())


def build_basis(
    R: float,
    n_max: int,
    precision_dps: int = DEFAULT_PRECISION_DPS,
    orthonormality_tol: float = DEFAULT_ORTHONORMALITY_TOL,
    check_nodes: int = DEFAULT_CHECK_NODES,
    hard_cap: int = HARD_CAP_N_MAX,
) -> BasisSpec:
    """Construct the basis and verify orthonormality by quadrature.

    Raises :class:`BasisConstructionError` (reporting the measured defect)
    when ``n_max`` exceeds the supported ceiling or the quadrature Gram
    matrix deviates from identity by more than ``orthonormality_tol``.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    moments = compute_moments(R, 2 * n_max, precision_dps)
    with mp.workdps(precision_dps):
        rows, alpha, beta = _gram_schmidt_mp(moments, n_max)
        C = np.zeros((n_max, n_max))
        for i, row in enumerate(rows):
            for j in range(i + 1):
                C[i, j] = float(row[j])
        alpha_f = np.array([float(a) for a in alpha])
        beta_f = np.array([float(b) for b in beta])

    spec = BasisSpec(
        R=float(R),
        n_max=n_max,
        coeffs=C,
        alpha=alpha_f,
        beta=beta_f,
        orthonormality_tol=orthonormality_tol,
        orthonormality_defect=float("nan"),
        construction_dps=precision_dps,
    )
    defect = orthonormality_defect(spec, check_nodes)
    spec.orthonormality_defect = defect
    if n_max > hard_cap:
        raise BasisConstructionError(
            f"n_max={n_max} exceeds the supported ceiling {hard_cap} at "
            f"{precision_dps}-digit precision; measured orthonormality defect "
            f"{defect:.3e} (tolerance {orthonormality_tol:.1e})",
            defect=defect,
        )
    if not defect <= orthonormality_tol:
        raise BasisConstructionError(
            f"orthonormality defect {defect:.3e} exceeds tolerance "
            f"{orthonormality_tol:.1e} for n_max={n_max} at {precision_dps}-digit "
            f"precision",
            defect=defect,
        )
    return spec


def eval_basis(spec: BasisSpec, n: int, x: float, order: int = 0) -> float:
    """Psi_n^(order)(x) for a single point; n is 1-based."""
    if not 1 <= n <= spec.n_max:
        raise ValueError(f"n must be in [1, {spec.n_max}]")
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    if not -spec.R <= x <= spec.R:
        raise ValueError(f"x={x} outside [-{spec.R}, {spec.R}]")
    t = basis_tables(spec, np.array([float(x)]), orders=(order,))
    return float(t[order][n - 1, 0])


@dataclass(frozen=True)
class DerivativeGramMatrix:
    """Matrix M[m, n] = <Psi_{n+1}, Psi'_{m+1}> with its singular spectrum."""

    N: int
    matrix: np.ndarray = field(repr=False)
    smallest_singular_value: float
    condition_number: float


def derivative_gram(spec: BasisSpec, N: int, n_nodes: int = 200_001) -> DerivativeGramMatrix:
    """Quadrature Gram matrix between the basis and its first derivatives."""
    if not 2 <= N <= spec.n_max:
        raise ValueError(f"N must be in [2, {spec.n_max}]")
    x = np.linspace(-spec.R, spec.R, n_nodes)
    h = 2 * spec.R / (n_nodes - 1)
    w = np.full(n_nodes, h)
    w[0] = w[-1] = h / 2
    t = basis_tables(spec, x, orders=(0, 1))
    T0, T1 = t[0][:N], t[1][:N]
    M = (T1 * w) @ T0.T  # M[m, n] = <Psi_{n+1}, Psi'_{m+1}>
    svals = np.linalg.svd(M, compute_uv=False)
    return DerivativeGramMatrix(
        N=N,
        matrix=M,
        smallest_singular_value=float(svals[-1]),
        condition_number=float(svals[0] / svals[-1]),
    )


def basis_to_json(spec: BasisSpec) -> str:
    """JSON document for inspection and cross-implementation comparison."""
    doc = {
        "R": spec.R,
        "N_max": spec.n_max,
        "C": spec.coeffs.flatten().tolist(),  # row-major
        "orthonormality_defect": spec.orthonormality_defect,
        "orthonormality_tol": spec.orthonormality_tol,
        "construction_dps": spec.construction_dps,
        "recurrence_alpha": spec.alpha.tolist(),
        "recurrence_beta": spec.beta.tolist(),
    }
    return json.dumps(doc, indent=2)


def basis_from_json(text: str) -> BasisSpec:
    doc = json.loads(text)
    n = int(doc["N_max"])
    return BasisSpec(
        R=float(doc["R"]),
        n_max=n,
        coeffs=np.asarray(doc["C"], dtype=float).reshape(n, n),
        alpha=np.asarray(doc["recurrence_alpha"], dtype=float),
        beta=np.asarray(doc["recurrence_beta"], dtype=float),
        orthonormality_tol=float(doc["orthonormality_tol"]),
        orthonormality_defect=float(doc["orthonormality_defect"]),
        construction_dps=int(doc["construction_dps"]),
    )
