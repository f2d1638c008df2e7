"""Uniform grids, sampled functions and trapezoid-based norms.

All data enters and leaves the package as samples on uniform symmetric
grids over (-R, R) in 1D or (-R, R)^2 in 2D.  Norms and errors are
computed with composite trapezoid weights on the sampling grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import CsvFormatError, UndefinedMetricError

# relative slack when matching a coordinate against a grid node
NODE_TOL = 1e-9


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of ``n_points`` nodes on [-R, R]."""

    R: float
    n_points: int

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be positive")
        if self.n_points < 2:
            raise ValueError("n_points must be at least 2")

    @property
    def h(self) -> float:
        return 2 * self.R / (self.n_points - 1)

    def nodes(self) -> np.ndarray:
        return -self.R + self.h * np.arange(self.n_points)


@dataclass(frozen=True)
class Grid2D:
    """Tensor product of two identical 1D axes on [-R, R]^2."""

    R: float
    n_points_per_axis: int

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be positive")
        if self.n_points_per_axis < 2:
            raise ValueError("n_points_per_axis must be at least 2")

    @property
    def h(self) -> float:
        return 2 * self.R / (self.n_points_per_axis - 1)

    def axis(self) -> Grid1D:
        return Grid1D(self.R, self.n_points_per_axis)

    def nodes(self) -> np.ndarray:
        return self.axis().nodes()


def _as_finite_array(values, shape, what):
    arr = np.asarray(values, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{what} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite entries")
    return arr


@dataclass
class SampledFunction1D:
    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = _as_finite_array(self.values, (self.grid.n_points,), "values")


@dataclass
class SampledField2D:
    """Row index follows x, column index follows y."""

    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.grid.n_points_per_axis
        self.values = _as_finite_array(self.values, (n, n), "values")


def trapezoid_weights(n_points: int, h: float) -> np.ndarray:
    w = np.full(n_points, h)
    w[0] = w[-1] = h / 2
    return w


def trapezoid_integral_1d(f: SampledFunction1D) -> float:
    return float(trapezoid_weights(f.grid.n_points, f.grid.h) @ f.values)


def trapezoid_integral_2d(f: SampledField2D) -> float:
    w = trapezoid_weights(f.grid.n_points_per_axis, f.grid.h)
    return float(w @ f.values @ w)


def sup_norm(f: SampledFunction1D | SampledField2D) -> float:
    return float(np.abs(f.values).max())


def _subdomain_mask(nodes: np.ndarray, lo: float, hi: float, h: float) -> np.ndarray:
    tol = NODE_TOL * h
    return (nodes >= lo - tol) & (nodes <= hi + tol)


def relative_l2_error(f_true, f_comp, subdomain=None) -> float:
    """Relative L2 error of ``f_comp`` against ``f_true``.

    ``subdomain`` restricts the trapezoid norm to grid nodes inside an
    interval (1D) or a square (2D), given as ``(lo, hi)`` per axis;
    nodes coinciding with the bounds are included.  Raises
    :class:`UndefinedMetricError` when the reference norm vanishes.
    """
    if type(f_true) is not type(f_comp):
        raise ValueError("f_true and f_comp must be the same sampled type")
    if f_true.grid != f_comp.grid:
        raise ValueError("f_true and f_comp must share a grid")

    if isinstance(f_true, SampledFunction1D):
        nodes = f_true.grid.nodes()
        if subdomain is None:
            mask = np.ones(nodes.size, dtype=bool)
        else:
            mask = _subdomain_mask(nodes, subdomain[0], subdomain[1], f_true.grid.h)
        if mask.sum() < 2:
            raise ValueError("subdomain contains fewer than two grid nodes")
        w = trapezoid_weights(int(mask.sum()), f_true.grid.h)
        diff = f_true.values[mask] - f_comp.values[mask]
        ref = f_true.values[mask]
        num = w @ diff**2
        den = w @ ref**2
    else:
        nodes = f_true.grid.nodes()
        if subdomain is None:
            mask = np.ones(nodes.size, dtype=bool)
        else:
            mask = _subdomain_mask(nodes, subdomain[0], subdomain[1], f_true.grid.h)
        if mask.sum() < 2:
            raise ValueError("subdomain contains fewer than two grid nodes")
        w = trapezoid_weights(int(mask.sum()), f_true.grid.h)
        W = np.outer(w, w)
        diff = (f_true.values - f_comp.values)[np.ix_(mask, mask)]
        ref = f_true.values[np.ix_(mask, mask)]
        num = float((W * diff**2).sum())
        den = float((W * ref**2).sum())

    if den == 0.0:
        raise UndefinedMetricError("reference function has zero L2 norm on the subdomain")
    return float(np.sqrt(num / den))


# ---------------------------------------------------------------------------
# CSV ingestion and emission
#
# 1D files carry a header ``x,<name>`` and one node per row; 2D files carry
# ``x,y,<name>`` in row-major node order (x outer, y inner).  Nodes must
# form a uniform symmetric grid to within NODE_TOL * h.
# ---------------------------------------------------------------------------


def _read_rows(path, expected_cols):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("empty file", line=1) from None
        header = [c.strip() for c in header]
        if len(header) != expected_cols:
            raise CsvFormatError(
                f"expected {expected_cols} columns in header, found {len(header)}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != expected_cols:
                raise CsvFormatError(f"expected {expected_cols} fields, found {len(row)}", line=lineno)
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise CsvFormatError(f"non-numeric field in {row!r}", line=lineno) from None
    if not rows:
        raise CsvFormatError("no data rows", line=2)
    return header, np.asarray(rows)


def _validate_axis(nodes: np.ndarray, what: str, base_line: int = 2):
    n = nodes.size
    if n < 2:
        raise CsvFormatError(f"{what} axis needs at least 2 nodes", line=base_line)
    lo, hi = nodes[0], nodes[-1]
    if not lo < hi:
        raise CsvFormatError(f"{what} axis is not increasing", line=base_line)
    if abs(lo + hi) > NODE_TOL * (hi - lo):
        raise CsvFormatError(f"{what} axis is not symmetric about 0", line=base_line)
    h = (hi - lo) / (n - 1)
    expected = lo + h * np.arange(n)
    bad = np.abs(nodes - expected) > NODE_TOL * h
    if bad.any():
        raise CsvFormatError(
            f"{what} axis is not uniform near node {int(np.argmax(bad))}",
            line=base_line + int(np.argmax(bad)),
        )
    return hi, n


def read_csv_1d(path) -> SampledFunction1D:
    header, data = _read_rows(path, 2)
    if header[0].lower() != "x":
        raise CsvFormatError(f"first column must be 'x', found {header[0]!r}", line=1)
    x, f = data[:, 0], data[:, 1]
    R, n = _validate_axis(x, "x")
    return SampledFunction1D(Grid1D(R, n), f)


def read_csv_2d(path) -> SampledField2D:
    header, data = _read_rows(path, 3)
    if header[0].lower() != "x" or header[1].lower() != "y":
        raise CsvFormatError("first two columns must be 'x,y'", line=1)
    x, y, f = data[:, 0], data[:, 1], data[:, 2]
    y_axis = np.unique(y)
    n = y_axis.size
    if data.shape[0] % n != 0 or data.shape[0] // n != n:
        raise CsvFormatError(f"{data.shape[0]} rows do not form a square grid", line=2)
    x_axis = x[::n]
    if not np.array_equal(np.repeat(x_axis, n), x) or not np.array_equal(np.tile(y_axis, n), y):
        raise CsvFormatError("rows are not in row-major (x outer, y inner) order", line=2)
    R, _ = _validate_axis(x_axis, "x")
    Ry, _ = _validate_axis(y_axis, "y")
    if abs(R - Ry) > NODE_TOL * R:
        raise CsvFormatError("x and y axes differ", line=2)
    return SampledField2D(Grid2D(R, n), f.reshape(n, n))


def write_csv_1d(path, grid: Grid1D, columns: dict[str, np.ndarray]) -> None:
    nodes = grid.nodes()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", *columns.keys()])
        cols = [np.asarray(c) for c in columns.values()]
        for i in range(grid.n_points):
            writer.writerow([repr(float(nodes[i]))] + [repr(float(c[i])) for c in cols])


def write_csv_2d(path, grid: Grid2D, columns: dict[str, np.ndarray]) -> None:
    nodes = grid.nodes()
    n = grid.n_points_per_axis
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", *columns.keys()])
        cols = [np.asarray(c) for c in columns.values()]
        for i in range(n):
            for j in range(n):
                writer.writerow(
                    [repr(float(nodes[i])), repr(float(nodes[j]))]
                    + [repr(float(c[i, j])) for c in cols]
                )
