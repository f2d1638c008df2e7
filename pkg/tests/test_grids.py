import math

import numpy as np
import pytest

from polyexp import (
    CsvFormatError,
    Grid1D,
    Grid2D,
    SampledField2D,
    SampledFunction1D,
    UndefinedMetricError,
    read_csv_1d,
    read_csv_2d,
    relative_l2_error,
    sup_norm,
    trapezoid_integral_1d,
    trapezoid_integral_2d,
    write_csv_1d,
    write_csv_2d,
)


def make_1d(fn, R=3.0, n=6001):
    g = Grid1D(R, n)
    return SampledFunction1D(g, fn(g.nodes()))


def make_2d(fn, R=3.0, n=601):
    g = Grid2D(R, n)
    X, Y = np.meshgrid(g.nodes(), g.nodes(), indexing="ij")
    return SampledField2D(g, fn(X, Y))


class TestGrids:
    def test_node_formula_round_trip(self):
        g = Grid1D(3.0, 6001)
        assert g.h == pytest.approx(0.001, rel=1e-15)
        x = g.nodes()
        assert x[0] == -3.0 and x[-1] == 3.0
        i = np.arange(g.n_points)
        assert np.array_equal(x, -g.R + i * g.h)

    def test_validation(self):
        with pytest.raises(ValueError):
            Grid1D(0.0, 10)
        with pytest.raises(ValueError):
            Grid1D(3.0, 1)
        with pytest.raises(ValueError):
            SampledFunction1D(Grid1D(3.0, 5), np.zeros(4))
        with pytest.raises(ValueError):
            SampledFunction1D(Grid1D(3.0, 3), np.array([0.0, np.nan, 1.0]))


class TestTrapezoid1D:
    def test_constant_exact(self):
        for n in (2, 17, 6001):
            assert trapezoid_integral_1d(make_1d(lambda x: np.ones_like(x), n=n)) == pytest.approx(
                6.0, abs=1e-12
            )

    def test_linear_exact(self):
        assert trapezoid_integral_1d(make_1d(lambda x: x)) == pytest.approx(0.0, abs=1e-12)

    def test_quadratic_error_bound(self):
        # composite error for x^2 at h = 1e-3 is exactly h^2 = 1e-6
        val = trapezoid_integral_1d(make_1d(lambda x: x**2))
        assert abs(val - 18.0) <= 1e-6 + 1e-10
        assert val - 18.0 == pytest.approx(1e-6, rel=1e-6)

    def test_affine_exactness_property(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a, b = rng.normal(size=2)
            n = int(rng.integers(2, 400))
            R = float(rng.uniform(0.5, 5.0))
            f = make_1d(lambda x: a + b * x, R=R, n=n)
            assert trapezoid_integral_1d(f) == pytest.approx(2 * R * a, abs=1e-12 * max(1, abs(a)))


class TestTrapezoid2D:
    def test_constant(self):
        assert trapezoid_integral_2d(make_2d(lambda x, y: np.ones_like(x))) == pytest.approx(
            36.0, abs=1e-9
        )

    def test_odd_symmetry(self):
        assert trapezoid_integral_2d(make_2d(lambda x, y: x * y)) == pytest.approx(0.0, abs=1e-10)

    def test_separable_quadratic(self):
        # iterated rule error: 2 * 6 * h^2 with h = 0.01, i.e. 1.2e-3
        val = trapezoid_integral_2d(make_2d(lambda x, y: x**2 + y**2))
        assert val == pytest.approx(216.0012, abs=5e-7)
        assert abs(val - 216.0) <= 1.3e-3


class TestSupNorm:
    def test_zero(self):
        assert sup_norm(make_1d(lambda x: 0 * x)) == 0.0

    def test_linear(self):
        assert sup_norm(make_1d(lambda x: x)) == 3.0

    def test_dense_sine(self):
        assert sup_norm(make_1d(lambda x: np.sin(4 * x))) == pytest.approx(1.0, abs=1e-5)


class TestRelativeL2:
    def test_identical(self, sin4x):
        assert relative_l2_error(sin4x, sin4x) == 0.0

    def test_double(self, sin4x):
        doubled = SampledFunction1D(sin4x.grid, 2 * sin4x.values)
        assert relative_l2_error(sin4x, doubled) == pytest.approx(1.0, rel=1e-12)

    def test_constant_offset_closed_form(self, sin4x):
        # || 0.01 ||_2 / || sin 4x ||_2 with || sin 4x ||^2 = 3 - sin(24)/8
        shifted = SampledFunction1D(sin4x.grid, sin4x.values + 0.01)
        expected = 0.01 * math.sqrt(6) / math.sqrt(3 - math.sin(24) / 8)
        assert relative_l2_error(sin4x, shifted) == pytest.approx(expected, abs=1e-5)

    def test_scale_invariance(self, sin4x):
        comp = SampledFunction1D(sin4x.grid, sin4x.values + 0.3 * np.cos(sin4x.grid.nodes()))
        base = relative_l2_error(sin4x, comp)
        for c in (-7.5, 0.002, 1e6):
            scaled_t = SampledFunction1D(sin4x.grid, c * sin4x.values)
            scaled_c = SampledFunction1D(sin4x.grid, c * comp.values)
            assert relative_l2_error(scaled_t, scaled_c) == pytest.approx(base, rel=1e-12)

    def test_subdomain_includes_boundary_nodes(self, sin4x):
        comp = SampledFunction1D(sin4x.grid, sin4x.values + 1.0)
        x = sin4x.grid.nodes()
        mask = (x >= -2.0) & (x <= 2.0)
        assert mask.sum() == 4001  # node at exactly +-2 included
        full = relative_l2_error(sin4x, comp)
        interior = relative_l2_error(sin4x, comp, (-2.0, 2.0))
        assert interior != full and interior > 0

    def test_zero_reference_raises(self):
        zero = make_1d(lambda x: 0 * x)
        other = make_1d(lambda x: x)
        with pytest.raises(UndefinedMetricError):
            relative_l2_error(zero, other)

    def test_2d_subdomain(self):
        truth = make_2d(lambda x, y: np.sin(x) + y**2)
        comp = SampledField2D(truth.grid, truth.values + 0.01)
        full = relative_l2_error(truth, comp)
        interior = relative_l2_error(truth, comp, (-2.0, 2.0))
        assert 0 < interior and 0 < full and interior != full


class TestCsv:
    def test_1d_round_trip(self, tmp_path):
        g = Grid1D(3.0, 101)
        values = np.sin(g.nodes())
        path = tmp_path / "f.csv"
        write_csv_1d(path, g, {"f": values})
        back = read_csv_1d(path)
        assert back.grid == g
        assert np.array_equal(back.values, values)

    def test_output_column_name_free(self, tmp_path):
        g = Grid1D(2.0, 11)
        path = tmp_path / "d.csv"
        write_csv_1d(path, g, {"d1": np.arange(11.0)})
        back = read_csv_1d(path)
        assert np.array_equal(back.values, np.arange(11.0))

    def test_2d_round_trip(self, tmp_path):
        g = Grid2D(1.0, 7)
        X, Y = np.meshgrid(g.nodes(), g.nodes(), indexing="ij")
        values = X * Y + X**2
        path = tmp_path / "f2.csv"
        write_csv_2d(path, g, {"f": values})
        back = read_csv_2d(path)
        assert back.grid == g
        assert np.array_equal(back.values, values)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.0,1.0\n0.1,1.1\n")
        with pytest.raises(CsvFormatError):
            read_csv_1d(path)  # header row parses as non-symmetric axis

    def test_non_numeric_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,f\n-1.0,0.0\noops,1.0\n1.0,0.0\n")
        with pytest.raises(CsvFormatError) as err:
            read_csv_1d(path)
        assert err.value.line == 3

    def test_non_uniform_grid_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,f\n-1.0,0.0\n-0.45,0.0\n0.0,0.0\n0.5,0.0\n1.0,0.0\n")
        with pytest.raises(CsvFormatError):
            read_csv_1d(path)

    def test_wrong_field_count_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,f\n-1.0,0.0\n0.0\n1.0,0.0\n")
        with pytest.raises(CsvFormatError) as err:
            read_csv_1d(path)
        assert err.value.line == 3

    def test_2d_row_major_enforced(self, tmp_path):
        path = tmp_path / "bad2.csv"
        rows = ["x,y,f"]
        g = Grid2D(1.0, 3)
        for j in g.nodes():
            for i in g.nodes():  # transposed order
                rows.append(f"{j},{i},0.0")
        rows[1], rows[4] = rows[4], rows[1]  # break ordering outright
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(CsvFormatError):
            read_csv_2d(path)
