import json
import math

import numpy as np
import pytest

from polyexp import (
    BasisConstructionError,
    basis_from_json,
    basis_to_json,
    build_basis,
    compute_moments,
    derivative_gram,
    eval_basis,
    orthonormality_defect,
)
from polyexp.basis import basis_tables


def dense_trapezoid(fn, a, b, n=1_000_001):
    x = np.linspace(a, b, n)
    w = np.full(n, (b - a) / (n - 1))
    w[0] = w[-1] = w[0] / 2
    return float(w @ fn(x))


class TestMoments:
    def test_m0_closed_form(self):
        table = compute_moments(3.0, 0)
        expected = (math.exp(6) - math.exp(-6)) / 2
        assert table.as_floats()[0] == pytest.approx(expected, rel=1e-14)

    def test_m0_quadrature_oracle(self):
        table = compute_moments(3.0, 0)
        oracle = dense_trapezoid(lambda x: np.exp(2 * x), -3.0, 3.0)
        assert table.as_floats()[0] == pytest.approx(oracle, rel=1e-9)

    def test_recurrence_examples(self):
        m = compute_moments(3.0, 2).as_floats()
        e6, em6 = math.exp(6), math.exp(-6)
        assert m[1] == pytest.approx((3 * e6 + 3 * em6) / 2 - m[0] / 2, rel=1e-13)
        assert m[2] == pytest.approx((9 * e6 - 9 * em6) / 2 - m[1], rel=1e-13)

    def test_recurrence_closure_high_order(self):
        R, k_max = 3.0, 48
        m = compute_moments(R, k_max).as_floats()
        for k in range(1, k_max + 1):
            boundary = (R**k * math.exp(2 * R) - (-R) ** k * math.exp(-2 * R)) / 2
            assert m[k] == pytest.approx(boundary - k / 2 * m[k - 1], rel=1e-12)

    def test_all_finite_m0_positive(self):
        m = compute_moments(2.0, 30).as_floats()
        assert np.all(np.isfinite(m))
        assert m[0] > 0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            compute_moments(-1.0, 3)
        with pytest.raises(ValueError):
            compute_moments(3.0, -1)
        with pytest.raises(ValueError):
            compute_moments(3.0, 3, precision_dps=5)


class TestBuildBasis:
    def test_first_function_is_normalized_exponential(self):
        spec = build_basis(3.0, 1, check_nodes=1_000_001)
        m0 = compute_moments(3.0, 0).as_floats()[0]
        assert spec.coeffs[0, 0] == pytest.approx(1 / math.sqrt(m0), rel=1e-12)

    def test_two_function_orthonormality(self, basis25):
        x = np.linspace(-3, 3, 1_000_001)
        w = np.full(x.size, 6 / (x.size - 1))
        w[0] = w[-1] = w[0] / 2
        T0 = basis_tables(basis25, x, orders=(0,))[0]
        assert (T0[1] * w) @ T0[0] == pytest.approx(0.0, abs=1e-9)
        assert (T0[1] * w) @ T0[1] == pytest.approx(1.0, abs=1e-9)

    def test_gram_identity_n20(self):
        spec = build_basis(3.0, 20)
        assert orthonormality_defect(spec, 1_000_001) <= 1e-8

    def test_triangularity_exact(self, basis25):
        C = basis25.coeffs
        for i in range(basis25.n_max):
            assert np.all(C[i, i + 1 :] == 0.0)

    def test_positive_diagonal(self, basis25):
        assert np.all(np.diag(basis25.coeffs) > 0)

    def test_defect_recorded(self, basis25):
        assert 0 < basis25.orthonormality_defect <= basis25.orthonormality_tol

    def test_over_ceiling_fails_with_defect(self):
        with pytest.raises(BasisConstructionError) as err:
            build_basis(3.0, 35, check_nodes=200_001)
        assert "defect" in str(err.value)
        assert err.value.defect is not None

    def test_insufficient_precision_fails(self):
        with pytest.raises(BasisConstructionError) as err:
            build_basis(3.0, 25, precision_dps=15, check_nodes=200_001)
        assert err.value.defect > 1e-8

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            build_basis(3.0, 0)
        with pytest.raises(ValueError):
            build_basis(-3.0, 5)


class TestEvalBasis:
    def test_psi1_at_zero(self, basis25):
        m0 = compute_moments(3.0, 0).as_floats()[0]
        assert eval_basis(basis25, 1, 0.0, 0) == pytest.approx(1 / math.sqrt(m0), rel=1e-12)

    def test_psi1_derivative_is_itself(self, basis25):
        for x in (-2.7, -1.0, 0.0, 0.3, 2.99):
            assert eval_basis(basis25, 1, x, 1) == pytest.approx(
                eval_basis(basis25, 1, x, 0), rel=1e-14
            )

    def test_order1_matches_finite_difference_at_half(self, basis25):
        h = 1e-5
        fd = (eval_basis(basis25, 3, 0.5 + h, 0) - eval_basis(basis25, 3, 0.5 - h, 0)) / (2 * h)
        assert eval_basis(basis25, 3, 0.5, 1) == pytest.approx(fd, rel=1e-6)

    @pytest.mark.parametrize("order", [1, 2])
    def test_derivative_consistency_random_points(self, basis25, order):
        rng = np.random.default_rng(42)
        xs = rng.uniform(-2.9, 2.9, 50)
        h = 1e-5
        lower = {order: order - 1}[order]
        for n in range(1, basis25.n_max + 1):
            got = np.array([eval_basis(basis25, n, x, order) for x in xs])
            plus = np.array([eval_basis(basis25, n, x + h, lower) for x in xs])
            minus = np.array([eval_basis(basis25, n, x - h, lower) for x in xs])
            fd = (plus - minus) / (2 * h)
            scale = np.maximum(np.abs(got), 1e-3 * np.abs(got).max())
            assert np.max(np.abs(got - fd) / scale) <= 1e-5

    def test_no_indeterminate_at_origin(self, basis25):
        for n in (1, 2, 3, 25):
            for order in (0, 1, 2):
                assert np.isfinite(eval_basis(basis25, n, 0.0, order))

    def test_argument_errors(self, basis25):
        with pytest.raises(ValueError):
            eval_basis(basis25, 0, 0.0, 0)
        with pytest.raises(ValueError):
            eval_basis(basis25, 26, 0.0, 0)
        with pytest.raises(ValueError):
            eval_basis(basis25, 1, 3.5, 0)
        with pytest.raises(ValueError):
            eval_basis(basis25, 1, 0.0, 3)


class TestDerivativeGram:
    def test_invertible_for_all_sizes(self, basis25):
        for N in range(2, 21):
            gram = derivative_gram(basis25, N)
            assert gram.smallest_singular_value > 0
            assert np.isfinite(gram.condition_number)

    def test_first_entry_is_one(self, basis25):
        gram = derivative_gram(basis25, 2)
        assert gram.matrix[0, 0] == pytest.approx(1.0, abs=1e-9)

    def test_size_validation(self, basis25):
        with pytest.raises(ValueError):
            derivative_gram(basis25, 1)
        with pytest.raises(ValueError):
            derivative_gram(basis25, 26)


class TestJsonExport:
    def test_round_trip(self, basis25):
        doc = json.loads(basis_to_json(basis25))
        assert doc["R"] == 3.0
        assert doc["N_max"] == 25
        assert len(doc["C"]) == 25 * 25
        assert doc["orthonormality_defect"] <= 1e-8
        clone = basis_from_json(basis_to_json(basis25))
        assert np.array_equal(clone.coeffs, basis25.coeffs)
        x = np.linspace(-3, 3, 101)
        for order in (0, 1, 2):
            got = basis_tables(clone, x, orders=(order,))[order]
            want = basis_tables(basis25, x, orders=(order,))[order]
            assert np.array_equal(got, want)
