from math import comb

import numpy as np
import pytest

from sindykit import (
    ConfigError,
    DataError,
    LibrarySpec,
    build_matrix,
    enumerate_terms,
    evaluate_terms,
)


def names(spec, state_names):
    return [t.name(state_names) for t in enumerate_terms(spec)]


class TestEnumerateTerms:
    def test_two_state_order_two_ordering(self):
        assert names(LibrarySpec(2, 2), ("x", "y")) == ["1", "x", "y", "xx", "xy", "yy"]

    def test_constant_only(self):
        assert names(LibrarySpec(1, 0), ("x",)) == ["1"]

    def test_three_state_order_five_count(self):
        # stars and bars: C(8, 3) = 56
        assert len(enumerate_terms(LibrarySpec(3, 5))) == 56

    def test_three_state_order_two_column_order(self):
        assert names(LibrarySpec(3, 2), ("x", "y", "z")) == [
            "1", "x", "y", "z", "xx", "xy", "xz", "yy", "yz", "zz"]

    def test_term_count_formula_exhaustive(self):
        for n in range(1, 7):
            for d in range(0, 6):
                for harmonics in (frozenset(), frozenset({1}), frozenset({1, 2})):
                    spec = LibrarySpec(n, d, trig_harmonics=harmonics)
                    expected = comb(n + d, d) + 2 * len(harmonics) * n
                    terms = enumerate_terms(spec)
                    assert len(terms) == expected == spec.n_terms

    def test_without_constant(self):
        assert names(LibrarySpec(2, 1, include_constant=False), ("x", "y")) == ["x", "y"]

    def test_trig_block_ordering(self):
        got = names(LibrarySpec(2, 0, trig_harmonics=frozenset({2, 1})), ("x", "y"))
        assert got == ["1", "sin(x)", "sin(y)", "cos(x)", "cos(y)",
                       "sin(2x)", "sin(2y)", "cos(2x)", "cos(2y)"]

    def test_invalid_specs_rejected(self):
        with pytest.raises(ConfigError):
            LibrarySpec(0, 2)
        with pytest.raises(ConfigError):
            LibrarySpec(2, 9)  # degree cap
        with pytest.raises(ConfigError):
            LibrarySpec(2, 2, trig_harmonics=frozenset({0}))


class TestBuildMatrix:
    def test_single_row_order_two(self):
        theta = build_matrix(LibrarySpec(2, 2), np.array([[2.0, 3.0]]))
        assert np.array_equal(theta.values, [[1.0, 2.0, 3.0, 4.0, 6.0, 9.0]])

    def test_zero_row(self):
        theta = build_matrix(LibrarySpec(2, 3), np.zeros((1, 2)))
        expected = np.zeros(theta.values.shape[1])
        expected[0] = 1.0
        assert np.array_equal(theta.values[0], expected)

    def test_non_finite_rejected_naming_row(self):
        X = np.ones((4, 2))
        X[2, 1] = np.nan
        with pytest.raises(DataError, match="row 2"):
            build_matrix(LibrarySpec(2, 2), X)

    def test_wrong_width_rejected(self):
        with pytest.raises(DataError):
            build_matrix(LibrarySpec(3, 2), np.ones((4, 2)))

    def test_rows_match_single_state_evaluation_exactly(self):
        rng = np.random.default_rng(5)
        spec = LibrarySpec(3, 4, trig_harmonics=frozenset({1}))
        X = rng.standard_normal((30, 3)) * 3.0
        theta = build_matrix(spec, X)
        for i in range(X.shape[0]):
            assert np.array_equal(theta.values[i], evaluate_terms(spec, X[i]))

    def test_row_permutation_permutes_output(self):
        rng = np.random.default_rng(6)
        spec = LibrarySpec(2, 3)
        X = rng.standard_normal((20, 2))
        perm = rng.permutation(20)
        assert np.array_equal(
            build_matrix(spec, X[perm]).values,
            build_matrix(spec, X).values[perm])


class TestEvaluateTerms:
    def test_ones_are_monomial_fixed_points(self):
        out = evaluate_terms(LibrarySpec(2, 3), np.array([1.0, 1.0]))
        assert out.shape == (10,)
        assert np.array_equal(out, np.ones(10))

    def test_lorenz_initial_condition_row(self):
        out = evaluate_terms(LibrarySpec(3, 2), np.array([-8.0, 7.0, 27.0]))
        assert np.array_equal(
            out, [1.0, -8.0, 7.0, 27.0, 64.0, -56.0, -216.0, 49.0, 189.0, 729.0])

    def test_trig_at_pi(self):
        spec = LibrarySpec(1, 0, trig_harmonics=frozenset({1}))
        out = evaluate_terms(spec, np.array([np.pi]))
        assert abs(out[1]) < 1e-12      # sin(pi)
        assert out[2] == -1.0           # cos(pi)

    def test_accepts_explicit_term_list(self):
        spec = LibrarySpec(2, 2)
        terms = enumerate_terms(spec)
        x = np.array([0.5, -2.0])
        assert np.array_equal(evaluate_terms(terms, x), evaluate_terms(spec, x))
