import numpy as np
import pytest

from swobs.measures import MeasureKind, measure, measure_limit_oracle, operator_norm, vec_norm

K1, K2, KI = MeasureKind.L1, MeasureKind.L2, MeasureKind.LINF
ALL_KINDS = [K1, K2, KI]


def test_closed_forms_reference_values():
    A = np.array([[-2.0, -1.0], [1.0, -3.0]])
    assert measure(K1, A) == -1.0
    assert measure(K1, np.zeros((2, 2))) == 0.0
    B = np.array([[-1.1, 1.0], [0.0, -0.1]])
    assert measure(KI, B) == pytest.approx(-0.1, abs=1e-15)
    assert measure(K2, np.eye(3)) == pytest.approx(1.0, abs=1e-12)


def test_l1_is_column_based_linf_row_based():
    A = np.array([[1.0, 100.0], [0.0, 2.0]])
    assert measure(K1, A) == 102.0  # column 2: 2 + |100|
    assert measure(KI, A) == 101.0  # row 1: 1 + |100|


def test_limit_oracle_matches_closed_forms():
    A = np.array([[-2.0, -1.0], [1.0, -3.0]])
    assert measure_limit_oracle(K1, A, 1e-6) == pytest.approx(-1.0, abs=1e-4)
    assert measure_limit_oracle(KI, np.zeros((3, 3)), 0.37) == 0.0
    assert measure_limit_oracle(K2, np.diag([-3.0, -5.0]), 1e-6) == pytest.approx(-3.0, abs=1e-4)


def test_oracle_rejects_nonpositive_h():
    with pytest.raises(ValueError):
        measure_limit_oracle(K1, np.eye(2), 0.0)
    with pytest.raises(ValueError):
        measure_limit_oracle(K1, np.eye(2), -1e-3)


def test_vec_norms():
    assert vec_norm(K1, [3.0, 3.0]) == 6.0
    assert vec_norm(KI, [-1.0, 0.0]) == 1.0
    assert vec_norm(K2, [3.0, 4.0]) == 5.0


def test_input_validation():
    with pytest.raises(ValueError):
        measure(K1, np.ones((2, 3)))
    with pytest.raises(ValueError):
        measure(K2, np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        vec_norm(K1, [1.0, np.inf])
    with pytest.raises(ValueError):
        operator_norm(KI, np.ones((3, 1)))


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_subadditivity_and_scaling(kind, rng):
    for _ in range(40):
        n = int(rng.integers(2, 6))
        A = rng.normal(size=(n, n)) * 3.0
        B = rng.normal(size=(n, n)) * 3.0
        assert measure(kind, A + B) <= measure(kind, A) + measure(kind, B) + 1e-10
        alpha = float(rng.uniform(0.0, 5.0))
        assert measure(kind, alpha * A) == pytest.approx(alpha * measure(kind, A), abs=1e-10)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_measure_bounds_eigenvalue_real_parts(kind, rng):
    for _ in range(40):
        n = int(rng.integers(2, 6))
        A = rng.normal(size=(n, n)) * 2.0
        re = np.real(np.linalg.eigvals(A))
        assert np.max(re) <= measure(kind, A) + 1e-10
        assert np.min(re) >= -measure(kind, -A) - 1e-10


def test_l1_of_transpose_equals_linf(rng):
    for _ in range(40):
        n = int(rng.integers(1, 7))
        A = rng.normal(size=(n, n)) * 4.0
        assert measure(K1, A.T) == pytest.approx(measure(KI, A), abs=1e-12)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_oracle_error_shrinks_linearly(kind, rng):
    hs = (1e-3, 1e-4, 1e-5)
    for _ in range(20):
        n = int(rng.integers(2, 6))
        A = rng.normal(size=(n, n)) * 2.0
        mu = measure(kind, A)
        diffs = [abs(measure_limit_oracle(kind, A, h) - mu) for h in hs]
        slope = (diffs[0] - diffs[1]) / (hs[0] - hs[1])
        assert diffs[2] <= max(1.5 * slope * hs[2], 1e-10)
