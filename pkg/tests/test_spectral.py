import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from barrierkit.errors import DomainError
from barrierkit.spectral import (SymmetricForm, check_orthonormal, extremal_frame,
                                 min_trace_subspace, p_minus, p_minus_batch, random_frame,
                                 trace_over_subspace)


def sym(n, elements=st.floats(-10, 10)):
    return arrays(float, (n, n), elements=elements).map(lambda a: (a + a.T) / 2)


def test_examples():
    for m in (1, 3, 6):
        for ell in range(1, m + 1):
            assert p_minus(np.eye(m), ell) == pytest.approx(1.0)
    assert p_minus(np.diag([2, 2, 2, -2]), 2) == pytest.approx(0.0, abs=1e-15)
    assert p_minus(np.diag([1, 2, 3]), 2) == pytest.approx(1.5)


def test_brute_force_coordinate_subsets():
    d = np.array([0.0, 0, 1, 1])
    best = min(d[list(S)].mean() for S in itertools.combinations(range(4), 3))
    assert best == pytest.approx(1 / 3)
    assert min_trace_subspace(np.diag(d), 3, method="search") == pytest.approx(1 / 3, abs=1e-12)


def test_symmetric_form():
    A = SymmetricForm([[1, 2], [0, 1]])
    assert A.dim == 2 and A[0, 1] == 1.0
    with pytest.raises(DomainError):
        SymmetricForm(np.ones((2, 3)))


def test_ell_validation():
    with pytest.raises(DomainError):
        p_minus(np.eye(3), 0)
    with pytest.raises(DomainError):
        p_minus(np.eye(3), 4)


def test_trace_over_subspace():
    assert trace_over_subspace(np.eye(3), np.eye(3)[:2]) == pytest.approx(2.0)
    rng = np.random.default_rng(1)
    T = rng.standard_normal((5, 5))
    T = T + T.T
    E = random_frame(5, 3, rng)
    direct = sum(e @ T @ e for e in E)
    assert trace_over_subspace(T, E) == pytest.approx(direct, abs=1e-12)
    F = extremal_frame(T, 3)
    assert trace_over_subspace(T, F) == pytest.approx(3 * p_minus(T, 3), abs=1e-12)
    with pytest.raises(DomainError):
        check_orthonormal(2 * np.eye(3)[:2])


def test_ky_fan_search_5x5():
    rng = np.random.default_rng(7)
    for _ in range(40):
        A = rng.standard_normal((5, 5))
        A = A + A.T
        for ell in range(1, 6):
            assert abs(min_trace_subspace(A, ell, method="search") - p_minus(A, ell)) < 1e-10


def test_full_dimension_is_trace():
    A = np.diag([1.0, 5.0, -2.0])
    assert min_trace_subspace(A, 3) == pytest.approx(4 / 3)


def test_batch_matches_single():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((10, 4, 4))
    A = A + np.swapaxes(A, 1, 2)
    np.testing.assert_allclose(p_minus_batch(A, 2), [p_minus(a, 2) for a in A], atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(sym(5), st.integers(1, 4))
def test_monotone_in_ell(A, ell):
    assert p_minus(A, ell) <= p_minus(A, ell + 1) + 1e-12


@settings(max_examples=100, deadline=None)
@given(sym(4), st.integers(1, 4), st.floats(-50, 50))
def test_translation(A, ell, t):
    assert p_minus(A + t * np.eye(4), ell) == pytest.approx(p_minus(A, ell) + t, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(sym(4), sym(4), st.integers(1, 4))
def test_concavity(A, B, ell):
    assert p_minus(0.5 * A + 0.5 * B, ell) >= 0.5 * p_minus(A, ell) + 0.5 * p_minus(B, ell) - 1e-10


@settings(max_examples=50, deadline=None)
@given(sym(4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_no_frame_beats_p_minus(A, ell, seed):
    E = random_frame(4, ell, np.random.default_rng(seed))
    assert trace_over_subspace(A, E) / ell >= p_minus(A, ell) - 1e-10
