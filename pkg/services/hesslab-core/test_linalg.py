"""Dense eigensolvers, Kronecker products, Gram-Schmidt and Lanczos."""

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from hesslab.core.config import settings
from hesslab.core.errors import CapacityError, DimensionError, PreconditionError
from hesslab.linalg import (
    LinearOperator,
    canonical_angles,
    dense,
    fix_signs,
    gram_schmidt,
    kron,
    lanczos_topk,
    max_orthonormality_error,
    orthonormalize,
    ritz_residuals,
    subspace_projector,
    svd_values,
    sym_eig_dense,
)
from hesslab.network.model import init_gaussian_rowscaled


def test_jacobi_and_lapack_agree(random_symmetric):
    a = random_symmetric(8)
    jac = sym_eig_dense(a, method="jacobi")
    lap = sym_eig_dense(a, method="lapack")
    assert_allclose(jac.values, lap.values, atol=1e-10)
    assert_allclose(jac.vectors, lap.vectors, atol=1e-8)


def test_eigenpairs_sorted_and_reconstruct(random_symmetric):
    a = random_symmetric(6)
    pairs = sym_eig_dense(a)
    assert np.all(np.diff(pairs.values) <= 0)
    assert max_orthonormality_error(pairs.vectors) < 1e-10
    assert_allclose(pairs.vectors @ np.diag(pairs.values) @ pairs.vectors.T, a, atol=1e-9)


def test_sym_eig_dense_rejects_rectangular():
    with pytest.raises(DimensionError):
        sym_eig_dense(np.ones((2, 3)))


def test_zero_matrix_has_zero_spectrum():
    pairs = sym_eig_dense(np.zeros((4, 4)), method="jacobi")
    assert_allclose(pairs.values, 0.0)
    assert max_orthonormality_error(pairs.vectors) < 1e-12


@hyp_settings(max_examples=40, deadline=None)
@given(
    st.integers(min_value=1, max_value=6).flatmap(
        lambda n: arrays(np.float64, (n, n), elements=st.floats(-10, 10, allow_nan=False, allow_infinity=False))
    )
)
def test_jacobi_reconstructs_any_symmetric_matrix(a):
    a = a + a.T
    pairs = sym_eig_dense(a, method="jacobi")
    scale = max(1.0, float(np.abs(a).max()))
    assert_allclose(pairs.vectors @ np.diag(pairs.values) @ pairs.vectors.T, a, atol=1e-9 * scale)


@pytest.mark.parametrize("n", [4, 10, 20, 30, 32])
def test_jacobi_converges_on_random_spd_matrices(n):
    for seed in range(20):
        b = np.random.default_rng(seed).standard_normal((n, n))
        a = b @ b.T
        pairs = sym_eig_dense(a, method="jacobi")
        scale = np.linalg.norm(a)
        assert_allclose(pairs.values, np.linalg.eigvalsh(a)[::-1], atol=1e-10 * scale)
        assert_allclose(pairs.vectors @ np.diag(pairs.values) @ pairs.vectors.T, a, atol=1e-9 * scale)
        assert max_orthonormality_error(pairs.vectors) < 1e-10


def test_auto_method_switches_to_lapack_above_the_jacobi_cutoff(monkeypatch, random_symmetric):
    calls = []
    real = dense._jacobi
    monkeypatch.setattr(dense, "_jacobi", lambda a: calls.append(a.shape[0]) or real(a))
    monkeypatch.setattr(settings, "jacobi_max_dim", 32)
    sym_eig_dense(random_symmetric(32))
    sym_eig_dense(random_symmetric(33))
    assert calls == [32]
    monkeypatch.setattr(settings, "jacobi_max_dim", 40)
    sym_eig_dense(random_symmetric(33))
    assert calls == [32, 33]


def test_jacobi_handles_vanishing_off_diagonal_entries():
    a = np.diag([3.0, 2.0, 1.0])
    a[0, 1] = a[1, 0] = 0.5
    a[1, 2] = a[2, 1] = 1e-300
    pairs = sym_eig_dense(a, method="jacobi")
    assert np.all(np.isfinite(pairs.vectors))
    assert_allclose(pairs.values, np.linalg.eigvalsh(a)[::-1], atol=1e-12)


@pytest.mark.slow
def test_jacobi_on_a_hidden_layer_gram_matrix():
    w = init_gaussian_rowscaled((2048, 512, 10), 0).weights[1]
    a = w @ w.T
    pairs = sym_eig_dense(a, method="jacobi")
    assert_allclose(pairs.values, np.linalg.eigvalsh(a)[::-1], atol=1e-10 * np.linalg.norm(a))


def test_fix_signs_makes_largest_entry_positive():
    v = np.array([[0.1, 0.6], [-0.9, -0.8]])
    fixed = fix_signs(v)
    assert_allclose(fixed, [[-0.1, -0.6], [0.9, 0.8]])


def test_kron_layout_and_cap(monkeypatch):
    a = np.arange(4.0).reshape(2, 2)
    b = np.array([[1.0, -1.0, 2.0]])
    assert_allclose(kron(a, b), np.kron(a, b))
    monkeypatch.setattr(settings, "kron_max_dim", 4)
    with pytest.raises(CapacityError):
        kron(a, b)


def test_svd_values_match_numpy(rng):
    a = rng.standard_normal((5, 3))
    assert_allclose(svd_values(a), np.linalg.svd(a, compute_uv=False), atol=1e-10)


def test_gram_schmidt_drops_dependent_columns():
    v = np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 3.0], [0.0, 0.0, 0.0]])
    q, kept = gram_schmidt(v)
    assert kept.tolist() == [0, 2]
    assert q.shape == (3, 2)
    assert max_orthonormality_error(q) < 1e-14


def test_gram_schmidt_drop_tolerance_is_absolute():
    v = np.array([[1e6, 1e6, 0.0], [0.0, 1e-9, 0.0], [0.0, 0.0, 1e-11]])
    q, kept = gram_schmidt(v)
    assert kept.tolist() == [0, 1]
    assert_allclose(np.abs(q), np.eye(3)[:, :2], atol=1e-12)
    _, kept = gram_schmidt(v / np.linalg.norm(v, axis=0))
    assert kept.tolist() == [0, 2]


def test_projector_is_idempotent(rng):
    p = subspace_projector(rng.standard_normal((6, 2)))
    assert_allclose(p @ p, p, atol=1e-12)
    assert np.trace(p) == pytest.approx(2.0)


def test_canonical_angles_of_rotated_basis_vanish(rng):
    u = orthonormalize(rng.standard_normal((7, 3)))
    rot = orthonormalize(rng.standard_normal((3, 3)))
    assert_allclose(canonical_angles(u, u @ rot), 0.0, atol=1e-7)


def test_lanczos_matches_dense_on_full_krylov_space(random_symmetric):
    a = random_symmetric(30)
    op = LinearOperator.from_dense(a)
    top = lanczos_topk(op, 5, iters=30, seed=7)
    dense = sym_eig_dense(a, method="lapack").top(5)
    assert_allclose(top.values, dense.values, atol=1e-8)
    assert_allclose(top.vectors, dense.vectors, atol=1e-6)
    assert np.all(ritz_residuals(op, top) < 1e-7)


def test_lanczos_is_deterministic_per_seed(random_symmetric):
    op = LinearOperator.from_dense(random_symmetric(20))
    first = lanczos_topk(op, 3, iters=12, seed=4)
    second = lanczos_topk(op, 3, iters=12, seed=4)
    assert np.array_equal(first.values, second.values)
    assert np.array_equal(first.vectors, second.vectors)


def test_lanczos_recovers_low_rank_operator_after_breakdown():
    """A rank-2 operator exhausts its Krylov space early and restarts."""
    u = orthonormalize(np.random.default_rng(0).standard_normal((10, 2)))
    a = u @ np.diag([5.0, 2.0]) @ u.T
    top = lanczos_topk(LinearOperator.from_dense(a), 2, iters=10, seed=0)
    assert_allclose(top.values, [5.0, 2.0], atol=1e-10)


def test_lanczos_rejects_bad_k():
    op = LinearOperator.from_dense(np.eye(3))
    with pytest.raises(PreconditionError):
        lanczos_topk(op, 4, iters=4)
    with pytest.raises(PreconditionError):
        lanczos_topk(op, 2, iters=1)


def test_operator_checks_input_shape():
    op = LinearOperator.from_dense(np.eye(3))
    with pytest.raises(DimensionError):
        op(np.ones(2))
    assert_allclose(op.to_dense(), np.eye(3))
