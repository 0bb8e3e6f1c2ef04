"""Layer-wise Hessians: exact paths, Kronecker factors and approximations."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hesslab.core.config import settings
from hesslab.core.errors import CapacityError, DimensionError, PreconditionError
from hesslab.data.datasets import gaussian_synthetic
from hesslab.hessian import (
    LayerFactors,
    closed_form_output_hessian,
    full_gterm_operator,
    full_hessian_approx,
    full_output_hessian,
    input_autocorrelation,
    input_mean,
    kron_approx_spectrum,
    layer_factors,
    layerwise_dense,
    layerwise_hvp_operator,
    mean_softmax_hessian,
    s_matrix,
    true_layer_spectrum,
    uniform_softmax_hessian,
)
from hesslab.linalg import kron, max_orthonormality_error, sym_eig_dense
from hesslab.network.model import forward_batch, init_xavier, loss_and_grad


def _finite_difference_hessian(model, data, p, eps=1e-5):
    """Differentiate the exact gradient of layer p's parameters numerically."""
    flat = model.flatten()
    block = model.layer_slices()[p]
    cols = []
    for i in range(block.start, block.stop):
        step = np.zeros_like(flat)
        step[i] = eps
        _, up = loss_and_grad(model.with_params(flat + step), data.inputs, data.labels)
        _, down = loss_and_grad(model.with_params(flat - step), data.inputs, data.labels)
        cols.append((up.flatten()[block] - down.flatten()[block]) / (2 * eps))
    return np.column_stack(cols)


@pytest.mark.parametrize("p", [0, 1])
def test_dense_layer_hessian_matches_finite_differences(tiny_model, tiny_data, p):
    h = layerwise_dense(tiny_model, tiny_data, p)
    assert_allclose(h, _finite_difference_hessian(tiny_model, tiny_data, p), atol=1e-6)


@pytest.mark.parametrize("p", [0, 1, 2])
def test_matrix_free_operator_equals_dense(deep_model, deep_data, p):
    op = layerwise_hvp_operator(deep_model, deep_data, p)
    assert_allclose(op.to_dense(), layerwise_dense(deep_model, deep_data, p), atol=1e-12)


def test_dense_hessian_without_bias_drops_the_bias_coordinates(tiny_model, tiny_data):
    with_bias = layerwise_dense(tiny_model, tiny_data, 0, include_bias=True)
    plain = layerwise_dense(tiny_model, tiny_data, 0, include_bias=False)
    m, n = tiny_model.layer_shape(0, include_bias=True)
    keep = [i * n + j for i in range(m) for j in range(n - 1)]
    assert_allclose(plain, with_bias[np.ix_(keep, keep)], atol=1e-13)


def test_dense_hessian_respects_cap(monkeypatch, tiny_model, tiny_data):
    monkeypatch.setattr(settings, "dense_hessian_cap", 10)
    with pytest.raises(CapacityError):
        layerwise_dense(tiny_model, tiny_data, 0)


def test_single_sample_hessian_is_exactly_kronecker(deep_model, deep_data):
    one = deep_data.take(np.array([3]))
    for p in range(deep_model.num_layers):
        f = layer_factors(deep_model, one, p)
        assert_allclose(layerwise_dense(deep_model, one, p), kron(f.output_hessian, f.input_autocorr), atol=1e-13)


def test_factors_are_symmetric_psd(deep_model, deep_data):
    f = layer_factors(deep_model, deep_data, 1)
    assert f.out_dim == 4 and f.in_dim == 5
    for mat, eig in ((f.output_hessian, f.out_eig), (f.input_autocorr, f.in_eig)):
        assert np.array_equal(mat, mat.T)
        assert eig.values[-1] > -1e-12


def test_factor_sums_do_not_depend_on_threads(monkeypatch, deep_model, deep_data):
    monkeypatch.setattr(settings, "chunk_size", 7)
    serial = layer_factors(deep_model, deep_data, 0, threads=1)
    pooled = layer_factors(deep_model, deep_data, 0, threads=4)
    assert np.array_equal(serial.output_hessian, pooled.output_hessian)
    assert np.array_equal(serial.input_autocorr, pooled.input_autocorr)


def test_input_statistics(deep_model, deep_data):
    mean = input_mean(deep_model, deep_data, 0)
    assert mean[-1] == 1.0
    assert_allclose(mean[:-1], deep_data.inputs.mean(axis=0), atol=1e-14)
    auto = input_autocorrelation(deep_model, deep_data, 0, include_bias=False)
    assert_allclose(auto, deep_data.inputs.T @ deep_data.inputs / deep_data.n_samples, atol=1e-13)


def test_kron_spectrum_vectors_are_eigenvectors_of_the_product(deep_model, deep_data):
    f = layer_factors(deep_model, deep_data, 1)
    spec = kron_approx_spectrum(f, 6)
    full = kron(f.output_hessian, f.input_autocorr)
    assert np.all(np.diff(spec.values) <= 0)
    assert_allclose(full @ spec.vectors, spec.vectors * spec.values, atol=1e-10)
    for (i, j), value in zip(spec.factors, spec.values):
        assert value == pytest.approx(f.out_eig.values[i] * f.in_eig.values[j])
    assert max_orthonormality_error(spec.vectors) < 1e-10


def test_kron_spectrum_breaks_ties_by_factor_index():
    f = LayerFactors.from_matrices(np.eye(2), np.eye(2))
    spec = kron_approx_spectrum(f, 4)
    assert spec.factors.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    with pytest.raises(PreconditionError):
        kron_approx_spectrum(f, 5)


def test_true_spectrum_dense_and_lanczos_agree(deep_model, deep_data):
    m, n = deep_model.layer_shape(0)
    dense = true_layer_spectrum(deep_model, deep_data, 0, 5, method="dense")
    lanczos = true_layer_spectrum(deep_model, deep_data, 0, 5, method="lanczos", iters=m * n, seed=2)
    assert_allclose(lanczos.values, dense.values, atol=1e-9)


def test_true_spectrum_routes_large_layers_to_lanczos(monkeypatch, deep_model, deep_data):
    monkeypatch.setattr(settings, "dense_hessian_cap", 4)
    pairs = true_layer_spectrum(deep_model, deep_data, 0, 3)
    op = layerwise_hvp_operator(deep_model, deep_data, 0)
    for i in range(3):
        v = pairs.vectors[:, i]
        assert np.linalg.norm(op(v) - pairs.values[i] * v) < 1e-6 * max(1.0, pairs.values[0])


def test_gterm_diagonal_blocks_are_layer_hessians(deep_model, deep_data):
    full = full_gterm_operator(deep_model, deep_data).to_dense()
    for p, block in enumerate(deep_model.layer_slices()):
        assert_allclose(full[block, block], layerwise_dense(deep_model, deep_data, p), atol=1e-12)


def test_full_output_hessian_diagonal_blocks(deep_model, deep_data):
    m_full, means = full_output_hessian(deep_model, deep_data)
    bounds = np.concatenate([[0], np.cumsum(deep_model.layer_dims[1:])])
    for p in range(deep_model.num_layers):
        f = layer_factors(deep_model, deep_data, p)
        sl = slice(bounds[p], bounds[p + 1])
        assert_allclose(m_full[sl, sl], f.output_hessian, atol=1e-12)
        assert_allclose(means[p], input_mean(deep_model, deep_data, p), atol=1e-13)


def test_full_output_hessian_cap(monkeypatch, deep_model, deep_data):
    monkeypatch.setattr(settings, "full_output_cap", 5)
    with pytest.raises(CapacityError):
        full_output_hessian(deep_model, deep_data)


def test_full_hessian_approx_is_orthonormal(deep_model, deep_data):
    pairs = full_hessian_approx(deep_model, deep_data, 4)
    assert pairs.dim == deep_model.param_count
    assert 1 <= len(pairs) <= 4
    assert max_orthonormality_error(pairs.vectors) < 1e-10
    assert np.all(np.diff(pairs.values) <= 0)
    with pytest.raises(PreconditionError):
        full_hessian_approx(deep_model, deep_data, 100)


def test_full_hessian_approx_top_value_tracks_the_exact_gterm(tiny_data):
    errors = []
    for seed in range(5):
        model = init_xavier((4, 5, 3), seed=seed)
        exact = np.linalg.eigvalsh(full_gterm_operator(model, tiny_data).to_dense())[-1]
        approx = full_hessian_approx(model, tiny_data, 1).values[0]
        assert approx > 0.0
        errors.append(abs(approx - exact) / exact)
    assert np.median(errors) <= 0.25


def test_output_layer_closed_form_is_exact(deep_model, deep_data):
    last = deep_model.num_layers - 1
    assert_allclose(s_matrix(deep_model, last), np.eye(3))
    a_tilde = mean_softmax_hessian(deep_model, deep_data)
    exact = layer_factors(deep_model, deep_data, last).output_hessian
    assert_allclose(closed_form_output_hessian(deep_model, last, a_tilde), exact, atol=1e-13)


def test_closed_form_scales_by_a_quarter_per_hidden_layer(deep_model):
    a = uniform_softmax_hessian(3)
    s = deep_model.weights[2] @ deep_model.weights[1]
    expected = 0.0625 * s.T @ a @ s
    assert_allclose(closed_form_output_hessian(deep_model, 0, a), expected, atol=1e-14)
    with pytest.raises(DimensionError):
        closed_form_output_hessian(deep_model, 0, np.eye(2))


def test_uniform_softmax_hessian():
    assert_allclose(uniform_softmax_hessian(4), (np.eye(4) - np.full((4, 4), 0.25)) / 4)


def test_small_network_hessian_oracle():
    """(5, 4, 3) net on 8 samples: dense, finite-difference and matrix-free paths agree."""
    model = init_xavier((5, 4, 3), seed=21)
    # first data seed whose ReLU gates sit well clear of zero, so a 1e-3 step never flips one
    data = next(
        d
        for d in (gaussian_synthetic(8, 5, 3, seed=s) for s in range(22, 200))
        if np.min(np.abs(forward_batch(model, d.inputs).pre_activations[0])) > 0.05
    )
    for p in range(model.num_layers):
        dense = layerwise_dense(model, data, p)
        assert_allclose(dense, _finite_difference_hessian(model, data, p, eps=1e-3), atol=1e-4)
        assert_allclose(layerwise_hvp_operator(model, data, p).to_dense(), dense, atol=1e-12)


def test_kron_spectrum_matches_materialized_product(rng):
    a = rng.standard_normal((8, 8))
    b = rng.standard_normal((6, 6))
    f = LayerFactors.from_matrices(a @ a.T / 8, b @ b.T / 6)
    spec = kron_approx_spectrum(f, 48)
    dense = sym_eig_dense(kron(f.output_hessian, f.input_autocorr), method="lapack")
    assert_allclose(spec.values, dense.values, atol=1e-10)
    for i in range(3):
        assert abs(spec.vectors[:, i] @ dense.vectors[:, i]) == pytest.approx(1.0, abs=1e-8)


def test_lanczos_top_ten_of_a_500_dim_layer():
    model = init_xavier((24, 20, 10), seed=5)
    data = gaussian_synthetic(300, 24, 10, seed=6)
    assert model.layer_shape(0) == (20, 25)
    dense = true_layer_spectrum(model, data, 0, 10, method="dense")
    first = true_layer_spectrum(model, data, 0, 10, method="lanczos", iters=200, seed=1)
    second = true_layer_spectrum(model, data, 0, 10, method="lanczos", iters=200, seed=1)
    assert_allclose(first.values, dense.values, rtol=1e-6)
    assert np.array_equal(first.values, second.values)
