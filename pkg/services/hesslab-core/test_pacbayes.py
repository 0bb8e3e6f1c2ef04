"""PAC-Bayes objective, eigenbasis changes, optimization and the final bound."""

import math
from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hesslab.core.errors import DomainError, PreconditionError
from hesslab.data.datasets import gaussian_synthetic
from hesslab.network.model import init_xavier
from hesslab.network.training import train_sgd
from hesslab.pacbayes import (
    DEFAULT_B_PREC,
    DEFAULT_C_LAMBDA,
    Variant,
    b_re_value,
    compute_bases,
    final_bound,
    identity_bases,
    init_state,
    kl_bernoulli,
    kl_inverse,
    kl_q_p,
    objective_terms,
    optimize,
    round_prior_scale,
    to_hessian,
    to_standard,
    variance_rank_correlation,
)
from hesslab.pacbayes.optimize import max_varrho


@pytest.fixture
def trained(tiny_model, tiny_data):
    return train_sgd(tiny_model, tiny_data, lr=0.1, batch=8, epochs=5, seed=1).model


@pytest.mark.parametrize("variant", [Variant.APPR, Variant.ITER_M])
def test_basis_change_is_an_isometry(deep_model, deep_data, rng, variant):
    bases = compute_bases(deep_model, deep_data, variant)
    u = rng.standard_normal(deep_model.param_count)
    v = to_hessian(u, bases)
    assert np.linalg.norm(v) == pytest.approx(np.linalg.norm(u), rel=1e-12)
    assert_allclose(to_standard(v, bases), u, atol=1e-12)


def test_identity_bases_leave_vectors_alone(deep_model, rng):
    u = rng.standard_normal(deep_model.param_count)
    assert_allclose(to_hessian(u, identity_bases(deep_model)), u)
    with pytest.raises(PreconditionError):
        to_hessian(u[:-1], identity_bases(deep_model))


def test_kl_vanishes_when_posterior_equals_prior(rng):
    w = rng.standard_normal(7)
    assert kl_q_p(w, np.full(7, -1.5), -1.5, w) == pytest.approx(0.0, abs=1e-12)


def test_kl_matches_gaussian_formula_and_is_basis_free(deep_model, deep_data, rng):
    size = deep_model.param_count
    w, theta0 = rng.standard_normal(size), rng.standard_normal(size)
    varsigma = rng.normal(-2.0, 0.3, size)
    lam, s = math.exp(2 * -1.0), np.exp(2 * varsigma)
    expected = 0.5 * (np.sum(s) / lam + np.sum((w - theta0) ** 2) / lam - size + np.sum(np.log(lam / s)))
    assert kl_q_p(w, varsigma, -1.0, theta0) == pytest.approx(expected, rel=1e-12)
    bases = compute_bases(deep_model, deep_data, Variant.APPR)
    assert kl_q_p(w, varsigma, -1.0, theta0, bases) == pytest.approx(expected, rel=1e-10)


def test_b_re_value_and_domain():
    kl, n = 12.0, 1000
    varrho = -3.0
    log_ratio = math.log(DEFAULT_C_LAMBDA) - 2 * varrho
    expected = (kl + 2 * math.log(DEFAULT_B_PREC * log_ratio) + math.log(math.pi**2 * n / (6 * 0.025))) / (n - 1)
    assert b_re_value(kl, varrho, n) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(DomainError):
        b_re_value(kl, 0.5 * math.log(DEFAULT_C_LAMBDA) + 0.1, n)
    with pytest.raises(PreconditionError):
        b_re_value(kl, varrho, 1)


def test_objective_gradients_match_finite_differences(rng):
    size, n = 6, 1000
    w, theta0 = rng.normal(0.0, 0.1, size), rng.normal(0.0, 0.1, size)
    varsigma = np.log(0.05) + rng.normal(0.0, 0.2, size)
    varrho = -3.0
    terms = objective_terms(w, varsigma, varrho, theta0, n)

    def r(w_, s_, rho_):
        return objective_terms(w_, s_, rho_, theta0, n).r

    eps = 1e-6
    eye = np.eye(size)
    grad_w = [(r(w + eps * e, varsigma, varrho) - r(w - eps * e, varsigma, varrho)) / (2 * eps) for e in eye]
    grad_s = [(r(w, varsigma + eps * e, varrho) - r(w, varsigma - eps * e, varrho)) / (2 * eps) for e in eye]
    grad_rho = (r(w, varsigma, varrho + eps) - r(w, varsigma, varrho - eps)) / (2 * eps)
    assert_allclose(terms.grad_w, grad_w, rtol=1e-5, atol=1e-9)
    assert_allclose(terms.grad_varsigma, grad_s, rtol=1e-5, atol=1e-9)
    assert terms.grad_varrho == pytest.approx(grad_rho, rel=1e-5)
    assert terms.r == pytest.approx(math.sqrt(terms.b_re / 2))


def test_kl_bernoulli_values():
    assert kl_bernoulli(0.5, 0.5) == 0.0
    assert kl_bernoulli(0.0, 0.5) == pytest.approx(math.log(2))
    assert kl_bernoulli(0.1, 0.3) == pytest.approx(0.1 * math.log(1 / 3) + 0.9 * math.log(0.9 / 0.7))
    assert math.isinf(kl_bernoulli(0.2, 0.0))


@pytest.mark.parametrize("q,budget", [(0.0, 0.1), (0.05, 0.02), (0.3, 0.5), (0.9, 1.0)])
def test_kl_inverse_hits_the_budget(q, budget):
    p = kl_inverse(q, budget)
    assert q <= p <= 1.0
    assert kl_bernoulli(q, p) <= budget
    if p < 1.0 - 1e-9:
        assert kl_bernoulli(q, p) == pytest.approx(budget, rel=1e-6)


def test_kl_inverse_edges():
    assert kl_inverse(0.2, 0.0) == 0.2
    assert kl_inverse(1.0, 3.0) == 1.0
    assert kl_inverse(0.2, 1e6) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(PreconditionError):
        kl_inverse(0.2, -1.0)


def test_prior_scale_rounding():
    j, log_lam = round_prior_scale(-3.0, 100, 0.1)
    assert j == round(100 * (math.log(0.1) + 6.0))
    assert log_lam == pytest.approx(math.log(0.1) - j / 100)
    assert round_prior_scale(max_varrho(100, 0.1), 100, 0.1)[0] == 1
    with pytest.raises(DomainError):
        round_prior_scale(0.5 * math.log(0.1) + 0.1, 100, 0.1)


def test_init_state(trained):
    theta0 = init_xavier(trained.layer_dims, seed=99).flatten()
    state = init_state(trained, theta0)
    assert state.varrho == -3.0
    assert_allclose(np.exp(state.varsigma), np.maximum(np.abs(trained.flatten()), 1e-8))
    assert state.prior_scale == pytest.approx(math.exp(-6.0))
    with pytest.raises(PreconditionError):
        init_state(trained, theta0[:-1])


@pytest.mark.parametrize("variant", list(Variant))
def test_optimize_is_deterministic_and_pure(trained, tiny_data, variant):
    theta0 = init_xavier(trained.layer_dims, seed=99).flatten()
    state = init_state(trained, theta0)
    before = state.w.copy()
    kwargs = dict(variant=variant, tau=0.001, T=12, eta=1, seed=4, batch=8)
    first = optimize(state, trained, tiny_data, **kwargs)
    second = optimize(state, trained, tiny_data, **kwargs)
    assert np.array_equal(state.w, before)
    assert state.objective_trace == []
    assert np.array_equal(first.w, second.w)
    assert np.array_equal(first.varsigma, second.varsigma)
    assert first.varrho == second.varrho
    assert len(first.objective_trace) == 12
    assert first.varrho <= max_varrho(DEFAULT_B_PREC, DEFAULT_C_LAMBDA)
    if variant is Variant.BASE:
        assert_allclose(first.bases[0].u, np.eye(first.bases[0].u.shape[0]))


def test_optimize_rejects_bad_settings(trained, tiny_data):
    state = init_state(trained, trained.flatten())
    with pytest.raises(PreconditionError):
        optimize(state, trained, tiny_data, eta=0)


def test_final_bound_is_a_valid_certificate(trained, tiny_data):
    theta0 = init_xavier(trained.layer_dims, seed=99).flatten()
    state = optimize(init_state(trained, theta0), trained, tiny_data, variant=Variant.APPR, T=10, batch=8, seed=2)
    test = tiny_data.take(np.arange(20), name="held-out")
    report = final_bound(state, trained, tiny_data, test, mc_iters=200, mc_freq=20, seed=3)
    again = final_bound(state, trained, tiny_data, test, mc_iters=200, mc_freq=20, seed=3)
    assert report == again
    assert report.mc_samples == 10
    assert report.snn_error <= report.pac_bound <= 1.0
    assert report.lambda_grid_index >= 1
    assert report.kl_divergence >= 0.0
    with pytest.raises(PreconditionError):
        final_bound(state, trained, tiny_data, test, mc_iters=0)


def test_variance_rank_correlation(trained, tiny_data):
    theta0 = init_xavier(trained.layer_dims, seed=99).flatten()
    base = optimize(init_state(trained, theta0), trained, tiny_data, variant=Variant.BASE, T=2, batch=8)
    with pytest.raises(PreconditionError):
        variance_rank_correlation(base)
    appr = optimize(init_state(trained, theta0), trained, tiny_data, variant=Variant.APPR, T=2, batch=8)
    rho = variance_rank_correlation(appr)
    assert -1.0 <= rho <= 1.0


def test_kl_of_a_shifted_mean_with_matching_variances():
    lam = math.exp(2 * -2.0)
    theta0 = np.zeros(4)
    w = np.array([math.sqrt(2 * lam), 0.0, 0.0, 0.0])
    assert kl_q_p(w, np.full(4, -2.0), -2.0, theta0) == pytest.approx(1.0, rel=1e-12)


def test_kl_inverse_closed_form_at_zero_error():
    assert kl_inverse(0.0, 0.7) == pytest.approx(1.0 - math.exp(-0.7), abs=1e-9)


def test_zero_step_size_leaves_the_posterior_alone(trained, tiny_data):
    state = init_state(trained, init_xavier(trained.layer_dims, seed=99).flatten())
    after = optimize(state, trained, tiny_data, variant=Variant.APPR, tau=0.0, T=5, batch=8)
    assert np.array_equal(after.w, state.w)
    assert np.array_equal(after.varsigma, state.varsigma)
    assert after.varrho == state.varrho


def test_kl_matches_the_dense_gaussian_divergence(deep_model, deep_data, rng):
    size = deep_model.param_count
    bases = compute_bases(deep_model, deep_data, Variant.APPR)
    w, theta0 = rng.standard_normal(size), rng.standard_normal(size)
    varsigma, varrho = rng.normal(-2.0, 0.4, size), -1.5
    b = np.column_stack([to_standard(e, bases) for e in np.eye(size)])
    cov_q = b @ np.diag(np.exp(2 * varsigma)) @ b.T
    lam = math.exp(2 * varrho)
    diff = theta0 - w
    _, logdet_q = np.linalg.slogdet(cov_q)
    expected = 0.5 * (np.trace(cov_q) / lam + diff @ diff / lam - size + size * math.log(lam) - logdet_q)
    assert kl_q_p(w, varsigma, varrho, theta0, bases) == pytest.approx(expected, rel=1e-9)


def test_objective_falls_during_the_first_iterations(trained, tiny_data):
    theta0 = init_xavier(trained.layer_dims, seed=99).flatten()
    state = init_state(trained, theta0)
    drops = []
    for seed in range(5):
        trace = optimize(state, trained, tiny_data, variant=Variant.APPR, T=100, batch=8, seed=seed).objective_trace
        drops.append(np.mean(trace[:10]) - np.mean(trace[-10:]))
    assert np.median(drops) > 0.0


def test_high_curvature_directions_get_small_variances(trained, tiny_data):
    theta0 = init_xavier(trained.layer_dims, seed=99).flatten()
    start = init_state(trained, theta0)
    start = replace(start, varsigma=np.full_like(start.varsigma, -1.0))
    rhos = []
    for seed in range(3):
        state = optimize(start, trained, tiny_data, variant=Variant.APPR, tau=0.01, T=500, batch=40, seed=seed)
        rhos.append(variance_rank_correlation(state))
    assert np.median(rhos) <= -0.2


def test_bound_covers_the_test_error_across_runs():
    held = 0
    for seed in range(20):
        train = gaussian_synthetic(40, 4, 3, seed=seed)
        test = gaussian_synthetic(40, 4, 3, seed=1000 + seed)
        theta0 = init_xavier((4, 5, 3), seed=seed)
        model = train_sgd(theta0, train, lr=0.1, batch=8, epochs=5, seed=seed).model
        state = optimize(init_state(model, theta0.flatten()), model, train, variant=Variant.APPR, T=10, batch=8, seed=seed)
        report = final_bound(state, model, train, test, mc_iters=200, mc_freq=20, seed=seed)
        held += report.snn_test_error <= report.pac_bound
    assert held >= 19
