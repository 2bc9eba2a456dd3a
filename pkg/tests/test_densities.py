import itertools

import numpy as np
import pytest
import torch
from scipy import stats

from relgof.schemas import GibbsConfig
from relgof.stats.densities import (
    BLOBS_CENTERS,
    GaussianMixture,
    IsotropicNormal,
    RbmParams,
    blobs_model,
    gaussian_model,
    mixture1d_models,
    random_rbm_params,
    rbm_model,
    rbm_perturb,
    rbm_sample,
)
from relgof.stats.errors import InputError


def finite_difference_score(log_den, z, h=1e-5):
    grad = np.zeros_like(z)
    for i in range(len(z)):
        e = np.zeros_like(z)
        e[i] = h
        grad[i] = (log_den(z + e) - log_den(z - e)) / (2 * h)
    return grad


def model_log_den(model):
    return lambda z: model.log_den(torch.as_tensor(z[None, :])).item()


def enumerated_rbm_log_den(params, x):
    """log sum_h exp(x^T B h + b^T x + c^T h - ||x||^2 / 2) over all h in {-1, 1}^dh."""
    terms = []
    for h in itertools.product([-1.0, 1.0], repeat=params.dim_h):
        h = np.array(h)
        terms.append(x @ params.B @ h + params.b @ x + params.c @ h - 0.5 * x @ x)
    return float(np.logaddexp.reduce(terms))


def test_normal_score_vanishes_at_mean():
    model = gaussian_model([1.0, -2.0, 0.5], 2.0)
    np.testing.assert_array_equal(model.score(np.array([[1.0, -2.0, 0.5]])).numpy(), np.zeros((1, 3)))


def test_scores_match_finite_differences():
    rng = np.random.default_rng(0)
    models = [
        IsotropicNormal([0.3, -0.1], 1.7),
        blobs_model("p"),
        blobs_model("q"),
        mixture1d_models(0.3)[2],
        rbm_model(random_rbm_params(3, 4, seed=1)),
    ]
    for model in models:
        for _ in range(5):
            z = rng.standard_normal(model.dim) * 2.0
            got = model.score(torch.as_tensor(z[None, :]))[0].numpy()
            want = finite_difference_score(model_log_den(model), z)
            np.testing.assert_allclose(got, want, rtol=1e-6, atol=1e-7)


def test_mixture_score_matches_component_loop():
    rng = np.random.default_rng(1)
    means = rng.standard_normal((3, 2)) * 2
    covs = np.array([np.eye(2) * s for s in (0.5, 1.0, 2.0)])
    covs[1, 0, 1] = covs[1, 1, 0] = 0.3
    weights = np.array([0.2, 0.5, 0.3])
    model = GaussianMixture(means, covs, weights)
    for _ in range(5):
        z = rng.standard_normal(2)
        dens = np.array([w * stats.multivariate_normal(m, c).pdf(z) for m, c, w in zip(means, covs, weights)])
        resp = dens / dens.sum()
        want = sum(r * -np.linalg.solve(c, z - m) for r, m, c in zip(resp, means, covs))
        np.testing.assert_allclose(model.score(z[None, :])[0].numpy(), want, rtol=1e-10, atol=1e-12)


def test_blobs_score_vanishes_at_grid_centroid():
    centroid = BLOBS_CENTERS.mean(axis=0)
    for variant in ("p", "q", "r"):
        score = blobs_model(variant).score(centroid[None, :])[0].numpy()
        np.testing.assert_allclose(score, [0.0, 0.0], atol=1e-10)


def test_blobs_samples_cluster_around_centers():
    X = blobs_model("r").sample(4000, seed=2)
    nearest = np.argmin(((X[:, None, :] - BLOBS_CENTERS[None, :, :]) ** 2).sum(axis=-1), axis=1)
    for c, center in enumerate(BLOBS_CENTERS):
        assert np.all(np.abs(X[nearest == c].mean(axis=0) - center) < 0.2)


def test_blobs_unknown_variant():
    with pytest.raises(InputError):
        blobs_model("s")


def test_blobs_variants_share_spread_and_differ_within_blobs():
    covs = {v: blobs_model(v).covariances for v in ("p", "q", "r")}
    for v, cov in covs.items():
        np.testing.assert_allclose(np.trace(cov, axis1=1, axis2=2), 1.0)
        np.testing.assert_allclose(blobs_model(v).means, BLOBS_CENTERS)
    eig_p = np.linalg.eigvalsh(covs["p"][0])
    eig_q = np.linalg.eigvalsh(covs["q"][0])
    assert eig_p[1] / eig_p[0] > eig_q[1] / eig_q[0] > 1.0
    # every component sits well inside its cell of the grid
    assert np.sqrt(eig_p[1]) < 0.25 * 5.0
    assert np.linalg.norm(covs["q"][0] - covs["r"][0]) < np.linalg.norm(covs["p"][0] - covs["r"][0])


def test_mixture1d_models():
    p, q, r = mixture1d_models(0.3)
    assert p.mean[0] == -2.0 and q.mean[0] == 2.0
    np.testing.assert_allclose(r.weights, [0.3, 0.7])
    with pytest.raises(InputError):
        mixture1d_models(1.0)


def test_rbm_with_zero_weights_is_gaussian():
    params = RbmParams(np.zeros((2, 3)), np.array([0.5, -1.0]), np.array([0.1, 0.2, 0.3]))
    x = np.array([[1.0, 2.0], [-0.5, 0.0]])
    np.testing.assert_allclose(rbm_model(params).score(x).numpy(), params.b - x, rtol=1e-14)


def test_rbm_matches_latent_enumeration():
    rng = np.random.default_rng(3)
    params = random_rbm_params(2, 3, seed=4)
    model = rbm_model(params)
    for _ in range(5):
        x = rng.standard_normal(2)
        assert model.log_den(x[None, :]).item() == pytest.approx(enumerated_rbm_log_den(params, x), rel=1e-12, abs=1e-12)
        want = finite_difference_score(lambda z: enumerated_rbm_log_den(params, z), x)
        np.testing.assert_allclose(model.score(x[None, :])[0].numpy(), want, rtol=1e-6, atol=1e-7)


def test_random_rbm_params():
    params = random_rbm_params(20, 5, seed=0)
    assert params.B.shape == (20, 5) and params.dim == 20 and params.dim_h == 5
    assert set(np.unique(params.B)) <= {-1.0, 1.0}
    again = random_rbm_params(20, 5, seed=0)
    np.testing.assert_array_equal(params.B, again.B)
    np.testing.assert_array_equal(params.c, again.c)


def test_rbm_params_validation():
    with pytest.raises(InputError):
        RbmParams(np.zeros((2, 3)), np.zeros(3), np.zeros(3))
    with pytest.raises(InputError):
        RbmParams(np.full((1, 1), np.inf), np.zeros(1), np.zeros(1))


def test_rbm_perturb():
    params = random_rbm_params(4, 2, seed=5)
    np.testing.assert_array_equal(rbm_perturb(params, 0.0).B, params.B)
    once = rbm_perturb(rbm_perturb(params, 0.1), 0.2)
    np.testing.assert_allclose(once.B, rbm_perturb(params, 0.3).B, rtol=1e-15)
    changed = np.argwhere(rbm_perturb(params, 0.3).B != params.B)
    np.testing.assert_array_equal(changed, [[0, 0]])


def test_rbm_sample_zero_weights_is_exact_normal():
    params = RbmParams(np.zeros((3, 2)), np.array([1.0, -1.0, 0.5]), np.zeros(2))
    n = 2000
    X = rbm_sample(params, n, seed=6, gibbs=GibbsConfig(burn_in=10))
    assert X.shape == (n, 3)
    assert np.all(np.abs(X.mean(axis=0) - params.b) < 4.0 / np.sqrt(n))


def test_rbm_sample_is_deterministic():
    params = random_rbm_params(3, 2, seed=7)
    gibbs = GibbsConfig(burn_in=20)
    np.testing.assert_array_equal(rbm_sample(params, 50, seed=8, gibbs=gibbs), rbm_sample(params, 50, seed=8, gibbs=gibbs))


def test_rbm_sample_chains_and_thinning():
    params = random_rbm_params(2, 2, seed=9)
    X = rbm_sample(params, 7, seed=1, gibbs=GibbsConfig(burn_in=5, thinning=2, chains=2))
    assert X.shape == (7, 2)
    assert np.all(np.isfinite(X))


def test_rbm_samples_satisfy_stein_identity():
    params = random_rbm_params(2, 2, seed=10)
    model = rbm_model(params, GibbsConfig(burn_in=500))
    X = model.sample(5000, seed=11)
    S = model.score(X).numpy()
    bound = 4.0 * S.std(axis=0) / np.sqrt(len(S))
    assert np.all(np.abs(S.mean(axis=0)) < bound)


def test_rbm_scores_are_finite_on_samples():
    model = rbm_model(random_rbm_params(20, 5, seed=0), GibbsConfig(burn_in=200))
    X = model.sample(100, seed=1)
    assert torch.all(torch.isfinite(model.score(X)))
