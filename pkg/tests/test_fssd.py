import math

import numpy as np
import pytest
import torch

from relgof.stats.densities import DensityModel, GaussianMixture, IsotropicNormal, mixture1d_models
from relgof.stats.errors import EvaluationError, InputError
from relgof.stats.fssd import (
    checked_score,
    fssd_power_criterion,
    fssd_sq,
    fssd_variance_terms,
    rel_fssd_stat_and_var,
    rel_fssd_test,
    stein_feature,
    stein_features,
    stein_witness,
)
from relgof.stats.kernels import KernelSpec, kernel_eval, kernel_grad_x


class NanAtRow(DensityModel):
    """Standard normal whose score is NaN at one row."""

    def __init__(self, row, col):
        self.row, self.col = row, col

    @property
    def dim(self):
        return 2

    def score(self, Z):
        S = -Z.clone()
        S[self.row, self.col] = float("nan")
        return S

    def log_den(self, Z):
        return -0.5 * torch.sum(Z * Z, dim=1)


def loop_tau(spec, model, W, z):
    d, J = len(z), len(W)
    s = model.score(torch.as_tensor(z[None, :]))[0].numpy()
    tau = np.zeros(d * J)
    for j in range(J):
        k = kernel_eval(spec, z, W[j])
        g = kernel_grad_x(spec, z, W[j])
        for i in range(d):
            tau[j * d + i] = (k * s[i] + g[i]) / math.sqrt(d * J)
    return tau


def brute_fssd_sq(spec, model, W, Z):
    T = [loop_tau(spec, model, W, z) for z in Z]
    n = len(T)
    return sum(T[i] @ T[j] for i in range(n) for j in range(n) if i != j) / (n * (n - 1))


def test_stein_feature_examples():
    q = IsotropicNormal([0.0], 1.0)
    spec = KernelSpec(1.0)
    np.testing.assert_array_equal(stein_feature(spec, q, [[0.0]], [0.0]).numpy(), [0.0])
    got = stein_feature(spec, q, [[0.0]], [1.0]).item()
    assert got == pytest.approx(-2.0 * math.exp(-0.5), rel=1e-12)


def test_stein_features_match_elementwise_loop():
    rng = np.random.default_rng(0)
    model = IsotropicNormal([0.5, -0.3], 1.4)
    for _ in range(10):
        spec = KernelSpec(float(rng.uniform(0.5, 2.0)))
        W = rng.standard_normal((3, 2))
        z = rng.standard_normal(2)
        np.testing.assert_allclose(stein_feature(spec, model, W, z).numpy(), loop_tau(spec, model, W, z), rtol=1e-12, atol=1e-15)


def check_fssd_sq_against_double_sum(seed, instances):
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        n, d, J = rng.integers(2, 31), rng.integers(1, 6), rng.integers(1, 5)
        model = IsotropicNormal(rng.standard_normal(d), float(rng.uniform(0.5, 2.0)))
        spec = KernelSpec(float(rng.uniform(0.3, 3.0)))
        W = rng.standard_normal((J, d))
        Z = rng.standard_normal((n, d))
        got = fssd_sq(spec, model, W, Z).item()
        assert got == pytest.approx(brute_fssd_sq(spec, model, W, Z), rel=1e-10, abs=1e-13)


def test_fssd_sq_matches_double_sum():
    check_fssd_sq_against_double_sum(1, 100)


@pytest.mark.slow
def test_fssd_sq_matches_double_sum_on_many_instances():
    check_fssd_sq_against_double_sum(10, 1000)


def test_fssd_sq_two_rows():
    rng = np.random.default_rng(2)
    model = IsotropicNormal([0.0, 0.0], 1.0)
    spec = KernelSpec(1.0)
    W, Z = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
    want = loop_tau(spec, model, W, Z[0]) @ loop_tau(spec, model, W, Z[1])
    assert fssd_sq(spec, model, W, Z).item() == pytest.approx(want, rel=1e-10, abs=1e-14)


def test_same_model_gives_zero_statistic():
    rng = np.random.default_rng(3)
    model = IsotropicNormal([0.2, 0.1], 1.0)
    spec = KernelSpec(1.0)
    V = rng.standard_normal((3, 2))
    s_hat, _ = rel_fssd_stat_and_var(spec, spec, model, model, V, V, rng.standard_normal((40, 2)))
    assert s_hat.item() == 0.0


def test_single_component_mixture_matches_normal():
    rng = np.random.default_rng(4)
    normal = IsotropicNormal([1.0, -1.0], 2.0)
    mixture = GaussianMixture([[1.0, -1.0]], [2.0 * np.eye(2)], [3.0])
    spec = KernelSpec(1.0)
    W, Z = rng.standard_normal((2, 2)), rng.standard_normal((25, 2))
    np.testing.assert_allclose(
        stein_features(spec, normal, W, Z).numpy(), stein_features(spec, mixture, W, Z).numpy(), rtol=1e-12, atol=1e-15
    )


def test_variance_terms_match_loops():
    rng = np.random.default_rng(5)
    p = IsotropicNormal([0.5, 0.0], 1.0)
    q = IsotropicNormal([-0.2, 0.3], 1.5)
    kX, kY = KernelSpec(0.9), KernelSpec(1.3)
    V, W = rng.standard_normal((2, 2)), rng.standard_normal((3, 2))
    Z = rng.standard_normal((15, 2))
    tp = np.array([loop_tau(kX, p, V, z) for z in Z])
    tq = np.array([loop_tau(kY, q, W, z) for z in Z])
    mp, mq = tp.mean(axis=0), tq.mean(axis=0)

    def cov(A, B):
        return sum(np.outer(a - A.mean(axis=0), b - B.mean(axis=0)) for a, b in zip(A, B)) / len(A)

    terms = fssd_variance_terms(kX, kY, p, q, V, W, Z)
    assert terms.sigma_p2.item() == pytest.approx(mp @ cov(tp, tp) @ mp, rel=1e-10, abs=1e-15)
    assert terms.sigma_pq.item() == pytest.approx(mp @ cov(tp, tq) @ mq, rel=1e-10, abs=1e-15)
    assert terms.sigma_q2.item() == pytest.approx(mq @ cov(tq, tq) @ mq, rel=1e-10, abs=1e-15)


def test_non_finite_score_names_row_and_coordinate():
    spec = KernelSpec(1.0)
    with pytest.raises(EvaluationError, match="row 3, coordinate 1"):
        fssd_sq(spec, NanAtRow(3, 1), np.zeros((1, 2)), np.ones((5, 2)))


def test_dimension_mismatch():
    with pytest.raises(InputError):
        fssd_sq(KernelSpec(1.0), IsotropicNormal([0.0, 0.0], 1.0), np.zeros((1, 3)), np.ones((5, 2)))


def test_model_dimension_must_match_z():
    model = IsotropicNormal([0.0, 0.0, 0.0], 1.0)
    Z = np.ones((5, 2))
    with pytest.raises(InputError, match="dimension 3"):
        stein_features(KernelSpec(1.0), model, np.zeros((1, 2)), Z)
    with pytest.raises(InputError):
        checked_score(model, torch.as_tensor(Z))
    with pytest.raises(InputError):
        rel_fssd_stat_and_var(KernelSpec(1.0), KernelSpec(1.0), model, IsotropicNormal([0.0, 0.0], 1.0),
                              np.zeros((1, 2)), np.zeros((1, 2)), Z)
    with pytest.raises(InputError, match="precomputed score"):
        stein_features(KernelSpec(1.0), IsotropicNormal([0.0, 0.0], 1.0), np.zeros((1, 2)), Z,
                       score=torch.zeros((4, 2), dtype=torch.float64))


def test_criterion_signs_on_equal_mixture():
    p, q, r = mixture1d_models(0.5)
    Z = r.sample(2000, seed=11)
    spec = KernelSpec(1.0)
    right = fssd_power_criterion(spec, spec, p, q, [[2.0]], [[2.0]], Z).item()
    left = fssd_power_criterion(spec, spec, p, q, [[-2.0]], [[-2.0]], Z).item()
    assert right > 0.0
    assert left < 0.0
    swapped = fssd_power_criterion(spec, spec, q, p, [[2.0]], [[2.0]], Z).item()
    assert swapped == pytest.approx(-right, rel=1e-12)


def test_rel_fssd_rejects_when_q_is_the_truth():
    p = IsotropicNormal([1.0, 0.0], 1.0)
    q = IsotropicNormal([0.0, 0.0], 1.0)
    Z = q.sample(1500, seed=12)
    spec = KernelSpec(1.0)
    V = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert rel_fssd_test(spec, spec, p, q, V, V, Z, alpha=0.05).reject


def test_stein_witness_shape_and_identity():
    q = IsotropicNormal([0.0, 0.0], 1.0)
    Z = q.sample(20000, seed=13)
    g = stein_witness(KernelSpec(1.0), q, Z, np.array([[0.5, 0.5], [-1.0, 0.0], [0.0, 2.0]]))
    assert tuple(g.shape) == (3, 2)
    # E_q of a Stein feature is zero
    assert np.max(np.abs(g.numpy())) < 0.05


class ScaledDensity(DensityModel):
    """base times a constant; the score comes from autograd on log_den."""

    def __init__(self, base, log_c):
        self.base, self.log_c = base, log_c

    @property
    def dim(self):
        return self.base.dim

    def log_den(self, Z):
        return self.base.log_den(Z) + self.log_c

    def score(self, Z):
        Zg = torch.as_tensor(Z).clone().requires_grad_(True)
        (grad,) = torch.autograd.grad(self.log_den(Zg).sum(), Zg)
        return grad


def test_rel_fssd_ignores_normalizing_constants():
    rng = np.random.default_rng(11)
    p, q = IsotropicNormal([0.6, 0.0], 1.0), IsotropicNormal([0.1, 0.2], 1.5)
    Z = rng.standard_normal((60, 2))
    V, W = rng.standard_normal((2, 2)), rng.standard_normal((3, 2))
    kX, kY = KernelSpec(0.9), KernelSpec(1.4)
    s, nu = rel_fssd_stat_and_var(kX, kY, p, q, V, W, Z)
    s_c, nu_c = rel_fssd_stat_and_var(kX, kY, ScaledDensity(p, 12.0), ScaledDensity(q, -3.5), V, W, Z)
    assert s_c.item() == pytest.approx(s.item(), rel=1e-12, abs=1e-15)
    assert nu_c.item() == pytest.approx(nu.item(), rel=1e-12, abs=1e-15)


def test_stein_features_are_affine_in_the_score():
    rng = np.random.default_rng(12)
    model = IsotropicNormal([0.0, 0.0], 1.0)
    spec = KernelSpec(1.1)
    W, Z = rng.standard_normal((3, 2)), rng.standard_normal((15, 2))
    S1 = torch.as_tensor(rng.standard_normal((15, 2)))
    S2 = torch.as_tensor(rng.standard_normal((15, 2)))

    def feats(S):
        return stein_features(spec, model, W, Z, score=S).numpy()

    zero = torch.zeros((15, 2), dtype=torch.float64)
    np.testing.assert_allclose(feats(S1 + S2) + feats(zero), feats(S1) + feats(S2), rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(feats(2.5 * S1) - feats(zero), 2.5 * (feats(S1) - feats(zero)), rtol=1e-12, atol=1e-14)


@pytest.mark.slow
def test_fssd_sq_is_centered_at_the_true_model():
    rng = np.random.default_rng(13)
    model = IsotropicNormal([0.0, 0.0], 1.0)
    spec = KernelSpec(1.0)
    W = np.array([[0.5, -0.5], [1.0, 1.0]])
    reps = 4000
    values = np.array([fssd_sq(spec, model, W, rng.standard_normal((20, 2))).item() for _ in range(reps)])
    assert abs(values.mean()) < 4.0 * values.std() / math.sqrt(reps)
