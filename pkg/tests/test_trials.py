import numpy as np
import pytest
from pydantic import ValidationError

from relgof.harness import trials
from relgof.harness.bench import fit_loglog_slope, runtime_bench
from relgof.harness.matrix_io import save_matrix
from relgof.harness.problems import build_problem
from relgof.harness.trials import binomial_ci, check_method, run_trials, trial_seed
from relgof.schemas import OptimConfig, ProblemConfig
from relgof.stats.errors import InputError
from relgof.stats.tuning import split_train_test


def small_mean_shift(n=40):
    return ProblemConfig(problem="mean_shift", n=n, d=2)


def strip_times(report):
    return [r.model_dump(exclude={"wall_time_seconds"}) for r in report.records]


@pytest.mark.parametrize("method", ["rel_ume_random", "rel_mmd_median"])
def test_trials_are_reproducible(method):
    a = run_trials(small_mean_shift(), method, J=2, trials=3, seed_base=5)
    b = run_trials(small_mean_shift(), method, J=2, trials=3, seed_base=5)
    assert strip_times(a) == strip_times(b)
    assert [r.trial_index for r in a.records] == [0, 1, 2]
    assert a.summary.failures == 0
    assert a.summary.trials == 3
    assert a.summary.ci_low <= a.summary.rejection_rate <= a.summary.ci_high


def test_optimized_methods_run_end_to_end():
    report = run_trials(ProblemConfig(problem="mixture1d", n=60, mix_left=0.3), "rel_fssd_opt", J=1, trials=1)
    assert report.summary.failures == 0
    report = run_trials(small_mean_shift(60), "rel_ume_opt", J=1, trials=1)
    assert report.summary.failures == 0


def test_trial_failures_are_recorded(monkeypatch):
    def boom(*args, **kwargs):
        raise FloatingPointError("synthetic failure")

    monkeypatch.setattr(trials, "run_method", boom)
    report = run_trials(small_mean_shift(), "rel_ume_random", trials=2)
    assert report.summary.failures == 2
    assert report.summary.rejection_rate == 0.0
    assert all("synthetic failure" in r.error for r in report.records)


def test_trial_seeds_are_distinct():
    states = {tuple(trial_seed(0, i).generate_state(4)) for i in range(50)}
    assert len(states) == 50
    assert tuple(trial_seed(0, 3).generate_state(4)) == tuple(trial_seed(0, 3).generate_state(4))


def test_distinct_trial_seeds_give_distinct_samples():
    problem = build_problem(small_mean_shift())
    first = problem.sample_triple(20, trial_seed(0, 0))
    second = problem.sample_triple(20, trial_seed(0, 1))
    again = problem.sample_triple(20, trial_seed(0, 0))
    for a, b, c in zip(first, second, again):
        assert not np.array_equal(a, b)
        np.testing.assert_array_equal(a, c)
    assert not np.array_equal(first[1], first[2])


@pytest.mark.parametrize("method", ["rel_ume_random", "rel_ume_opt"])
def test_locations_do_not_depend_on_test_rows(monkeypatch, method):
    n, seed = 100, 11
    problem = build_problem(small_mean_shift(n))
    X, Y, Z = problem.sample_triple(n, 3)
    split_seq, _ = np.random.SeedSequence(seed).spawn(2)
    rows = np.arange(n, dtype=float)[:, None]
    _, (test_rows, _, _) = split_train_test(rows, rows, rows, 0.2, seed=trials._seed_int(split_seq))
    test_rows = test_rows[:, 0].astype(int)
    # shuffle the test rows among themselves, train rows stay put
    perm = np.arange(n)
    perm[test_rows] = np.random.default_rng(0).permutation(test_rows)
    assert not np.array_equal(perm, np.arange(n))

    seen = []
    real_test = trials.rel_ume_test

    def recording_test(kX, kY, V, W, Xte, Yte, Zte, alpha):
        result = real_test(kX, kY, V, W, Xte, Yte, Zte, alpha)
        seen.append((np.asarray(V), float(kX.sigma2), result.stat))
        return result

    monkeypatch.setattr(trials, "rel_ume_test", recording_test)
    optim = OptimConfig(max_iters=10)
    trials.run_method(method, problem, X, Y, Z, 2, 0.05, seed=seed, optim=optim)
    trials.run_method(method, problem, X[perm], Y[perm], Z[perm], 2, 0.05, seed=seed, optim=optim)
    (V1, s1, stat1), (V2, s2, stat2) = seen
    np.testing.assert_array_equal(V1, V2)
    assert s1 == s2
    assert stat2 == pytest.approx(stat1, rel=1e-9, abs=1e-12)


def test_method_checks():
    problem = build_problem(small_mean_shift())
    with pytest.raises(InputError):
        check_method("rel_ksd", problem)
    with pytest.raises(InputError):
        run_trials(small_mean_shift(), "rel_ume_random", trials=0)


def test_binomial_ci():
    low, high = binomial_ci(0, 20)
    assert low == 0.0 and 0.0 < high < 0.2
    low, high = binomial_ci(10, 20)
    assert low < 0.5 < high


def test_problem_config_validation():
    with pytest.raises(ValidationError):
        ProblemConfig(problem="rbm", n=100)
    with pytest.raises(ValidationError):
        ProblemConfig(problem="external", n=100, x_path="x.npy")
    with pytest.raises(ValidationError):
        ProblemConfig(problem="blobs", n=3)


def test_rbm_problem_keeps_parameters_across_trials():
    config = ProblemConfig(problem="rbm", n=20, d=3, d_h=2, epsilon=0.1)
    a, b = build_problem(config), build_problem(config)
    np.testing.assert_array_equal(a.model_p.params.B, b.model_p.params.B)
    assert a.model_p.params.B[0, 0] - a.model_q.params.B[0, 0] == pytest.approx(0.1 - 0.3)


def test_external_matrices_feed_rel_ume(tmp_path):
    rng = np.random.default_rng(0)
    paths = {}
    for name, shift in (("x", 1.0), ("y", 0.0), ("z", 0.0)):
        paths[name] = tmp_path / f"{name}.csv"
        save_matrix(paths[name], rng.standard_normal((80, 3)) + shift)
    config = ProblemConfig(
        problem="external", n=60, x_path=str(paths["x"]), y_path=str(paths["y"]), z_path=str(paths["z"])
    )
    report = run_trials(config, "rel_ume_random", J=2, trials=2)
    assert report.summary.failures == 0
    with pytest.raises(InputError):
        run_trials(config, "rel_fssd_opt", trials=1)


def test_fit_loglog_slope():
    assert fit_loglog_slope([1, 2, 4, 8], [3.0, 12.0, 48.0, 192.0]) == pytest.approx(2.0)


def test_runtime_bench_small_grid():
    report = runtime_bench(small_mean_shift(), ["rel_ume_random"], [20, 40], reps=3)
    assert [row.n for row in report.rows] == [20, 40]
    assert all(row.reps >= 3 and row.min_seconds <= row.median_seconds <= row.max_seconds for row in report.rows)
    assert np.isfinite(report.slopes["rel_ume_random"])


def test_runtime_bench_argument_checks():
    with pytest.raises(InputError):
        runtime_bench(small_mean_shift(), ["rel_ume_random"], [20, 40], reps=2)
    with pytest.raises(InputError):
        runtime_bench(small_mean_shift(), ["rel_ume_random"], [40, 20])
