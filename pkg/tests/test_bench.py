import numpy as np
import pytest

from pamgrad import (
    AimleControllerState,
    Categorical,
    GumbelNoise,
    KSubset,
    QuadraticLoss,
    SGD,
    bench_cosine,
    cosine_similarity,
    estimate_imle,
    expected_imle_gradient_exact,
    run_toy_training,
    setup_from_name,
    substream,
    sweep_lambda,
)
from pamgrad.bench import aggregate, draw_instance
from pamgrad.errors import DimensionMismatch, InvalidStep
from pamgrad.optim import optimizer_step
from pamgrad.polytopes import exact_gradient


def test_cosine_similarity_conventions(rng):
    g = rng.standard_normal(5)
    assert cosine_similarity(g, g) == pytest.approx(1.0, abs=1e-12)
    assert cosine_similarity(g, -g) == pytest.approx(-1.0, abs=1e-12)
    assert cosine_similarity(np.zeros(5), g) == 0.0
    assert cosine_similarity(g, np.zeros(5)) == 0.0
    with pytest.raises(DimensionMismatch):
        cosine_similarity(np.zeros(3), np.zeros(4))


def test_setup_from_name_validation():
    with pytest.raises(ValueError):
        setup_from_name("magic")
    setup = setup_from_name("imle-central", lam=0.3)
    assert setup.kind == "imle" and setup.mode == "central" and setup.lam == 0.3
    assert setup_from_name("aimle-forward").lam is None


def test_exact_estimator_has_cosine_one():
    records = bench_cosine(Categorical(8), [setup_from_name("exact")], [1],
                           range(5), measure_time=False)
    assert len(records) == 5
    for r in records:
        assert r.cosine == pytest.approx(1.0, abs=1e-12)
        assert r.estimator == "exact"


def test_sfe_cosine_improves_with_samples():
    records = bench_cosine(Categorical(20), [setup_from_name("sfe")],
                           [1, 2000], range(16), measure_time=False)
    mean = {s: np.mean([r.cosine for r in records if r.samples == s])
            for s in (1, 2000)}
    assert mean[2000] > mean[1]


def test_imle_tiny_step_records_all_zero():
    setups = [setup_from_name("imle-forward", lam=1e-9)]
    records = bench_cosine(Categorical(12), setups, [50], range(6),
                           measure_time=False)
    for r in records:
        assert r.zero_fraction == 1.0
        assert r.cosine == 0.0
        assert r.l0_norm == 0.0


def test_records_deterministic_given_seed():
    spec = KSubset(8, 2)
    setups = [setup_from_name("ste"), setup_from_name("imle-central", lam=0.5)]
    a = bench_cosine(spec, setups, [20], range(4), measure_time=False)
    b = bench_cosine(spec, setups, [20], range(4), measure_time=False)
    assert a == b


def test_jobs_do_not_change_records():
    spec = Categorical(10)
    setups = [setup_from_name("imle-forward", lam=0.5)]
    serial = bench_cosine(spec, setups, [10], range(4), measure_time=False, jobs=1)
    parallel = bench_cosine(spec, setups, [10], range(4), measure_time=False, jobs=2)
    assert serial == parallel


def test_sweep_lambda_grid_and_adaptive_row():
    grid = [0.0, 0.5, 1.0]
    aimle = setup_from_name("aimle-central", warmup_steps=3, warmup_samples=8)
    records = sweep_lambda(Categorical(10), grid, range(3), samples=8,
                           aimle=aimle, measure_time=False)
    lams = sorted({r.lam for r in records if not r.adaptive})
    assert lams == grid  # endpoints included exactly
    zero_rows = [r for r in records if r.lam == 0.0]
    assert zero_rows and all(r.cosine == 0.0 and r.zero_fraction == 1.0
                             for r in zero_rows)
    adaptive_rows = [r for r in records if r.adaptive]
    assert len(adaptive_rows) == 3
    assert all(r.estimator == "aimle-central" for r in adaptive_rows)


def test_aggregate_groups_and_stats():
    records = bench_cosine(Categorical(6), [setup_from_name("ste")], [5, 10],
                           range(4), measure_time=False)
    rows = aggregate(records)
    assert len(rows) == 2
    for row in rows:
        sel = [r.cosine for r in records if r.samples == row["S"]]
        assert row["seeds"] == 4
        assert row["cosine_mean"] == pytest.approx(np.mean(sel))
        assert row["cosine_std"] == pytest.approx(np.std(sel, ddof=1))


# ---------------------------------------------------------------------------
# Exact expected estimate (bias by enumeration)
# ---------------------------------------------------------------------------

def test_expected_estimate_zero_for_constant_loss(rng):
    theta = rng.standard_normal(3)
    dgrad = lambda z: (1.0, np.zeros(3))
    unscaled, scaled = expected_imle_gradient_exact(Categorical(3), theta, dgrad, 1.0)
    assert np.all(unscaled == 0.0) and np.all(scaled == 0.0)


def test_expected_estimate_vanishes_with_step(rng):
    theta = rng.standard_normal(3)
    b = rng.standard_normal(3)
    qloss = QuadraticLoss(b)
    norms = []
    for lam in (1.0, 0.1, 0.01):
        unscaled, _ = expected_imle_gradient_exact(Categorical(3), theta, qloss, lam)
        norms.append(np.linalg.norm(unscaled))
    assert norms[0] > norms[1] > norms[2]
    assert norms[2] < 0.05


def test_expected_estimate_is_biased_at_unit_step():
    theta = np.array([0.4, 0.0, -0.4])
    b = np.array([0.9, -0.3, 0.5])
    qloss = QuadraticLoss(b)
    _, scaled = expected_imle_gradient_exact(Categorical(3), theta, qloss, 1.0)
    truth = exact_gradient(Categorical(3), theta, 1.0, qloss.value)
    assert np.linalg.norm(scaled - truth) > 1e-3


def test_expected_estimate_rejects_zero_step():
    with pytest.raises(InvalidStep):
        expected_imle_gradient_exact(Categorical(3), np.zeros(3),
                                     QuadraticLoss(np.zeros(3)), 0.0)


# ---------------------------------------------------------------------------
# Toy training loop
# ---------------------------------------------------------------------------

def test_toy_training_exact_gradient_descends():
    trajectory = run_toy_training(Categorical(12), setup_from_name("exact"),
                                  SGD(lr=0.01), 120, seed=3)
    losses = [t.loss for t in trajectory]
    assert all(a >= b for a, b in zip(losses, losses[1:]))
    assert losses[-1] < losses[0]


def test_toy_training_aimle_step_size_wakes_up():
    setup = setup_from_name("aimle-central", eta=1e-2)
    steps = int(5 / setup.eta)
    trajectory = run_toy_training(Categorical(20), setup, SGD(lr=0.05), steps,
                                  seed=11, samples=4)
    lams = [t.lam for t in trajectory]
    assert lams[0] == 0.0
    assert any(lam > 0 for lam in lams)
    first_positive = next(i for i, lam in enumerate(lams) if lam > 0)
    assert first_positive <= steps
    alphas = [t.alpha for t in trajectory]
    assert min(alphas) >= 0.0


def test_toy_training_frozen_controller_matches_fixed_step():
    # a frozen controller must reproduce the plain fixed-step trajectory at
    # the step sizes it induces, bitwise
    spec = Categorical(15)
    setup = setup_from_name("aimle-central")
    frozen = AimleControllerState(alpha=0.2, eta=0.0)
    seed, steps, samples = 21, 30, 8

    theta0, b = draw_instance(spec, seed)
    qloss = QuadraticLoss(b)
    rng = substream(seed, 1)
    theta = theta0.copy()
    controller = frozen
    from pamgrad import estimate_aimle

    thetas_a = []
    lams = []
    for _ in range(steps):
        est, controller, lam = estimate_aimle(spec, theta, GumbelNoise(), qloss,
                                              controller, samples, rng,
                                              mode="central")
        theta, _ = optimizer_step(SGD(lr=0.1), theta, est.grad)
        thetas_a.append(theta.copy())
        lams.append(lam)

    rng = substream(seed, 1)
    theta = theta0.copy()
    thetas_i = []
    for lam in lams:
        est = estimate_imle(spec, theta, GumbelNoise(), qloss, lam, samples,
                            rng, mode="central")
        theta, _ = optimizer_step(SGD(lr=0.1), theta, est.grad)
        thetas_i.append(theta.copy())

    for a, i in zip(thetas_a, thetas_i):
        assert np.array_equal(a, i)


def test_toy_training_deterministic():
    setup = setup_from_name("imle-forward", lam=0.5)
    a = run_toy_training(Categorical(10), setup, SGD(lr=0.1), 25, seed=5, samples=4)
    b = run_toy_training(Categorical(10), setup, SGD(lr=0.1), 25, seed=5, samples=4)
    to_mat = lambda traj: np.array([[t.step, t.loss, t.lam, t.g_bar, t.alpha]
                                    for t in traj])
    assert np.array_equal(to_mat(a), to_mat(b), equal_nan=True)


def test_draw_instance_shared_across_estimators():
    theta1, b1 = draw_instance(Categorical(9), 4)
    theta2, b2 = draw_instance(Categorical(9), 4)
    assert np.array_equal(theta1, theta2) and np.array_equal(b1, b2)
    theta3, _ = draw_instance(Categorical(9), 5)
    assert not np.array_equal(theta1, theta3)
