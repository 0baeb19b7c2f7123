"""Synthetic benchmarks: cosine similarity to the true gradient, step-size
sweeps, sparsity curves, exact expected-estimate bias, and a toy training loop.

Every benchmark is deterministic given its configuration and seed. Per-record
randomness is derived through ``noise.substream``: the problem instance for
seed ``s`` comes from ``substream(s, 0)`` (first theta, then the quadratic
target b, both standard normal), and the estimator for grid cell ``j`` draws
from ``substream(s, 1 + j)``. Records of a run are therefore independent
tasks, and ``jobs > 1`` evaluates them in a process pool without changing any
output.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .controller import AimleControllerState
from .errors import DimensionMismatch, InvalidStep
from .estimators import (
    GradientEstimate,
    estimate_aimle,
    estimate_gumbel_softmax,
    estimate_imle,
    estimate_sfe,
    estimate_ste,
    exact_oracle_estimate,
)
from .noise import GumbelNoise, SumOfGammaNoise, substream
from .optim import OptimizerConfig, QuadraticLoss, init_opt_state, optimizer_step
from .polytopes import (
    DEFAULT_GUARD,
    PolytopeSpec,
    exact_expected_loss,
    exact_gradient,
    marginals,
    state_probabilities,
)

ESTIMATOR_NAMES = (
    "exact", "sfe", "ste", "gs",
    "imle-forward", "imle-central", "aimle-forward", "aimle-central",
)


@dataclass(frozen=True)
class EstimatorSetup:
    """One estimator configuration of a benchmark run."""

    name: str                       # CSV identifier, e.g. "imle-central"
    kind: str                       # exact | sfe | ste | gs | imle | aimle
    mode: str = "forward"           # finite-difference scheme (imle/aimle)
    lam: float | None = None        # fixed step size (imle)
    tau: float = 1.0                # pmf temperature (exact/sfe) or relaxation temperature (gs)
    noise_temperature: float = 1.0  # perturbation scale (ste/imle/aimle)
    noise_kind: str = "gumbel"      # gumbel | sog | none
    sog_k: int = 1
    sog_s: int = 10
    alpha0: float = 0.0             # controller initial fraction (aimle)
    eta: float = 1e-3
    c: float = 1.0
    gamma: float = 0.9
    warmup_steps: int = 2000        # controller warm-up iterations before the recorded estimate
    warmup_samples: int = 256       # samples per warm-up iteration (controller
                                    # statistics are per example, so fewer
                                    # samples only widen the EMA jitter)

    def noise(self):
        if self.noise_kind == "none" or self.noise_temperature == 0.0:
            return None
        if self.noise_kind == "gumbel":
            return GumbelNoise(self.noise_temperature)
        if self.noise_kind == "sog":
            return SumOfGammaNoise(k=self.sog_k, s=self.sog_s,
                                   temperature=self.noise_temperature)
        raise ValueError(f"unknown noise kind {self.noise_kind!r}")

    def controller(self) -> AimleControllerState:
        return AimleControllerState(alpha=self.alpha0, eta=self.eta,
                                    c=self.c, gamma=self.gamma)


def setup_from_name(name: str, *, lam: float = 1.0, tau: float = 1.0,
                    noise_temperature: float = 1.0, **kw) -> EstimatorSetup:
    """Build a setup from its CSV identifier."""
    if name not in ESTIMATOR_NAMES:
        raise ValueError(f"unknown estimator {name!r}; choose from {ESTIMATOR_NAMES}")
    if name in ("exact", "sfe", "ste", "gs"):
        return EstimatorSetup(name=name, kind=name, tau=tau,
                              noise_temperature=noise_temperature, **kw)
    kind, mode = name.split("-")
    return EstimatorSetup(name=name, kind=kind, mode=mode,
                          lam=lam if kind == "imle" else None, tau=tau,
                          noise_temperature=noise_temperature, **kw)


@dataclass
class BenchRecord:
    estimator: str
    spec: str
    n: int
    samples: int
    lam: float | None      # None when the estimator has no fixed step size
    adaptive: bool         # True for adaptive-step rows ("adaptive" in CSV)
    tau: float
    seed: int
    cosine: float
    l0_norm: float
    zero_fraction: float
    wall_time_s: float


def cosine_similarity(a, b) -> float:
    """<a, b> / (|a| |b|); by convention 0 when either vector is zero."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def draw_instance(spec: PolytopeSpec, seed: int):
    """The benchmark problem instance for a seed: theta and target b, both N(0, I)."""
    rng = substream(seed, 0)
    theta = rng.standard_normal(spec.dim)
    b = rng.standard_normal(spec.dim)
    return theta, b


class _MemoDGrad:
    """Cache downstream-gradient evaluations by state; valid because the
    callable is pure in z, which keeps long warm-up loops off the repeated
    loss evaluations."""

    __slots__ = ("fn", "cache")

    def __init__(self, fn):
        self.fn = fn
        self.cache = {}

    def __call__(self, z):
        key = z.tobytes()
        out = self.cache.get(key)
        if out is None:
            out = self.cache[key] = self.fn(z)
        return out


def run_estimate(spec: PolytopeSpec, setup: EstimatorSetup, theta, b,
                 samples: int, rng, guard: int = DEFAULT_GUARD) -> GradientEstimate:
    """One estimator call on a fixed instance (including any controller warm-up)."""
    qloss = QuadraticLoss(b)
    if setup.kind == "exact":
        return exact_oracle_estimate(spec, theta, setup.tau, qloss.value, guard=guard)
    if setup.kind == "sfe":
        return estimate_sfe(spec, theta, setup.tau, qloss.value, samples, rng, guard=guard)
    if setup.kind == "ste":
        return estimate_ste(spec, theta, setup.noise(), _MemoDGrad(qloss), samples, rng)
    if setup.kind == "gs":
        return estimate_gumbel_softmax(spec, theta, setup.tau, qloss, samples, rng)
    if setup.kind == "imle":
        if setup.lam == 0.0:
            # Step zero never flips a MAP call: the estimate is exactly zero.
            return GradientEstimate(np.zeros(spec.dim), samples, 0.0, True)
        return estimate_imle(spec, theta, setup.noise(), _MemoDGrad(qloss),
                             setup.lam, samples, rng, mode=setup.mode)
    if setup.kind == "aimle":
        dgrad = _MemoDGrad(qloss)
        controller = setup.controller()
        for _ in range(setup.warmup_steps):
            _, controller, _ = estimate_aimle(
                spec, theta, setup.noise(), dgrad, controller,
                setup.warmup_samples, rng, mode=setup.mode)
        est, _, _ = estimate_aimle(spec, theta, setup.noise(), dgrad, controller,
                                   samples, rng, mode=setup.mode)
        return est
    raise ValueError(f"unknown estimator kind {setup.kind!r}")


def _record_task(payload) -> BenchRecord:
    (spec, setup, samples, seed, cell, tau, guard, measure_time) = payload
    theta, b = draw_instance(spec, seed)
    truth = exact_gradient(spec, theta, tau, QuadraticLoss(b).value, guard=guard)
    rng = substream(seed, 1 + cell)
    t0 = time.perf_counter()
    est = run_estimate(spec, setup, theta, b, samples, rng, guard=guard)
    elapsed = time.perf_counter() - t0 if measure_time else 0.0
    grid_tau = setup.tau if setup.kind in ("exact", "sfe", "gs") else setup.noise_temperature
    return BenchRecord(
        estimator=setup.name, spec=spec.label(), n=spec.dim, samples=samples,
        lam=setup.lam, adaptive=setup.kind == "aimle", tau=grid_tau, seed=seed,
        cosine=cosine_similarity(est.grad, truth),
        l0_norm=est.l0_norm,
        zero_fraction=float(np.mean(est.grad == 0.0)),
        wall_time_s=elapsed,
    )


def _run_tasks(payloads, jobs: int):
    if jobs <= 1:
        return [_record_task(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_record_task, payloads, chunksize=1))


def bench_cosine(spec: PolytopeSpec, setups, s_grid, seeds, *, tau: float = 1.0,
                 guard: int = DEFAULT_GUARD, jobs: int = 1,
                 measure_time: bool = True) -> list[BenchRecord]:
    """Cosine similarity of each (estimator, sample count, seed) cell.

    The true gradient is the enumeration oracle at temperature ``tau``;
    estimates never stand in for it.
    """
    payloads = []
    for i, setup in enumerate(setups):
        for j, samples in enumerate(s_grid):
            cell = i * len(s_grid) + j
            for seed in seeds:
                payloads.append((spec, setup, int(samples), int(seed), cell,
                                 tau, guard, measure_time))
    return _run_tasks(payloads, jobs)


def sweep_lambda(spec: PolytopeSpec, lam_grid, seeds, *, samples: int = 1000,
                 mode: str = "central", tau: float = 1.0,
                 noise_temperature: float = 1.0, aimle: EstimatorSetup | None = None,
                 guard: int = DEFAULT_GUARD, jobs: int = 1,
                 measure_time: bool = True) -> list[BenchRecord]:
    """Fixed-step estimator across ``lam_grid`` (endpoints included) plus one
    adaptive row per seed."""
    setups = [
        setup_from_name(f"imle-{mode}", lam=float(lam), tau=tau,
                        noise_temperature=noise_temperature)
        for lam in lam_grid
    ]
    if aimle is None:
        aimle = setup_from_name(f"aimle-{mode}", tau=tau,
                                noise_temperature=noise_temperature,
                                warmup_samples=samples)
    setups.append(aimle)
    return bench_cosine(spec, setups, [samples], seeds, tau=tau, guard=guard,
                        jobs=jobs, measure_time=measure_time)


def aggregate(records: list[BenchRecord]):
    """Mean/std over seeds per (estimator, spec, n, S, lambda, tau) group,
    in first-appearance order. Returns a list of dict rows."""
    groups: dict[tuple, list[BenchRecord]] = {}
    for r in records:
        lam_key = "adaptive" if r.adaptive else r.lam
        key = (r.estimator, r.spec, r.n, r.samples, lam_key, r.tau)
        groups.setdefault(key, []).append(r)

    def stats(vals):
        vals = np.asarray(vals, dtype=float)
        return float(vals.mean()), float(vals.std(ddof=1)) if len(vals) > 1 else 0.0

    rows = []
    for (estimator, spec, n, samples, lam_key, tau), rs in groups.items():
        cm, cs = stats([r.cosine for r in rs])
        lm, ls = stats([r.l0_norm for r in rs])
        zm, zs = stats([r.zero_fraction for r in rs])
        rows.append({
            "estimator": estimator, "spec": spec, "n": n, "S": samples,
            "lambda": lam_key if lam_key is not None else float("nan"), "tau": tau,
            "seeds": len(rs),
            "cosine_mean": cm, "cosine_std": cs,
            "l0_norm_mean": lm, "l0_norm_std": ls,
            "zero_fraction_mean": zm, "zero_fraction_std": zs,
            "wall_time_s_mean": float(np.mean([r.wall_time_s for r in rs])),
        })
    return rows


def expected_imle_gradient_exact(spec: PolytopeSpec, theta, dgrad, lam: float,
                                 tau: float = 1.0, guard: int = DEFAULT_GUARD):
    """Exact expectation of the single-sample finite-difference estimate.

    E_{zbar ~ p(z; theta)}[mu(theta) - mu(theta - lam * grad f(zbar))], summed
    over all states by enumeration. Returns (unscaled, scaled) where scaled
    divides by lam. The scaled vector generally differs from the true
    expected-loss gradient by a nonzero bias for any fixed lam, while the
    unscaled vector vanishes as lam -> 0.
    """
    if not lam > 0:
        raise InvalidStep(f"step size must be > 0, got {lam}")
    states, probs = state_probabilities(spec, theta, tau, guard=guard)
    mu0 = marginals(spec, theta, tau, guard=guard)
    unscaled = np.zeros(spec.dim)
    for zbar, p in zip(states, probs):
        _, g = dgrad(zbar)
        mu1 = marginals(spec, np.asarray(theta, dtype=float) - lam * np.asarray(g),
                        tau, guard=guard)
        unscaled += p * (mu0 - mu1)
    return unscaled, unscaled / lam


@dataclass
class TrainStep:
    """Per-step diagnostics of the toy training loop."""

    step: int
    loss: float
    lam: float     # nan when the estimator has no step size
    g_bar: float   # nan for non-adaptive estimators
    alpha: float   # nan for non-adaptive estimators


def run_toy_training(spec: PolytopeSpec, setup: EstimatorSetup,
                     opt_cfg: OptimizerConfig, steps: int, seed: int, *,
                     samples: int = 1, tau: float = 1.0,
                     guard: int = DEFAULT_GUARD) -> list[TrainStep]:
    """Optimize theta against a seed-drawn quadratic target.

    The start point and target come from ``draw_instance`` (theta exactly
    zero would pin the adaptive step size at zero, since it is normalized as
    a fraction of |theta|). Records (step, exact expected loss, step size,
    controller EMA, alpha) at every iteration; the exact loss is
    reporting-only and never feeds back into the estimator under test.
    """
    theta, b = draw_instance(spec, seed)
    qloss = QuadraticLoss(b)
    dgrad = _MemoDGrad(qloss)
    rng = substream(seed, 1)
    opt_state = init_opt_state(opt_cfg, spec.dim)
    controller = setup.controller() if setup.kind == "aimle" else None
    nan = float("nan")
    trajectory = []
    for t in range(steps):
        loss_now = exact_expected_loss(spec, theta, tau, qloss.value, guard=guard)
        lam, g_bar, alpha = nan, nan, nan
        if setup.kind == "aimle":
            est, controller, lam = estimate_aimle(
                spec, theta, setup.noise(), dgrad, controller, samples, rng,
                mode=setup.mode)
            g_bar, alpha = controller.g_bar, controller.alpha
        else:
            est = run_estimate(spec, setup, theta, b, samples, rng, guard=guard)
            if setup.kind == "imle":
                lam = setup.lam
        theta, opt_state = optimizer_step(opt_cfg, theta, est.grad, opt_state)
        trajectory.append(TrainStep(step=t, loss=loss_now, lam=lam,
                                    g_bar=g_bar, alpha=alpha))
    return trajectory
