"""Gradient estimators for expectations over discrete distributions.

Estimates nabla_theta E_{z ~ p(z; theta)}[f(z)] for a black-box downstream
function f with accessible gradient nabla_z f. Implemented estimators:

* ``estimate_sfe`` — score-function (REINFORCE) estimator from exact samples;
  unbiased, high variance.
* ``estimate_ste`` — straight-through: passes nabla_z f(z) through the
  sampling step with an identity Jacobian; biased baseline.
* ``estimate_gumbel_softmax`` — pathwise estimator through the tempered
  softmax relaxation; categorical state spaces only.
* ``estimate_imle`` — finite difference of two MAP calls, forward
  (1/lambda)[MAP(theta+eps) - MAP(theta+eps - lambda g)] or centred
  (1/2lambda)[MAP(.. + lambda g) - MAP(.. - lambda g)]; the step size lambda
  trades sparsity against bias.
* ``estimate_aimle`` — the adaptive variant: lambda is derived from the
  controller fraction alpha and the batch's parameter/gradient norms, and the
  controller is updated from the observed gradient sparsity.

Downstream gradients are supplied as a callable mapping a state (an (m,)
array) to a ``(value, grad)`` pair, e.g. ``optim.QuadraticLoss``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .controller import AimleControllerState, compute_lambda, update_alpha, update_ema
from .errors import DegenerateGradient, InvalidStep, UnsupportedSpec
from .noise import GumbelNoise, NoiseSpec, sample_noise
from .polytopes import (
    Categorical,
    DEFAULT_GUARD,
    PolytopeSpec,
    check_tau,
    check_theta,
    state_probabilities,
)
from .solvers import map_solve_batch

DownstreamGrad = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass
class GradientEstimate:
    """An estimated gradient plus its sparsity diagnostics.

    ``l0_norm`` is the mean number of nonzero components per sample of the
    quantity each estimator averages (for the finite-difference estimators,
    the unscaled MAP-difference vector). ``is_zero`` marks an estimate that
    is exactly the zero vector.
    """

    grad: np.ndarray
    samples_used: int
    l0_norm: float
    is_zero: bool


def _finish(grad: np.ndarray, samples: int, l0: float) -> GradientEstimate:
    return GradientEstimate(
        grad=grad, samples_used=samples, l0_norm=float(l0),
        is_zero=not bool(np.any(grad)),
    )


def estimate_sfe(spec: PolytopeSpec, theta, tau: float, loss, samples: int,
                 rng: np.random.Generator, guard: int = DEFAULT_GUARD) -> GradientEstimate:
    """Score-function estimator: average of (1/tau)(z - mu) loss(z) over exact samples.

    ``loss`` maps a state to a scalar. Exact sampling and marginals come from
    enumeration, so the spec must pass the enumeration guard.
    """
    theta = check_theta(spec, theta)
    tau = check_tau(tau)
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    states, probs = state_probabilities(spec, theta, tau, guard=guard)
    mu = states.astype(float).T @ probs
    idx = rng.choice(len(states), size=samples, p=probs)
    counts = np.bincount(idx, minlength=len(states))
    grad = np.zeros(spec.dim)
    l0 = 0.0
    for i in np.flatnonzero(counts):
        w = (states[i].astype(float) - mu) * (loss(states[i]) / tau)
        frac = counts[i] / samples
        grad += frac * w
        l0 += frac * np.count_nonzero(w)
    return _finish(grad, samples, l0)


def _batch_dgrads(states: np.ndarray, dgrad: DownstreamGrad) -> np.ndarray:
    """Evaluate dgrad on each row, deduplicating repeated states.

    Binary rows with at most 62 entries pack losslessly into int64 keys,
    which keeps the dedup off the slow row-wise unique path.
    """
    m = states.shape[1]
    if m <= 62:
        powers = np.left_shift(np.int64(1), np.arange(m, dtype=np.int64))
        packed = states.astype(np.int64) @ powers
        _, first_idx, inverse = np.unique(packed, return_index=True,
                                          return_inverse=True)
        uniq = states[first_idx]
    else:
        seen: dict[bytes, int] = {}
        first, inverse = [], np.empty(len(states), dtype=np.intp)
        for i, row in enumerate(states):
            key = row.tobytes()
            idx = seen.get(key)
            if idx is None:
                idx = seen[key] = len(first)
                first.append(i)
            inverse[i] = idx
        uniq = states[first]
    grads = np.empty((len(uniq), m))
    for i, z in enumerate(uniq):
        _, g = dgrad(z)
        g = np.asarray(g, dtype=float)
        if g.shape != (m,) or not np.all(np.isfinite(g)):
            raise ValueError("downstream gradient must be a finite vector of state length")
        grads[i] = g
    return grads[inverse]


def estimate_ste(spec: PolytopeSpec, theta, noise: NoiseSpec, dgrad: DownstreamGrad,
                 samples: int, rng: np.random.Generator) -> GradientEstimate:
    """Straight-through estimator: mean of nabla_z f(z_i) at perturb-and-MAP samples."""
    theta = check_theta(spec, theta)
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    eps = sample_noise(noise, spec.dim, rng, size=samples)
    zs = map_solve_batch(spec, theta[None, :] + eps)
    g = _batch_dgrads(zs, dgrad)
    grad = g.mean(axis=0)
    l0 = np.count_nonzero(g, axis=1).mean()
    return _finish(grad, samples, l0)


def estimate_gumbel_softmax(spec: PolytopeSpec, theta, tau_gs: float,
                            dgrad: DownstreamGrad, samples: int,
                            rng: np.random.Generator) -> GradientEstimate:
    """Pathwise estimator through s = softmax((theta + gumbel)/tau_gs).

    Averages J^T nabla_s f(s) with the analytic softmax Jacobian
    J = (diag(s) - s s^T)/tau_gs. Unbiased for the relaxed objective
    E_gumbel[f(s)], not for the discrete one. Categorical only.
    """
    if not isinstance(spec, Categorical):
        raise UnsupportedSpec("the softmax relaxation applies to categorical state spaces only")
    theta = check_theta(spec, theta)
    tau_gs = check_tau(tau_gs)
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    gamma = sample_noise(GumbelNoise(1.0), spec.dim, rng, size=samples)
    logits = (theta[None, :] + gamma) / tau_gs
    logits -= logits.max(axis=1, keepdims=True)
    s = np.exp(logits)
    s /= s.sum(axis=1, keepdims=True)
    grad = np.zeros(spec.dim)
    l0 = 0.0
    for i in range(samples):
        _, v = dgrad(s[i])
        v = np.asarray(v, dtype=float)
        per = (s[i] * v - s[i] * np.dot(s[i], v)) / tau_gs
        grad += per
        l0 += np.count_nonzero(per)
    return _finish(grad / samples, samples, l0 / samples)


def _map_difference(spec, shifted, zs, gs, lam: float, mode: str) -> np.ndarray:
    """Per-sample unscaled MAP differences, components in {-1, 0, 1}.

    ``shifted`` is the perturbed parameter batch theta + eps and ``zs`` its
    MAP states (the forward scheme reuses them as its left term).
    """
    if lam == 0.0:
        return np.zeros(shifted.shape, dtype=np.int8)
    step = lam * gs
    if mode == "forward":
        left = zs
        right = map_solve_batch(spec, shifted - step)
    elif mode == "central":
        left = map_solve_batch(spec, shifted + step)
        right = map_solve_batch(spec, shifted - step)
    else:
        raise ValueError(f"mode must be 'forward' or 'central', got {mode!r}")
    return left - right


def _scale(mode: str, lam: float) -> float:
    return 1.0 / lam if mode == "forward" else 1.0 / (2.0 * lam)


def estimate_imle(spec: PolytopeSpec, theta, noise: NoiseSpec, dgrad: DownstreamGrad,
                  lam: float, samples: int, rng: np.random.Generator,
                  mode: str = "forward") -> GradientEstimate:
    """Finite-difference estimator through perturbed MAP calls.

    Forward mode averages (1/lam)[MAP(theta+eps_i) - MAP(theta+eps_i - lam g_i)];
    central mode averages (1/2lam)[MAP(.. + lam g_i) - MAP(.. - lam g_i)], with
    g_i = nabla_z f at z_i = MAP(theta + eps_i).
    """
    if not lam > 0:
        raise InvalidStep(f"step size must be > 0, got {lam}")
    theta = check_theta(spec, theta)
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    shifted = theta[None, :] + sample_noise(noise, spec.dim, rng, size=samples)
    zs = map_solve_batch(spec, shifted)
    gs = _batch_dgrads(zs, dgrad)
    diffs = _map_difference(spec, shifted, zs, gs, lam, mode)
    grad = diffs.mean(axis=0) * _scale(mode, lam)
    l0 = np.count_nonzero(diffs, axis=1).mean()
    return _finish(grad, samples, l0)


def estimate_aimle(spec: PolytopeSpec, theta, noise: NoiseSpec, dgrad: DownstreamGrad,
                   controller: AimleControllerState, samples: int,
                   rng: np.random.Generator, mode: str = "central",
                   ) -> tuple[GradientEstimate, AimleControllerState, float]:
    """Adaptive finite-difference estimator.

    Runs one backward pass: derives lam from the controller's alpha and the
    batch norms (zero-norm samples are skipped; if all degenerate, lam = 0
    and the estimate is exactly zero), computes the finite-difference
    gradient at that lam, then updates the controller's moving average and
    alpha. Returns (estimate, updated controller, lam used).

    With the same rng stream and a frozen controller, the returned gradient
    is bit-identical to ``estimate_imle`` at the induced lam.
    """
    theta = check_theta(spec, theta)
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    shifted = theta[None, :] + sample_noise(noise, spec.dim, rng, size=samples)
    zs = map_solve_batch(spec, shifted)
    gs = _batch_dgrads(zs, dgrad)
    norms = np.linalg.norm(gs, axis=1)
    try:
        lam = compute_lambda(controller, float(np.linalg.norm(theta)), norms)
    except DegenerateGradient:
        lam = 0.0
    diffs = _map_difference(spec, shifted, zs, gs, lam, mode)
    grad = diffs.mean(axis=0) * _scale(mode, lam) if lam > 0 else np.zeros(spec.dim)
    per_sample_l0 = np.count_nonzero(diffs, axis=1)
    controller = update_alpha(update_ema(controller, per_sample_l0))
    est = _finish(grad, samples, per_sample_l0.mean())
    return est, controller, lam


def exact_oracle_estimate(spec, theta, tau: float, loss,
                          guard: int = DEFAULT_GUARD) -> GradientEstimate:
    """The enumeration gradient packaged as a GradientEstimate (benchmark baseline)."""
    from .polytopes import exact_gradient

    grad = exact_gradient(spec, theta, tau, loss, guard=guard)
    return _finish(grad, 0, float(np.count_nonzero(grad)))
