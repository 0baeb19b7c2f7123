"""Adaptive step-size controller for finite-difference gradient estimation.

The controller keeps an exponential moving average ``g_bar`` of the number of
nonzero gradient components per example and nudges the fraction ``alpha`` up
or down by ``eta`` to steer ``g_bar`` toward the target ``c``. The actual
finite-difference step is ``lambda = alpha * mean_i(|theta| / |grad_i|)``, so
a single alpha translates to a comparable perturbation magnitude across
inputs of different scales.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateGradient, EmptyBatch


@dataclass(frozen=True)
class AimleControllerState:
    """Controller state (alpha, g_bar, eta, c, gamma, step counter).

    ``eta = 0`` freezes the controller, which reduces the adaptive estimator
    to the plain fixed-step one.
    """

    alpha: float = 0.0
    g_bar: float = 1.0
    eta: float = 1e-3
    c: float = 1.0
    gamma: float = 0.9
    t: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.g_bar < 0:
            raise ValueError(f"g_bar must be >= 0, got {self.g_bar}")
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if self.c <= 0:
            raise ValueError(f"c must be > 0, got {self.c}")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")


def compute_lambda(state: AimleControllerState, theta_norm: float,
                   dgrad_norms) -> float:
    """Step size alpha * mean_i(theta_norm / dgrad_norms[i]).

    Zero norms are skipped; if every norm is zero the ratio is undefined and
    DegenerateGradient is raised.
    """
    norms = np.asarray(dgrad_norms, dtype=float)
    norms = norms[norms > 0]
    if norms.size == 0:
        raise DegenerateGradient("every downstream gradient has zero norm")
    return state.alpha * float(np.mean(theta_norm / norms))


def update_ema(state: AimleControllerState, batch_l0) -> AimleControllerState:
    """Fold a batch of per-example nonzero counts into the moving average."""
    batch = np.asarray(batch_l0, dtype=float)
    if batch.size == 0:
        raise EmptyBatch("controller update needs at least one per-example count")
    g_bar = state.gamma * state.g_bar + (1 - state.gamma) * float(batch.mean())
    return replace(state, g_bar=g_bar, t=state.t + 1)


def update_alpha(state: AimleControllerState) -> AimleControllerState:
    """Move alpha by +eta if g_bar <= c else -eta, clamped at zero."""
    step = state.eta if state.g_bar <= state.c else -state.eta
    return replace(state, alpha=max(0.0, state.alpha + step))
