"""Toy downstream losses and first-order optimizers for the training loop."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch


def quad_loss(b, z) -> tuple[float, np.ndarray]:
    """Value and gradient of ||z - b||^2 at z."""
    b = np.asarray(b, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.shape != b.shape:
        raise DimensionMismatch(f"z shape {z.shape} vs b shape {b.shape}")
    diff = z - b
    return float(np.dot(diff, diff)), 2.0 * diff


@dataclass(frozen=True)
class QuadraticLoss:
    """Squared distance to a fixed target; usable wherever a downstream
    gradient callable (state -> (value, grad)) is expected."""

    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        if not np.all(np.isfinite(self.b)):
            raise ValueError("target entries must be finite")

    def __call__(self, z) -> tuple[float, np.ndarray]:
        return quad_loss(self.b, z)

    def value(self, z) -> float:
        return quad_loss(self.b, z)[0]


@dataclass(frozen=True)
class SGD:
    lr: float = 0.1

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")


@dataclass(frozen=True)
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")


OptimizerConfig = SGD | Adam


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0


def init_opt_state(cfg: OptimizerConfig, dim: int):
    if isinstance(cfg, Adam):
        return AdamState(m=np.zeros(dim), v=np.zeros(dim))
    return None


def optimizer_step(cfg: OptimizerConfig, params, grad, opt_state=None):
    """One descent step; returns (new_params, new_state)."""
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if params.shape != grad.shape:
        raise DimensionMismatch(f"params shape {params.shape} vs grad shape {grad.shape}")
    if isinstance(cfg, SGD):
        return params - cfg.lr * grad, None
    if isinstance(cfg, Adam):
        if opt_state is None:
            opt_state = init_opt_state(cfg, params.shape[0])
        t = opt_state.t + 1
        m = cfg.beta1 * opt_state.m + (1 - cfg.beta1) * grad
        v = cfg.beta2 * opt_state.v + (1 - cfg.beta2) * grad**2
        m_hat = m / (1 - cfg.beta1**t)
        v_hat = v / (1 - cfg.beta2**t)
        new_params = params - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
        return new_params, AdamState(m=m, v=v, t=t)
    raise TypeError(f"unknown optimizer config {type(cfg).__name__}")
