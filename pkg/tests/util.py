"""Shared test oracles: finite differences and brute-force enumeration checks."""

import numpy as np


def central_fd(f, x, h=1e-5):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        up = x.copy()
        dn = x.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (f(up) - f(dn)) / (2 * h)
    return grad


def softmax(t):
    t = np.asarray(t, dtype=float)
    e = np.exp(t - t.max())
    return e / e.sum()


def sfe_standard_errors(spec, theta, tau, loss, samples):
    """Exact per-component standard error of a `samples`-draw score-function
    mean, computed by enumeration (independent of the estimator's sampling)."""
    from pamgrad.polytopes import state_probabilities

    states, probs = state_probabilities(spec, theta, tau)
    mu = states.astype(float).T @ probs
    per_state = np.array([(z.astype(float) - mu) * (loss(z) / tau) for z in states])
    mean = per_state.T @ probs
    var = (per_state**2).T @ probs - mean**2
    return np.sqrt(var / samples)
