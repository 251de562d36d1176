"""Closed-form proximal and projection maps used by both solvers.

Each map is the per-pixel minimizer of ``(1/2t) * (x - w)**2 + g(x)`` for its
penalty ``g``; the model-specific anchor algebra (what ``w`` is) lives with
the callers, so these stay small and stateless.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "prox_data_u",
    "project_linf_ball",
    "shrink_quadratic_dual",
    "prox_clamped_quadratic",
    "aux_primal",
]


def _match(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch in {what}: {a.shape} vs {b.shape}")


def prox_data_u(ubar, g, t: float, beta: float) -> np.ndarray:
    """Quadratic-fidelity prox: ``(ubar + t*beta*g) / (1 + t*beta)``."""
    ubar = np.asarray(ubar, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    _match(ubar, g, "prox_data_u")
    if not t > 0.0:
        raise ValueError(f"step t must be positive, got {t}")
    if beta < 0.0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    tb = t * beta
    if tb == 0.0:
        return ubar.copy()
    # rearranged so the fixed point ubar == g is exact in floating point
    return g + (ubar - g) / (1.0 + tb)


def project_linf_ball(qbar, radius: float) -> np.ndarray:
    """Project onto ``{q : pointwise |q| <= radius}`` (Euclidean per pixel).

    Pixels inside the ball are untouched; outside they are rescaled to
    magnitude ``radius``.  The denominator ``max(1, |q|/radius)`` is exact at
    zero, so no epsilon guard is needed.
    """
    qbar = np.asarray(qbar, dtype=np.float64)
    if not radius > 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    mag = np.hypot(qbar[0], qbar[1])
    return qbar / np.maximum(1.0, mag / radius)


def shrink_quadratic_dual(qbar, mu: float, tau: float) -> np.ndarray:
    """Uniform shrinkage ``mu / (mu + tau) * qbar`` (prox of a quadratic)."""
    if not mu > 0.0 or not tau > 0.0:
        raise ValueError(f"mu and tau must be positive, got mu={mu}, tau={tau}")
    return (mu / (mu + tau)) * np.asarray(qbar, dtype=np.float64)


def prox_clamped_quadratic(pbar, anchor, tau: float) -> np.ndarray:
    """Box-constrained quadratic prox: ``clip((pbar + tau*anchor)/(1+tau), 0, 1)``."""
    pbar = np.asarray(pbar, dtype=np.float64)
    anchor = np.asarray(anchor, dtype=np.float64)
    _match(pbar, anchor, "prox_clamped_quadratic")
    if not tau > 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    return np.clip((pbar + tau * anchor) / (1.0 + tau), 0.0, 1.0)


def aux_primal(anchor, divq) -> np.ndarray:
    """Auxiliary primal point ``clip(anchor + divq, 0, 1)`` for the gap formulas."""
    anchor = np.asarray(anchor, dtype=np.float64)
    divq = np.asarray(divq, dtype=np.float64)
    _match(anchor, divq, "aux_primal")
    return np.clip(anchor + divq, 0.0, 1.0)
