"""Primal-dual inner solver for the phase-field subproblem.

Solves, over phase fields ``p`` in [0, 1]^(M x N),

    min  1/2 ||p - anchor||^2  +  R(grad_1 p)

where the regularizer R is the weighted pointwise-L1 norm for the BV model
and a weighted squared L2 norm for the H1 model.  The iteration alternates a
dual step (projection / shrinkage), a primal clamped-quadratic prox, and an
extrapolation, with unit-spacing difference operators; grid spacing enters
only through the regularizer weights.  The duality gap is available in
closed form for both models and drives the stopping rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .energies import ModelParams
from .fields import div, grad, inner, norm1, norm2, pointwise_norm
from .prox import aux_primal, project_linf_ball, prox_clamped_quadratic, shrink_quadratic_dual

__all__ = ["InnerProblem", "PdState", "solve_inner", "gap_bv", "gap_h1", "TAU_DEFAULT"]

TAU_DEFAULT = 1.0 / math.sqrt(8.0)

# How far a projection may move a "feasible" dual before gap_bv flags it.
_FEAS_SLACK = 1e-12


@dataclass(frozen=True)
class InnerProblem:
    """One v-subproblem: linearized point ``vbar``, step ``s``, parameters."""

    vbar: np.ndarray
    s: float
    params: ModelParams

    def __post_init__(self):
        if not self.s > 0.0:
            raise ValueError(f"step s must be positive, got {self.s}")

    @property
    def model(self) -> str:
        return self.params.model

    @property
    def anchor(self) -> np.ndarray:
        """Target of the primal quadratic; model-specific."""
        p = self.params
        gs = p.gamma * self.s
        if p.model == "bv":
            return self.vbar + 0.5 * gs / p.epsilon
        return (2.0 * p.epsilon * self.vbar + gs) / (2.0 * p.epsilon + gs)

    @property
    def tv_weight(self) -> float:
        """BV dual-ball radius / primal TV weight ``gamma*s / (2h)``."""
        p = self.params
        return 0.5 * p.gamma * self.s / p.h

    @property
    def mu(self) -> float:
        """H1 quadratic gradient weight ``4*gamma*eps^2*s / (h^2*(2*eps + gamma*s))``."""
        p = self.params
        return 4.0 * p.gamma * p.epsilon**2 * self.s / (p.h**2 * (2.0 * p.epsilon + p.gamma * self.s))


@dataclass
class PdState:
    """Iterate bundle returned by :func:`solve_inner`."""

    p: np.ndarray
    p_hat: np.ndarray
    q: np.ndarray
    gap: float
    iters: int
    converged: bool
    gap_history: list[float] = field(default_factory=list)


def gap_bv(p, q, problem: InnerProblem) -> tuple[float, bool]:
    """Duality gap of the BV subproblem at ``(p, q)``.

    The dual must satisfy ``pointwise |q| <= gamma*s/(2h)``; an infeasible
    ``q`` is projected before evaluation and reported via the returned flag
    (the solver keeps its duals feasible by construction, so the flag only
    matters for standalone calls).  Nonnegative for feasible points, zero
    exactly at a saddle point.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    w = problem.anchor
    radius = problem.tv_weight
    q_feas = project_linf_ball(q, radius)
    moved = float(np.max(np.abs(q_feas - q))) > _FEAS_SLACK * (1.0 + radius)
    divq = div(q_feas, 1.0)
    p_aux = aux_primal(w, divq)
    value = (
        radius * norm1(pointwise_norm(grad(p, 1.0)))
        + inner(p_aux, divq)
        + 0.5 * (norm2(p) ** 2 - norm2(p_aux) ** 2)
        - inner(p - p_aux, w)
    )
    return value, moved


def gap_h1(p, q, problem: InnerProblem) -> float:
    """Duality gap of the H1 subproblem at ``(p, q)``; no dual constraint."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    w = problem.anchor
    mu = problem.mu
    divq = div(q, 1.0)
    p_aux = aux_primal(w, divq)
    gp = grad(p, 1.0)
    return (
        0.5 * mu * float(np.sum(gp[0] ** 2 + gp[1] ** 2))
        + inner(divq, p_aux)
        + 0.5 / mu * float(np.sum(q[0] ** 2 + q[1] ** 2))
        + 0.5 * (norm2(p) ** 2 - norm2(p_aux) ** 2)
        - inner(p - p_aux, w)
    )


def solve_inner(
    problem: InnerProblem,
    tol2: float = 1e-5,
    max_inner: int = 5000,
    p0: np.ndarray | None = None,
    q0: np.ndarray | None = None,
    tau: float = TAU_DEFAULT,
    gap_every: int = 1,
) -> tuple[np.ndarray, PdState]:
    """Run the primal-dual iteration until the gap drops below ``tol2``.

    ``p0`` defaults to the clamped anchor, ``q0`` to zero; the outer loop
    passes the previous phase field and warm-starts the dual.  ``gap_every``
    thins gap evaluations for large images.  Exhausting ``max_inner`` is not
    an error: the last primal iterate is returned with ``converged=False``.
    """
    if not tol2 > 0.0:
        raise ValueError(f"tol2 must be positive, got {tol2}")
    if tau * tau > 0.125 * (1.0 + 1e-12):
        raise ValueError(f"tau^2 must not exceed 1/8, got tau={tau}")
    if gap_every < 1:
        raise ValueError("gap_every must be >= 1")

    w = problem.anchor
    bv = problem.model == "bv"
    radius = problem.tv_weight if bv else 0.0
    mu = 0.0 if bv else problem.mu

    p = np.clip(w, 0.0, 1.0) if p0 is None else np.asarray(p0, dtype=np.float64).copy()
    if p.shape != problem.vbar.shape:
        raise ValueError(f"p0 shape {p.shape} does not match problem {problem.vbar.shape}")
    q = np.zeros((2,) + p.shape) if q0 is None else np.asarray(q0, dtype=np.float64).copy()
    p_hat = p.copy()

    gap = math.inf
    history: list[float] = []
    converged = False
    iters = 0
    for it in range(1, max_inner + 1):
        iters = it
        p_prev = p
        qbar = q + tau * grad(p_hat, 1.0)
        if bv:
            q = project_linf_ball(qbar, radius)
        else:
            q = shrink_quadratic_dual(qbar, mu, tau)
        pbar = p + tau * div(q, 1.0)
        p = prox_clamped_quadratic(pbar, w, tau)
        p_hat = 2.0 * p - p_prev
        if it % gap_every == 0:
            gap = gap_bv(p, q, problem)[0] if bv else gap_h1(p, q, problem)
            history.append(gap)
            if gap <= tol2:
                converged = True
                break

    state = PdState(p=p, p_hat=p_hat, q=q, gap=gap, iters=iters,
                    converged=converged, gap_history=history)
    return p, state
