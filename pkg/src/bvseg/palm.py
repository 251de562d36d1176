"""Outer alternating proximal-gradient loop for both phase-field models.

Each iteration takes one explicit/proximal step in the image ``u`` (a
diffusion step weighted by ``v**2`` followed by the fidelity prox) and one
linearized step in the phase field ``v``, whose prox subproblem is handed to
the primal-dual inner solver.  Step sizes come from the gradient Lipschitz
constants: ``t = h^2 / (8*alpha)`` using the difference-operator norm bound
``|grad_h|^2 < 8/h^2``, and ``s = theta / (alpha * max |grad_h u|^2)``.

Stops when the sup-norm change of both blocks drops below ``tol1`` or after
``max_outer`` iterations.  Deterministic: all randomness (noise) lives in
the image pipeline.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .energies import ModelParams, energy
from .fields import div, grad, norm_inf
from .primal_dual import InnerProblem, solve_inner
from .prox import prox_data_u

__all__ = ["SolverParams", "RunRow", "RunReport", "step_sizes", "solve", "RUN_CSV_HEADER"]

RUN_CSV_HEADER = "it,energy,inner_iters,gap,du_inf,dv_inf,ms"

# Fallback v-step when u is exactly constant and the Lipschitz formula
# divides by zero; any finite value works there since the gradient term
# exerts no force on v.
_S_CAP_FACTOR = 1e3


@dataclass(frozen=True, kw_only=True)
class SolverParams(ModelParams):
    """Model parameters plus loop controls.

    Defaults: alpha 1.75e-4, beta 1, gamma 3e-5, theta 0.99, tol1 1e-3,
    tol2 1e-5, max_outer 10000.  ``epsilon``, ``h`` and ``model`` have no
    defaults; they are the experiment variables.
    """

    alpha: float = 1.75e-4
    beta: float = 1.0
    gamma: float = 3e-5
    theta: float = 0.99
    tol1: float = 1e-3
    tol2: float = 1e-5
    max_outer: int = 10_000
    max_inner: int = 5_000
    gap_every: int = 1
    seed: int = 0

    def __post_init__(self):
        super().__post_init__()
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if not self.tol1 > 0.0 or not self.tol2 > 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration limits must be positive")


@dataclass
class RunRow:
    it: int
    energy: float
    inner_iters: int
    gap: float
    du_inf: float
    dv_inf: float
    ms: float

    def to_csv(self) -> str:
        return ",".join(
            str(x) for x in (self.it, self.energy, self.inner_iters,
                             self.gap, self.du_inf, self.dv_inf, self.ms)
        )


@dataclass
class RunReport:
    """Per-iteration log of an outer run; ``status`` is ``converged`` or
    ``max-iterations``."""

    rows: list[RunRow] = field(default_factory=list)
    status: str = "max-iterations"

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_csv(self, path) -> None:
        lines = [RUN_CSV_HEADER] + [r.to_csv() for r in self.rows]
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")


def _s_from_max_gradsq(m: float, params: SolverParams) -> float:
    if m > 0.0:
        return params.theta / (params.alpha * m)
    return params.theta * params.epsilon / params.gamma * _S_CAP_FACTOR


def step_sizes(u, params: SolverParams) -> tuple[float, float]:
    """Return ``(t, s)`` for the current image iterate.

    ``t`` is constant; ``s`` depends on the largest squared gradient of
    ``u``.  For an exactly constant ``u`` the formula degenerates and ``s``
    is capped at ``theta * eps / gamma * 1e3``.
    """
    t = params.h**2 / (8.0 * params.alpha)
    gu = grad(u, params.h)
    m = float(np.max(gu[0] ** 2 + gu[1] ** 2))
    return t, _s_from_max_gradsq(m, params)


def solve(
    g,
    params: SolverParams,
    progress: Callable[[RunRow], None] | None = None,
) -> tuple[np.ndarray, np.ndarray, RunReport]:
    """Minimize the selected discrete energy for input image ``g``.

    Returns the reconstruction ``u``, the phase field ``v`` and the full
    per-iteration report.  ``g`` samples must lie in [0, 1].
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2:
        raise ValueError(f"input image must be 2-D, got shape {g.shape}")
    if np.any(g < 0.0) or np.any(g > 1.0):
        raise ValueError("input image samples must lie in [0, 1]")

    u = g.copy()
    v = np.ones_like(g)
    q = np.zeros((2,) + g.shape)
    t = params.h**2 / (8.0 * params.alpha)
    report = RunReport()

    for it in range(1, params.max_outer + 1):
        tic = time.perf_counter()
        u0 = u
        v0 = v

        gu = grad(u, params.h)
        ubar = u + t * params.alpha * div(v * v * gu, params.h)
        u = prox_data_u(ubar, g, t, params.beta)

        gu = grad(u, params.h)
        gsq = gu[0] ** 2 + gu[1] ** 2
        s = _s_from_max_gradsq(float(np.max(gsq)), params)
        vbar = v - s * params.alpha * v * gsq

        problem = InnerProblem(vbar=vbar, s=s, params=params)
        v, state = solve_inner(
            problem,
            tol2=params.tol2,
            max_inner=params.max_inner,
            p0=v,
            q0=q,
            gap_every=params.gap_every,
        )
        q = state.q

        du = norm_inf(u - u0)
        dv = norm_inf(v - v0)
        row = RunRow(
            it=it,
            energy=energy(u, v, params, g),
            inner_iters=state.iters,
            gap=state.gap,
            du_inf=du,
            dv_inf=dv,
            ms=(time.perf_counter() - tic) * 1e3,
        )
        report.rows.append(row)
        if progress is not None:
            progress(row)
        if max(du, dv) <= params.tol1:
            report.status = "converged"
            break

    return u, v, report
