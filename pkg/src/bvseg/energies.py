"""Discrete segmentation energies and the phase-field model family.

Two discrete objectives share smoothing and fidelity terms and differ in how
they price the phase field ``v``: the BV model pays a linear well ``(1-v)``
plus total variation of ``v``, the H1 model a quadratic well plus a Dirichlet
term.  Both omit the ``h**2`` volume factor, which does not move minimizers;
the 1-D limit reference re-applies physical scaling explicitly.

Infeasible phase fields (samples outside [0, 1]) yield ``math.inf`` rather
than raising, so energy comparisons stay total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import grad, inner, norm1, norm2, pointwise_norm

__all__ = [
    "ModelParams",
    "energy_bv",
    "energy_at",
    "limit_energy_1d",
    "phi_star",
    "ModelFunctions",
    "AssumptionResult",
    "AssumptionReport",
    "check_assumptions",
]

MODELS = ("bv", "h1")


@dataclass(frozen=True, kw_only=True)
class ModelParams:
    """Scalar parameters of the discrete energies.

    alpha: smoothing weight, beta: fidelity weight, gamma: contour weight,
    epsilon: phase-field width, eta: optional extra weight on the gradient
    term (solvers run with eta = 0; it only affects energy reporting),
    h: pixel size, model: "bv" or "h1".
    """

    alpha: float
    beta: float
    gamma: float
    epsilon: float
    h: float
    model: str
    eta: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "gamma", "epsilon", "h"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("beta", "eta"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")


def _check_shapes(u: np.ndarray, v: np.ndarray, g: np.ndarray) -> None:
    if u.shape != g.shape or u.shape != v.shape:
        raise ValueError(f"shape mismatch: u {u.shape}, v {v.shape}, g {g.shape}")


def _v_feasible(v: np.ndarray) -> bool:
    return bool(np.all(v >= 0.0) and np.all(v <= 1.0))


def _shared_terms(u: np.ndarray, v: np.ndarray, p: ModelParams, g: np.ndarray) -> float:
    gu = grad(u, p.h)
    gsq = gu[0] ** 2 + gu[1] ** 2
    smooth = 0.5 * p.alpha * inner(v * v + p.eta, gsq)
    fidelity = 0.5 * p.beta * norm2(u - g) ** 2
    return smooth + fidelity


def energy_bv(u, v, p: ModelParams, g) -> float:
    """Discrete BV-model energy; ``inf`` if some v sample leaves [0, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    _check_shapes(u, v, g)
    if not _v_feasible(v):
        return math.inf
    well = 0.5 * p.gamma / p.epsilon * float(np.sum(1.0 - v))
    tv = 0.5 * p.gamma * norm1(pointwise_norm(grad(v, p.h)))
    return _shared_terms(u, v, p, g) + well + tv


def energy_at(u, v, p: ModelParams, g) -> float:
    """Discrete H1-model energy; ``inf`` if some v sample leaves [0, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    _check_shapes(u, v, g)
    if not _v_feasible(v):
        return math.inf
    well = 0.25 * p.gamma / p.epsilon * norm2(1.0 - v) ** 2
    gv = grad(v, p.h)
    dirichlet = p.gamma * p.epsilon * float(np.sum(gv[0] ** 2 + gv[1] ** 2))
    return _shared_terms(u, v, p, g) + well + dirichlet


def energy(u, v, p: ModelParams, g) -> float:
    """Dispatch on ``p.model``."""
    return energy_bv(u, v, p, g) if p.model == "bv" else energy_at(u, v, p, g)


def limit_energy_1d(samples, h: float, jumps: int, alpha: float, gamma: float,
                    exclude: np.ndarray | None = None) -> float:
    """Sharp-interface reference energy for a 1-D signal.

    Riemann sum ``alpha/2 * sum(|u'|^2) * h`` over the forward differences of
    ``samples`` (differences flagged in ``exclude`` are skipped: they cross a
    jump and are billed via the jump count) plus ``gamma * jumps``.
    """
    if jumps < 0:
        raise ValueError("jump count must be nonnegative")
    s = np.asarray(samples, dtype=np.float64).ravel()
    d = np.diff(s) / h
    if exclude is not None:
        d = d[~np.asarray(exclude, dtype=bool)]
    return 0.5 * alpha * float(np.sum(d * d)) * h + gamma * jumps


def phi_star(s, epsilon: float):
    """Convex conjugate of the contour-well profile ``t -> t**(1/eps) / eps``.

    Piecewise: ``(1-eps) * (eps**(2*eps) * s) ** (1/(1-eps))`` up to the
    breakpoint ``s = eps**-2`` and ``s - 1/eps`` beyond; continuous at the
    breakpoint.  Accepts scalars or arrays of nonnegative ``s``.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    s_arr = np.asarray(s, dtype=np.float64)
    if np.any(s_arr < 0.0):
        raise ValueError("s must be nonnegative")
    scale = epsilon ** (2.0 * epsilon)
    low = (1.0 - epsilon) * np.power(scale * s_arr, 1.0 / (1.0 - epsilon))
    high = s_arr - 1.0 / epsilon
    out = np.where(s_arr <= epsilon**-2, low, high)
    return float(out) if np.isscalar(s) else out


@dataclass(frozen=True)
class ModelFunctions:
    """The scalar functions defining the BV phase-field family.

    ``well(t) = (1-t)**eps`` is the contour-well profile, ``cost(t)`` its
    growth ``t**(1/eps) / eps``, ``gradient_price(s) = s`` the linear price
    on phase-field gradients, and ``cost_conjugate`` the convex conjugate of
    ``cost``.  ``weight(t) = (alpha/gamma) * t**2`` weighs the image
    gradient.  The limiting well profile is constant one (``c_w = 1``).
    """

    epsilon: float
    alpha: float = 1.0
    gamma: float = 1.0
    c_w: float = 1.0

    def weight(self, t):
        return (self.alpha / self.gamma) * np.square(t)

    def well(self, t):
        return np.power(1.0 - np.asarray(t, dtype=np.float64), self.epsilon)

    def cost(self, t):
        return np.power(np.asarray(t, dtype=np.float64), 1.0 / self.epsilon) / self.epsilon

    def gradient_price(self, s):
        return np.asarray(s, dtype=np.float64)

    def cost_conjugate(self, s):
        return phi_star(s, self.epsilon)


def _graded_quadrature(f, a: float, b: float, total_nodes: int = 10_000) -> float:
    """Composite Gauss-Legendre quadrature on panels graded toward ``b``.

    Geometric panel refinement toward the endpoint handles the algebraic
    derivative singularity of ``(1-t)**eps`` there; 50 panels x 200 nodes.
    """
    panels = 50
    order = total_nodes // panels
    nodes, weights = np.polynomial.legendre.leggauss(order)
    width = b - a
    cuts = [a] + [b - width * 0.5**k for k in range(1, panels)] + [b]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        total += half * float(np.sum(weights * f(mid + half * nodes)))
    return total


@dataclass
class AssumptionResult:
    name: str
    values: list[float]
    margin: float
    passed: bool
    detail: str = ""


@dataclass
class AssumptionReport:
    eps: list[float]
    results: dict[str, AssumptionResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())


_BLOWUP_LEVELS = (1e1, 1e2, 1e3)
_BLOWUP_T_MAX = 0.9


def check_assumptions(eps_sequence, eta_rule=lambda e: e * e) -> AssumptionReport:
    """Numerically certify the model family's admissibility conditions.

    For each epsilon in the (strictly decreasing) sequence the checker
    evaluates, on the instantiated :class:`ModelFunctions`:

    * A1 - L1 distance of the well profile to its constant-one limit
      (graded quadrature on 1e4 nodes); must shrink monotonically, and the
      profile must stay below the limit mass 1.
    * A2 - the well cost at t = 1 must vanish while the minimum cost over
      [0, 0.9] blows up: minima must grow monotonically and, for each level
      C in {10, 100, 1000}, some smaller epsilon (geometric scan) must push
      the minimum above C.
    * A3 - the conjugate cost must never exceed the linear gradient price,
      sampled on a geometric grid of s in [0, 10/eps^2].
    * A4 - with ``eta = eta_rule(eps)`` (default eps^2) the product
      ``eta * cost(well(0))`` must decrease toward zero.
    """
    eps_list = [float(e) for e in eps_sequence]
    if not eps_list or any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_sequence must be strictly decreasing")
    if eps_list[-1] <= 0.0 or eps_list[0] >= 1.0:
        raise ValueError("eps_sequence must lie in (0, 1)")

    report = AssumptionReport(eps=eps_list)
    instances = [ModelFunctions(e) for e in eps_list]

    # A1: well profile converges to the constant-one limit in L1.
    l1_dist = [
        _graded_quadrature(lambda t, m=m: np.abs(m.well(t) - 1.0), 0.0, 1.0)
        for m in instances
    ]
    t_grid = np.linspace(0.0, 1.0, 10_001)
    below_limit = max(float(np.max(m.well(t_grid))) for m in instances) <= 1.0 + 1e-12
    a1_margin = max(b - a for a, b in zip(l1_dist, l1_dist[1:])) if len(l1_dist) > 1 else -l1_dist[0]
    report.results["A1"] = AssumptionResult(
        name="A1",
        values=l1_dist,
        margin=a1_margin,
        passed=below_limit and a1_margin < 0.0,
        detail="L1 distance of well profile to constant one, per epsilon",
    )

    # A2: vanishing cost at t = 1, uniform blow-up of cost on [0, 0.9].
    t_low = np.linspace(0.0, _BLOWUP_T_MAX, 1_001)
    cost_at_one = [float(m.cost(m.well(1.0))) for m in instances]
    blowup_min = [float(np.min(m.cost(m.well(t_low)))) for m in instances]
    thresholds: dict[float, float] = {}
    for level in _BLOWUP_LEVELS:
        probe = eps_list[-1]
        for _ in range(60):
            if float(np.min(ModelFunctions(probe).cost(ModelFunctions(probe).well(t_low)))) > level:
                thresholds[level] = probe
                break
            probe *= 0.5
    monotone_up = all(b > a for a, b in zip(blowup_min, blowup_min[1:]))
    vanish = all(b <= a + 1e-12 for a, b in zip(cost_at_one, cost_at_one[1:])) and cost_at_one[-1] <= 1e-9
    report.results["A2"] = AssumptionResult(
        name="A2",
        values=blowup_min,
        margin=blowup_min[-1],
        passed=vanish and monotone_up and len(thresholds) == len(_BLOWUP_LEVELS),
        detail=f"cost(well(1)) per eps: {cost_at_one}; blow-up eps thresholds: {thresholds}",
    )

    # A3: conjugate cost dominated by the linear gradient price.
    excesses = []
    for m in instances:
        s_hi = 10.0 / m.epsilon**2
        s_grid = np.concatenate([[0.0], np.geomspace(1e-8 * s_hi, s_hi, 2_000)])
        excesses.append(float(np.max(m.cost_conjugate(s_grid) - m.gradient_price(s_grid))))
    a3_margin = max(excesses)
    report.results["A3"] = AssumptionResult(
        name="A3",
        values=excesses,
        margin=a3_margin,
        passed=a3_margin <= 1e-12,
        detail="max of conjugate cost minus linear price on geometric s-grid",
    )

    # A4: eta * cost(well(0)) -> 0 for the chosen eta sequence.
    a4_vals = [float(eta_rule(m.epsilon) * m.cost(m.well(0.0))) for m in instances]
    a4_margin = max(b - a for a, b in zip(a4_vals, a4_vals[1:])) if len(a4_vals) > 1 else -a4_vals[0]
    report.results["A4"] = AssumptionResult(
        name="A4",
        values=a4_vals,
        margin=a4_margin,
        passed=a4_margin < 0.0 and a4_vals[-1] < a4_vals[0],
        detail="eta(eps) * cost(well(0)) per epsilon (eta defaults to eps^2)",
    )
    return report
