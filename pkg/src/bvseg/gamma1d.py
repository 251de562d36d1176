"""Desk-scale 1-D experiments probing the sharp-interface limit.

Signals live on a unit-width domain (``N * h = 1``) and are solved with the
same 2-D machinery on an N x 1 grid; the reported energy is the discrete
energy times ``h``, restoring the volume factor so it can be compared to the
sharp-interface reference ``alpha/2 * integral |u'|^2 + gamma * #jumps``.

The sweep varies the phase-field width with the grid tied to it through
``h = eps / c``; resolving the contours requires ``c`` well above 1.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .energies import energy, limit_energy_1d
from .palm import RunReport, SolverParams, solve

__all__ = ["Signal1D", "solve_1d", "gamma_sweep", "SweepRow", "SWEEP_CSV_HEADER", "sweep_to_csv"]

SWEEP_CSV_HEADER = "eps,h,energy,reference,rel_err"


@dataclass(frozen=True)
class Signal1D:
    """Samples on a unit-width 1-D grid plus known jump locations."""

    samples: np.ndarray
    h: float
    true_jumps: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64).ravel())
        if self.samples.size < 2:
            raise ValueError("signal needs at least 2 samples")
        if not self.h > 0.0:
            raise ValueError(f"h must be positive, got {self.h}")

    @property
    def n(self) -> int:
        return self.samples.size


def _jump_mask(sig: Signal1D) -> np.ndarray:
    """Mark forward differences whose cell interval contains a true jump."""
    centers = (np.arange(sig.n) + 0.5) * sig.h
    mask = np.zeros(sig.n - 1, dtype=bool)
    for pos in sig.true_jumps:
        mask |= (centers[:-1] < pos) & (pos <= centers[1:])
    return mask


def reference_energy(sig: Signal1D, alpha: float, gamma: float) -> float:
    """Sharp-interface reference for a clean synthetic signal."""
    return limit_energy_1d(
        sig.samples, sig.h, len(sig.true_jumps), alpha, gamma, exclude=_jump_mask(sig)
    )


def solve_1d(g: Signal1D, params: SolverParams) -> tuple[Signal1D, Signal1D, float, RunReport]:
    """Run the solver on an N x 1 grid and return physically scaled energy."""
    p = replace(params, h=g.h)
    u2, v2, report = solve(g.samples.reshape(-1, 1), p)
    scaled = energy(u2, v2, p, g.samples.reshape(-1, 1)) * g.h
    u_sig = Signal1D(u2.ravel(), g.h, g.true_jumps)
    v_sig = Signal1D(v2.ravel(), g.h, g.true_jumps)
    return u_sig, v_sig, scaled, report


@dataclass
class SweepRow:
    eps: float
    h: float
    energy: float
    reference: float
    rel_err: float

    def to_csv(self) -> str:
        return ",".join(str(x) for x in (self.eps, self.h, self.energy, self.reference, self.rel_err))


def gamma_sweep(
    make_signal: Callable[[int], Signal1D],
    eps_list,
    c: float,
    params: SolverParams,
    workers: int = 4,
) -> list[SweepRow]:
    """Solve one instance per epsilon with grid spacing ``h = eps / c``.

    ``make_signal(n)`` must build the clean signal at resolution ``n``;
    entries run concurrently and the table is returned in ``eps_list``
    order.
    """
    if c < 1.0:
        raise ValueError(f"resolution ratio c must be >= 1, got {c}")
    eps_list = [float(e) for e in eps_list]

    def run(eps: float) -> SweepRow:
        h = eps / c
        n = max(2, round(1.0 / h))
        sig = make_signal(n)
        p = replace(params, epsilon=eps, h=sig.h)
        _, _, scaled, _ = solve_1d(sig, p)
        ref = reference_energy(sig, p.alpha, p.gamma)
        if ref > 0.0:
            rel = abs(scaled - ref) / ref
        else:
            rel = 0.0 if scaled == 0.0 else float("inf")
        return SweepRow(eps=eps, h=sig.h, energy=scaled, reference=ref, rel_err=rel)

    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(eps_list)))) as pool:
        return list(pool.map(run, eps_list))


def sweep_to_csv(rows: list[SweepRow], path) -> None:
    lines = [SWEEP_CSV_HEADER] + [r.to_csv() for r in rows]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
