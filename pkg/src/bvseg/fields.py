"""Grid containers and the discrete differential operators built on them.

Scalar fields are (M, N) float64 arrays; entry ``u[i, j]`` is the sample at
grid row ``i`` and column ``j``.  Vector fields (gradients, dual variables)
are (2, M, N) arrays whose first axis stacks the row-difference and
column-difference components.

The gradient uses forward differences with a zero trailing row/column, and
``div`` is its negative adjoint (backward differences with boundary terms),
so that ``<grad(u, h), q> == -<u, div(q, h)>`` holds exactly for all inputs.
All operators allocate fresh outputs; inputs are never mutated.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "grad",
    "div",
    "pointwise_norm",
    "norm1",
    "norm2",
    "norm_inf",
    "inner",
    "clamp",
]


def _as_scalar_field(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2:
        raise ValueError(f"scalar field must be 2-D, got shape {u.shape}")
    return u


def _as_vector_field(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 3 or q.shape[0] != 2:
        raise ValueError(f"vector field must have shape (2, M, N), got {q.shape}")
    return q


def _check_h(h: float) -> float:
    h = float(h)
    if not h > 0.0:
        raise ValueError(f"grid spacing h must be positive, got {h}")
    return h


def grad(u, h: float = 1.0) -> np.ndarray:
    """Forward-difference gradient of a scalar field, spacing ``h``.

    Component 0 differences along rows, component 1 along columns; the
    trailing row/column of each component is zero.  ``grad(u, 1.0)`` is the
    unit-spacing operator used inside the primal-dual solver.
    """
    u = _as_scalar_field(u)
    h = _check_h(h)
    q = np.zeros((2,) + u.shape)
    q[0, :-1, :] = (u[1:, :] - u[:-1, :]) / h
    q[1, :, :-1] = (u[:, 1:] - u[:, :-1]) / h
    return q


def div(q, h: float = 1.0) -> np.ndarray:
    """Discrete divergence: the negative adjoint of :func:`grad`.

    Satisfies ``<grad(u, h), q> == -<u, div(q, h)>`` for every scalar field
    ``u``.  Implemented as the explicit backward-difference stencil; the
    entries of ``q`` that the gradient always zeroes (last row of component
    0, last column of component 1) are ignored.
    """
    q = _as_vector_field(q)
    h = _check_h(h)
    q1, q2 = q[0], q[1]
    m, n = q1.shape
    out = np.zeros((m, n))
    if m > 1:
        out[0, :] += q1[0, :]
        out[1 : m - 1, :] += q1[1 : m - 1, :] - q1[0 : m - 2, :]
        out[m - 1, :] -= q1[m - 2, :]
    if n > 1:
        out[:, 0] += q2[:, 0]
        out[:, 1 : n - 1] += q2[:, 1 : n - 1] - q2[:, 0 : n - 2]
        out[:, n - 1] -= q2[:, n - 2]
    out /= h
    return out


def pointwise_norm(q) -> np.ndarray:
    """Euclidean norm over the component axis: (2, M, N) -> (M, N)."""
    q = _as_vector_field(q)
    return np.hypot(q[0], q[1])


def norm2(u) -> float:
    """Frobenius norm (flattened Euclidean norm of any array)."""
    return float(np.linalg.norm(np.asarray(u, dtype=np.float64)))


def norm1(u) -> float:
    """Sum of absolute values of all samples."""
    return float(np.sum(np.abs(u)))


def norm_inf(u) -> float:
    """Largest absolute sample value."""
    return float(np.max(np.abs(u)))


def inner(u, v) -> float:
    """Frobenius inner product; shapes must match."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    return float(np.vdot(u, v))


def clamp(u, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Elementwise clip to the interval [lo, hi]."""
    return np.clip(np.asarray(u, dtype=np.float64), lo, hi)
