"""Piecewise-linear hierarchical basis functions on hyper-rectangles.

All basis math happens on the unit cube; an affine :class:`Domain` maps user
coordinates in once at the data boundary.  Evaluation outside a function's
support (including outside the domain) is zero by construction, never an
error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hiergrid import GridPoint, SparseGrid, index_set


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box ``[lower_d, upper_d]`` per dimension."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper must be 1-D with equal length")
        if not np.all(lower < upper):
            raise ValueError("domain requires lower < upper in every dimension")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, dim: int, lower: float = -4.0, upper: float = 4.0) -> "Domain":
        """Symmetric box with identical bounds in every dimension."""
        return cls(np.full(dim, lower), np.full(dim, upper))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def to_unit(self, x) -> np.ndarray:
        """Map domain coordinates to the unit cube (component-wise affine)."""
        x = np.asarray(x, dtype=float)
        return (x - self.lower) / self.width

    def from_unit(self, u) -> np.ndarray:
        """Inverse of :meth:`to_unit`."""
        u = np.asarray(u, dtype=float)
        return self.lower + u * self.width


def hat(t):
    """The reference hat ``max(0, 1 - |t|)``; accepts scalars or arrays."""
    return np.maximum(0.0, 1.0 - np.abs(t))


def eval_1d(level: int, index: int, u):
    """One-dimensional hat of a (level, index) pair at unit coordinates.

    Centered at ``index * 2**-level`` with half-width ``2**-level``; equals 1
    at the center and 0 outside the open support.
    """
    if level < 1 or index % 2 == 0 or not 1 <= index <= 2**level - 1:
        raise ValueError(f"invalid basis function (level={level}, index={index})")
    scale = 2.0**level
    return hat(np.asarray(u, dtype=float) * scale - index)


def eval_nd(point: GridPoint, domain: Domain, beta):
    """Tensor-product basis function of ``point`` at domain coordinates.

    ``beta`` may be a single D-vector or an ``(n, D)`` array; the result is
    the product of the per-dimension hats, zero as soon as one factor is.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape[-1] != point.dim:
        raise ValueError(
            f"coordinate dimension {beta.shape[-1]} != point dimension {point.dim}"
        )
    if domain.dim != point.dim:
        raise ValueError("domain dimension mismatch")
    u = domain.to_unit(beta)
    out = np.ones(u.shape[:-1], dtype=float)
    for d in range(point.dim):
        out = out * eval_1d(point.levels[d], point.indices[d], u[..., d])
    return out


def evaluate_basis_columns(
    points: Sequence[GridPoint], domain: Domain, at: np.ndarray
) -> np.ndarray:
    """Evaluate a list of basis functions at many domain points.

    Returns an ``(n, len(points))`` matrix.  One-dimensional hat values are
    computed once per distinct (dimension, level, index) triple and reused
    across basis functions, which keeps the cost linear in the number of
    distinct one-dimensional factors rather than in ``n * len(points) * D``
    full re-evaluations.
    """
    points = list(points)
    at = np.atleast_2d(np.asarray(at, dtype=float))
    dim = domain.dim
    if at.shape[1] != dim:
        raise ValueError("evaluation points dimension mismatch")
    u = domain.to_unit(at)
    out = np.ones((at.shape[0], len(points)))
    for d in range(dim):
        pairs = [(p.levels[d], p.indices[d]) for p in points]
        uniq = sorted(set(pairs))
        cols = {pair: k for k, pair in enumerate(uniq)}
        vals = np.empty((at.shape[0], len(uniq)))
        for k, (l, i) in enumerate(uniq):
            vals[:, k] = eval_1d(l, i, u[:, d])
        out *= vals[:, [cols[pair] for pair in pairs]]
    return out


@dataclass(frozen=True)
class BasisSet:
    """A hierarchical grid together with the domain its functions live on."""

    grid: SparseGrid
    domain: Domain

    def __post_init__(self):
        if self.grid.dim != self.domain.dim:
            raise ValueError("grid and domain dimensions differ")

    @property
    def size(self) -> int:
        return len(self.grid)

    def centers(self) -> np.ndarray:
        """Domain-space center coordinates of all basis functions, in grid order."""
        unit = np.array([p.unit_coords() for p in self.grid.points])
        return self.domain.from_unit(unit)

    def evaluate(self, at: np.ndarray) -> np.ndarray:
        """Matrix of all basis functions at the given domain points, ``(n, B)``."""
        return evaluate_basis_columns(self.grid.points, self.domain, at)


def hierarchize_full_grid_1d(values) -> dict[tuple[int, int], float]:
    """Hierarchical surpluses interpolating nodal values on a 1-D full grid.

    ``values`` holds function values at the interior nodes ``k * 2**-l`` for
    ``k = 1 .. 2**l - 1`` in coordinate order, where the level ``l`` is
    inferred from the length.  Returns the unique coefficients, keyed by
    (level, index), whose hat expansion reproduces every nodal value: the
    surplus at a node is its value minus the coarser interpolant there.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    level = int(np.log2(n + 1))
    if values.ndim != 1 or 2**level - 1 != n:
        raise ValueError(f"expected 2**l - 1 nodal values, got {n}")
    coords = np.arange(1, n + 1) / 2.0**level
    interp = np.zeros(n)
    surpluses: dict[tuple[int, int], float] = {}
    for l in range(1, level + 1):
        stride = 2 ** (level - l)
        level_vals = []
        for i in index_set(l):
            k = i * stride - 1
            s = values[k] - interp[k]
            surpluses[(l, i)] = float(s)
            level_vals.append((i, s))
        for i, s in level_vals:
            interp += s * eval_1d(l, i, coords)
    return surpluses


def evaluate_surpluses(surpluses: dict[tuple[int, int], float], u) -> np.ndarray:
    """Evaluate a 1-D hierarchical expansion at unit coordinates."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    for (l, i), s in surpluses.items():
        out += s * eval_1d(l, i, u)
    return out
