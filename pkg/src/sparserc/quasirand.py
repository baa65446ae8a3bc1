"""Deterministic Halton sequences for simulating choice-probability integrals."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .basis import Domain

# First 20 primes; one base per supported dimension.
_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71)

MAX_DIM = len(_PRIMES)
DEFAULT_BURN_IN = 20


def radical_inverse(n: int, base: int) -> float:
    """Digit reversal of ``n`` around the radix point in the given base.

    For n >= 1 the result lies strictly inside (0, 1).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if base < 2:
        raise ValueError(f"base must be >= 2, got {base}")
    inv, f = 0.0, 1.0 / base
    while n > 0:
        inv += f * (n % base)
        n //= base
        f /= base
    return inv


def _radical_inverse_array(ns: np.ndarray, base: int) -> np.ndarray:
    out = np.zeros(ns.shape, dtype=float)
    f = 1.0 / base
    n = ns.copy()
    while np.any(n > 0):
        out += f * (n % base)
        n //= base
        f /= base
    return out


@dataclass(frozen=True)
class DrawSet:
    """Fixed integration nodes in coefficient space.

    Deterministic given (count, dimension, burn-in, domain); the rows are
    consecutive Halton points mapped affinely into the domain, so extending
    the count keeps every earlier row unchanged.
    """

    draws: np.ndarray
    domain: Domain
    burn_in: int

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=float)
        if draws.ndim != 2:
            raise ValueError("draws must be a 2-D array")
        if draws.shape[0] < 1:
            raise ValueError("need at least one draw")
        if draws.shape[1] != self.domain.dim:
            raise ValueError("draws and domain dimensions differ")
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    @property
    def dim(self) -> int:
        return self.draws.shape[1]


def halton_draws(
    n_draws: int,
    dim: int,
    burn_in: int = DEFAULT_BURN_IN,
    domain: Domain | None = None,
) -> DrawSet:
    """Halton points ``burn_in + 1 .. burn_in + n_draws`` mapped into a domain.

    Base of dimension ``d`` is the d-th prime; dimensions above 20 are not
    supported.  Without a domain the points stay in the open unit cube.
    """
    if n_draws < 1:
        raise ValueError(f"n_draws must be >= 1, got {n_draws}")
    if dim < 1 or dim > MAX_DIM:
        raise ValueError(f"dimension must be in 1..{MAX_DIM}, got {dim}")
    if burn_in < 0:
        raise ValueError(f"burn_in must be >= 0, got {burn_in}")
    if domain is None:
        domain = Domain.cube(dim, 0.0, 1.0)
    if domain.dim != dim:
        raise ValueError("domain dimension mismatch")
    ns = np.arange(burn_in + 1, burn_in + n_draws + 1, dtype=np.int64)
    unit = np.empty((n_draws, dim))
    for d in range(dim):
        unit[:, d] = _radical_inverse_array(ns, _PRIMES[d])
    return DrawSet(draws=domain.from_unit(unit), domain=domain, burn_in=burn_in)


def write_draws_csv(drawset: DrawSet, path) -> None:
    """Dump draws as CSV with headers ``beta_1 .. beta_D``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"beta_{d + 1}" for d in range(drawset.dim)])
        for row in drawset.draws:
            writer.writerow([repr(float(v)) for v in row])


def read_draws_csv(path) -> np.ndarray:
    """Read a draws CSV back into an ``(R, D)`` array."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dim = len(header)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != dim:
                raise ValueError(f"{path}: line {lineno}: expected {dim} columns")
            rows.append([float(v) for v in row])
    return np.asarray(rows, dtype=float)
