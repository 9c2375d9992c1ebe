"""Dense linear algebra, seeded random streams and a finite-difference oracle."""

from __future__ import annotations

import warnings
from typing import Callable

import numpy as np
import scipy.linalg

PIVOT_TOL = 1e-12


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when elimination meets a pivot below ``PIVOT_TOL``."""

    def __init__(self, row: int, pivot: float):
        super().__init__(f"matrix is singular or near-singular: |pivot| = {abs(pivot):.3e} at row {row}")
        self.row = row
        self.pivot = pivot


def solve_dd(A, b) -> np.ndarray:
    """Solve ``A x = b`` by LU factorization with partial pivoting.

    Intended for the diagonally dominant / SPD systems produced by harmonic
    label propagation. Raises :class:`SingularMatrixError` naming the first
    row whose pivot magnitude falls below ``PIVOT_TOL``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise ValueError(f"dimension mismatch: A is {A.shape}, b has {b.shape[0]} rows")
    if A.shape[0] == 0:
        return b.copy()
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite entries in linear system")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    diag = np.abs(np.diag(lu))
    bad = np.flatnonzero(diag < PIVOT_TOL)
    if bad.size:
        row = int(bad[0])
        raise SingularMatrixError(row, float(lu[row, row]))
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def finite_diff_grad(f: Callable[[np.ndarray], float], P, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of a matrix."""
    if not h > 0:
        raise ValueError("step h must be positive")
    P = np.array(P, dtype=float)
    grad = np.zeros_like(P)
    for idx in np.ndindex(P.shape):
        orig = P[idx]
        P[idx] = orig + h
        fp = f(P.copy())
        P[idx] = orig - h
        fm = f(P.copy())
        P[idx] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise FloatingPointError(f"non-finite function value probing entry {idx}")
        grad[idx] = (fp - fm) / (2 * h)
    return grad


def derive_seed(master: int, *keys: int) -> np.random.SeedSequence:
    """Child seed for a logical task.

    The mixing rule is numpy's ``SeedSequence(entropy=master, spawn_key=keys)``:
    the same (master, keys) always yields the same stream regardless of which
    other tasks exist or in which order they run.
    """
    return np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in keys))


class RandomStream:
    """Single-owner seeded random source.

    ``position`` counts scalar values drawn so far. Child streams obtained
    with :meth:`child` depend only on the master seed and the key path.
    """

    def __init__(self, seed: int = 0, keys: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.keys = tuple(int(k) for k in keys)
        self.position = 0
        self._gen = np.random.Generator(np.random.PCG64(derive_seed(self.seed, *self.keys)))

    def child(self, *keys: int) -> "RandomStream":
        return RandomStream(self.seed, self.keys + tuple(keys))

    def _count(self, size) -> None:
        self.position += 1 if size is None else int(np.prod(size))

    def uniform(self, lo: float = 0.0, hi: float = 1.0, size=None):
        if not lo < hi:
            raise ValueError(f"invalid bounds: lo={lo} must be < hi={hi}")
        self._count(size)
        out = self._gen.uniform(lo, hi, size)
        # guard the half-open contract against rounding at hi
        if size is None:
            return float(min(out, np.nextafter(hi, lo)))
        return np.minimum(out, np.nextafter(hi, lo))

    def normal(self, mean: float = 0.0, sd: float = 1.0, size=None):
        if sd < 0:
            raise ValueError(f"sd must be non-negative, got {sd}")
        self._count(size)
        out = self._gen.normal(mean, sd, size)
        return float(out) if size is None else out

    def integers(self, lo: int, hi: int, size=None):
        """Uniform integers in ``[lo, hi)``."""
        if not lo < hi:
            raise ValueError(f"invalid bounds: lo={lo} must be < hi={hi}")
        self._count(size)
        out = self._gen.integers(lo, hi, size)
        return int(out) if size is None else out

    def permutation(self, n: int) -> np.ndarray:
        self._count(n)
        return self._gen.permutation(n)

    def choice(self, n: int, size: int, replace: bool = True) -> np.ndarray:
        self._count(size)
        return self._gen.choice(n, size=size, replace=replace)
