"""Dense complex matrix primitives, quadrature and differentiation.

Matrices are plain ``numpy`` arrays.  Sampled matrix functions are stacked
along the first axis, i.e. an array of shape ``(N, r, c)`` holds ``N``
samples of an ``r x c`` matrix.
"""

import re
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite, TooFewSamples

__all__ = [
    "UniformGrid",
    "is_hermitian",
    "hermitian_part",
    "cholesky_lower",
    "matrix_exponential",
    "trapezoid_integrate",
    "cumulative_trapezoid",
    "central_difference",
]


@dataclass(frozen=True)
class UniformGrid:
    """Uniform partition of ``[start, end]`` into ``n`` subintervals."""

    start: float
    end: float
    n: int

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"grid needs start < end, got [{self.start}, {self.end}]")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"grid needs n >= 2 subintervals, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self):
        return (self.end - self.start) / self.n

    @property
    def nodes(self):
        return self.start + self.h * np.arange(self.n + 1)

    @property
    def size(self):
        """Number of nodes."""
        return self.n + 1

    @property
    def midpoints(self):
        return self.start + self.h * (np.arange(self.n) + 0.5)

    def refine(self, factor=2):
        return UniformGrid(self.start, self.end, self.n * factor)


def is_hermitian(m, tol=1e-12):
    m = np.asarray(m)
    scale = max(1.0, np.abs(m).max(initial=0.0))
    return np.abs(m - np.swapaxes(m, -1, -2).conj()).max(initial=0.0) <= tol * scale


def hermitian_part(m):
    m = np.asarray(m)
    return 0.5 * (m + np.swapaxes(m, -1, -2).conj())


def cholesky_lower(m, check_tol=1e-10):
    """Lower Cholesky factor ``L`` of a Hermitian positive-definite matrix.

    No pivoting is done, so a failure points at the leading minor that lost
    positivity.

    Raises
    ------
    DimensionMismatch
        If ``m`` is not square.
    NotPositiveDefinite
        If ``m`` is not Hermitian within ``check_tol`` or a pivot is not
        positive.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"cholesky needs a square matrix, got shape {m.shape}")
    if not is_hermitian(m, check_tol):
        raise NotPositiveDefinite("matrix is not Hermitian")
    try:
        return scipy.linalg.cholesky(m, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        # LAPACK reports the order of the failing leading minor
        found = re.search(r"\d+", str(exc))
        pivot = int(found.group()) - 1 if found else None
        where = f"leading minor {pivot + 1}" if found else "a leading minor"
        raise NotPositiveDefinite(f"{where} is not positive definite", pivot_index=pivot) from exc


def matrix_exponential(m):
    """``exp(m)`` for a square matrix or a stack of square matrices.

    Backed by scaling and squaring with Pade approximants.
    """
    m = np.asarray(m)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise DimensionMismatch(f"matrix exponential needs square input, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix exponential needs finite entries")
    return scipy.linalg.expm(m)


def _check_samples(samples, count):
    samples = np.asarray(samples)
    if samples.shape[0] != count:
        raise DimensionMismatch(f"expected {count} samples, got {samples.shape[0]}")
    return samples


def trapezoid_integrate(samples, grid):
    """Composite trapezoid rule for samples taken at the nodes of ``grid``."""
    samples = _check_samples(samples, grid.size)
    return np.trapezoid(samples, dx=grid.h, axis=0)


def cumulative_trapezoid(samples, h):
    """Running trapezoid integral from the first node; the first entry is zero."""
    samples = np.asarray(samples)
    out = np.zeros_like(samples, dtype=np.result_type(samples, float))
    out[1:] = np.cumsum(0.5 * h * (samples[1:] + samples[:-1]), axis=0)
    return out


def central_difference(samples, grid):
    """Nodewise derivative: central differences inside, second-order one-sided at ends."""
    samples = np.asarray(samples)
    if samples.shape[0] < 3:
        raise TooFewSamples(f"central differences need >= 3 samples, got {samples.shape[0]}")
    h = grid.h if isinstance(grid, UniformGrid) else float(grid)
    if isinstance(grid, UniformGrid):
        _check_samples(samples, grid.size)
    return np.gradient(samples, h, axis=0, edge_order=2)
