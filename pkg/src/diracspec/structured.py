"""S-nodes with difference kernels, their factorization and transfer matrices.

Discretization
--------------
The interval ``[0, L]``, ``L = 2 ell``, carries the nodes ``x_i = i h``.  The
quadrature weight is ``0`` at ``x_0`` and ``h`` at ``x_1 .. x_n`` (a
right-endpoint rule).  With this choice the matrix of ``S`` on ``[0, x_m]``
is exactly the leading ``m p x m p`` block of the matrix on ``[0, L]``, so a
single Cholesky factorization serves every reduction ``S_xi`` at once.  All
matrices below therefore live on the active nodes ``x_1 .. x_n``; node
``x_0`` is handled through the boundary values ``beta(0) = [I, I]/sqrt 2``.

In the weighted frame (samples scaled by ``sqrt h``) the discrete operators are

* ``S = 2 pi alpha I + h [k(x_i - x_j)]`` (``2 I`` for ``alpha = 1/pi``),
* ``A = i h (strictly lower ones + I/2)``, tensored with ``I_p``,
* ``Pi = sqrt h [Phi_1(x_i), I]``,

and the free S-node satisfies ``A S - S A* = i Pi J Pi*`` exactly.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .direct import signature
from .errors import DimensionMismatch
from .herglotz import expm1_over_t
from .numerics import UniformGrid, cholesky_lower

__all__ = [
    "SNode",
    "LowerFactor",
    "phi1_from_measure",
    "difference_kernel",
    "build_snode",
    "assemble_S",
    "operator_identity_residual",
    "factorize_snode",
    "factor_beta",
    "resolvent_pi",
    "transfer_matrix",
    "transfer_matrix_nodes",
    "quadratic_form_bound",
]


def phi1_from_measure(m, grid):
    """``Phi_1`` at the nodes of ``grid`` and the constant ``nu``.

    ``Phi_1(x) = I - i int (exp(itx) - 1)/t d sigma(t)`` and
    ``nu = int t/(1 + t^2) d sigma(t) + i (pi alpha - 1) I``.
    """
    x = grid.nodes
    p = m.p
    phi1 = np.eye(p) - 1j * m.sigma_integral(lambda t: expm1_over_t(t, x))
    nu = m.sigma_integral(lambda t: t / (1.0 + t ** 2))
    nu = nu + 1j * (np.pi * m.tail_coefficient - 1.0) * np.eye(p)
    if m.has_tail_decay:
        phi1 = phi1 + m.phi1_tail(x)
        nu = nu + m.nu_tail()
    return phi1, nu


def difference_kernel(m, offsets, zero_cell=None):
    """``k(x) = int exp(itx) d sigma(t)``; ``k(-x) = k(x)*`` by construction.

    ``zero_cell`` is the cell width used to average a log singularity at
    ``x = 0`` (only present when the measure has an ``a/|t|`` tail).
    """
    return m.fourier(offsets, zero_cell=zero_cell)


@dataclass(frozen=True)
class SNode:
    """Discretized S-node on ``[0, 2 ell]``.

    ``kernel[m]`` holds ``k(m h)`` for ``m = 0 .. n``; negative offsets follow
    from ``k(-x) = k(x)*``.
    """

    p: int
    ell: float
    grid: UniformGrid
    phi1: np.ndarray
    nu: np.ndarray
    kernel: np.ndarray
    tail_coefficient: float = 1.0 / np.pi

    @property
    def n(self):
        return self.grid.n

    @property
    def h(self):
        return self.grid.h

    @property
    def length(self):
        return self.grid.end

    @cached_property
    def S_matrix(self):
        return assemble_S(self)

    @property
    def kernel_full(self):
        """``k`` on offsets ``-n h .. n h``."""
        neg = np.swapaxes(self.kernel[:0:-1], -1, -2).conj()
        return np.concatenate([neg, self.kernel])

    @property
    def pi_hat(self):
        """Node samples of ``[Phi_1, I]``; shape ``(n + 1, p, 2p)``."""
        eye = np.broadcast_to(np.eye(self.p), self.phi1.shape)
        return np.concatenate([self.phi1, eye], axis=-1)

    @property
    def nu_defect(self):
        return float(np.linalg.norm(0.5 * (self.nu - self.nu.conj().T), 2))

    @property
    def phi1_origin_defect(self):
        return float(np.abs(self.phi1[0] - np.eye(self.p)).max())

    def restrict(self, m):
        """The reduction to ``[0, x_m]``."""
        if not 2 <= m <= self.n:
            raise ValueError(f"cannot restrict to {m} subintervals")
        grid = UniformGrid(0.0, m * self.h, m)
        return SNode(self.p, grid.end / 2, grid, self.phi1[: m + 1], self.nu, self.kernel[: m + 1],
                     self.tail_coefficient)


def build_snode(m, ell, n):
    """S-node of the measure ``m`` on ``[0, 2 ell]`` with ``n`` subintervals."""
    if ell <= 0:
        raise ValueError("ell must be positive")
    grid = UniformGrid(0.0, 2.0 * ell, n)
    phi1, nu = phi1_from_measure(m, grid)
    kernel = difference_kernel(m, grid.nodes, zero_cell=grid.h)
    return SNode(m.p, float(ell), grid, phi1, nu, kernel, m.tail_coefficient)


def assemble_S(snode):
    """``2 pi alpha I + h [k(x_i - x_j)]`` over the active nodes; shape ``(n p, n p)``.

    The identity part is the operator of the ``alpha dt`` piece of the
    measure; it equals ``2 I`` for the spectral-candidate value ``1/pi``.
    """
    n, p = snode.n, snode.p
    kfull = snode.kernel_full
    idx = np.subtract.outer(np.arange(n), np.arange(n)) + n
    blocks = snode.h * kfull[idx]
    M = blocks.transpose(0, 2, 1, 3).reshape(n * p, n * p)
    M = M + 2.0 * np.pi * snode.tail_coefficient * np.eye(n * p)
    return 0.5 * (M + M.conj().T)


def _a_matrix(n, h, p):
    a = np.tril(np.ones((n, n)), -1) + 0.5 * np.eye(n)
    return np.kron(1j * h * a, np.eye(p))


def _pi_weighted(snode):
    return np.sqrt(snode.h) * snode.pi_hat[1:].reshape(snode.n * snode.p, 2 * snode.p)


def operator_identity_residual(snode, S=None):
    """``||A S - S A* - i Pi J Pi*||_F / (n p h)``, i.e. the RMS kernel defect."""
    n, p, h = snode.n, snode.p, snode.h
    S = snode.S_matrix if S is None else S
    A = _a_matrix(n, h, p)
    Pi = _pi_weighted(snode)
    J = signature(p).J
    R = A @ S - S @ A.conj().T - 1j * Pi @ J @ Pi.conj().T
    return float(np.linalg.norm(R) / (n * p * h))


@dataclass(frozen=True)
class LowerFactor:
    """``S = L L*``; ``E = L^{-1}`` is lower block triangular with ``S^{-1} = E* E``."""

    L: np.ndarray
    p: int

    @cached_property
    def E(self):
        eye = np.eye(self.L.shape[0], dtype=complex)
        return scipy.linalg.solve_triangular(self.L, eye, lower=True)

    def apply(self, x):
        """``E x`` by forward substitution."""
        return scipy.linalg.solve_triangular(self.L, x, lower=True)

    @property
    def diagonal_blocks(self):
        p = self.p
        n = self.L.shape[0] // p
        E = self.E
        return np.array([E[i * p:(i + 1) * p, i * p:(i + 1) * p] for i in range(n)])

    def defect(self, S):
        """``||E* E S - I||_F / sqrt(n p)``."""
        E = self.E
        return float(np.linalg.norm(E.conj().T @ (E @ S) - np.eye(S.shape[0])) / np.sqrt(S.shape[0]))


def factorize_snode(snode, S=None):
    S = snode.S_matrix if S is None else S
    return LowerFactor(cholesky_lower(S), snode.p)


def factor_beta(snode, factor):
    """``beta = E Pi`` at every node; node 0 carries ``[Phi_1(0), I]/sqrt 2``."""
    n, p = snode.n, snode.p
    beta = np.empty((n + 1, p, 2 * p), dtype=complex)
    beta[0] = snode.pi_hat[0] / np.sqrt(2.0)
    body = factor.apply(snode.pi_hat[1:].reshape(n * p, 2 * p))
    beta[1:] = body.reshape(n, p, 2 * p)
    return beta


def resolvent_pi(snode, z):
    """``(I - z A)^{-1} Pi`` on the active nodes by forward recurrence; ``(n, p, 2p)``."""
    pi = snode.pi_hat[1:]
    h = snode.h
    out = np.empty_like(pi, dtype=complex)
    running = np.zeros(pi.shape[1:], dtype=complex)
    scale = 1.0 / (1.0 - 0.5j * z * h)
    for i in range(len(pi)):
        out[i] = (pi[i] + 1j * z * h * running) * scale
        running = running + out[i]
    return out


def transfer_matrix_nodes(snode, factor, z, beta=None):
    """``w_A(x_i, z) = I + i z J Pi_i* S_i^{-1} (I - z A_i)^{-1} Pi_i`` at every node."""
    n, p, h = snode.n, snode.p, snode.h
    J = signature(p).J
    beta = factor_beta(snode, factor) if beta is None else beta
    y = resolvent_pi(snode, z).reshape(n * p, 2 * p)
    ey = factor.apply(y).reshape(n, p, 2 * p)
    terms = h * np.swapaxes(beta[1:], -1, -2).conj() @ ey
    out = np.empty((n + 1, 2 * p, 2 * p), dtype=complex)
    out[0] = np.eye(2 * p)
    out[1:] = np.eye(2 * p) + 1j * z * J @ np.cumsum(terms, axis=0)
    return out


def transfer_matrix(snode, factor, xi, z):
    """``w_A(xi, z)`` at the grid node nearest to ``xi``."""
    i = xi / snode.h
    if abs(i - round(i)) > 1e-8 or not 0 <= round(i) <= snode.n:
        raise DimensionMismatch(f"xi = {xi} is not a grid node")
    return transfer_matrix_nodes(snode, factor, z)[int(round(i))]


def quadratic_form_bound(S):
    """Largest eigenvalue of the Hermitian matrix ``S``, i.e. ``sup <S f, f>/<f, f>``."""
    return float(np.linalg.eigvalsh(S)[-1])
