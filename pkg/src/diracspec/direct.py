"""Direct problem for the Dirac system ``y' = i(z j + j V(x)) y``.

``V = [[0, v], [v*, 0]]`` with a sampled ``p x p`` potential ``v``.  The
fundamental solution is propagated with the exponential midpoint rule; the
one-step exponential is evaluated in closed form because
``(z j + j V)^2 = z^2 I - V^2`` with ``V^2`` block diagonal.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, GridMismatch, SingularDenominator, TooFewSamples
from .numerics import UniformGrid, central_difference

__all__ = [
    "Potential",
    "SignatureConstants",
    "signature",
    "FundamentalSolutionSample",
    "BetaGamma",
    "WeylDirectionP",
    "fundamental_solution",
    "propagate_endpoint",
    "apply_dirac_expression",
    "spectral_transform",
    "beta_gamma",
    "hamiltonian_from_beta",
    "weyl_function",
    "weyl_residual_semiaxis",
    "canonical_fundamental",
    "canonical_fundamental_nodes",
    "potential_from_beta_gamma",
]


@dataclass(frozen=True)
class Potential:
    """Node samples ``v(x_i)`` of a ``p x p`` potential on ``[0, ell]``."""

    p: int
    ell: float
    grid: UniformGrid
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.ndim == 1:
            samples = samples[:, None, None]
        if samples.shape != (self.grid.size, self.p, self.p):
            raise DimensionMismatch(
                f"potential samples have shape {samples.shape}, expected "
                f"{(self.grid.size, self.p, self.p)}"
            )
        if self.grid.start != 0.0 or not np.isclose(self.grid.end, self.ell):
            raise GridMismatch(f"potential grid must cover [0, {self.ell}]")
        if not np.all(np.isfinite(samples)):
            raise ValueError("potential samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_function(cls, func, ell, n, p=1):
        """Sample ``func(x) -> p x p`` (or scalar when p == 1) on ``n`` subintervals."""
        grid = UniformGrid(0.0, float(ell), n)
        values = np.array([np.asarray(func(x), dtype=complex) for x in grid.nodes])
        return cls(p, float(ell), grid, values.reshape(grid.size, p, p))

    @classmethod
    def constant(cls, value, ell, n, p=1):
        value = np.asarray(value, dtype=complex)
        if value.ndim == 0:
            value = value * np.eye(p)
        grid = UniformGrid(0.0, float(ell), n)
        return cls(p, float(ell), grid, np.broadcast_to(value, (grid.size, p, p)).copy())

    @classmethod
    def zero(cls, ell, n, p=1):
        grid = UniformGrid(0.0, float(ell), n)
        return cls(p, float(ell), grid, np.zeros((grid.size, p, p), dtype=complex))

    @property
    def l2_norm(self):
        """Discrete L2 norm (trapezoid) of the Frobenius norm of ``v``."""
        sq = np.sum(np.abs(self.samples) ** 2, axis=(1, 2))
        return float(np.sqrt(np.trapezoid(sq, dx=self.grid.h)))

    def at(self, x):
        """Linear interpolation of the samples at the points ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.min() < -1e-12 or x.max() > self.ell * (1 + 1e-12):
            raise GridMismatch("interpolation point outside [0, ell]")
        flat = self.samples.reshape(self.grid.size, -1)
        nodes = self.grid.nodes
        cols = [np.interp(x, nodes, flat[:, k].real) + 1j * np.interp(x, nodes, flat[:, k].imag)
                for k in range(flat.shape[1])]
        return np.stack(cols, axis=-1).reshape(len(x), self.p, self.p)

    def restrict(self, ell):
        """Restriction to ``[0, ell]``; ``ell`` must be a grid node."""
        k = ell / self.grid.h
        if abs(k - round(k)) > 1e-9 or round(k) < 2 or ell > self.ell * (1 + 1e-12):
            raise GridMismatch(f"cannot restrict to [0, {ell}] on this grid")
        k = int(round(k))
        return Potential(self.p, k * self.grid.h, UniformGrid(0.0, k * self.grid.h, k),
                         self.samples[: k + 1])

    def extend_by_zero(self, ell):
        """Continuation by the zero potential up to ``ell`` (rounded up to the grid)."""
        h = self.grid.h
        k = int(np.ceil(ell / h - 1e-9))
        if k <= self.grid.n:
            return self.restrict(max(k, 2) * h)
        samples = np.zeros((k + 1, self.p, self.p), dtype=complex)
        samples[: self.grid.size] = self.samples
        return Potential(self.p, k * h, UniformGrid(0.0, k * h, k), samples)


@dataclass(frozen=True)
class SignatureConstants:
    p: int
    j: np.ndarray
    J: np.ndarray
    Theta: np.ndarray


@lru_cache(maxsize=None)
def signature(p):
    """``j = diag(I, -I)``, ``J = [[0, I], [I, 0]]`` and the unitary ``Theta``."""
    eye, zero = np.eye(p), np.zeros((p, p))
    j = np.block([[eye, zero], [zero, -eye]]).astype(complex)
    J = np.block([[zero, eye], [eye, zero]]).astype(complex)
    theta = np.block([[eye, -eye], [eye, eye]]).astype(complex) / np.sqrt(2.0)
    if not np.allclose(theta.conj().T @ theta, np.eye(2 * p), atol=1e-14):
        raise AssertionError("Theta is not unitary")
    if not np.allclose(theta @ j @ theta.conj().T, J, atol=1e-14):
        raise AssertionError("Theta j Theta* != J")
    for m in (j, J, theta):
        m.setflags(write=False)
    return SignatureConstants(p, j, J, theta)


@dataclass(frozen=True)
class FundamentalSolutionSample:
    z: complex
    nodes: np.ndarray
    u: np.ndarray


@dataclass(frozen=True)
class BetaGamma:
    """Samples of the block rows of ``u(x/2, 0) Theta*`` on ``[0, 2 ell]``."""

    grid: UniformGrid
    beta: np.ndarray
    gamma: np.ndarray

    @property
    def p(self):
        return self.beta.shape[1]


@dataclass(frozen=True)
class WeylDirectionP:
    """Constant ``2p x p`` matrix with ``P*P > 0`` and ``P* j P >= 0``."""

    value: np.ndarray

    def __post_init__(self):
        value = np.asarray(self.value, dtype=complex)
        if value.ndim == 1:
            value = value[:, None]
        if value.ndim != 2 or value.shape[0] != 2 * value.shape[1]:
            raise DimensionMismatch(f"P must be 2p x p, got shape {value.shape}")
        p = value.shape[1]
        gram = value.conj().T @ value
        if np.linalg.eigvalsh(gram).min() <= 1e-12 * max(1.0, np.abs(gram).max()):
            raise ValueError("P*P is not positive definite")
        form = value.conj().T @ signature(p).j @ value
        if np.linalg.eigvalsh(0.5 * (form + form.conj().T)).min() < -1e-12:
            raise ValueError("P* j P is not positive semidefinite")
        object.__setattr__(self, "value", value)

    @classmethod
    def default(cls, p=1):
        return cls(np.vstack([np.eye(p), np.zeros((p, p))]))

    @property
    def p(self):
        return self.value.shape[1]


# --- propagation -----------------------------------------------------------

class _Stepper:
    """Closed-form exponential midpoint steps for a frozen potential.

    With ``M = i h (z j + j V)`` one has ``M^2 = -h^2 (z^2 - V^2)`` and
    ``exp(M) = cos(h sqrt(B)) + M sinc(h sqrt(B))``, ``B = z^2 - V^2``.
    ``V^2 = diag(v v*, v* v)`` is diagonalised once per step.
    """

    def __init__(self, v_mid, h):
        self.h = h
        self.v = np.asarray(v_mid, dtype=complex)
        self.p = self.v.shape[-1]
        vv = self.v @ np.swapaxes(self.v, -1, -2).conj()
        vsv = np.swapaxes(self.v, -1, -2).conj() @ self.v
        self.s_top, self.u_top = np.linalg.eigh(vv)
        self.s_bot, self.u_bot = np.linalg.eigh(vsv)

    def __len__(self):
        return self.v.shape[0]

    @staticmethod
    def _fn(u, s, z, h):
        w = np.sqrt(z[:, None] ** 2 - s[None, :] + 0j)
        c = np.cos(h * w)
        g = np.sinc(h * w / np.pi)
        cmat = np.einsum("ab,zb,cb->zac", u, c, u.conj())
        gmat = np.einsum("ab,zb,cb->zac", u, g, u.conj())
        return cmat, gmat

    def step(self, i, z):
        """Step matrices ``exp(M_i(z))`` for an array ``z``; shape ``(len(z), 2p, 2p)``."""
        h, p, v = self.h, self.p, self.v[i]
        ct, gt = self._fn(self.u_top[i], self.s_top[i], z, h)
        cb, gb = self._fn(self.u_bot[i], self.s_bot[i], z, h)
        ihz = (1j * h * z)[:, None, None]
        out = np.empty((len(z), 2 * p, 2 * p), dtype=complex)
        out[:, :p, :p] = ct + ihz * gt
        out[:, :p, p:] = 1j * h * (v @ gb)
        out[:, p:, :p] = -1j * h * (v.conj().T @ gt)
        out[:, p:, p:] = cb - ihz * gb
        return out


def _midpoint_values(pot, grid):
    if grid.start != 0.0:
        raise GridMismatch("integration grid must start at 0")
    if grid.end > pot.ell * (1 + 1e-12):
        raise GridMismatch(f"integration grid [0, {grid.end}] exceeds [0, {pot.ell}]")
    if grid == pot.grid:
        return 0.5 * (pot.samples[1:] + pot.samples[:-1])
    return pot.at(grid.midpoints)


def _sweep(pot, zs, grid=None, normalise=False):
    """Yield ``(i, u(x_i, z))`` for every node, vectorised over the array ``zs``.

    With ``normalise`` each ``u`` is rescaled by a positive scalar per ``z``
    after every step; quantities invariant under scaling stay exact while
    growth like ``exp(|Im z| x)`` cannot overflow.
    """
    grid = pot.grid if grid is None else grid
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    stepper = _Stepper(_midpoint_values(pot, grid), grid.h)
    u = np.broadcast_to(np.eye(2 * pot.p, dtype=complex), (len(zs), 2 * pot.p, 2 * pot.p)).copy()
    yield 0, u
    for i in range(len(stepper)):
        u = stepper.step(i, zs) @ u
        if normalise:
            u /= np.abs(u).max(axis=(1, 2), keepdims=True)
        yield i + 1, u


def fundamental_solution(pot, z, grid=None):
    """``u(x_i, z)`` at every node of ``grid`` (default: the potential grid)."""
    grid = pot.grid if grid is None else grid
    u = np.empty((grid.size, 2 * pot.p, 2 * pot.p), dtype=complex)
    for i, ui in _sweep(pot, [z], grid):
        u[i] = ui[0]
    return FundamentalSolutionSample(complex(z), grid.nodes, u)


def propagate_endpoint(pot, zs, grid=None, normalise=False):
    """``u(grid.end, z)`` for every ``z`` in ``zs``; shape ``(len(zs), 2p, 2p)``."""
    for _, u in _sweep(pot, zs, grid, normalise):
        pass
    return u


def _grid_to(pot, x_end):
    """Grid on ``[0, x_end]`` with (about) the potential's step."""
    n = max(2, int(round(x_end / pot.grid.h)))
    return UniformGrid(0.0, float(x_end), n)


# --- differential expression and spectral transform -----------------------

def apply_dirac_expression(pot, f):
    """``-(i j f' + V f)`` for ``f`` sampled at the potential nodes, shape ``(N, 2p)``."""
    f = np.asarray(f, dtype=complex)
    if f.shape[0] < 3:
        raise TooFewSamples("need >= 3 samples")
    if f.shape != (pot.grid.size, 2 * pot.p):
        raise DimensionMismatch(f"f has shape {f.shape}, expected {(pot.grid.size, 2 * pot.p)}")
    p = pot.p
    df = central_difference(f, pot.grid)
    jdf = np.concatenate([df[:, :p], -df[:, p:]], axis=1)
    vf = np.concatenate([
        np.einsum("nab,nb->na", pot.samples, f[:, p:]),
        np.einsum("nba,nb->na", pot.samples.conj(), f[:, :p]),
    ], axis=1)
    return -(1j * jdf + vf)


def spectral_transform(pot, f, t):
    """``(1/sqrt 2) int_0^ell [I, I] u(x, t)* f(x) dx`` for real ``t`` (scalar or array).

    Returns shape ``(p,)`` for scalar ``t`` and ``(len(t), p)`` otherwise.
    """
    f = np.asarray(f, dtype=complex)
    if f.shape != (pot.grid.size, 2 * pot.p):
        raise DimensionMismatch(f"f has shape {f.shape}, expected {(pot.grid.size, 2 * pot.p)}")
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    p, h, last = pot.p, pot.grid.h, pot.grid.n
    acc = np.zeros((len(ts), p), dtype=complex)
    for i, u in _sweep(pot, ts):
        w = h * (0.5 if i in (0, last) else 1.0)
        # [I, I] u* f = (top + bottom rows of u* f)
        uf = np.einsum("zba,b->za", u.conj(), f[i])
        acc += w * (uf[:, :p] + uf[:, p:])
    acc /= np.sqrt(2.0)
    return acc[0] if scalar else acc


# --- beta, gamma, Hamiltonian ----------------------------------------------

def beta_gamma(pot):
    """``beta(x) = [I 0] u(x/2, 0) Theta*`` and ``gamma(x) = [0 I] u(x/2, 0) Theta*`` on ``[0, 2 ell]``."""
    sig = signature(pot.p)
    u = fundamental_solution(pot, 0.0).u
    w = u @ sig.Theta.conj().T
    grid = UniformGrid(0.0, 2 * pot.ell, pot.grid.n)
    return BetaGamma(grid, w[:, : pot.p, :], w[:, pot.p:, :])


def hamiltonian_from_beta(bg):
    beta = bg.beta if isinstance(bg, BetaGamma) else np.asarray(bg)
    return np.swapaxes(beta, -1, -2).conj() @ beta


def potential_from_beta_gamma(bg):
    """``v(x/2) = 2i beta'(x) J gamma(x)*`` with ``beta'`` from central differences."""
    p = bg.p
    J = signature(p).J
    dbeta = central_difference(bg.beta, bg.grid)
    v = 2j * dbeta @ J @ np.swapaxes(bg.gamma, -1, -2).conj()
    ell = bg.grid.end / 2
    return Potential(p, ell, UniformGrid(0.0, ell, bg.grid.n), v)


# --- Weyl functions ---------------------------------------------------------

def weyl_function(pot, z, P=None, ell=None, cond_limit=1e12):
    """Weyl function ``i [I, -I] U P ([I, I] U P)^{-1}`` with ``U = u(ell, conj z)*``.

    ``z`` may be a scalar or an array of points in the upper half-plane.
    """
    P = WeylDirectionP.default(pot.p) if P is None else P
    if not isinstance(P, WeylDirectionP):
        P = WeylDirectionP(P)
    if P.p != pot.p:
        raise DimensionMismatch("P and potential have different block sizes")
    scalar = np.ndim(z) == 0
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(zs.imag <= 0):
        raise ValueError("Weyl function needs Im z > 0")
    if ell is not None and not np.isclose(ell, pot.ell):
        pot = pot.restrict(ell)
    p = pot.p
    u = propagate_endpoint(pot, zs.conj(), normalise=True)
    up = np.swapaxes(u, -1, -2).conj() @ P.value
    num = 1j * (up[:, :p] - up[:, p:])
    den = up[:, :p] + up[:, p:]
    cond = np.linalg.cond(den)
    if np.any(~np.isfinite(cond)) or np.any(cond > cond_limit):
        raise SingularDenominator("[I, I] U P is numerically singular")
    phi = np.linalg.solve(np.swapaxes(den, -1, -2), np.swapaxes(num, -1, -2))
    phi = np.swapaxes(phi, -1, -2)
    return phi[0] if scalar else phi


def weyl_residual_semiaxis(pot, phi, z, x_max):
    """``int_0^x_max [I, i phi*] Theta u* u Theta* [I; -i phi] dx`` (trace of the matrix).

    Beyond ``ell`` the potential is continued by zero; there the free
    solution is used in closed form, so the cut at ``ell`` is sharp.
    """
    y_im = np.imag(z)
    if y_im <= 0:
        raise ValueError("need Im z > 0")
    if x_max <= 0:
        return 0.0
    p = pot.p
    phi = np.asarray(phi, dtype=complex).reshape(p, p)
    x_in = min(x_max, pot.ell)
    grid = pot.grid if x_in == pot.ell else _grid_to(pot, x_in)
    theta = signature(p).Theta
    col = theta.conj().T @ np.vstack([np.eye(p), -1j * phi])
    vals = np.empty(grid.size)
    for i, u in _sweep(pot, [z], grid):
        y = u[0] @ col
        vals[i] = np.real(np.trace(y.conj().T @ y))
    total = float(np.trapezoid(vals, dx=grid.h))
    s = x_max - x_in
    if s > 0:
        # free continuation: diag(exp(i z s), exp(-i z s)) acting on y(ell)
        top = np.sum(np.abs(y[:p]) ** 2)
        bottom = np.sum(np.abs(y[p:]) ** 2)
        total += top * -np.expm1(-2 * y_im * s) / (2 * y_im)
        total += bottom * np.expm1(2 * y_im * s) / (2 * y_im)
    return total


def canonical_fundamental(pot, x, z):
    """``W(x, z) = exp(i z x / 2) Theta u(x/2, 0)^{-1} u(x/2, z) Theta*`` for ``x`` in ``[0, 2 ell]``."""
    p = pot.p
    if x < 0 or x > 2 * pot.ell * (1 + 1e-12):
        raise GridMismatch(f"x = {x} outside [0, {2 * pot.ell}]")
    if x == 0:
        return np.eye(2 * p, dtype=complex)
    grid = _grid_to(pot, x / 2)
    u = propagate_endpoint(pot, np.array([0.0, z]), grid)
    theta = signature(p).Theta
    return np.exp(0.5j * z * x) * theta @ np.linalg.solve(u[0], u[1]) @ theta.conj().T


def canonical_fundamental_nodes(pot, z):
    """``W(x_i, z)`` at every node of the ``[0, 2 ell]`` grid."""
    theta = signature(pot.p).Theta
    out = np.empty((pot.grid.size, 2 * pot.p, 2 * pot.p), dtype=complex)
    x2 = 2 * pot.grid.nodes
    for i, u in _sweep(pot, np.array([0.0, z])):
        out[i] = np.exp(0.5j * z * x2[i]) * theta @ np.linalg.solve(u[0], u[1]) @ theta.conj().T
    return out

