"""Matrix spectral measures and Herglotz functions.

A measure is stored in split form ``d tau = alpha I dt + d sigma``: outside
the window ``[-T, T]`` the density is the constant ``alpha I``; inside it is
the sampled density ``D(t)`` (piecewise linear between samples) plus point
masses.  The perturbation ``d sigma = (D - alpha I) dt + atoms`` is supported
in the window, so every integral against it converges absolutely, while the
``alpha`` part is handled in closed form.

Optionally the exterior density decays as ``alpha I + a_pm / |t|`` with
constant Hermitian ``a_-`` (``t < -T``) and ``a_+`` (``t > T``).  Potentials
that do not vanish at the origin produce exactly such a tail, and dropping it
leaves a boundary layer of width ``~1/T`` in the recovered potential.  Every
integral of the ``a / |t|`` part is evaluated in closed form through the sine
and cosine integrals.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import sici

from .errors import DimensionMismatch, NotHerglotz
from .numerics import hermitian_part

__all__ = [
    "FREE_TAIL",
    "Atom",
    "SpectralMeasure",
    "HerglotzRepresentation",
    "herglotz_eval",
    "herglotz_from_evaluator",
    "stieltjes_invert",
    "condition_i_integral",
    "trapezoid_weights",
    "expm1_over_t",
]

FREE_TAIL = 1.0 / np.pi


def trapezoid_weights(t):
    """Trapezoid weights for a strictly increasing, possibly nonuniform grid."""
    t = np.asarray(t, dtype=float)
    w = np.zeros_like(t)
    if len(t) < 2:
        return w
    d = np.diff(t)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def expm1_over_t(t, x):
    """``(exp(i t x) - 1) / t`` with the value ``i x`` at ``t = 0``; broadcasts."""
    tx = np.multiply.outer(x, t) if np.ndim(x) else x * np.asarray(t)
    xb = np.asarray(x)[..., None] if np.ndim(x) else x
    real = -xb * np.sin(tx / 2) * np.sinc(tx / (2 * np.pi))
    imag = xb * np.sinc(tx / np.pi)
    return real + 1j * imag


def _exterior_fourier(x, T):
    """``int_T^inf exp(itx)/t dt`` for ``x != 0``."""
    si, ci = sici(T * np.abs(x))
    return -ci + 1j * np.sign(x) * (np.pi / 2 - si)


def _exterior_fourier_cell(width, T):
    """Average of :func:`_exterior_fourier` over ``[-width/2, width/2]``."""
    u = T * width / 2
    _, ci = sici(u)
    return -(ci - np.sin(u) / u)


def _exterior_fourier_primitive(x, T):
    """``int_0^x`` of :func:`_exterior_fourier`, for ``x >= 0``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=complex)
    pos = x > 0
    xp = x[pos]
    si, ci = sici(T * xp)
    out[pos] = (-(xp * ci - np.sin(T * xp) / T)
                + 1j * (np.pi * xp / 2 - xp * si - np.cos(T * xp) / T + 1 / T))
    return out


def _psd_min_eig(m):
    return np.linalg.eigvalsh(hermitian_part(m)).min(axis=-1)


@dataclass(frozen=True)
class Atom:
    t: float
    weight: np.ndarray


@dataclass(frozen=True)
class SpectralMeasure:
    """``d tau = alpha I dt`` outside ``[-T, T]``; density samples and atoms inside."""

    p: int
    tail_coefficient: float
    window: float
    density_grid: np.ndarray
    density: np.ndarray
    atoms: tuple = field(default_factory=tuple)
    tail_rtol: float = 0.1
    tail_atol: float = 1e-3
    tail_decay: np.ndarray = None

    def __post_init__(self):
        p = self.p
        t = np.asarray(self.density_grid, dtype=float)
        d = np.asarray(self.density, dtype=complex)
        if d.ndim == 1:
            d = d[:, None, None]
        if self.tail_coefficient < 0:
            raise ValueError("tail coefficient must be nonnegative")
        if self.window <= 0:
            raise ValueError("window half-width must be positive")
        if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("density grid must be strictly increasing with >= 2 points")
        if t[0] < -self.window * (1 + 1e-12) or t[-1] > self.window * (1 + 1e-12):
            raise ValueError("density grid leaves the window")
        if d.shape != (len(t), p, p):
            raise DimensionMismatch(f"density has shape {d.shape}, expected {(len(t), p, p)}")
        scale = max(1.0, np.abs(d).max(initial=0.0))
        if np.abs(d - np.swapaxes(d, -1, -2).conj()).max(initial=0.0) > 1e-10 * scale:
            raise ValueError("density samples must be Hermitian")
        d = hermitian_part(d)
        if _psd_min_eig(d).min() < -1e-10 * scale:
            raise ValueError("density samples must be positive semidefinite")
        atoms = []
        for a in self.atoms:
            if not isinstance(a, Atom):
                a = Atom(float(a[0]), a[1])
            w = np.asarray(a.weight, dtype=complex).reshape(p, p)
            if np.abs(w - w.conj().T).max() > 1e-10 * max(1.0, np.abs(w).max()):
                raise ValueError("atom weights must be Hermitian")
            w = hermitian_part(w)
            if np.linalg.eigvalsh(w).min() < -1e-10 * max(1.0, np.abs(w).max()):
                raise ValueError("atom weights must be positive semidefinite")
            if abs(a.t) > self.window:
                raise ValueError(f"atom at {a.t} outside the window")
            w.setflags(write=False)
            atoms.append(Atom(float(a.t), w))
        locs = [a.t for a in atoms]
        if len(set(locs)) != len(locs):
            raise ValueError("atom locations must be distinct")
        decay = (np.zeros((2, p, p), dtype=complex) if self.tail_decay is None
                 else np.asarray(self.tail_decay, dtype=complex).reshape(2, p, p))
        decay = hermitian_part(decay)
        alpha = self.tail_coefficient * np.eye(p)
        for side in decay:
            if np.linalg.eigvalsh(alpha + side / self.window).min() < -1e-12:
                raise ValueError("exterior density alpha + a/|t| is not positive semidefinite")
        decay.setflags(write=False)
        object.__setattr__(self, "tail_decay", decay)
        limit = self.tail_rtol * self.tail_coefficient + self.tail_atol
        for end, side in ((0, 0), (-1, 1)):
            if np.linalg.norm(d[end] - alpha - decay[side] / self.window, 2) > limit:
                raise ValueError(
                    f"density at t = {t[end]:g} does not match the tail coefficient "
                    f"{self.tail_coefficient:g}"
                )
        t.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "density_grid", t)
        object.__setattr__(self, "density", d)
        object.__setattr__(self, "atoms", tuple(sorted(atoms, key=lambda a: a.t)))

    # -- constructors ------------------------------------------------------

    @classmethod
    def free(cls, p=1, window=50.0, npts=201, alpha=FREE_TAIL):
        t = np.linspace(-window, window, npts)
        d = np.broadcast_to(alpha * np.eye(p), (npts, p, p)).copy()
        return cls(p, alpha, window, t, d)

    @classmethod
    def from_density(cls, func, window, npts, p=1, alpha=FREE_TAIL, atoms=(), **kw):
        """Sample ``func(t) -> p x p`` (or scalar) on a uniform grid over the window."""
        t = np.linspace(-window, window, npts)
        d = np.array([np.asarray(func(s), dtype=complex) for s in t]).reshape(npts, p, p)
        return cls(p, alpha, window, t, d, tuple(atoms), **kw)

    def with_atoms(self, atoms):
        return SpectralMeasure(self.p, self.tail_coefficient, self.window, self.density_grid,
                               self.density, tuple(self.atoms) + tuple(atoms),
                               self.tail_rtol, self.tail_atol, self.tail_decay)

    def scaled(self, c):
        """The measure ``c d tau`` for ``c >= 0``."""
        return SpectralMeasure(self.p, c * self.tail_coefficient, self.window, self.density_grid,
                               c * self.density, tuple(Atom(a.t, c * a.weight) for a in self.atoms),
                               self.tail_rtol, self.tail_atol, c * self.tail_decay)

    @property
    def has_tail_decay(self):
        return bool(np.any(self.tail_decay != 0))

    # -- integrals against d sigma ------------------------------------------

    @property
    def quad_weights(self):
        return trapezoid_weights(self.density_grid)

    @property
    def perturbation_density(self):
        return self.density - self.tail_coefficient * np.eye(self.p)

    def sigma_integral(self, f):
        """``int f(t) d sigma(t)`` for a vectorised scalar ``f``; ``f`` may return extra leading axes.

        ``f(t)`` receives the density grid (then the atom locations) and must
        return an array whose last axis runs over ``t``.
        """
        t = self.density_grid
        vals = np.asarray(f(t))
        out = np.tensordot(vals * self.quad_weights, self.perturbation_density, axes=([-1], [0]))
        if self.atoms:
            at = np.array([a.t for a in self.atoms])
            aw = np.array([a.weight for a in self.atoms])
            out = out + np.tensordot(np.asarray(f(at)), aw, axes=([-1], [0]))
        return out

    def fourier(self, x, zero_cell=None):
        """``int exp(i t x) d sigma(t)`` at the points ``x``; shape ``(len(x), p, p)``.

        The ``a / |t|`` tail makes the transform log-singular at ``x = 0``;
        there the average over ``[-zero_cell/2, zero_cell/2]`` is returned.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = self.sigma_integral(lambda t: np.exp(1j * np.multiply.outer(x, t)))
        if self.has_tail_decay:
            at_zero = x == 0
            if np.any(at_zero) and zero_cell is None:
                raise ValueError("transform of a 1/|t| tail is singular at 0; pass zero_cell")
            e = np.empty(len(x), dtype=complex)
            e[~at_zero] = _exterior_fourier(x[~at_zero], self.window)
            if np.any(at_zero):
                e[at_zero] = _exterior_fourier_cell(zero_cell, self.window)
            a_minus, a_plus = self.tail_decay
            out = out + e[:, None, None] * a_plus + e.conj()[:, None, None] * a_minus
        return out

    def phi1_tail(self, x):
        """Exterior part of ``-i int (exp(itx) - 1)/t d tau`` for ``x >= 0``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        f = 1j * _exterior_fourier_primitive(x, self.window)
        a_minus, a_plus = self.tail_decay
        return -1j * (f[:, None, None] * a_plus - f.conj()[:, None, None] * a_minus)

    def nu_tail(self):
        """Exterior part of ``int t/(1 + t^2) d tau``."""
        a_minus, a_plus = self.tail_decay
        return (a_plus - a_minus) * (np.pi / 2 - np.arctan(self.window))

    def mass(self, a, b):
        """``tau([a, b))``; density integrated exactly for its piecewise-linear interpolant."""
        if b <= a:
            return np.zeros((self.p, self.p), dtype=complex)
        t, d, T = self.density_grid, self.density, self.window
        alpha = self.tail_coefficient * np.eye(self.p)
        total = np.zeros((self.p, self.p), dtype=complex)
        # constant tail outside the sampled range
        lo_end, hi_end = t[0], t[-1]
        total += alpha * (max(0.0, min(b, lo_end) - a) + max(0.0, b - max(a, hi_end)))
        if self.has_tail_decay:
            a_minus, a_plus = self.tail_decay
            lo, hi = max(a, T), b
            if hi > lo:
                total += a_plus * np.log(hi / lo)
            lo, hi = a, min(b, -T)
            if hi > lo:
                total += a_minus * np.log(-lo / -hi)
        lo, hi = max(a, lo_end), min(b, hi_end)
        if hi > lo:
            inner = t[(t > lo) & (t < hi)]
            pts = np.concatenate([[lo], inner, [hi]])
            flat = d.reshape(len(t), -1)
            vals = np.stack([np.interp(pts, t, flat[:, k].real) + 1j * np.interp(pts, t, flat[:, k].imag)
                             for k in range(flat.shape[1])], axis=-1)
            total += np.trapezoid(vals, pts, axis=0).reshape(self.p, self.p)
        for atom in self.atoms:
            if a <= atom.t < b:
                total += atom.weight
        return total

    def density_at(self, t):
        """Absolutely continuous density at ``t`` (tail value outside the samples)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        flat = self.density.reshape(len(self.density_grid), -1)
        alpha = self.tail_coefficient * np.eye(self.p).ravel()
        cols = []
        for k in range(flat.shape[1]):
            re = np.interp(t, self.density_grid, flat[:, k].real, left=alpha[k].real, right=alpha[k].real)
            im = np.interp(t, self.density_grid, flat[:, k].imag, left=0.0, right=0.0)
            cols.append(re + 1j * im)
        out = np.stack(cols, axis=-1).reshape(len(t), self.p, self.p)
        if self.has_tail_decay:
            a_minus, a_plus = self.tail_decay
            out[t > self.window] += a_plus / t[t > self.window, None, None]
            out[t < -self.window] += a_minus / -t[t < -self.window, None, None]
        return out


@dataclass(frozen=True)
class HerglotzRepresentation:
    """``phi(z) = mu z + nu + int (1/(t - z) - t/(1 + t^2)) d tau(t)``."""

    mu: np.ndarray
    nu: np.ndarray
    measure: SpectralMeasure

    def __post_init__(self):
        p = self.measure.p
        mu = np.asarray(self.mu, dtype=complex).reshape(p, p)
        nu = np.asarray(self.nu, dtype=complex).reshape(p, p)
        if np.linalg.eigvalsh(hermitian_part(mu)).min() < -1e-12:
            raise ValueError("mu must be positive semidefinite")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)

    @property
    def nu_defect(self):
        """``||nu - nu*||``: zero for a genuine Herglotz representation."""
        return float(np.linalg.norm(0.5 * (self.nu - self.nu.conj().T), 2))


def _tail_integral(z, window):
    """``int_{|t| > T} (1/(t - z) - t/(1 + t^2)) dt``."""
    return np.log(-window - z) - np.log(window - z) + 1j * np.pi


def _piecewise_linear_kernel(t, d, zs):
    """``int (1/(s - z) - s/(1 + s^2)) D(s) ds`` for the linear interpolant of ``D`` on ``t``.

    Each segment is integrated in closed form, so the result stays exact
    however close ``z`` comes to the real axis.
    """
    t0, t1 = t[:-1], t[1:]
    d0 = d[:-1]
    slope = (d[1:] - d[:-1]) / (t1 - t0)[:, None, None]
    # both t_k - z lie in the lower half-plane, so the principal log of the ratio is safe
    logs = np.log((t1[None, :] - zs[:, None]) / (t0[None, :] - zs[:, None]))
    cauchy = np.einsum("zk,kab->zab", logs, d0 - slope * t0[:, None, None])
    cauchy += np.einsum("zk,kab->zab", logs * zs[:, None], slope)
    cauchy += np.sum(slope * (t1 - t0)[:, None, None], axis=0)
    half_log = 0.5 * np.log((1.0 + t1 ** 2) / (1.0 + t0 ** 2))
    rest = (t1 - t0) - (np.arctan(t1) - np.arctan(t0))
    norm = np.einsum("k,kab->ab", half_log, d0 - slope * t0[:, None, None])
    norm += np.einsum("k,kab->ab", rest, slope)
    return cauchy - norm


def herglotz_eval(rep, z):
    """Evaluate the Herglotz integral at ``z`` (scalar or array, ``Im z > 0``).

    The density is taken as the linear interpolant of its samples, the same
    reading that :meth:`SpectralMeasure.mass` uses.
    """
    scalar = np.ndim(z) == 0
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(zs.imag <= 0):
        raise ValueError("Herglotz evaluation needs Im z > 0")
    m = rep.measure
    p = m.p
    eye = np.eye(p)
    # the alpha I dt part over the whole line equals i pi alpha
    out = zs[:, None, None] * rep.mu + rep.nu + 1j * np.pi * m.tail_coefficient * eye
    out = out + _piecewise_linear_kernel(m.density_grid, m.perturbation_density, zs)
    for a in m.atoms:
        out = out + (1.0 / (a.t - zs) - a.t / (1.0 + a.t ** 2))[:, None, None] * a.weight
    if m.has_tail_decay:
        T = m.window
        a_minus, a_plus = m.tail_decay
        rest = np.pi / 2 - np.arctan(T)
        right = np.log(T / (T - zs)) / zs - rest
        left = -(np.log((T + zs) / T) / zs - rest)
        out = out + right[:, None, None] * a_plus + left[:, None, None] * a_minus
    return out[0] if scalar else out


def condition_i_integral(m):
    """Spectral norm of ``int (1 + t^2)^{-1} d tau(t)``."""
    total = np.pi * m.tail_coefficient * np.eye(m.p) + m.sigma_integral(lambda t: 1.0 / (1.0 + t ** 2))
    total = total + 0.5 * np.log1p(m.window ** -2) * (m.tail_decay[0] + m.tail_decay[1])
    return float(np.linalg.norm(hermitian_part(total), 2))


def _im_part(vals):
    return (vals - np.swapaxes(vals, -1, -2).conj()) / 2j


def _lam_max(vals):
    return np.linalg.eigvalsh(_im_part(vals)).max(axis=-1)


def _evaluate(phi, zs, p=None):
    vals = np.asarray(phi(np.asarray(zs, dtype=complex)), dtype=complex)
    if vals.ndim == 1:
        vals = vals[:, None, None]
    return vals


def stieltjes_invert(phi, window, epsilon=1e-3, out_grid=4000,
                     tail_coefficient=FREE_TAIL, detect_atoms=True,
                     tol=1e-8, min_atom_weight=1e-6, atom_rtol=0.1, fit_tail=True):
    """Recover ``d tau`` from a Herglotz evaluator by the Stieltjes-Perron limit.

    ``D(t) = Im phi(t + i eps) / pi`` on the output grid.  Point masses are
    located on a coarser line ``Im z = grid spacing``, refined at ``eps``,
    and kept only when the peak mass ``eps Im phi`` is stable (relative change
    below ``atom_rtol``) when ``eps`` is halved.  Their Poisson profiles are
    removed from the sampled density.

    With ``fit_tail`` the exterior density is modelled as ``alpha I + a/t``
    with ``a`` taken from the ``1/z`` asymptotics of ``phi`` far up the
    imaginary axis, where oscillating contributions are exponentially damped.

    Parameters
    ----------
    phi : callable
        Vectorised evaluator ``z -> (len(z), p, p)`` (or ``(len(z),)`` when
        ``p == 1``).
    window : float
        Half-width ``T`` of the window ``[-T, T]``.
    out_grid : int or array
        Number of uniform samples, or the sample points themselves.

    Raises
    ------
    NotHerglotz
        If ``Im phi`` has an eigenvalue below ``-tol`` at a probe point.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    t = (np.linspace(-window, window, int(out_grid)) if np.ndim(out_grid) == 0
         else np.asarray(out_grid, dtype=float))
    vals = _evaluate(phi, t + 1j * epsilon)
    p = vals.shape[-1]
    im = _im_part(vals)
    scale = max(1.0, np.abs(im).max())
    low = np.linalg.eigvalsh(im).min()
    if low < -tol * scale:
        raise NotHerglotz(f"Im phi has eigenvalue {low:.3e} on the line Im z = {epsilon:g}")
    density = im / np.pi

    atoms = []
    if detect_atoms:
        atoms = _detect_atoms(phi, t, epsilon, min_atom_weight, atom_rtol)
        for a in atoms:
            poisson = epsilon / (np.pi * ((t - a.t) ** 2 + epsilon ** 2))
            density = density - poisson[:, None, None] * a.weight
    # project onto the PSD cone
    evals, evecs = np.linalg.eigh(hermitian_part(density))
    density = np.einsum("nab,nb,ncb->nac", evecs, np.clip(evals, 0.0, None), evecs.conj())
    decay = _fit_tail_decay(phi, tail_coefficient, window) if fit_tail else None
    return SpectralMeasure(p, tail_coefficient, float(window), t, density, tuple(atoms),
                           tail_decay=decay)


def _fit_tail_decay(phi, alpha, window):
    """Odd ``a / t`` tail read off the ``1/z`` term of ``phi`` on the imaginary axis.

    ``int_{|t| > T} (a/t) / (t - iY) dt = (2a/Y)(pi/2 - atan(T/Y))``, so the
    ``1/z`` coefficient ``b`` of ``phi`` has anti-Hermitian part ``i pi a``;
    window contributions to ``b`` are Hermitian and drop out.
    """
    ys = window * np.array([2.0, 4.0, 8.0, 16.0])
    vals = _evaluate(phi, 1j * ys)
    p = vals.shape[-1]
    w = 1.0 / (1j * ys)
    basis = np.stack([np.ones_like(w), w, w ** 2, w ** 3], axis=1)
    coef, *_ = np.linalg.lstsq(basis, vals.reshape(len(ys), -1), rcond=None)
    b = coef[1].reshape(p, p)
    a = hermitian_part(b / (1j * np.pi))
    if np.abs(a).max() <= 1e-12 * max(1.0, alpha):
        return None
    # keep the exterior density alpha +- a/|t| positive semidefinite
    out = np.empty((2, p, p), dtype=complex)
    for k, side in enumerate((-a, a)):
        evals, evecs = np.linalg.eigh(side)
        evals = np.maximum(evals, -alpha * window)
        out[k] = (evecs * evals) @ evecs.conj().T
    return out


def _detect_atoms(phi, t, epsilon, min_weight, rtol):
    spacing = float(np.median(np.diff(t)))
    scan_eps = max(spacing, epsilon)
    a = _lam_max(_evaluate(phi, t + 1j * scan_eps))
    atoms = []
    n = len(t)
    for i in range(n):
        lo, hi = max(0, i - 1), min(n, i + 2)
        if a[i] < a[lo:hi].max() or a[i] * scan_eps < min_weight:
            continue
        neighbourhood = a[max(0, i - 10): i + 11]
        if a[i] < 1.5 * np.median(neighbourhood):
            continue
        left, right = t[max(0, i - 1)], t[min(n - 1, i + 1)]
        if right <= left:
            continue
        res = minimize_scalar(
            lambda s: -_lam_max(_evaluate(phi, np.array([s + 1j * epsilon])))[0],
            bounds=(left, right), method="bounded",
            options={"xatol": epsilon / 20},
        )
        loc = float(res.x)
        w_eps = epsilon * _im_part(_evaluate(phi, np.array([loc + 1j * epsilon])))[0]
        half = epsilon / 2
        w_half = half * _im_part(_evaluate(phi, np.array([loc + 1j * half])))[0]
        size = np.linalg.norm(w_half, 2)
        if size < min_weight:
            continue
        if np.linalg.norm(w_eps - w_half, 2) > rtol * size:
            continue
        # linear-in-eps background removed by extrapolation
        w = hermitian_part(2 * w_half - w_eps)
        evals, evecs = np.linalg.eigh(w)
        w = (evecs * np.clip(evals, 0.0, None)) @ evecs.conj().T
        if any(abs(loc - b.t) < 2 * spacing for b in atoms):
            continue
        atoms.append(Atom(loc, w))
    return atoms


def herglotz_from_evaluator(phi, measure, probe=1j):
    """Herglotz triple with ``mu = 0`` whose ``nu`` matches ``phi`` at ``probe``."""
    zero = np.zeros((measure.p, measure.p))
    partial = herglotz_eval(HerglotzRepresentation(zero, zero, measure), probe)
    target = _evaluate(phi, np.array([probe]))[0]
    nu = hermitian_part(target - partial)
    return HerglotzRepresentation(zero, nu, measure)
