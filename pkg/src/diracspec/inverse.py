"""Recovery of the Hamiltonian, ``beta``, ``gamma`` and the potential from an S-node.

Routes
------
``beta``:
    ``factor``      ``beta = E Pi`` from the Cholesky factor of ``S``, with the
                    constant first-cell gauge removed (see :func:`normalise_gauge`).
    ``theta_ode``   ``beta = theta btilde`` with ``btilde = [0 I] H`` and
                    ``theta' = -theta btilde' J btilde* btilde_2^{-1}``, ``theta(0) = sqrt 2 I``.
    ``from_gamma``  ``beta = chi bhat`` with ``bhat = [(g_2*)^{-1}, -(g_1*)^{-1}]`` and
                    ``chi' = -chi bhat' J bhat* (bhat J bhat*)^{-1}``, ``chi(0) = I/2``.
``gamma``:
    ``direct``       ``gamma' = -(E Phi_1')* beta / sqrt 2``, ``gamma(0) = [-I, I]/sqrt 2``.
    ``vartheta_ode`` ``gamma = vartheta gtilde`` with ``gtilde = [-(b_2*)^{-1}, (b_1*)^{-1}]/2`` and
                     ``vartheta' = -vartheta gtilde' J gtilde* (gtilde J gtilde*)^{-1}``, ``vartheta(0) = I``.

The ODE routes use the exponential midpoint rule on the node samples.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .direct import BetaGamma, UniformGrid, potential_from_beta_gamma, signature
from .errors import CharacterizationFailure, SingularBlock
from .numerics import matrix_exponential
from .structured import build_snode, factor_beta, factorize_snode

__all__ = [
    "BetaRoute",
    "GammaRoute",
    "RecoveryRoute",
    "InverseResult",
    "normalise_gauge",
    "recover_hamiltonian",
    "recover_hamiltonian_cumulative",
    "recover_beta",
    "recover_gamma",
    "solve_inverse",
    "inverse_pipeline",
]


class BetaRoute(str, Enum):
    FACTOR = "factor"
    THETA_ODE = "theta_ode"
    FROM_GAMMA = "from_gamma"


class GammaRoute(str, Enum):
    DIRECT = "direct"
    VARTHETA_ODE = "vartheta_ode"


@dataclass(frozen=True)
class RecoveryRoute:
    beta_route: BetaRoute = BetaRoute.FACTOR
    gamma_route: GammaRoute = GammaRoute.DIRECT

    def __post_init__(self):
        b = BetaRoute(_normalise(self.beta_route))
        g = GammaRoute(_normalise(self.gamma_route))
        if b is BetaRoute.FROM_GAMMA and g is GammaRoute.VARTHETA_ODE:
            raise ValueError("from_gamma needs gamma that does not itself depend on beta; use gamma route 'direct'")
        object.__setattr__(self, "beta_route", b)
        object.__setattr__(self, "gamma_route", g)


def _normalise(value):
    return value.replace("-", "_") if isinstance(value, str) else value


def _adj(m):
    return np.swapaxes(m, -1, -2).conj()


def _inv(m, what):
    cond = np.linalg.cond(m)
    if np.any(~np.isfinite(cond)) or np.any(cond > 1e12):
        raise SingularBlock(f"{what} lost invertibility; refine the grid")
    return np.linalg.inv(m)


def _gauge_ode(base, initial, h, J):
    """Solve ``g' = -g base' J base* (base J base*)^{-1}`` and return ``g base``.

    One exponential midpoint step per grid interval, with ``base'`` and the
    midpoint value of ``base`` from neighbouring samples.
    """
    n = len(base) - 1
    mid = 0.5 * (base[1:] + base[:-1])
    dmid = (base[1:] - base[:-1]) / h
    gram = mid @ J @ _adj(mid)
    coeff = dmid @ J @ _adj(mid) @ _inv(gram, "gauge Gram matrix")
    steps = matrix_exponential(-h * coeff)
    g = np.empty((n + 1,) + initial.shape, dtype=complex)
    g[0] = initial
    for i in range(n):
        g[i + 1] = g[i] @ steps[i]
    return g @ base


def normalise_gauge(beta, J):
    """Left-multiply ``beta[1:]`` by the ``p x p`` matrix that maps ``2 beta_1 - beta_2`` to ``beta_0``.

    The Cholesky factor has a real diagonal, so it cannot carry the phase
    that ``beta`` picks up across the first cell; every later node inherits
    the same constant left factor.  Only nodes 1 and 2 are used, which keeps
    the result independent of the interval length.
    """
    if len(beta) < 3:
        return beta
    b0 = beta[0]
    guess = 2.0 * beta[1] - beta[2]
    u = b0 @ J @ _adj(guess) @ _inv(guess @ J @ _adj(guess), "gauge estimate")
    out = beta.copy()
    out[1:] = u @ beta[1:]
    return out


def recover_hamiltonian(beta):
    """``H = beta* beta`` nodewise."""
    return _adj(beta) @ beta


def recover_hamiltonian_cumulative(snode, factor):
    """Validation route: backward differences of ``G(xi) = Pi_xi* S_xi^{-1} Pi_xi``.

    ``G`` is accumulated from the rows of ``E Pi``; ``H(0)`` is taken from the
    boundary value of ``beta``.
    """
    n, p, h = snode.n, snode.p, snode.h
    rows = factor.apply(np.sqrt(h) * snode.pi_hat[1:].reshape(n * p, 2 * p)).reshape(n, p, 2 * p)
    G = np.zeros((n + 1, 2 * p, 2 * p), dtype=complex)
    G[1:] = np.cumsum(_adj(rows) @ rows, axis=0)
    H = np.empty_like(G)
    H[1:] = np.diff(G, axis=0) / h
    b0 = snode.pi_hat[0] / np.sqrt(2.0)
    H[0] = _adj(b0) @ b0
    return H, G


def recover_beta(snode, factor=None, route=BetaRoute.FACTOR, gamma=None, H=None):
    """``beta`` on the node grid by the selected route."""
    route = BetaRoute(_normalise(route))
    p = snode.p
    J = signature(p).J
    if route is BetaRoute.FACTOR:
        return normalise_gauge(factor_beta(snode, factor), J)
    if route is BetaRoute.THETA_ODE:
        if H is None:
            H = recover_hamiltonian(factor_beta(snode, factor))
        btilde = H[:, p:, :]
        return _gauge_ode(btilde, np.sqrt(2.0) * np.eye(p, dtype=complex), snode.h, J)
    if gamma is None:
        gamma = recover_gamma(snode, factor, factor_beta(snode, factor), GammaRoute.DIRECT)
    g1, g2 = gamma[:, :, :p], gamma[:, :, p:]
    bhat = np.concatenate([_inv(_adj(g2), "gamma_2"), -_inv(_adj(g1), "gamma_1")], axis=-1)
    return _gauge_ode(bhat, 0.5 * np.eye(p, dtype=complex), snode.h, J)


def recover_gamma(snode, factor, beta, route=GammaRoute.DIRECT):
    """``gamma`` on the node grid by the selected route."""
    route = GammaRoute(_normalise(route))
    n, p, h = snode.n, snode.p, snode.h
    J = signature(p).J
    if route is GammaRoute.DIRECT:
        # Phi_1' is the kernel k itself
        dphi = snode.kernel[1:].reshape(n * p, p)
        edphi = factor.apply(dphi).reshape(n, p, p)
        incr = h * _adj(edphi) @ beta[1:]
        gamma = np.empty((n + 1, p, 2 * p), dtype=complex)
        gamma[0] = np.concatenate([-np.eye(p), np.eye(p)], axis=-1) / np.sqrt(2.0)
        gamma[1:] = gamma[0] - np.cumsum(incr, axis=0) / np.sqrt(2.0)
        return gamma
    b1, b2 = beta[:, :, :p], beta[:, :, p:]
    gtilde = 0.5 * np.concatenate([-_inv(_adj(b2), "beta_2"), _inv(_adj(b1), "beta_1")], axis=-1)
    return _gauge_ode(gtilde, np.eye(p, dtype=complex), h, J)


@dataclass(frozen=True)
class InverseResult:
    snode: object
    factor: object
    beta_gamma: BetaGamma
    hamiltonian: np.ndarray
    potential: object
    route: RecoveryRoute


def inverse_pipeline(m, ell, n, route=None, check=False, levels=None):
    """Run the full recovery and keep every intermediate object.

    With ``check=True`` the measure is first passed through the
    characterization checks and a failing verdict raises
    :class:`CharacterizationFailure`.
    """
    route = RecoveryRoute() if route is None else route
    if check:
        from .characterization import check_spectral_conditions

        levels = levels or sorted({max(8, n // 4), max(16, n // 2), n})
        report = check_spectral_conditions(m, ell, levels)
        if not report.passed:
            failed = ", ".join(report.failed_conditions())
            raise CharacterizationFailure(f"measure rejected: condition(s) {failed} failed", report)
    snode = build_snode(m, ell, n)
    factor = factorize_snode(snode)
    beta0 = factor_beta(snode, factor)
    gamma = None
    if route.gamma_route is GammaRoute.DIRECT or route.beta_route is BetaRoute.FROM_GAMMA:
        gamma_direct = recover_gamma(snode, factor, beta0, GammaRoute.DIRECT)
    if route.beta_route is BetaRoute.FACTOR:
        beta = normalise_gauge(beta0, signature(m.p).J)
    elif route.beta_route is BetaRoute.THETA_ODE:
        beta = recover_beta(snode, factor, BetaRoute.THETA_ODE, H=recover_hamiltonian(beta0))
    else:
        beta = recover_beta(snode, factor, BetaRoute.FROM_GAMMA, gamma=gamma_direct)
    if route.gamma_route is GammaRoute.DIRECT:
        gamma = gamma_direct
    else:
        gamma = recover_gamma(snode, factor, beta, GammaRoute.VARTHETA_ODE)
    bg = BetaGamma(UniformGrid(0.0, 2.0 * ell, n), beta, gamma)
    pot = potential_from_beta_gamma(bg)
    return InverseResult(snode, factor, bg, recover_hamiltonian(beta), pot, route)


def solve_inverse(m, ell, n, route=None, check=False, levels=None):
    """Potential on ``[0, ell]`` recovered from the spectral measure ``m``."""
    return inverse_pipeline(m, ell, n, route, check, levels).potential
