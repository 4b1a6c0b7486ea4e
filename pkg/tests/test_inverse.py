import numpy as np
import pytest

from conftest import measure_of, smooth_potential

from diracspec import SpectralMeasure
from diracspec.characterization import gaussian_bump, parseval_defect
from diracspec.direct import beta_gamma, hamiltonian_from_beta
from diracspec.errors import CharacterizationFailure
from diracspec.inverse import (
    BetaRoute,
    GammaRoute,
    RecoveryRoute,
    inverse_pipeline,
    recover_hamiltonian,
    recover_hamiltonian_cumulative,
    solve_inverse,
)
from diracspec.structured import build_snode, factor_beta, factorize_snode

ROUTES = [("factor", "direct"), ("theta-ode", "direct"), ("from-gamma", "direct"), ("factor", "vartheta-ode")]


class TestRoutes:
    def test_parsing(self):
        r = RecoveryRoute("theta-ode", "vartheta_ode")
        assert r.beta_route is BetaRoute.THETA_ODE
        assert r.gamma_route is GammaRoute.VARTHETA_ODE
        with pytest.raises(ValueError):
            RecoveryRoute("nonsense", "direct")

    def test_circular_combination_rejected(self):
        with pytest.raises(ValueError):
            RecoveryRoute("from-gamma", "vartheta-ode")


@pytest.mark.parametrize("route", ROUTES)
def test_free_routes_exact(route):
    res = inverse_pipeline(SpectralMeasure.free(1), 1.0, 64, RecoveryRoute(*route))
    assert np.abs(res.potential.samples).max() < 1e-8
    np.testing.assert_allclose(res.hamiltonian, np.broadcast_to(np.full((2, 2), 0.5), res.hamiltonian.shape),
                               atol=1e-8)


@pytest.fixture(scope="module")
def results(const_measure):
    return {r: inverse_pipeline(const_measure, 1.0, 512, RecoveryRoute(*r)) for r in ROUTES}


@pytest.fixture(scope="module")
def truth(const_pot):
    bg = beta_gamma(const_pot)
    return bg, hamiltonian_from_beta(bg)


class TestConstantPotential:
    @pytest.mark.parametrize("route", ROUTES)
    def test_against_direct(self, results, truth, route):
        bg, H = truth
        res = results[route]
        x = res.potential.grid.nodes
        assert np.abs(res.hamiltonian - H).max() < 5e-2
        assert np.abs(res.beta_gamma.gamma - bg.gamma).max() < 5e-2
        assert np.abs(res.potential.samples - 0.5)[x <= 0.9].max() < 5e-2

    def test_routes_agree(self, results):
        assert route_spread(r.beta_gamma for r in results.values()) <= 1e-3
        # v differentiates beta, so the spread grows by roughly one order
        v = [results[r].potential.samples for r in ROUTES]
        x = results[ROUTES[0]].potential.grid.nodes
        assert max(np.abs(a - v[0])[x <= 0.9].max() for a in v[1:]) <= 5e-3


def route_spread(pairs):
    """Largest relative deviation of beta and gamma from the first route."""
    pairs = list(pairs)
    ref = pairs[0]
    nb, ng = np.abs(ref.beta).max(), np.abs(ref.gamma).max()
    return max(max(np.abs(bg.beta - ref.beta).max() / nb, np.abs(bg.gamma - ref.gamma).max() / ng)
               for bg in pairs[1:])


def test_routes_agree_atom_measure(atom_measure):
    pairs = [inverse_pipeline(atom_measure, 1.0, 512, RecoveryRoute(*r)).beta_gamma for r in ROUTES]
    assert route_spread(pairs) <= 1e-3


def test_route_spread_first_order():
    # every route carries an O(h) error with its own constant, so the spread halves with h
    rng = np.random.default_rng(7)
    pot = smooth_potential(rng, 2, n=256)
    m = measure_of(pot, window=30.0, npts=4001)
    spreads = [route_spread(inverse_pipeline(m, 1.0, n, RecoveryRoute(*r)).beta_gamma for r in ROUTES)
               for n in (128, 256, 512)]
    assert all(1.8 < a / b < 2.2 for a, b in zip(spreads, spreads[1:]))


def test_check_rejects(three_atoms):
    with pytest.raises(CharacterizationFailure) as info:
        inverse_pipeline(three_atoms, 1.0, 64, check=True, levels=[32, 64])
    assert info.value.report is not None and not info.value.report.passed


def test_cumulative_hamiltonian(atom_measure):
    node = build_snode(atom_measure, 1.0, 256)
    factor = factorize_snode(node)
    Hc, G = recover_hamiltonian_cumulative(node, factor)
    H = recover_hamiltonian(factor_beta(node, factor))
    assert np.abs(Hc - H)[1:].max() < 1e-10
    # G is nondecreasing: each increment is h beta* beta
    steps = np.linalg.eigvalsh(np.diff(G, axis=0))
    assert steps.min() > -1e-12


def test_parseval_atom_measure(atom_measure):
    pot = solve_inverse(atom_measure, 1.0, 512)
    fs = [gaussian_bump(pot, c, 0.15, k) for c, k in ((0.3, 0), (0.5, 1), (0.7, 0))]
    assert parseval_defect(pot, atom_measure, fs) <= 1e-2
