"""Is a measure the spectral function of a Dirac system with an L2 potential?

The checks are finite-dimensional evidence, not proofs: positivity and
invertibility of ``S`` are judged from the smallest eigenvalue of its
discretizations across refinement levels.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .direct import Potential, spectral_transform
from .herglotz import condition_i_integral
from .structured import build_snode

__all__ = [
    "CheckReport",
    "check_spectral_conditions",
    "parseval_defect",
    "semiaxis_check",
    "gaussian_bump",
    "TAIL_NOTE",
]

TAIL_NOTE = (
    "outside the data window the measure is assumed to be alpha dt (plus the "
    "stored a/t decay, if any); verdicts are relative to that assumption"
)
LAMBDA_FLOOR = 1e-3
NU_TOL = 1e-8


@dataclass
class CheckReport:
    condition_i: dict
    condition_II: dict
    condition_III: dict
    condition_IV: dict
    passed: bool
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def failed_conditions(self):
        names = ("i", "II", "III", "IV")
        conds = (self.condition_i, self.condition_II, self.condition_III, self.condition_IV)
        return [name for name, c in zip(names, conds) if not c["pass"]]

    @property
    def verdict(self):
        return "accepted" if self.passed else "rejected"

    def to_dict(self):
        d = asdict(self)
        d["verdict"] = self.verdict
        return d


def _kernel_l2(snode):
    sq = np.sum(np.abs(snode.kernel) ** 2, axis=(1, 2))
    return float(np.sqrt(np.trapezoid(sq, dx=snode.h)))


def check_spectral_conditions(m, ell, levels=(64, 128, 256), floor=LAMBDA_FLOOR,
                              nu_tol=NU_TOL, trend_ratio=0.5):
    """Evaluate conditions (i), (II), (III) and (IV) on the refinement ``levels``.

    (i)   ``int (1 + t^2)^{-1} d tau`` is finite.
    (II)  ``S`` is positive: ``lambda_min > floor`` at every level.
    (III) ``||Phi_1'||_L2`` is stable across levels (consecutive ratios in ``[0.5, 2]``).
    (IV)  ``nu`` is Hermitian and ``lambda_min`` does not decay across levels
          (last over first at least ``trend_ratio``), the proxy for ``Ker S = 0``.
    """
    levels = [int(n) for n in levels]
    if len(levels) < 2 or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing with at least two entries")

    ci = condition_i_integral(m)
    cond_i = {"value": ci, "pass": bool(np.isfinite(ci))}

    lam_min, lam_max, norms, nu_defects = [], [], [], []
    for n in levels:
        node = build_snode(m, ell, n)
        evals = np.linalg.eigvalsh(node.S_matrix)
        lam_min.append(float(evals[0]))
        lam_max.append(float(evals[-1]))
        norms.append(_kernel_l2(node))
        nu_defects.append(node.nu_defect)

    cond_II = {
        "levels": levels,
        "lambda_min": lam_min,
        "lambda_max": lam_max,
        "floor": floor,
        "pass": bool(min(lam_min) > floor),
    }
    ratios = [b / a if a > 0 else (1.0 if b == 0 else np.inf) for a, b in zip(norms, norms[1:])]
    cond_III = {
        "levels": levels,
        "phi1_prime_l2": norms,
        "ratios": ratios,
        "pass": bool(all(0.5 <= r <= 2.0 for r in ratios)),
    }
    trend = lam_min[-1] / lam_min[0] if lam_min[0] > 0 else 0.0
    nu_defect = max(nu_defects)
    cond_IV = {
        "nu_defect": nu_defect,
        "nu_tol": nu_tol,
        "lambda_min_trend": trend,
        "lambda_min_last": lam_min[-1],
        "pass": bool(nu_defect <= nu_tol and trend >= trend_ratio and lam_min[-1] > floor),
    }
    notes = [TAIL_NOTE, f"Ker S = 0 judged from lambda_min over levels {levels}, floor {floor:g}"]
    if m.has_tail_decay:
        notes.append("measure carries an a/t exterior decay")
    passed = all(c["pass"] for c in (cond_i, cond_II, cond_III, cond_IV))
    return CheckReport(cond_i, cond_II, cond_III, cond_IV, passed, notes)


def gaussian_bump(pot, center, width, component=0):
    """``(N, 2p)`` samples with a Gaussian in one component, zero elsewhere."""
    x = pot.grid.nodes
    f = np.zeros((pot.grid.size, 2 * pot.p), dtype=complex)
    f[:, component] = np.exp(-0.5 * ((x - center) / width) ** 2)
    return f


def _norm2(pot, f):
    return float(np.trapezoid(np.sum(np.abs(f) ** 2, axis=1), dx=pot.grid.h))


def parseval_defect(pot, m, test_functions, t_window=(-60.0, 60.0), nt=2401):
    """``max_f | ||U_D f||^2_{L2(d tau)} / ||f||^2 - 1 |``.

    The density part is integrated over ``t_window``; outside it the measure
    is taken as ``alpha dt`` and its share is estimated from the free
    transform through Plancherel: ``int_R |U_0 f|^2 dt = pi ||f||^2``.
    """
    lo, hi = t_window
    t = np.linspace(lo, hi, nt)
    dens = m.density_at(t)
    free = Potential.zero(pot.ell, pot.grid.n, pot.p)
    worst = 0.0
    for f in test_functions:
        f = np.asarray(f, dtype=complex)
        norm = _norm2(pot, f)
        if norm == 0:
            raise ValueError("test functions must be nonzero")
        F = spectral_transform(pot, f, t)
        quad = np.real(np.einsum("na,nab,nb->n", F.conj(), dens, F))
        total = np.trapezoid(quad, t)
        for atom in m.atoms:
            Fa = spectral_transform(pot, f, atom.t)
            total += float(np.real(Fa.conj() @ atom.weight @ Fa))
        F0 = spectral_transform(free, f, t)
        inside = np.trapezoid(np.sum(np.abs(F0) ** 2, axis=1), t)
        total += m.tail_coefficient * max(0.0, np.pi * norm - inside)
        worst = max(worst, abs(total / norm - 1.0))
    return float(worst)


def semiaxis_check(m, ell_sequence, levels=(64, 128, 256), recover=True, n_base=None):
    """Run :func:`check_spectral_conditions` for each ``ell_k`` and compare recoveries.

    Levels are scaled with ``ell_k / ell_0`` so that every interval uses the
    same step; recovered potentials are compared on their common nodes.
    """
    from .inverse import solve_inverse

    ells = [float(e) for e in ell_sequence]
    if any(b <= a for a, b in zip(ells, ells[1:])):
        raise ValueError("ell_sequence must be increasing")
    reports, potentials = [], []
    for ell in ells:
        scale = ell / ells[0]
        lv = [max(4, int(round(n * scale))) for n in levels]
        reports.append(check_spectral_conditions(m, ell, lv))
        if recover and reports[-1].passed:
            n = int(round((n_base or levels[-1]) * scale))
            potentials.append(solve_inverse(m, ell, n))
    agreement = []
    for a, b in zip(potentials, potentials[1:]):
        k = a.grid.size
        agreement.append(float(np.abs(a.samples - b.samples[:k]).max()))
    passed = all(r.passed for r in reports)
    combined = CheckReport(
        condition_i=reports[0].condition_i,
        condition_II={"per_ell": [r.condition_II for r in reports],
                      "pass": all(r.condition_II["pass"] for r in reports)},
        condition_III={"per_ell": [r.condition_III for r in reports],
                       "pass": all(r.condition_III["pass"] for r in reports)},
        condition_IV={"per_ell": [r.condition_IV for r in reports],
                      "pass": all(r.condition_IV["pass"] for r in reports)},
        passed=passed,
        notes=[TAIL_NOTE, f"ell sequence {ells}"],
        extra={"ells": ells, "nested_agreement": agreement},
    )
    return combined, potentials
