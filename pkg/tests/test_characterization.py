import numpy as np
import pytest

from diracspec import Potential, SpectralMeasure
from diracspec.characterization import (
    TAIL_NOTE,
    check_spectral_conditions,
    gaussian_bump,
    parseval_defect,
    semiaxis_check,
)


def bumps(pot):
    return [gaussian_bump(pot, c, 0.15, k) for c, k in ((0.3, 0), (0.5, 1), (0.7, 0))]


class TestVerdicts:
    def test_free_accepted(self):
        r = check_spectral_conditions(SpectralMeasure.free(1), 1.0)
        assert r.passed and r.verdict == "accepted"
        # S = 2 I exactly
        assert r.condition_II["lambda_min"] == pytest.approx([2.0] * 3)
        assert r.condition_IV["nu_defect"] == 0
        assert TAIL_NOTE in r.notes

    def test_three_atoms_rejected(self, three_atoms):
        r = check_spectral_conditions(three_atoms, 1.0)
        assert not r.passed
        assert r.failed_conditions() == ["II", "IV"]
        # alpha = 0 gives Im nu = -1
        assert r.condition_IV["nu_defect"] == pytest.approx(1.0)
        assert max(abs(v) for v in r.condition_II["lambda_min"]) < 1e-10

    def test_double_density_fails_only_IV(self):
        r = check_spectral_conditions(SpectralMeasure.free(1, alpha=2 / np.pi), 1.0)
        assert r.failed_conditions() == ["IV"]
        assert r.condition_IV["nu_defect"] == pytest.approx(1.0)
        assert r.condition_II["lambda_min"] == pytest.approx([4.0] * 3)

    def test_direct_measure_accepted(self, const_measure):
        r = check_spectral_conditions(const_measure, 1.0)
        assert r.passed, r.failed_conditions()
        assert r.to_dict()["verdict"] == "accepted"

    def test_levels_validated(self):
        with pytest.raises(ValueError):
            check_spectral_conditions(SpectralMeasure.free(1), 1.0, [64])
        with pytest.raises(ValueError):
            check_spectral_conditions(SpectralMeasure.free(1), 1.0, [64, 32])


class TestSemiaxis:
    def test_free_nested(self):
        report, pots = semiaxis_check(SpectralMeasure.free(1), [0.5, 1.0, 1.5], levels=(32, 64))
        assert report.passed and len(pots) == 3
        assert max(report.extra["nested_agreement"]) < 1e-8

    def test_direct_measure_nested(self, const_measure):
        report, pots = semiaxis_check(const_measure, [0.5, 1.0], levels=(64, 128), n_base=256)
        assert report.passed
        # recovery on [0, 1/2] must match the first half of the recovery on [0, 1]
        assert report.extra["nested_agreement"][0] < 5e-2

    def test_rejected_measure_not_recovered(self, three_atoms):
        report, pots = semiaxis_check(three_atoms, [0.5, 1.0], levels=(16, 32))
        assert not report.passed and pots == []

    def test_sequence_must_increase(self):
        with pytest.raises(ValueError):
            semiaxis_check(SpectralMeasure.free(1), [1.0, 0.5])


class TestParseval:
    def test_free(self):
        pot = Potential.zero(1.0, 256)
        assert parseval_defect(pot, SpectralMeasure.free(1), bumps(pot)) <= 1e-2

    def test_matched_constant(self, const_pot, const_measure):
        assert parseval_defect(const_pot, const_measure, bumps(const_pot)) <= 1e-2

    def test_disjoint_bumps_isometry(self, const_pot, const_measure):
        # the sum of two bumps with disjoint supports has the sum of their norms
        f = gaussian_bump(const_pot, 0.25, 0.05) + gaussian_bump(const_pot, 0.75, 0.05, 1)
        assert parseval_defect(const_pot, const_measure, [f]) <= 1e-2

    def test_mismatched_pair(self, const_measure):
        wrong = Potential.constant(1.0, 1.0, 512)
        assert parseval_defect(wrong, const_measure, bumps(wrong)) >= 0.1

    def test_zero_function_rejected(self, const_pot, const_measure):
        with pytest.raises(ValueError):
            parseval_defect(const_pot, const_measure, [np.zeros((const_pot.grid.size, 2))])
