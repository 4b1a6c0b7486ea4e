import json

import numpy as np
import pytest

from diracspec import Atom, Potential, SpectralMeasure, io
from diracspec.characterization import check_spectral_conditions
from diracspec.cli import (
    EXIT_CHARACTERIZATION,
    EXIT_ERROR,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_VERDICT,
    config_from_args,
    main,
)
from diracspec.errors import ParseError


def small_measure():
    return SpectralMeasure.from_density(lambda t: 1 / np.pi + 0.1 * np.exp(-t * t), 20.0, 201,
                                        atoms=[Atom(1.5, 0.25 * np.eye(1))])


class TestRoundtrips:
    def test_measure_bit_exact(self, tmp_path):
        m = small_measure()
        path = tmp_path / "m.json"
        io.write_measure(path, m)
        back = io.read_measure(path)
        assert np.array_equal(back.density, m.density)
        assert np.array_equal(back.density_grid, m.density_grid)
        assert back.tail_coefficient == m.tail_coefficient
        assert back.atoms[0].t == 1.5 and np.array_equal(back.atoms[0].weight, m.atoms[0].weight)

    def test_measure_with_tail_decay(self):
        T = 10.0
        m = SpectralMeasure(1, 1 / np.pi, T, np.linspace(-T, T, 3),
                            np.array([1 / np.pi - 0.1 / T, 1 / np.pi, 1 / np.pi + 0.1 / T]),
                            tail_decay=np.array([[[-0.1]], [[0.1]]]))
        back = io.measure_from_dict(json.loads(json.dumps(io.measure_to_dict(m))))
        assert np.array_equal(back.tail_decay, m.tail_decay)

    def test_potential_bit_exact(self, tmp_path):
        pot = Potential.from_function(
            lambda x: np.array([[np.sin(3 * x), 1j * x], [0.3, np.cos(x) - 1j]]), 1.25, 32, 2)
        path = tmp_path / "v.json"
        io.write_potential(path, pot)
        back = io.read_potential(path)
        assert np.array_equal(back.samples, pot.samples)
        assert back.ell == pot.ell and back.p == 2

    def test_flat_matrix_accepted(self):
        np.testing.assert_array_equal(io.matrix_from_json([[1, 0], [0, 2], [3, 0], [0, 0]], 2),
                                      [[1, 2j], [3, 0]])


class TestParseErrors:
    def write(self, tmp_path, doc):
        path = tmp_path / "bad.json"
        path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
        return path

    def test_malformed_json(self, tmp_path):
        with pytest.raises(ParseError):
            io.read_measure(self.write(tmp_path, "{not json"))

    def test_wrong_schema(self, tmp_path):
        doc = io.potential_to_dict(Potential.zero(1.0, 8))
        with pytest.raises(ParseError):
            io.read_measure(self.write(tmp_path, doc))

    def test_bad_version(self):
        doc = io.measure_to_dict(small_measure())
        doc["version"] = 99
        with pytest.raises(ParseError):
            io.measure_from_dict(doc)

    def test_missing_field(self):
        doc = io.measure_to_dict(small_measure())
        del doc["density"]
        with pytest.raises(ParseError):
            io.measure_from_dict(doc)

    def test_non_uniform_potential_grid(self):
        doc = io.potential_to_dict(Potential.zero(1.0, 8))
        doc["grid"][3] += 0.01
        with pytest.raises(ParseError):
            io.potential_from_dict(doc)

    def test_negative_density(self):
        doc = io.measure_to_dict(small_measure())
        doc["density"][5] = [[[-1.0, 0.0]]]
        with pytest.raises(ParseError):
            io.measure_from_dict(doc)


def test_report_document():
    doc = io.report_to_dict(check_spectral_conditions(SpectralMeasure.free(1), 1.0, [16, 32]))
    assert doc["schema"] == "check-report" and doc["verdict"] == "accepted"
    assert set(doc["conditions"]) == {"i", "II", "III", "IV"}
    json.dumps(doc)


class TestCLI:
    @pytest.fixture
    def pot_file(self, tmp_path):
        path = tmp_path / "pot.json"
        io.write_potential(path, Potential.constant(0.5, 1.0, 64))
        return path

    def test_config_parsing(self, tmp_path):
        cfg = config_from_args(["weyl", "--in", "a.json", "--out", "b.json", "--z", "0+1i, 2+0.5i",
                                "--levels", "8,16", "--beta-route", "theta-ode"])
        assert cfg.z == [1j, 2 + 0.5j] and cfg.levels == [8, 16] and cfg.beta_route == "theta-ode"

    def test_weyl(self, tmp_path, pot_file):
        out = tmp_path / "w.json"
        assert main(["weyl", "--in", str(pot_file), "--out", str(out), "--z", "0+1i"]) == EXIT_OK
        doc = json.loads(out.read_text())
        phi = complex(*doc["phi"][0][0][0])
        # semiaxis integral equals Im phi / Im z
        assert doc["semiaxis_integral"][0] == pytest.approx(phi.imag, rel=1e-3)
        assert (tmp_path / "w_beta_gamma.csv").is_file()

    def test_direct_then_check_then_inverse(self, tmp_path, pot_file):
        m_path = tmp_path / "m.json"
        args = ["--window", "30", "--grid-points", "2001"]
        assert main(["direct", "--in", str(pot_file), "--out", str(m_path), *args]) == EXIT_OK
        assert (tmp_path / "m_density.csv").is_file()
        rep = tmp_path / "check.json"
        assert main(["check", "--in", str(m_path), "--out", str(rep), "--levels", "32,64"]) == EXIT_OK
        v_path = tmp_path / "v.json"
        assert main(["inverse", "--in", str(m_path), "--out", str(v_path), "--n", "128",
                     "--levels", "32,64"]) == EXIT_OK
        v = io.read_potential(v_path)
        assert np.abs(v.samples[5:-5] - 0.5).max() < 0.1

    def test_deterministic(self, tmp_path, pot_file):
        outs = []
        for k in range(2):
            out = tmp_path / f"m{k}.json"
            main(["direct", "--in", str(pot_file), "--out", str(out), "--window", "20", "--grid-points", "801"])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_roundtrip(self, tmp_path, pot_file):
        out = tmp_path / "rt.json"
        assert main(["roundtrip", "--in", str(pot_file), "--out", str(out), "--n", "128"]) == EXIT_OK
        assert json.loads(out.read_text())["max_interior_error"] < 0.05

    def test_rejected_measure(self, tmp_path, three_atoms):
        m_path = tmp_path / "atoms.json"
        io.write_measure(m_path, three_atoms)
        rep = tmp_path / "r.json"
        assert main(["check", "--in", str(m_path), "--out", str(rep), "--levels", "16,32"]) == EXIT_VERDICT
        assert json.loads(rep.read_text())["verdict"] == "rejected"
        v_path = tmp_path / "v.json"
        code = main(["inverse", "--in", str(m_path), "--out", str(v_path), "--n", "32", "--levels", "16,32"])
        assert code == EXIT_CHARACTERIZATION
        assert (tmp_path / "v_check.json").is_file() and not v_path.exists()

    def test_pw(self, tmp_path):
        m_path = tmp_path / "free.json"
        io.write_measure(m_path, SpectralMeasure.free(1))
        out = tmp_path / "pw.json"
        assert main(["pw", "--in", str(m_path), "--out", str(out), "--r", "0.2", "--ell", "1"]) == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["verdict"] == "certified on window"
        assert doc["pwl_certificate"]["verdict"] == "certified on window"

    def test_pw_refuted(self, tmp_path):
        # dt/pi with a spectral gap (-20, 20): long intervals inside the gap carry no mass
        t = np.linspace(-50, 50, 1001)
        dens = np.where(np.abs(t) > 20, 1 / np.pi, 0.0).reshape(-1, 1, 1)
        m_path = tmp_path / "gap.json"
        io.write_measure(m_path, SpectralMeasure(1, 1 / np.pi, 50.0, t, dens))
        out = tmp_path / "pw.json"
        assert main(["pw", "--in", str(m_path), "--out", str(out), "--r", "0.2"]) == EXIT_VERDICT
        assert json.loads(out.read_text())["verdict"] == "refuted on window"

    def test_errors(self, tmp_path, pot_file):
        bad = tmp_path / "bad.json"
        bad.write_text("[1, 2")
        assert main(["weyl", "--in", str(bad), "--out", str(tmp_path / "o.json")]) == EXIT_PARSE
        assert main(["weyl", "--in", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o.json")]) == EXIT_ERROR
        assert main(["weyl", "--in", str(pot_file), "--out", str(tmp_path / "o.json"), "--p", "2"]) == EXIT_ERROR
        assert main(["weyl", "--in", str(pot_file), "--out", str(tmp_path / "o.json"), "--n", "-3"]) == EXIT_ERROR
        assert main(["check", "--in", str(pot_file), "--out", str(tmp_path / "o.json")]) == EXIT_PARSE
        with pytest.raises(SystemExit):
            main(["bogus", "--in", "a", "--out", "b"])
