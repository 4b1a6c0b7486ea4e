"""Command-line front end.

Exit status: 0 success, 2 verdict failure (measure rejected or sampling
refuted), 1 generic error, 3 malformed input, 4 characterization failure,
5 operator not positive definite.
"""

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .characterization import check_spectral_conditions
from .direct import beta_gamma, weyl_function, weyl_residual_semiaxis
from .errors import CharacterizationFailure, DiracSpecError, NotPositiveDefinite, ParseError
from .herglotz import stieltjes_invert
from .inverse import RecoveryRoute, inverse_pipeline
from .pw_sampling import pw_sampling_report, pwl_sampling_certificate

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERDICT = 2
EXIT_PARSE = 3
EXIT_CHARACTERIZATION = 4
EXIT_NOT_PD = 5

SUBCOMMANDS = ("direct", "inverse", "roundtrip", "check", "pw", "weyl")


@dataclass
class RunConfig:
    subcommand: str
    input: Path
    output: Path
    p: int | None = None
    ell: float | None = None
    n: int | None = None
    window: float = 50.0
    epsilon: float = 1e-3
    z: list = field(default_factory=lambda: [1j, 1 + 1j, -2 + 0.5j])
    levels: list | None = None
    beta_route: str = "factor"
    gamma_route: str = "direct"
    r: list = field(default_factory=lambda: [0.1, 0.2])
    force: bool = False
    grid_points: int = 8001

    def validate(self):
        for name in ("ell", "n", "window", "epsilon", "p", "grid_points"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"--{name.replace('_', '-')} must be positive")
        if self.levels is not None and (len(self.levels) < 2 or sorted(set(self.levels)) != self.levels):
            raise ValueError("--levels must be at least two strictly increasing integers")
        if not self.input.is_file():
            raise FileNotFoundError(f"cannot read {self.input}")
        parent = self.output.resolve().parent
        if not parent.is_dir():
            raise FileNotFoundError(f"output directory {parent} does not exist")
        RecoveryRoute(self.beta_route, self.gamma_route)


def _floats(text):
    return [float(s) for s in text.split(",") if s.strip()]


def _ints(text):
    return [int(s) for s in text.split(",") if s.strip()]


def _complexes(text):
    return [complex(s.strip().replace(" ", "").replace("i", "j")) for s in text.split(",") if s.strip()]


def build_parser():
    ap = argparse.ArgumentParser(prog="diracspec",
                                 description="Direct and inverse spectral problems for Dirac systems.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--in", dest="input", type=Path, required=True)
    ap.add_argument("--out", dest="output", type=Path, required=True)
    ap.add_argument("--p", type=int)
    ap.add_argument("--ell", type=float)
    ap.add_argument("--n", type=int)
    ap.add_argument("--window", type=float, default=50.0)
    ap.add_argument("--eps", dest="epsilon", type=float, default=1e-3)
    ap.add_argument("--grid-points", type=int, default=8001,
                    help="density samples on [-T, T] for direct/roundtrip")
    ap.add_argument("--z", type=_complexes, default=None, help='probes, e.g. "0+1i,1+2i"')
    ap.add_argument("--levels", type=_ints, default=None, help="e.g. 128,256,512")
    ap.add_argument("--beta-route", default="factor", choices=["factor", "theta-ode", "from-gamma"])
    ap.add_argument("--gamma-route", default="direct", choices=["direct", "vartheta-ode"])
    ap.add_argument("--r", type=_floats, default=None, help="e.g. 0.1,0.2")
    ap.add_argument("--force", action="store_true", help="skip characterization before inverse")
    return ap


def config_from_args(argv):
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(ns.subcommand, ns.input, ns.output, ns.p, ns.ell, ns.n, ns.window,
                    ns.epsilon, levels=ns.levels, beta_route=ns.beta_route,
                    gamma_route=ns.gamma_route, force=ns.force, grid_points=ns.grid_points)
    if ns.z is not None:
        cfg.z = ns.z
    if ns.r is not None:
        cfg.r = ns.r
    return cfg


def _sibling(path, suffix):
    return path.with_name(path.stem + suffix)


def _check_p(cfg, p):
    if cfg.p is not None and cfg.p != p:
        raise ValueError(f"--p {cfg.p} does not match the input file (p = {p})")


def _measure_of(pot, cfg):
    return stieltjes_invert(lambda z: weyl_function(pot, z), cfg.window, cfg.epsilon,
                            out_grid=cfg.grid_points)


def _run_direct(cfg):
    pot = io.read_potential(cfg.input)
    _check_p(cfg, pot.p)
    m = _measure_of(pot, cfg)
    io.write_measure(cfg.output, m)
    z = np.array(cfg.z, dtype=complex)
    phi = weyl_function(pot, z)
    io.write_json(_sibling(cfg.output, "_weyl.json"), {
        "schema": "weyl-samples", "version": io.VERSION,
        "z": [io.complex_to_json(v) for v in z],
        "phi": [io.matrix_to_json(f) for f in phi],
    })
    io.write_csv(_sibling(cfg.output, "_density.csv"), m.density_grid, {"density": m.density})
    return EXIT_OK


def _inverse(m, cfg, ell, n):
    route = RecoveryRoute(cfg.beta_route, cfg.gamma_route)
    return inverse_pipeline(m, ell, n, route, check=not cfg.force, levels=cfg.levels)


def _run_inverse(cfg):
    m = io.read_measure(cfg.input)
    _check_p(cfg, m.p)
    ell = cfg.ell or 1.0
    n = cfg.n or 512
    res = _inverse(m, cfg, ell, n)
    io.write_potential(cfg.output, res.potential)
    bg = res.beta_gamma
    io.write_csv(_sibling(cfg.output, "_beta_gamma.csv"), bg.grid.nodes,
                 {"beta": bg.beta, "gamma": bg.gamma, "H": res.hamiltonian})
    io.write_csv(_sibling(cfg.output, "_v.csv"), res.potential.grid.nodes, {"v": res.potential.samples})
    return EXIT_OK


def _run_roundtrip(cfg):
    pot = io.read_potential(cfg.input)
    _check_p(cfg, pot.p)
    n = cfg.n or 2 * pot.grid.n
    m = _measure_of(pot, cfg)
    res = _inverse(m, cfg, pot.ell, n)
    rec = res.potential
    x = rec.grid.nodes
    truth = pot.at(x)
    err = np.abs(rec.samples - truth).max(axis=(1, 2))
    interior = x <= 0.9 * pot.ell
    io.write_json(cfg.output, {
        "schema": "roundtrip-report", "version": io.VERSION,
        "ell": pot.ell, "n": n, "window": [-cfg.window, cfg.window], "epsilon": cfg.epsilon,
        "max_interior_error": float(err[interior].max()),
        "interior": [0.0, 0.9 * pot.ell],
        "table": {"x": x.tolist(), "error": err.tolist()},
    })
    io.write_csv(_sibling(cfg.output, ".csv"), x, {"v_true": truth, "v_recovered": rec.samples,
                                                   "error": err})
    return EXIT_OK


def _run_check(cfg):
    m = io.read_measure(cfg.input)
    _check_p(cfg, m.p)
    levels = cfg.levels or [64, 128, 256]
    report = check_spectral_conditions(m, cfg.ell or 1.0, levels)
    io.write_json(cfg.output, io.report_to_dict(report))
    if not report.passed:
        print(f"measure rejected: condition(s) {', '.join(report.failed_conditions())} failed",
              file=sys.stderr)
        return EXIT_VERDICT
    return EXIT_OK


def _run_pw(cfg):
    m = io.read_measure(cfg.input)
    if m.p != 1:
        raise ValueError("pw needs a scalar measure (p = 1)")
    window = (-cfg.window, cfg.window)
    report = pw_sampling_report(m, cfg.r, window)
    doc = {"schema": "pw-report", "version": io.VERSION, **report}
    if cfg.ell is not None:
        doc["pwl_certificate"] = pwl_sampling_certificate(m, cfg.ell, window)
    io.write_json(cfg.output, doc)
    return EXIT_OK if report["verdict"].startswith("certified") else EXIT_VERDICT


def _run_weyl(cfg):
    pot = io.read_potential(cfg.input)
    _check_p(cfg, pot.p)
    z = np.array(cfg.z, dtype=complex)
    phi = weyl_function(pot, z)
    x_max = 4.0 * pot.ell
    resid = [weyl_residual_semiaxis(pot, f, zz, x_max) for f, zz in zip(phi, z)]
    io.write_json(cfg.output, {
        "schema": "weyl-table", "version": io.VERSION,
        "z": [io.complex_to_json(v) for v in z],
        "phi": [io.matrix_to_json(f) for f in phi],
        "semiaxis_integral": resid,
        "im_phi_over_im_z": [float(np.trace(f.imag)) / zz.imag for f, zz in zip(phi, z)],
        "x_max": x_max,
    })
    bg = beta_gamma(pot)
    io.write_csv(_sibling(cfg.output, "_beta_gamma.csv"), bg.grid.nodes,
                 {"beta": bg.beta, "gamma": bg.gamma})
    return EXIT_OK


_HANDLERS = {
    "direct": _run_direct,
    "inverse": _run_inverse,
    "roundtrip": _run_roundtrip,
    "check": _run_check,
    "pw": _run_pw,
    "weyl": _run_weyl,
}


def run(cfg):
    """Run one subcommand and map failures to exit codes."""
    try:
        cfg.validate()
        return _HANDLERS[cfg.subcommand](cfg)
    except ParseError as exc:
        print(f"error: malformed input: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CharacterizationFailure as exc:
        print(f"error: {exc} (use --force to skip the check)", file=sys.stderr)
        if exc.report is not None:
            io.write_json(_sibling(cfg.output, "_check.json"), io.report_to_dict(exc.report))
        return EXIT_CHARACTERIZATION
    except NotPositiveDefinite as exc:
        print(f"error: structured operator is not positive definite "
              f"(pivot {exc.pivot_index}): {exc}", file=sys.stderr)
        return EXIT_NOT_PD
    except (DiracSpecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main(argv=None):
    return run(config_from_args(argv))


if __name__ == "__main__":
    sys.exit(main())
