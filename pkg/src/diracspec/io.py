"""JSON and CSV serialization.

Documents carry ``schema`` and ``version`` fields.  Complex numbers are
``[re, im]`` pairs and matrices are row-major nested lists; Python's float
repr is the shortest round-tripping decimal, so values survive a
write/read cycle bit for bit.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .direct import Potential
from .errors import ParseError
from .herglotz import Atom, SpectralMeasure
from .numerics import UniformGrid

__all__ = [
    "VERSION",
    "complex_to_json",
    "matrix_to_json",
    "matrix_from_json",
    "measure_to_dict",
    "measure_from_dict",
    "potential_to_dict",
    "potential_from_dict",
    "report_to_dict",
    "write_json",
    "read_json",
    "read_measure",
    "write_measure",
    "read_potential",
    "write_potential",
    "write_csv",
]

VERSION = 1


def _clean(x):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("only finite numbers can be serialized")
    return x


def complex_to_json(z):
    z = complex(z)
    return [_clean(z.real), _clean(z.imag)]


def matrix_to_json(m):
    m = np.asarray(m, dtype=complex)
    return [[complex_to_json(v) for v in row] for row in m]


def _complex_from_json(v):
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(c, (int, float)) for c in v):
        return complex(v[0], v[1])
    raise ParseError(f"expected a complex number as [re, im], got {v!r}")


def matrix_from_json(rows, p):
    """Nested ``p x p`` rows, or a flat row-major list of ``p^2`` entries."""
    if not isinstance(rows, list):
        raise ParseError("matrix must be a list")
    if len(rows) == p * p and all(not (isinstance(r, list) and len(r) and isinstance(r[0], list))
                                  for r in rows) and not (p == 1 and isinstance(rows[0], list)
                                                          and len(rows[0]) == 1):
        flat = [_complex_from_json(v) for v in rows]
    else:
        if len(rows) != p or any(not isinstance(r, list) or len(r) != p for r in rows):
            raise ParseError(f"matrix must be {p} x {p}")
        flat = [_complex_from_json(v) for r in rows for v in r]
    return np.array(flat, dtype=complex).reshape(p, p)


def _require(doc, schema):
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object")
    if doc.get("schema") != schema:
        raise ParseError(f"expected schema {schema!r}, got {doc.get('schema')!r}")
    if doc.get("version") != VERSION:
        raise ParseError(f"unsupported version {doc.get('version')!r}")


def _field(doc, key):
    try:
        return doc[key]
    except KeyError:
        raise ParseError(f"missing field {key!r}") from None


def measure_to_dict(m):
    doc = {
        "schema": "spectral-measure",
        "version": VERSION,
        "p": m.p,
        "tail_coefficient": _clean(m.tail_coefficient),
        "window": [-_clean(m.window), _clean(m.window)],
        "grid": [_clean(t) for t in m.density_grid],
        "density": [matrix_to_json(d) for d in m.density],
        "atoms": [{"t": _clean(a.t), "weight": matrix_to_json(a.weight)} for a in m.atoms],
    }
    if m.has_tail_decay:
        doc["tail_decay"] = [matrix_to_json(a) for a in m.tail_decay]
    return doc


def measure_from_dict(doc):
    _require(doc, "spectral-measure")
    try:
        p = int(_field(doc, "p"))
        window = _field(doc, "window")
        if not (isinstance(window, list) and len(window) == 2 and window[0] == -window[1]):
            raise ParseError("window must be [-T, T]")
        grid = np.array(_field(doc, "grid"), dtype=float)
        density = np.array([matrix_from_json(d, p) for d in _field(doc, "density")])
        atoms = tuple(Atom(float(a["t"]), matrix_from_json(a["weight"], p))
                      for a in doc.get("atoms", []))
        decay = doc.get("tail_decay")
        if decay is not None:
            decay = np.array([matrix_from_json(a, p) for a in decay])
        return SpectralMeasure(p, float(_field(doc, "tail_coefficient")), float(window[1]),
                               grid, density, atoms, tail_decay=decay)
    except ParseError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ParseError(f"invalid spectral measure: {exc}") from exc


def potential_to_dict(pot):
    return {
        "schema": "dirac-potential",
        "version": VERSION,
        "p": pot.p,
        "ell": _clean(pot.ell),
        "grid": [_clean(x) for x in pot.grid.nodes],
        "v": [matrix_to_json(v) for v in pot.samples],
    }


def potential_from_dict(doc):
    _require(doc, "dirac-potential")
    try:
        p = int(_field(doc, "p"))
        ell = float(_field(doc, "ell"))
        nodes = np.array(_field(doc, "grid"), dtype=float)
        if len(nodes) < 3:
            raise ParseError("potential grid needs at least 3 nodes")
        grid = UniformGrid(0.0, ell, len(nodes) - 1)
        if np.abs(nodes - grid.nodes).max() > 1e-9 * max(1.0, ell):
            raise ParseError("potential grid must be uniform on [0, ell]")
        v = np.array([matrix_from_json(m, p) for m in _field(doc, "v")])
        return Potential(p, ell, grid, v)
    except ParseError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ParseError(f"invalid potential: {exc}") from exc


def _plain(obj):
    """Numpy scalars and arrays to JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_to_json(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def report_to_dict(report):
    d = report.to_dict()
    return {
        "schema": "check-report",
        "version": VERSION,
        "conditions": _plain({"i": d["condition_i"], "II": d["condition_II"],
                              "III": d["condition_III"], "IV": d["condition_IV"]}),
        "verdict": d["verdict"],
        "notes": list(d["notes"]),
        "extra": _plain(d.get("extra", {})),
    }


def write_json(path, doc):
    Path(path).write_text(json.dumps(_plain(doc)) + "\n", encoding="utf-8")


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON ({exc})") from exc


def read_measure(path):
    return measure_from_dict(read_json(path))


def write_measure(path, m):
    write_json(path, measure_to_dict(m))


def read_potential(path):
    return potential_from_dict(read_json(path))


def write_potential(path, pot):
    write_json(path, potential_to_dict(pot))


def write_csv(path, x, columns):
    """``x`` then ``Re``/``Im`` of each named column (complex arrays, any trailing shape)."""
    x = np.asarray(x, dtype=float)
    header = ["x"]
    data = [x]
    for name, values in columns.items():
        values = np.asarray(values, dtype=complex).reshape(len(x), -1)
        for k in range(values.shape[1]):
            suffix = f"_{k}" if values.shape[1] > 1 else ""
            header += [f"re_{name}{suffix}", f"im_{name}{suffix}"]
            data += [values[:, k].real, values[:, k].imag]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*data):
            writer.writerow([repr(float(v)) for v in row])
