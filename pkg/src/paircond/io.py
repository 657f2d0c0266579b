"""File formats: JSON matrix documents, detector reports, sweep CSV.

Matrices travel as JSON documents

    {"kind": ..., "statistics": "fermion"|"boson", "n": int,
     "index_convention": "full" | "packed_lex",
     "data": [[re, im], ...]}        # row-major

with floats serialized through ``repr`` (shortest round-trip decimal, up
to 17 significant digits), so write/read is exact.  CSV sweep tables are
versioned by a leading ``#schema=`` comment line.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .fock import BOSON, FERMION, Statistics, pair_indices


class SchemaError(ValueError):
    """Matrix or config document violates the expected schema."""


MATRIX_KINDS = ("rho1", "rho2", "pair", "unitary")
_STATS = {"fermion": FERMION, "boson": BOSON}


def _matrix_rows(mat: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in mat.reshape(-1)]


def write_matrix(path, mat: np.ndarray, *, kind: str, statistics: Statistics,
                 n: int, index_convention: str) -> None:
    if kind not in MATRIX_KINDS:
        raise SchemaError(f"unknown matrix kind {kind!r}")
    if index_convention not in ("full", "packed_lex"):
        raise SchemaError(f"unknown index convention {index_convention!r}")
    doc = {
        "kind": kind,
        "statistics": statistics.value,
        "n": int(n),
        "index_convention": index_convention,
        "shape": list(mat.shape),
        "data": _matrix_rows(np.asarray(mat, dtype=complex)),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def expected_dim(kind: str, n: int, statistics: Statistics,
                 index_convention: str) -> int:
    if index_convention == "packed_lex":
        return len(pair_indices(n, statistics))
    return n


def read_matrix(path) -> dict:
    """Read and validate a matrix document; returns dict with ndarray 'matrix'."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}, "
                          f"column {exc.colno}: {exc.msg}") from exc
    for field_name in ("kind", "statistics", "n", "index_convention", "data"):
        if field_name not in doc:
            raise SchemaError(f"{path}: missing field {field_name!r}")
    if doc["kind"] not in MATRIX_KINDS:
        raise SchemaError(f"{path}: unknown kind {doc['kind']!r}")
    stat = _STATS.get(doc["statistics"])
    if stat is None:
        raise SchemaError(f"{path}: unknown statistics {doc['statistics']!r}")
    n = doc["n"]
    if not isinstance(n, int) or n < 1:
        raise SchemaError(f"{path}: field 'n' must be a positive integer")
    conv = doc["index_convention"]
    dim = expected_dim(doc["kind"], n, stat, conv)
    data = doc["data"]
    if len(data) != dim * dim:
        raise SchemaError(f"{path}: field 'data' has {len(data)} entries, "
                          f"expected {dim * dim} for a {dim}x{dim} matrix")
    flat = np.empty(dim * dim, dtype=complex)
    for k, entry in enumerate(data):
        if (not isinstance(entry, (list, tuple)) or len(entry) != 2
                or not all(isinstance(x, (int, float)) for x in entry)):
            raise SchemaError(f"{path}: data[{k}] is not a [re, im] pair")
        flat[k] = complex(entry[0], entry[1])
    doc["matrix"] = flat.reshape(dim, dim)
    doc["statistics_enum"] = stat
    return doc


def check_hermitian(mat: np.ndarray, tol: float, path: str = "matrix") -> None:
    """Raise SchemaError naming the worst entry if M is not Hermitian."""
    defect = np.abs(mat - mat.conj().T)
    worst = float(defect.max()) if defect.size else 0.0
    if worst > tol * max(1.0, float(np.abs(mat).max())):
        i, j = np.unravel_index(int(np.argmax(defect)), defect.shape)
        raise SchemaError(
            f"{path}: not Hermitian within {tol:g}; worst entry ({i},{j}) "
            f"vs ({j},{i}) differs by {worst:.3e}")


def write_report(path, report, extra: dict | None = None) -> None:
    """Serialize a detector report as a structured JSON text document."""
    doc = {
        "statistics": report.statistics.value,
        "n": report.n,
        "m": report.m,
        "lambda_max": report.lambda_max,
        "lambda_over_m": report.lambda_over_m,
        "gap": report.gap if math.isfinite(report.gap) else None,
        "degeneracy": report.degeneracy,
        "is_condensate": report.is_condensate,
        "D2": report.d2,
        "classification": report.classification,
        "tolerance": report.tol,
        "spectrum": [float(x) for x in report.spectrum],
        "pair_matrix": _matrix_rows(report.pair_matrix),
    }
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


# ----------------------------------------------------------------------
# CSV sweep tables
# ----------------------------------------------------------------------


def csv_columns(n: int, statistics: Statistics) -> list[str]:
    nlev = n // 2 if statistics is FERMION else n
    cols = ["abscissa", "energy", "lambda_max", "lambda_over_m", "degeneracy",
            "D2", "overlap", "entropy", "delta_entropy"]
    cols += [f"rho1_ev_{k}" for k in range(n)]
    cols += [f"rho2_coll_ev_{k}" for k in range(nlev)]
    cols += [f"mod2_coll_ev_{k}" for k in range(nlev)]
    return cols


def format_float(x: float) -> str:
    return repr(float(x))


def write_csv(path, columns: list[str], rows: list[list], schema: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"#schema={schema}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(format_float(x) if isinstance(x, float)
                              else str(x) for x in row) + "\n")


def read_csv(path) -> tuple[str, list[str], list[list[float]]]:
    with open(path) as fh:
        schema = fh.readline().strip()
        if not schema.startswith("#schema="):
            raise SchemaError(f"{path}: missing #schema= header")
        cols = fh.readline().strip().split(",")
        rows = []
        for line in fh:
            if not line.strip():
                continue
            rows.append([float(tok) for tok in line.strip().split(",")])
    return schema[len("#schema="):], cols, rows
