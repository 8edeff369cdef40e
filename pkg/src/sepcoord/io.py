"""JSON exchange format for operators, and report/CSV writers.

Matrices travel as ``{"dims": [d1, ...], "re": [[...]], "im": [[...]]}``
in row-major order.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .linalg_core import (
    DensityOperator,
    DimensionError,
    Dims,
    HermitianOperator,
    InvalidStateError,
)


class MatrixFormatError(ValueError):
    """Input file does not follow the matrix exchange format."""


def operator_to_json(x: HermitianOperator) -> dict:
    return {
        "dims": list(x.dims.factor_dims),
        "re": x.matrix.real.tolist(),
        "im": x.matrix.imag.tolist(),
    }


def _parse_matrix(data: dict) -> tuple[np.ndarray, Dims]:
    try:
        dims = Dims(tuple(data["dims"]))
        re = np.array(data["re"], dtype=float)
        im = np.array(data.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError, DimensionError) as exc:
        raise MatrixFormatError(f"malformed matrix object: {exc}") from exc
    if re.shape != im.shape or re.ndim != 2 or re.shape[0] != re.shape[1]:
        raise MatrixFormatError(f"re/im must be equal square arrays, got {re.shape} and {im.shape}")
    if re.shape[0] != dims.total_dim:
        raise MatrixFormatError(f"matrix size {re.shape[0]} does not match dims {list(dims.factor_dims)}")
    return re + 1j * im, dims


def operator_from_json(data: dict, tol: float = 1e-9) -> HermitianOperator:
    """Parse and check Hermiticity (relative to the largest entry)."""
    a, dims = _parse_matrix(data)
    asym = float(np.max(np.abs(a - a.conj().T)))
    if asym > tol * max(1.0, float(np.max(np.abs(a)))):
        raise InvalidStateError(f"matrix is not Hermitian (max |A - A^dagger| = {asym:.3g})")
    return HermitianOperator(a, dims)


def state_from_json(data: dict) -> DensityOperator:
    a, dims = _parse_matrix(data)
    return DensityOperator(a, dims)


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"{path}: not valid JSON ({exc})") from exc


def load_state(path) -> DensityOperator:
    return state_from_json(load_json(path))


def load_operator(path) -> HermitianOperator:
    return operator_from_json(load_json(path))


def save_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()
