"""Exponential coordinates of interior separable states.

A state ``rho`` in the interior of the separable set is written as
``rho = (1/Z) sum_i w_i exp(tr(b P_i)) P_i`` with a unique traceless ``b``.
The forward map is :func:`from_coordinates`; the inverse minimizes the
exponential objective and projects the minimizer onto trace zero, which
leaves the image unchanged because ``chi(X + lam I) = chi(X)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg_core import (
    DensityOperator,
    DimensionError,
    HermitianOperator,
    scalar_direction,
    traceless_part,
)
from .minimizer import MinimizeReport, SolverConfig, minimize
from .objective import (
    EXPONENTIAL,
    ObjectiveSpec,
    chi,
    eval_W,
    gibbs_weights,
    hessian_W_matrix,
    pairings,
)
from .product_measure import MeasureApprox

TRACE_GAUGE_TOL = 1e-10
DENSE_MAX_DIM = 16


class NotInteriorSeparable(RuntimeError):
    """The exponential objective has no minimizer for this state."""

    def __init__(self, report: MinimizeReport):
        super().__init__(f"exponential solve ended {report.status}: {report.message}")
        self.report = report


@dataclass(frozen=True, eq=False)
class HusimiCoordinates:
    b: HermitianOperator
    measure_ref: str
    solve: MinimizeReport

    def to_dict(self) -> dict:
        from .io import operator_to_json

        return {"b": operator_to_json(self.b), "measure": self.measure_ref, "solve": self.solve.to_dict()}


def gauge_fix(x: HermitianOperator) -> HermitianOperator:
    return traceless_part(x)


def to_coordinates(
    rho: DensityOperator, measure: MeasureApprox, cfg: SolverConfig | None = None
) -> HusimiCoordinates:
    rep = minimize(ObjectiveSpec(rho, measure, EXPONENTIAL), cfg)
    if not rep.converged:
        raise NotInteriorSeparable(rep)
    return HusimiCoordinates(gauge_fix(rep.minimizer), measure.label(), rep)


def from_coordinates(b: HermitianOperator, measure: MeasureApprox) -> DensityOperator:
    tr = b.trace()
    if abs(tr) > TRACE_GAUGE_TOL:
        warnings.warn(f"coordinates carry trace {tr:.3g}; projecting onto trace zero", stacklevel=2)
        b = gauge_fix(b)
    return chi(measure, b)


def traceless_basis(dims) -> np.ndarray:
    """Orthonormal real-coordinate basis of the traceless operators, ``(d**2, d**2 - 1)``."""
    return scipy.linalg.null_space(scalar_direction(dims)[None, :])


def diffeo_check(b: HermitianOperator, measure: MeasureApprox) -> float:
    """Smallest eigenvalue of ``d^2 W`` at ``b`` on traceless directions.

    Directions are normalized as ``tr(V^2) = d`` (the normalization of Pauli
    strings), so for a single qubit at ``b = 0`` the value is ``1/3``.
    """
    d = measure.dims.total_dim
    if d > DENSE_MAX_DIM:
        raise DimensionError(f"total dimension {d} too large for dense d^2 W (limit {DENSE_MAX_DIM})")
    n = traceless_basis(measure.dims)
    h = n.T @ hessian_W_matrix(measure, b) @ n
    return float(d * np.linalg.eigvalsh(h)[0])


def entropy_diagnostic(b: HermitianOperator, measure: MeasureApprox) -> float:
    """``-sum_i w_i q_i ln q_i`` for the normalized density ``q = exp(tr(bP))/Z``."""
    t = pairings(measure, b)
    w = eval_W(measure, b)
    q = gibbs_weights(measure, b)  # = w_i q_i
    return float(q @ (w - t))
