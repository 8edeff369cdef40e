"""Convex objectives over Hermitian operators and their derivatives.

All evaluations share the same reduction: the pairings ``t_i = tr(X P_i)``
are computed once per call as ``features @ x`` and reused for value,
gradient and Hessian.  Operators are handled internally through their real
coordinates (see :func:`sepcoord.linalg_core.matrix_to_vector`).

Two forms are supported:

* exponential: ``G(X) = sum_i w_i exp(t_i) - tr(X rho)``
* binomial of order ``k``: ``G_k(X) = sum_i w_i (1 + t_i/2k)^(2k) - tr(X rho)``
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .linalg_core import (
    DensityOperator,
    DimensionError,
    HermitianOperator,
    ProductProjector,
    hs_norm,
    trace_pair,
)
from .product_measure import MeasureApprox

EXP_LIMIT = 700.0


class ObjectiveRangeError(ArithmeticError):
    """``tr(X P)`` left the double-precision range of ``exp``."""

    def __init__(self, norm: float, peak: float):
        super().__init__(
            f"tr(XP) reached {peak:.4g} > {EXP_LIMIT:g} at ||X||_HS = {norm:.4g}; exp would overflow"
        )
        self.norm = norm
        self.peak = peak


@dataclass(frozen=True)
class Form:
    """Integrand family: ``order=None`` is the exponential, otherwise binomial."""

    order: int | None = None

    def __post_init__(self):
        if self.order is not None and int(self.order) < 1:
            raise ValueError(f"binomial order must be >= 1, got {self.order}")

    @classmethod
    def exponential(cls) -> "Form":
        return cls(None)

    @classmethod
    def binomial(cls, k: int) -> "Form":
        return cls(int(k))

    @property
    def is_exponential(self) -> bool:
        return self.order is None

    def __str__(self):
        return "exponential" if self.order is None else f"binomial(k={self.order})"

    def derivatives(self, t: np.ndarray, upto: int = 2) -> list[np.ndarray]:
        """``[f(t), f'(t), f''(t)]`` truncated to ``upto + 1`` entries."""
        if self.order is None:
            e = np.exp(t)
            return [e] * (upto + 1)
        n = 2 * self.order
        u = 1.0 + t / n
        out = [u**n]
        if upto >= 1:
            out.append(u ** (n - 1))
        if upto >= 2:
            out.append((n - 1) / n * u ** (n - 2))
        return out


EXPONENTIAL = Form.exponential()


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    rho: DensityOperator
    measure: MeasureApprox
    form: Form = EXPONENTIAL

    def __post_init__(self):
        if self.rho.dims != self.measure.dims:
            raise DimensionError(f"state dims {self.rho.dims} vs measure dims {self.measure.dims}")
        k = self.form.order
        if k is not None and self.measure.kind == "design" and self.measure.strength < 2 * k:
            raise ValueError(
                f"design strength {self.measure.strength} cannot integrate order {k} exactly (need >= {2 * k})"
            )

    @property
    def dims(self):
        return self.rho.dims


@dataclass(frozen=True, eq=False)
class EvalResult:
    value: float
    gradient: HermitianOperator
    hessian_apply: Callable[[HermitianOperator], HermitianOperator] | None = None

    def to_dict(self) -> dict:
        return {"value": self.value, "grad_norm": hs_norm(self.gradient)}


def _pairings(measure: MeasureApprox, xv: np.ndarray, guard: bool) -> np.ndarray:
    t = measure.features @ xv
    if guard:
        peak = float(np.max(t))
        if not peak <= EXP_LIMIT:
            raise ObjectiveRangeError(float(np.linalg.norm(xv)), peak)
    return t


def evaluate(spec: ObjectiveSpec, xv: np.ndarray, order: int = 1):
    """Value, gradient and (``order=2``) dense Hessian in real coordinates.

    Returns a tuple of length ``order + 1``.
    """
    m = spec.measure
    t = _pairings(m, xv, guard=spec.form.is_exponential)
    fs = spec.form.derivatives(t, upto=order)
    r = spec.rho.real_vector()
    value = float(m.weights @ fs[0] - r @ xv)
    if not np.isfinite(value):
        raise ObjectiveRangeError(float(np.linalg.norm(xv)), float(np.max(np.abs(t))))
    out = [value]
    if order >= 1:
        out.append(m.features.T @ (m.weights * fs[1]) - r)
    if order >= 2:
        f = m.features
        out.append((f.T * (m.weights * fs[2])) @ f)
    return tuple(out)


def _eval(spec: ObjectiveSpec, x: HermitianOperator) -> EvalResult:
    if x.dims != spec.dims:
        raise DimensionError(f"operator dims {x.dims} vs objective dims {spec.dims}")
    xv = x.real_vector()
    m = spec.measure
    t = _pairings(m, xv, guard=spec.form.is_exponential)
    value, grad = evaluate(spec, xv, order=1)
    h_weights = m.weights * spec.form.derivatives(t, upto=2)[2]

    def hessian_apply(v: HermitianOperator) -> HermitianOperator:
        s = m.features @ v.real_vector()
        return HermitianOperator.from_real_vector(m.features.T @ (h_weights * s), spec.dims)

    return EvalResult(value, HermitianOperator.from_real_vector(grad, spec.dims), hessian_apply)


def eval_G(spec: ObjectiveSpec, x: HermitianOperator) -> EvalResult:
    if not spec.form.is_exponential:
        raise ValueError("eval_G needs the exponential form")
    return _eval(spec, x)


def eval_Gk(spec: ObjectiveSpec, x: HermitianOperator) -> EvalResult:
    if spec.form.is_exponential:
        raise ValueError("eval_Gk needs a binomial form")
    return _eval(spec, x)


def eval_objective(spec: ObjectiveSpec, x: HermitianOperator) -> EvalResult:
    return _eval(spec, x)


def hessian_matrix(spec: ObjectiveSpec, x: HermitianOperator) -> np.ndarray:
    """Dense Hessian in real coordinates, shape ``(d**2, d**2)``."""
    return evaluate(spec, x.real_vector(), order=2)[2]


# --- partition function ----------------------------------------------------


def pairings(measure: MeasureApprox, x: HermitianOperator) -> np.ndarray:
    """All ``tr(X P_i)`` with the overflow guard applied."""
    if x.dims != measure.dims:
        raise DimensionError(f"operator dims {x.dims} vs measure dims {measure.dims}")
    return _pairings(measure, x.real_vector(), guard=True)


def gibbs_weights(measure: MeasureApprox, x: HermitianOperator) -> np.ndarray:
    """``w_i exp(t_i) / Z``, normalized to sum 1."""
    t = pairings(measure, x)
    q = measure.weights * np.exp(t - t.max())
    return q / q.sum()


def eval_Z(measure: MeasureApprox, x: HermitianOperator) -> float:
    t = pairings(measure, x)
    return float(measure.weights @ np.exp(t))


def eval_W(measure: MeasureApprox, x: HermitianOperator) -> float:
    t = pairings(measure, x)
    return float(logsumexp(t, b=measure.weights))


def chi(measure: MeasureApprox, x: HermitianOperator) -> DensityOperator:
    """Gradient of ``W = ln Z``: the Gibbs-weighted barycenter."""
    q = gibbs_weights(measure, x)
    v = measure.product_vectors
    return DensityOperator((v.T * q) @ v.conj(), measure.dims, validate=False)


def hessian_W_apply(measure: MeasureApprox, x: HermitianOperator, v: HermitianOperator) -> HermitianOperator:
    """Second derivative of ``W`` at ``x`` applied to ``v``.

    ``<v, result>`` is the variance of ``tr(v P)`` under the Gibbs weights.
    """
    q = gibbs_weights(measure, x)
    f = measure.features
    s = f @ v.real_vector()
    s = s - q @ s
    return HermitianOperator.from_real_vector(f.T @ (q * s), measure.dims)


def hessian_W_matrix(measure: MeasureApprox, x: HermitianOperator) -> np.ndarray:
    """Dense ``d^2 W`` in real coordinates (covariance of the features)."""
    q = gibbs_weights(measure, x)
    f = measure.features
    mean = q @ f
    c = f - mean
    return (c.T * q) @ c


def density_at(b: HermitianOperator, form: Form, p: ProductProjector) -> float:
    t = trace_pair(b, p)
    if form.is_exponential and t > EXP_LIMIT:
        raise ObjectiveRangeError(hs_norm(b), t)
    return float(form.derivatives(np.array([t]), upto=1)[1][0])


def densities(b: HermitianOperator, form: Form, measure: MeasureApprox) -> np.ndarray:
    """:func:`density_at` over every point of ``measure``."""
    t = _pairings(measure, b.real_vector(), guard=form.is_exponential)
    return form.derivatives(t, upto=1)[1]
