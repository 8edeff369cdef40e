"""Unconstrained convex minimization of the exponential and binomial
objectives over Hermitian operators.

Newton with Armijo backtracking on the dense Hessian is the default for
small systems; plain gradient descent with backtracking takes over when the
real dimension gets large.  Neither solver throws on overflow: range errors
at trial points shrink the step, and a range error at an accepted point is
reported through the status.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg

from .linalg_core import DensityOperator, HermitianOperator
from .objective import Form, ObjectiveRangeError, ObjectiveSpec, evaluate
from .product_measure import MeasureApprox

log = logging.getLogger(__name__)

CONVERGED = "converged"
DIVERGED = "diverged"
MAX_ITERS = "max_iters"
RANGE_ERROR = "range_error"
STALLED = "stalled"

ARMIJO_C1 = 1e-4
NEWTON_MAX_DIM = 16


@dataclass(frozen=True)
class SolverConfig:
    grad_tol: float = 1e-8
    max_iters: int = 500
    initial: HermitianOperator | None = None
    method: str | None = None  # "newton" | "gradient"; None picks by size
    divergence_norm: float = 1e3

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.divergence_norm <= 1:
            raise ValueError("divergence_norm must exceed 1")
        if self.method not in (None, "newton", "gradient"):
            raise ValueError(f"unknown method {self.method!r}")

    def resolved_method(self, total_dim: int) -> str:
        if self.method:
            return self.method
        return "newton" if total_dim <= NEWTON_MAX_DIM else "gradient"

    def to_dict(self) -> dict:
        return {
            "grad_tol": self.grad_tol,
            "max_iters": self.max_iters,
            "method": self.method,
            "divergence_norm": self.divergence_norm,
            "warm_start": self.initial is not None,
        }


@dataclass(frozen=True, eq=False)
class MinimizeReport:
    minimizer: HermitianOperator
    value: float
    grad_norm: float
    iters: int
    status: str
    form: Form
    final_norm: float = 0.0
    message: str = ""
    trace: list[dict] = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.minimizer.matrix))

    def to_dict(self) -> dict:
        return {
            "form": str(self.form),
            "status": self.status,
            "value": self.value,
            "grad_norm": self.grad_norm,
            "iters": self.iters,
            "norm": self.norm,
            "message": self.message,
        }

    def trace_lines(self) -> str:
        return "".join(json.dumps(row) + "\n" for row in self.trace)


def _newton_direction(h: np.ndarray, g: np.ndarray) -> np.ndarray:
    try:
        c = scipy.linalg.cho_factor(h, lower=True, check_finite=True)
        return -scipy.linalg.cho_solve(c, g)
    except (np.linalg.LinAlgError, ValueError):
        # nearly flat directions (far out along a witness ray): regularize
        lam = max(1e-12, 1e-10 * float(np.max(np.abs(np.diag(h)))))
        while True:
            try:
                c = scipy.linalg.cho_factor(h + lam * np.eye(h.shape[0]), lower=True)
                return -scipy.linalg.cho_solve(c, g)
            except np.linalg.LinAlgError:
                lam *= 10


def _value_scale(spec: ObjectiveSpec, x: np.ndarray, f: float) -> float:
    # magnitude of the summed terms; rounding error in f is relative to this
    m = spec.measure
    terms = spec.form.derivatives(m.features @ x, upto=0)[0]
    return max(1.0, abs(f), float(m.weights @ np.abs(terms)))


def minimize(spec: ObjectiveSpec, cfg: SolverConfig | None = None) -> MinimizeReport:
    cfg = cfg or SolverConfig()
    dims = spec.dims
    method = cfg.resolved_method(dims.total_dim)
    x = (cfg.initial.real_vector() if cfg.initial is not None else np.zeros(dims.real_dim)).copy()

    def report(status, value, g, it, msg="", trace=()):
        return MinimizeReport(
            HermitianOperator.from_real_vector(x, dims),
            float(value),
            float(np.linalg.norm(g)) if g is not None else float("nan"),
            it,
            status,
            spec.form,
            final_norm=float(np.linalg.norm(x)),
            message=msg,
            trace=list(trace),
        )

    trace: list[dict] = []
    try:
        f, g = evaluate(spec, x, order=1)
    except ObjectiveRangeError as exc:
        return report(RANGE_ERROR, np.nan, None, 0, str(exc))

    step = 0.0
    for it in range(cfg.max_iters + 1):
        gn = float(np.linalg.norm(g))
        trace.append({"iter": it, "value": f, "grad_norm": gn, "step": step})
        if gn <= cfg.grad_tol:
            return report(CONVERGED, f, g, it, trace=trace)
        xn = float(np.linalg.norm(x))
        if xn > cfg.divergence_norm:
            return report(
                DIVERGED, f, g, it, f"iterate norm {xn:.4g} exceeded {cfg.divergence_norm:g}", trace
            )
        if it == cfg.max_iters:
            break

        if method == "newton":
            try:
                h = evaluate(spec, x, order=2)[2]
            except ObjectiveRangeError as exc:
                return report(RANGE_ERROR, f, g, it, str(exc), trace)
            d = _newton_direction(h, g)
            if not np.all(np.isfinite(d)) or g @ d >= 0:
                d = -g
        else:
            d = -g

        slope = float(g @ d)
        noise = 64 * np.finfo(float).eps * _value_scale(spec, x, f)
        step, accepted = 1.0, False
        # a Newton step can be astronomically long along flat rays; cap it
        dn = float(np.linalg.norm(d))
        cap = max(10.0, xn)
        if dn > cap:
            step = cap / dn
        while step * dn > 1e-16 * max(1.0, xn):
            xt = x + step * d
            try:
                ft, gt = evaluate(spec, xt, order=1)
            except ObjectiveRangeError:
                step *= 0.5
                continue
            if ft <= f + ARMIJO_C1 * step * slope and ft < f:
                accepted = True
                break
            # below rounding noise of f only the gradient still carries signal
            if abs(ft - f) <= noise and np.linalg.norm(gt) < 0.5 * gn:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            log.debug("line search failed at iter %d, grad norm %.3g", it, gn)
            return report(
                STALLED,
                f,
                g,
                it,
                f"line search could not decrease the objective (grad norm {gn:.3g})",
                trace,
            )
        x, f, g = xt, ft, gt

    return report(MAX_ITERS, f, g, cfg.max_iters, f"no convergence in {cfg.max_iters} iterations", trace)


def minimize_sequence(
    rho: DensityOperator,
    measure: MeasureApprox,
    orders: Sequence[int],
    cfg: SolverConfig | None = None,
) -> list[MinimizeReport]:
    """Binomial minimizers ``B_k`` for increasing ``k``, each warm-started
    from the previous one."""
    orders = [int(k) for k in orders]
    if any(b <= a for a, b in zip(orders, orders[1:])):
        raise ValueError(f"orders must be strictly increasing, got {orders}")
    cfg = cfg or SolverConfig()
    out = []
    init = cfg.initial
    for k in orders:
        spec = ObjectiveSpec(rho, measure, Form.binomial(k))
        rep = minimize(spec, replace(cfg, initial=init))
        out.append(rep)
        if rep.status in (CONVERGED, MAX_ITERS, STALLED):
            init = rep.minimizer
    return out
