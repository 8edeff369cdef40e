"""Embedded self-check suite run by ``sepcoord selftest``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .husimi_map import from_coordinates, to_coordinates
from .linalg_core import (
    HermitianOperator,
    hs_norm,
    multipolarize,
    quadratic_form,
    random_hermitian,
    random_product_projector,
    traceless_part,
)
from .objective import EXPONENTIAL, Form, ObjectiveSpec, evaluate
from .product_measure import StateFamily, design_quadrature, make_state, sample_haar, werner
from .separability import ENTANGLED, SEPARABLE, ClassifierConfig, MeasureSettings, classify, ppt_oracle


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": float(self.value),
            "tolerance": float(self.tolerance),
            "detail": self.detail,
        }


def _barycenter(seed: int) -> Check:
    m = design_quadrature((2,), 2, seed=seed)
    err = hs_norm(m.barycenter() - HermitianOperator(np.eye(2) / 2))
    return Check("barycenter (qubit 2-design)", err <= 1e-12, err, 1e-12)


def _gradient(seed: int) -> Check:
    rng = np.random.default_rng(seed)
    m = sample_haar((2, 2), 200, seed)
    rho = make_state(StateFamily.ginibre(seed), (2, 2))
    worst = 0.0
    for form in (EXPONENTIAL, Form.binomial(2)):
        spec = ObjectiveSpec(rho, m, form)
        x = rng.standard_normal(16) * 0.5
        _, g = evaluate(spec, x)
        h = 1e-5
        fd = np.array(
            [(evaluate(spec, x + h * e)[0] - evaluate(spec, x - h * e)[0]) / (2 * h) for e in np.eye(16)]
        )
        worst = max(worst, float(np.linalg.norm(fd - g) / np.linalg.norm(g)))
    return Check("gradient vs central differences", worst <= 1e-5, worst, 1e-5)


def _polarization(seed: int) -> Check:
    rng = np.random.default_rng(seed)
    dims = (2, 2)
    y = random_hermitian(dims, rng)
    q = quadratic_form(y)
    e = random_product_projector(dims, rng).vectors
    f = random_product_projector(dims, rng).vectors
    direct = np.kron(*e).conj() @ y.matrix @ np.kron(*f)
    err = abs(multipolarize(q, e, f) - direct)
    return Check("multipolarization identity", err <= 1e-9, float(err), 1e-9)


def _round_trip(seed: int) -> Check:
    rng = np.random.default_rng(seed)
    m = sample_haar((2, 2), 500, seed, balanced=True)
    b0 = traceless_part(random_hermitian((2, 2), rng))
    b0 = b0 * (1.5 / hs_norm(b0))
    rho = from_coordinates(b0, m)
    err = hs_norm(to_coordinates(rho, m).b - b0)
    return Check("coordinate round trip", err <= 1e-5, err, 1e-5)


def _werner(seed: int) -> Check:
    cfg = ClassifierConfig(measure=MeasureSettings(seed=seed))
    wrong = []
    for p in (0.1, 0.6):
        c = classify(werner(p), cfg)
        expected = SEPARABLE if ppt_oracle(werner(p)).is_ppt else ENTANGLED
        if c.verdict != expected:
            wrong.append(f"p={p}: {c.verdict}")
    return Check("Werner threshold vs PPT", not wrong, float(len(wrong)), 0.0, "; ".join(wrong))


CHECKS = (_barycenter, _gradient, _polarization, _round_trip, _werner)


def run_checks(seed: int = 0) -> list[Check]:
    return [check(seed) for check in CHECKS]


def format_table(checks: list[Check]) -> str:
    lines = [f"{'check':<36} {'result':<6} {'value':>12} {'tol':>8}"]
    for c in checks:
        lines.append(f"{c.name:<36} {'PASS' if c.passed else 'FAIL':<6} {c.value:>12.3e} {c.tolerance:>8.1e}")
    return "\n".join(lines)
