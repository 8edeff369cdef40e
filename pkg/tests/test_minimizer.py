import numpy as np
import pytest

from sepcoord.linalg_core import DensityOperator, hs_norm
from sepcoord.minimizer import (
    CONVERGED,
    DIVERGED,
    MAX_ITERS,
    RANGE_ERROR,
    SolverConfig,
    minimize,
    minimize_sequence,
)
from sepcoord.objective import EXPONENTIAL, Form, ObjectiveSpec, evaluate
from sepcoord.product_measure import StateFamily, make_state, werner
from sepcoord.separability import reconstruct


def quadratic_oracle(rho, m):
    # G_1 is quadratic: grad = F^T w (1 + t/2) - r = 0  =>  (F^T W F / 2) x = r - F^T w
    f, w = m.features, m.weights
    a = (f.T * w) @ f / 2
    return np.linalg.solve(a, rho.real_vector() - f.T @ w)


class TestQuadraticOracle:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_k1_matches_linear_solve(self, mc22, seed):
        rho = make_state(StateFamily.ginibre(seed), (2, 2))
        rep = minimize(ObjectiveSpec(rho, mc22, Form.binomial(1)))
        assert rep.status == CONVERGED
        np.testing.assert_allclose(rep.minimizer.real_vector(), quadratic_oracle(rho, mc22), atol=1e-8)

    def test_maximally_mixed_zero(self, mc22):
        rho = DensityOperator.maximally_mixed((2, 2))
        for form in (Form.binomial(1), Form.binomial(4), EXPONENTIAL):
            rep = minimize(ObjectiveSpec(rho, mc22, form))
            assert rep.converged and rep.iters == 0
            assert rep.norm == 0


class TestStatuses:
    def test_gradient_method_agrees_with_newton(self, mc22):
        rho = werner(0.1)
        spec = ObjectiveSpec(rho, mc22, EXPONENTIAL)
        a = minimize(spec, SolverConfig(method="newton"))
        b = minimize(spec, SolverConfig(method="gradient", grad_tol=1e-7, max_iters=20000))
        assert a.converged and b.converged
        assert hs_norm(a.minimizer - b.minimizer) <= 1e-5

    def test_entangled_exponential_does_not_converge(self, mc22):
        rep = minimize(ObjectiveSpec(werner(1.0), mc22, EXPONENTIAL))
        assert rep.status in (DIVERGED, RANGE_ERROR)
        assert rep.message

    def test_max_iters(self, mc22):
        rep = minimize(ObjectiveSpec(werner(0.2), mc22, EXPONENTIAL), SolverConfig(method="gradient", max_iters=3))
        assert rep.status == MAX_ITERS and rep.iters == 3

    def test_warm_start_is_fast(self, mc22):
        spec = ObjectiveSpec(werner(0.2), mc22, EXPONENTIAL)
        cold = minimize(spec)
        warm = minimize(spec, SolverConfig(initial=cold.minimizer))
        assert warm.iters <= 1

    def test_trace_recorded(self, mc22):
        rep = minimize(ObjectiveSpec(werner(0.2), mc22, Form.binomial(2)))
        assert [row["iter"] for row in rep.trace] == list(range(rep.iters + 1))
        values = [row["value"] for row in rep.trace]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(grad_tol=0)
        with pytest.raises(ValueError):
            SolverConfig(method="bfgs")


class TestSequence:
    def test_orders_increasing(self, mc22):
        with pytest.raises(ValueError):
            minimize_sequence(werner(0.2), mc22, [2, 1])

    def test_separable_sequence_converges_to_exponential(self, mc22):
        rho = werner(0.2)
        reps = minimize_sequence(rho, mc22, [1, 2, 4, 8, 16, 32])
        assert all(r.converged for r in reps)
        exp = minimize(ObjectiveSpec(rho, mc22, EXPONENTIAL))
        dists = [hs_norm(r.minimizer - exp.minimizer) for r in reps]
        assert all(b < a for a, b in zip(dists, dists[1:]))

    def test_entangled_sequence_grows(self, mc22):
        # k=1 is excluded: its density 1 + t/2 may go negative, so B_1 can be large
        reps = minimize_sequence(werner(0.9), mc22, [2, 4, 8, 16])
        norms = [r.norm for r in reps]
        assert all(b > 1.15 * a for a, b in zip(norms, norms[1:]))

    @pytest.mark.parametrize("k", [1, 3, 8])
    def test_binomial_minimizer_reconstructs_state(self, mc22, k):
        rho = make_state(StateFamily.ginibre(5), (2, 2))
        rep = minimize(ObjectiveSpec(rho, mc22, Form.binomial(k)))
        assert rep.converged
        _, g = evaluate(ObjectiveSpec(rho, mc22, Form.binomial(k)), rep.minimizer.real_vector())
        assert np.linalg.norm(g) <= 1e-8
        assert hs_norm(reconstruct(rep.minimizer, mc22, Form.binomial(k)) - rho) <= 1e-8


def test_strictness_at_exponential_minimizer(mc22):
    rho = werner(0.25)
    spec = ObjectiveSpec(rho, mc22, EXPONENTIAL)
    rep = minimize(spec)
    assert rep.converged
    h = evaluate(spec, rep.minimizer.real_vector(), 2)[2]
    rng = np.random.default_rng(0)
    for _ in range(10):
        v = rng.standard_normal(16)
        v /= np.linalg.norm(v)
        assert v @ h @ v >= 1e-10


def _warm_cold_gaps(rho, measure, orders, tol):
    warm = minimize_sequence(rho, measure, orders, SolverConfig(grad_tol=tol))
    for k, rep in zip(orders, warm):
        spec = ObjectiveSpec(rho, measure, Form.binomial(k))
        cold = minimize(spec, SolverConfig(grad_tol=tol))
        lam = np.linalg.eigvalsh(evaluate(spec, cold.minimizer.real_vector(), 2)[2])[0]
        yield hs_norm(rep.minimizer - cold.minimizer), lam


def test_warm_and_cold_sequences_agree(mc22):
    tol = 1e-8
    for gap, _ in _warm_cold_gaps(werner(0.2), mc22, [1, 2, 4, 8], tol):
        assert gap <= 10 * tol


def test_warm_and_cold_agree_up_to_conditioning(mc22):
    # far-out minimizers of entangled states sit in flat valleys: two points with
    # gradient <= tol are only guaranteed to lie within 2 tol / lambda_min
    tol = 1e-8
    for gap, lam in _warm_cold_gaps(make_state(StateFamily.ginibre(8), (2, 2)), mc22, [1, 2, 4, 8], tol):
        assert gap <= 2 * tol / lam


def test_binomial_never_diverges(mc22):
    for p in (0.5, 0.9, 1.0):
        for rep in minimize_sequence(werner(p), mc22, [1, 2, 4, 8, 16, 32]):
            assert rep.status == CONVERGED
