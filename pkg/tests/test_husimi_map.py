import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sepcoord.husimi_map import (
    DENSE_MAX_DIM,
    NotInteriorSeparable,
    diffeo_check,
    entropy_diagnostic,
    from_coordinates,
    gauge_fix,
    to_coordinates,
    traceless_basis,
)
from sepcoord.linalg_core import DimensionError, HermitianOperator, hs_norm, random_hermitian, scalar_direction, traceless_part
from sepcoord.product_measure import design_quadrature, sample_haar, werner


def random_traceless(rng, dims, norm):
    b = traceless_part(random_hermitian(dims, rng))
    return b * (norm / hs_norm(b))


class TestRoundTrip:
    def test_zero_is_maximally_mixed(self, mc22):
        rho = from_coordinates(HermitianOperator.zeros((2, 2)), mc22)
        np.testing.assert_allclose(rho.matrix, np.eye(4) / 4, atol=1e-13)
        assert hs_norm(to_coordinates(rho, mc22).b) <= 1e-10

    @pytest.mark.parametrize("norm", [0.3, 1.0, 2.0])
    def test_to_from(self, mc22, rng, norm):
        b0 = random_traceless(rng, (2, 2), norm)
        b = to_coordinates(from_coordinates(b0, mc22), mc22).b
        assert hs_norm(b - b0) <= 1e-6

    def test_from_to_werner(self, mc22):
        rho = werner(0.1)
        back = from_coordinates(to_coordinates(rho, mc22).b, mc22)
        assert hs_norm(back - rho) <= 1e-6

    def test_coordinates_are_traceless(self, mc22):
        assert abs(to_coordinates(werner(0.2), mc22).b.trace()) <= 1e-12

    def test_entangled_rejected(self, mc22):
        with pytest.raises(NotInteriorSeparable) as info:
            to_coordinates(werner(0.9), mc22)
        assert not info.value.report.converged

    def test_trace_gauge_warns(self, mc22, rng):
        b = random_traceless(rng, (2, 2), 1.0)
        with pytest.warns(UserWarning, match="trace"):
            shifted = from_coordinates(b.shift(0.5), mc22)
        np.testing.assert_allclose(shifted.matrix, from_coordinates(b, mc22).matrix, atol=1e-12)

    def test_qubit_chain(self):
        m = design_quadrature((2,), 8)
        b0 = HermitianOperator(np.diag([0.4, -0.4]))
        rho = from_coordinates(b0, m)
        # tr(bP) = a z with a = 0.4; the exp-tilted uniform Bloch measure has mean z = coth(a) - 1/a.
        # an 8-design integrates the tilt only approximately
        a = 0.4
        z_exact = 1 / np.tanh(a) - 1 / a
        assert (rho.matrix[0, 0] - rho.matrix[1, 1]).real == pytest.approx(z_exact, abs=1e-3)
        assert hs_norm(to_coordinates(rho, m).b - b0) <= 1e-8


class TestDiffeo:
    def test_qubit_value_at_origin(self):
        # d^2 W at 0 is the covariance of tr(V P); for tr(V^2) = 2 on a qubit this is 1/3
        m = design_quadrature((2,), 2)
        assert diffeo_check(HermitianOperator.zeros((2,)), m) == pytest.approx(1 / 3, abs=1e-12)

    def test_two_qubit_positive(self, mc22, rng):
        for _ in range(5):
            assert diffeo_check(random_traceless(rng, (2, 2), 2.0), mc22) > 0

    def test_traceless_basis(self):
        n = traceless_basis((2, 2))
        assert n.shape == (16, 15)
        np.testing.assert_allclose(n.T @ n, np.eye(15), atol=1e-12)
        assert np.abs(scalar_direction((2, 2)) @ n).max() <= 1e-12

    def test_dense_limit(self):
        m = sample_haar((DENSE_MAX_DIM + 1,), 5, 0)
        with pytest.raises(DimensionError):
            diffeo_check(HermitianOperator.zeros((DENSE_MAX_DIM + 1,)), m)


class TestEntropy:
    def test_zero_at_origin(self, mc22):
        assert entropy_diagnostic(HermitianOperator.zeros((2, 2)), mc22) == pytest.approx(0, abs=1e-14)

    def test_maximal_at_origin(self, mc22, rng):
        # minus the KL divergence of the tilted weights from the base weights
        vals = [entropy_diagnostic(random_traceless(rng, (2, 2), r), mc22) for r in (0.5, 1.0, 2.0)]
        assert all(v < 0 for v in vals)


def test_gauge_fix_idempotent(rng):
    x = random_hermitian((2, 3), rng)
    g = gauge_fix(x)
    np.testing.assert_allclose(gauge_fix(g).matrix, g.matrix, atol=1e-14)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.05, 2.0))
def test_round_trip_property(seed, norm):
    m = sample_haar((2, 2), 200, 3, balanced=True)
    b0 = random_traceless(np.random.default_rng(seed), (2, 2), norm)
    assert hs_norm(to_coordinates(from_coordinates(b0, m), m).b - b0) <= 1e-6


class TestExponentialFamilyIdentities:
    def test_entropy_identity(self, mc22, rng):
        from sepcoord.objective import chi, eval_W

        for _ in range(5):
            b = random_traceless(rng, (2, 2), 1.5)
            expected = eval_W(mc22, b) - b.inner(chi(mc22, b))
            assert entropy_diagnostic(b, mc22) == pytest.approx(expected, abs=1e-10)

    def test_entropy_scalar_shift(self, mc22):
        assert entropy_diagnostic(HermitianOperator.identity((2, 2)) * 0.8, mc22) == pytest.approx(0, abs=1e-13)

    def test_gauge_invariance(self, mc22, rng):
        from sepcoord.minimizer import SolverConfig

        # a raw minimizer carrying trace 0.7 must give the same coordinates
        tight = SolverConfig(grad_tol=1e-12)
        start = HermitianOperator.identity((2, 2)) * (0.7 / 4)
        for _ in range(5):
            rho = from_coordinates(random_traceless(rng, (2, 2), 1.0), mc22)
            plain = to_coordinates(rho, mc22, tight).b
            shifted = to_coordinates(rho, mc22, SolverConfig(grad_tol=1e-12, initial=start)).b
            assert hs_norm(plain - shifted) <= 1e-10

    def test_first_order_response(self, mc22, rng):
        from sepcoord.objective import hessian_W_apply

        b = random_traceless(rng, (2, 2), 1.0)
        v = random_traceless(rng, (2, 2), 1.0)
        eps = 1e-6
        fd = (from_coordinates(b + v * eps, mc22) - from_coordinates(b - v * eps, mc22)) / (2 * eps)
        assert hs_norm(fd - hessian_W_apply(mc22, b, v)) <= 1e-8

    def test_injectivity(self, mc22, rng):
        worst = np.inf
        for _ in range(50):
            b1 = random_traceless(rng, (2, 2), rng.uniform(0, 2))
            b2 = random_traceless(rng, (2, 2), rng.uniform(0, 2))
            if hs_norm(b1 - b2) < 0.1:
                continue
            worst = min(worst, hs_norm(from_coordinates(b1, mc22) - from_coordinates(b2, mc22)))
        assert worst >= 1e-8
