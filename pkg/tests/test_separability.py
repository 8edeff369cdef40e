import numpy as np
import pytest

from sepcoord.linalg_core import (
    DensityOperator,
    DimensionError,
    HermitianOperator,
    embed,
    hs_norm,
    random_hermitian,
    random_product_projector,
)
from sepcoord.minimizer import SolverConfig, minimize_sequence
from sepcoord.objective import Form
from sepcoord.product_measure import StateFamily, make_state, sample_haar, werner
from sepcoord.separability import (
    ENTANGLED,
    INCONCLUSIVE,
    NPT,
    PPT,
    SEPARABLE,
    ClassifierConfig,
    MeasureSettings,
    classify,
    extract_witness,
    max_product_expectation,
    ppt_oracle,
    reconstruct,
    verify_witness,
)


class TestPPT:
    @pytest.mark.parametrize("p,status", [(0.0, PPT), (0.3, PPT), (1 / 3 - 1e-6, PPT), (0.34, NPT), (1.0, NPT)])
    def test_werner_threshold(self, p, status):
        assert ppt_oracle(werner(p)).status == status

    def test_werner_min_eigenvalue(self):
        # spectrum of the partial transpose: (1 - 3p)/4 once, (1 + p)/4 three times
        for p in (0.2, 0.7):
            assert ppt_oracle(werner(p)).min_eigenvalue == pytest.approx((1 - 3 * p) / 4, abs=1e-14)

    def test_needs_two_factors(self):
        with pytest.raises(DimensionError):
            ppt_oracle(DensityOperator.maximally_mixed((2, 2, 2)))


class TestProductMaximization:
    def test_finds_product_eigenvector(self, rng):
        # X = projector onto a product vector: maximum over products is 1
        p = random_product_projector((2, 3), rng)
        starts = [[rng.standard_normal(d) + 1j * rng.standard_normal(d) for d in (2, 3)] for _ in range(3)]
        val, vecs = max_product_expectation(embed(p), starts)
        assert val == pytest.approx(1, abs=1e-10)

    def test_singlet_projector(self, rng):
        # max over products of <ab|psi-><psi-|ab> is 1/2
        x = HermitianOperator(werner(1.0).matrix, (2, 2))
        starts = [[rng.standard_normal(2) + 0j, rng.standard_normal(2) + 0j] for _ in range(4)]
        val, _ = max_product_expectation(x, starts)
        assert val == pytest.approx(0.5, abs=1e-10)

    def test_lower_bounds_operator_norm(self, rng):
        x = random_hermitian((2, 2, 2), rng)
        starts = [[rng.standard_normal(2) + 0j for _ in range(3)] for _ in range(4)]
        val, vecs = max_product_expectation(x, starts)
        assert val <= x.eigvalsh()[-1] + 1e-12
        v = np.kron(np.kron(vecs[0], vecs[1]), vecs[2])
        assert val == pytest.approx((v.conj() @ x.matrix @ v).real, abs=1e-10)


class TestReconstruct:
    def test_zero_gives_barycenter(self, mc22):
        b = HermitianOperator.zeros((2, 2))
        for form in (None, Form.binomial(3)):
            r = reconstruct(b, mc22) if form is None else reconstruct(b, mc22, form)
            np.testing.assert_allclose(r.matrix, mc22.barycenter().matrix, atol=1e-13)

    def test_positive_for_exponential(self, mc22, rng):
        r = reconstruct(random_hermitian((2, 2), rng, scale=2), mc22)
        assert r.eigvalsh()[0] > 0


class TestWitness:
    @pytest.mark.parametrize("p", [1.0, 0.8])
    def test_certified(self, mc22, p):
        rho = werner(p)
        reps = minimize_sequence(rho, mc22, [1, 2, 4, 8, 16, 32])
        w = extract_witness(rho, reps, mc22)
        assert w.certified
        assert w.gap >= 0.05
        assert hs_norm(w.direction) == pytest.approx(1)
        assert verify_witness(w, rho, sample_haar((2, 2), 2000, 99))

    def test_witness_nonnegative_on_separable_samples(self, mc22):
        # a certified witness separates rho from every product point and so from their hull
        rho = werner(1.0)
        w = extract_witness(rho, minimize_sequence(rho, mc22, [1, 2, 4, 8]), mc22)
        sep = make_state(StateFamily.pure_product(3), (2, 2))
        assert sep.inner(w.direction) <= w.margin_products + 1e-12

    def test_needs_nonzero_iterate(self, mc22):
        reps = minimize_sequence(DensityOperator.maximally_mixed((2, 2)), mc22, [1])
        with pytest.raises(ValueError):
            extract_witness(DensityOperator.maximally_mixed((2, 2)), reps, mc22)


class TestClassify:
    @pytest.mark.parametrize("p", [0.0, 0.1, 0.25])
    def test_separable(self, mc22, p):
        c = classify(werner(p), measure=mc22)
        assert c.verdict == SEPARABLE
        assert c.reconstruction_error <= 1e-6
        assert c.limit_point is not None and c.witness is None

    @pytest.mark.parametrize("p", [0.5, 0.9, 1.0])
    def test_entangled(self, mc22, p):
        c = classify(werner(p), measure=mc22)
        assert c.verdict == ENTANGLED
        assert c.witness.certified and c.limit_point is None

    def test_product_state_with_design_measure(self):
        # a pure product state is on the boundary; G has no minimizer
        rho = make_state(StateFamily.pure_product(1), (2, 2))
        c = classify(rho, ClassifierConfig(orders=(1, 2, 4)))
        assert c.verdict != ENTANGLED

    def test_report_fields(self, mc22):
        c = classify(werner(0.9), measure=mc22)
        d = c.to_dict()
        assert d["verdict"] == ENTANGLED
        assert [row["k"] for row in d["bk_norms"]] == [1, 2, 4, 8, 16, 32]
        assert d["witness"]["certified"]

    def test_inconclusive_when_budget_too_small(self, mc22):
        # nothing converges, nothing crosses the bound: no grounds for either verdict
        cfg = ClassifierConfig(orders=(1, 2, 4), bound_threshold=1e6, solver=SolverConfig(max_iters=3))
        c = classify(werner(0.36), cfg, measure=mc22)
        assert c.verdict == INCONCLUSIVE
        assert "still growing" in c.notes
        assert len(c.bk_norms) == 3

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ClassifierConfig(orders=(1, 2))
        with pytest.raises(ValueError):
            MeasureSettings(kind="grid").build((2, 2))


class TestClassifierExamples:
    def test_maximally_mixed(self, mc22):
        c = classify(DensityOperator.maximally_mixed((2, 2)), measure=mc22)
        assert c.verdict == SEPARABLE
        assert hs_norm(c.limit_point) <= 1e-12

    def test_werner_015_reconstruction(self, mc22):
        rho = werner(0.15)
        c = classify(rho, measure=mc22)
        assert c.verdict == SEPARABLE
        assert hs_norm(reconstruct(c.limit_point, mc22) - rho) <= 1e-6

    def test_singlet_gap(self, mc22):
        c = classify(werner(1.0), measure=mc22)
        assert c.witness.gap >= 0.2

    def test_separable_input_not_certified(self, mc22):
        # no hyperplane separates a separable state from the product points
        rho = werner(0.2)
        reps = minimize_sequence(rho, mc22, [1, 2, 4, 8])
        w = extract_witness(rho, reps, mc22)
        assert not w.certified

    def test_binomial_reconstructs_entangled_state(self, mc22):
        from sepcoord.minimizer import minimize
        from sepcoord.objective import ObjectiveSpec

        rho = werner(1.0)
        rep = minimize(ObjectiveSpec(rho, mc22, Form.binomial(4)))
        assert hs_norm(reconstruct(rep.minimizer, mc22, Form.binomial(4)) - rho) <= 1e-6

    def test_converged_solves_reconstruct_within_gradient_tolerance(self, mc22):
        # reconstruction minus rho is exactly the gradient
        from sepcoord.minimizer import minimize
        from sepcoord.objective import EXPONENTIAL, ObjectiveSpec

        tol = SolverConfig().grad_tol
        for rho in (werner(0.1), make_state(StateFamily.ginibre(2), (2, 2))):
            for form in (EXPONENTIAL, Form.binomial(2), Form.binomial(16)):
                rep = minimize(ObjectiveSpec(rho, mc22, form))
                if rep.converged:
                    assert hs_norm(reconstruct(rep.minimizer, mc22, form) - rho) <= 10 * tol

    def test_deterministic(self):
        a = classify(werner(0.3)).to_dict()
        b = classify(werner(0.3)).to_dict()
        assert a == b

    def test_ppt_examples(self):
        assert ppt_oracle(make_state(StateFamily.pure_product(0), (2, 3))).is_ppt
        r = ppt_oracle(DensityOperator.maximally_mixed((2, 2)))
        assert r.is_ppt and r.min_eigenvalue == pytest.approx(0.25)
