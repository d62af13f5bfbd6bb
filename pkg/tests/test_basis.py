import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdifflab import basis as bs
from sdifflab import spectral as sp

seeds = st.integers(0, 2**32 - 1)
fast = settings(max_examples=15, deadline=None)
VOL2 = (2 * np.pi) ** 2


@pytest.fixture(scope="module")
def Q1():
    return bs.build_basis(2, 1)


@pytest.fixture(scope="module")
def Q2():
    return bs.build_basis(2, 2)


class TestBuild:
    def test_enumeration_d2_k1(self, Q1):
        lines = {e.k for e in Q1 if e.parity != bs.CONST}
        assert lines == {(1, 0), (0, 1), (1, 1), (1, -1)}
        assert Q1.direction_count == 4
        assert sum(e.parity != bs.CONST for e in Q1) == 8
        assert sum(e.parity == bs.CONST for e in Q1) == 2

    @pytest.mark.parametrize("d,K", [(2, 1), (2, 3), (3, 1)])
    def test_element_count(self, d, K):
        # canonical lines times (d - 1) polarisations times two parities, plus d constants
        lines = ((2 * K + 1) ** d - 1) // 2
        assert len(bs.build_basis(d, K)) == lines * (d - 1) * 2 + d

    def test_one_dimension_is_degenerate(self):
        Q = bs.build_basis(1, 3)
        assert Q.degenerate
        assert all(e.parity == bs.CONST for e in Q)

    def test_errors(self):
        with pytest.raises(ValueError):
            bs.build_basis(2, 0)
        with pytest.raises(ValueError):
            bs.build_basis(2, 1, profile="bumpy")

    def test_flat_weights_without_constants(self):
        # equal weights over N lines: c^2 * 2 / vol = 2 / N reproduces the identity
        Q = bs.build_basis(2, 2, include_constants=False)
        N = Q.direction_count
        assert np.allclose(Q.amplitude_weights, 2 / N)
        assert np.allclose(Q.certificate(), np.eye(2), atol=1e-14)

    def test_flat_weights_with_constants(self, Q1):
        # lines contribute (N / vol) I and constants I / vol, so c^2 = vol / (N + 1)
        assert np.allclose(Q1.weights**2, VOL2 / 5)
        assert np.allclose(Q1.amplitude_weights[[e.parity != bs.CONST for e in Q1]], 2 / 5)

    @pytest.mark.parametrize("d,K,profile", [(2, 1, "flat"), (2, 3, "decay"), (3, 1, "flat"), (3, 2, "decay")])
    def test_certificate(self, d, K, profile):
        Q = bs.build_basis(d, K, profile, s=1.5)
        assert np.allclose(Q.certificate(), np.eye(d), atol=1e-13)
        assert Q.is_paired()

    def test_elements_orthonormal_and_div_free(self, Q2):
        fields = [e.field for e in Q2]
        G = np.array([[sp.l2_inner(a, b) for b in fields] for a in fields])
        assert np.allclose(G, np.eye(len(fields)), atol=1e-13)
        assert bs.divergence_of_elements(Q2) == 0.0
        for e in Q2:
            if e.parity != bs.CONST:
                i = e.field.modes.index(e.k)
                vec = e.field.cos[:, i] + e.field.sin[:, i]
                assert abs(vec @ np.array(e.k)) < 1e-15

    def test_ordering(self, Q2):
        keys = [(sum(c * c for c in e.k), e.k, e.j, e.parity != "sin") for e in Q2]
        norms = [k[0] for k in keys]
        assert norms == sorted(norms)

    def test_json_round_trip(self, Q1):
        R = bs.QSpectrum.loads(Q1.dumps())
        assert len(R) == len(Q1)
        assert np.allclose(R.weights, Q1.weights)
        assert [e.mode for e in R] == [e.mode for e in Q1]
        rec = Q1.to_dict()["entries"][0]
        assert set(rec) >= {"k", "parity", "j", "c_k"}


class TestMetric:
    @pytest.mark.parametrize("v,expected", [((1.0, 0.0), 1.0), ((0.0, 0.0), 0.0), ((1.0, 1.0), 2.0)])
    def test_examples(self, Q1, v, expected):
        for x in ([0.0, 0.0], [0.7, 2.9], [5.0, 1.0]):
            assert bs.check_pointwise_metric(Q1, v, x) == pytest.approx(expected, abs=1e-13)

    @fast
    @given(seeds)
    def test_equals_norm(self, seed):
        rng = np.random.default_rng(seed)
        Q = bs.build_basis(2, 2, "decay")
        v, x = rng.standard_normal(2), rng.uniform(0, 2 * np.pi, 2)
        assert bs.check_pointwise_metric(Q, v, x) == pytest.approx(v @ v, rel=1e-12, abs=1e-14)

    def test_metric_tensor_is_identity(self):
        Q = bs.build_basis(3, 1)
        assert np.allclose(Q.metric_tensor([0.3, 1.0, 2.0]), np.eye(3), atol=1e-13)


class TestIdentities:
    def test_self_advection_vanishes(self, Q1):
        assert bs.sum_self_advection(Q1).max_abs_coeff() < 1e-15

    def test_empty_spectrum(self, Q1):
        empty = Q1.restricted(lambda e: False)
        assert bs.sum_self_advection(empty).max_abs_coeff() == 0.0

    def test_single_elements_vanish_termwise(self, Q1):
        # a shear element is constant along its own direction and A ^ grad_X A is
        # proportional to e ^ e, so removing partners leaves both sums at zero
        half = Q1.restricted(lambda e: e.parity != "sin")
        X = sp.random_vector(np.random.default_rng(0), 2, 1)
        assert bs.sum_self_advection(half).max_abs_coeff() < 1e-15
        assert bs.sum_wedge(half, X).max_abs_coeff() < 1e-15

    def test_negative_control_taylor_green_element(self):
        tg = sp.taylor_green_field(1) / np.sqrt(sp.l2_inner(sp.taylor_green_field(1), sp.taylor_green_field(1)))
        fake = bs.QSpectrum(2, 1, [bs.BasisElement((1, 1), "sin", 1, tg, 1.0)], 1)
        X = sp.vector_field(2, 3, [((1, 0), "cos", 0, 1.0)])
        assert bs.sum_self_advection(fake).max_abs_coeff() > 1e-3
        assert bs.sum_wedge(fake, X).max_abs_coeff() > 1e-3

    def test_wedge_zero(self, Q2):
        X = sp.random_vector(np.random.default_rng(1), 2, 2)
        assert bs.sum_wedge(Q2, X).max_abs_coeff() < 1e-14
        assert bs.sum_wedge(Q2, sp.VectorField.zeros(2, 2)).max_abs_coeff() == 0.0

    @pytest.mark.parametrize(
        "terms,factor",
        [([((1, 0), "cos", 1.0)], -1.0), ([((1, 1), "cos", 1.0)], -2.0), ([((0, 0), "cos", 3.0)], 0.0)],
    )
    def test_generator_examples(self, Q1, terms, factor):
        f = sp.scalar_field(2, 3, terms)
        g = bs.generator_sum(Q1, f)
        expected = factor * f if factor else sp.ScalarField.zeros(2, 3)
        assert (g - expected).max_abs_coeff() < 1e-13

    @fast
    @given(seeds)
    def test_generator_is_laplacian_for_decay_profile(self, seed):
        Q = bs.build_basis(2, 2, "decay", s=2.0)
        f = sp.retruncate(sp.random_scalar(np.random.default_rng(seed), 2, 2), 4)
        assert (bs.generator_sum(Q, f) - sp.laplacian(f)).max_abs_coeff() < 1e-12

    def test_lie_hodge_taylor_green(self, Q1):
        tg = sp.taylor_green_field(2)
        assert (bs.lie_hodge(Q1, tg) - 2 * tg).max_abs_coeff() < 1e-14

    def test_lie_hodge_constant(self, Q1):
        c = sp.constant(2, 2, [1.0, -2.0])
        assert bs.lie_hodge(Q1, c).max_abs_coeff() < 1e-15

    @fast
    @given(seeds)
    def test_lie_hodge_random(self, seed):
        Q = bs.build_basis(2, 2)
        u = sp.retruncate(sp.random_div_free(np.random.default_rng(seed), 2, 2, 1.0, 1.0), 6)
        assert (bs.lie_hodge(Q, u) - sp.hodge_laplacian(u)).max_abs_coeff() < 1e-12

    def test_working_truncation_below_basis(self, Q2):
        with pytest.raises(ValueError):
            bs.lie_hodge(Q2, sp.VectorField.zeros(2, 1))


class TestGradients:
    @pytest.mark.parametrize(
        "terms", [[((1, 0), "cos", 1.0)], [], [((1, 1), "cos", 0.5), ((1, -1), "cos", 0.5)]]
    )
    def test_integral_potential_has_zero_gradient(self, Q2, terms):
        V = sp.scalar_field(2, 2, terms)
        assert bs.sdiff_gradient_integral(Q2, V).max_abs_coeff() < 1e-12

    def test_dirac_pairing(self):
        g = sp.random_scalar(np.random.default_rng(2), 2, 3)
        x = np.array([0.4, 2.2])
        delta = bs.dirac_mass(x, 2, 3)
        assert sp.l2_inner(delta, g) == pytest.approx(VOL2 * sp.evaluate(g, x), rel=1e-12)

    def test_directional_derivative_oracle(self, Q2):
        P = bs.CylinderPotential.linear([[0.4, 1.3]], [[1.0, 0.5]])
        grad = bs.sdiff_gradient_cylinder(Q2, P)
        assert grad.div_free
        for e in list(Q2)[:6]:
            exact = float(np.array([1.0, 0.5]) @ sp.evaluate(e.field, [0.4, 1.3]))
            assert sp.l2_inner(grad, e.field) == pytest.approx(exact, abs=1e-13)
            assert bs.directional_derivative_fd(P, e.field, 1e-4) == pytest.approx(exact, abs=1e-4)

    def test_first_order_in_eps(self, Q2):
        rng = np.random.default_rng(5)
        P = bs.CylinderPotential.separable(rng.uniform(0, 6, (2, 2)), [sp.random_scalar(rng, 2, 2) for _ in range(2)])
        grad = bs.sdiff_gradient_cylinder(Q2, P)
        e = [el for el in Q2 if el.parity != bs.CONST][3]
        errs = [abs(sp.l2_inner(grad, e.field) - bs.directional_derivative_fd(P, e.field, h)) for h in (0.04, 0.02, 0.01)]
        assert 0.8 < np.log2(errs[0] / errs[1]) < 1.2
        assert 0.8 < np.log2(errs[1] / errs[2]) < 1.2

    def test_symmetric_cancellation_and_constant(self, Q2):
        sym = bs.CylinderPotential.linear([[1.0, 2.0], [1.0, 2.0]], [[0.5, -0.3], [-0.5, 0.3]])
        assert bs.sdiff_gradient_cylinder(Q2, sym).max_abs_coeff() < 1e-15
        flat = bs.CylinderPotential.linear([[1.0, 2.0]], [[0.0, 0.0]])
        assert bs.sdiff_gradient_cylinder(Q2, flat).max_abs_coeff() == 0.0

    def test_gradient_evaluators_match_finite_differences(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(0, 6, (2, 2))
        P = bs.CylinderPotential.separable(pts, [sp.random_scalar(rng, 2, 2) for _ in range(2)])
        g = P.gradients(pts)
        h = 1e-6
        for i, a in itertools.product(range(2), range(2)):
            y = pts.copy()
            y[i, a] += h
            assert (P.value(y) - P.value(pts)) / h == pytest.approx(g[i, a], abs=1e-4)


class TestNoise:
    def test_trace(self, Q1):
        assert bs.q_trace(Q1) == pytest.approx(10 * VOL2 / 5)

    def test_zero_and_single(self, Q1):
        assert bs.qsqrt_expand(Q1, np.zeros(len(Q1))).max_abs_coeff() == 0.0
        one = Q1.restricted(lambda e: e.k == (1, 0) and e.parity == "cos")
        w = bs.qsqrt_expand(one, [1.0])
        assert (w - one.entries[0].weight * one.entries[0].field).max_abs_coeff() == 0.0
        with pytest.raises(ValueError):
            bs.qsqrt_expand(Q1, [1.0])

    def test_mean_square_norm(self, Q1):
        rng = np.random.default_rng(7)
        n = 100_000
        xi = rng.standard_normal((n, len(Q1)))
        # orthonormal elements: |sum c_i xi_i A_i|^2 = sum c_i^2 xi_i^2; spot-check the expansion itself
        for row in xi[:20]:
            w = bs.qsqrt_expand(Q1, row)
            assert sp.l2_inner(w, w) == pytest.approx(float((Q1.weights**2 * row**2).sum()), rel=1e-12)
        sq = (Q1.weights**2 * xi**2).sum(axis=1)
        assert abs(sq.mean() - bs.q_trace(Q1)) <= 3 * sq.std() / np.sqrt(n)
