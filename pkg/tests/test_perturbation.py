"""Perturbation families: diffeomorphism certificates, conjugation oracles."""

import numpy as np
import pytest

from cartanlab.errors import WordTooLong
from cartanlab.perturbation import (
    TorusDiffeo,
    TrigPolynomial,
    commutation_residual,
    eval_diffeo,
    eval_diffeo_jacobian,
    invert_diffeo,
    make_conjugated_action,
    make_single_map_action,
)
from cartanlab.presets import C_MATRIX, DEFAULT_MODES
from cartanlab.torus import ToralAutomorphism
from cartanlab.util import torus_distance, wrap_half


class TestTorusDiffeo:
    def test_zero_epsilon_is_identity(self, diffeo_zero, random_points):
        assert np.allclose(eval_diffeo(diffeo_zero, random_points), random_points)
        jac = eval_diffeo_jacobian(diffeo_zero, random_points[0])
        assert np.array_equal(jac, np.eye(3))

    def test_default_derivative_bound(self, displacement):
        assert displacement.derivative_bound() == pytest.approx(1.0, abs=1e-12)

    def test_certificate_rejects_large_epsilon(self, displacement):
        with pytest.raises(ValueError):
            TorusDiffeo.from_displacement(displacement, 1.0)

    def test_jacobian_determinant_positive(self, diffeo, random_points):
        dets = np.linalg.det(diffeo.jacobian(random_points))
        assert np.all(dets > 0)
        assert np.min(dets) > (1.0 - diffeo.epsilon * diffeo.derivative_bound) ** 3

    def test_newton_round_trip(self, diffeo, random_points):
        fwd = diffeo.apply(random_points)
        back = invert_diffeo(diffeo, fwd)
        assert np.max(torus_distance(back, random_points)) < 1e-12

    def test_inverse_of_inverse(self, diffeo, random_points):
        inv = diffeo.invert(random_points)
        again = diffeo.apply(inv)
        assert np.max(torus_distance(again, random_points)) < 1e-12

    def test_contraction_fallback_agrees(self, diffeo, random_points):
        """Cross-check Newton inversion against the plain contraction solver."""
        y = random_points
        x = y.copy()
        for _ in range(200):
            x = y - diffeo.epsilon * diffeo.displacement(x)
        newton = diffeo.invert_lift(y)
        assert np.max(np.abs(newton - x)) < 1e-12

    def test_zero_epsilon_invert(self, diffeo_zero, random_points):
        assert np.allclose(invert_diffeo(diffeo_zero, random_points), random_points)

    def test_json_round_trip(self, diffeo):
        doc = diffeo.to_json_dict()
        back = TorusDiffeo.from_json_dict(doc)
        assert back.epsilon == diffeo.epsilon
        assert np.array_equal(back.displacement.freqs, diffeo.displacement.freqs)
        assert np.array_equal(back.displacement.sin_coef, diffeo.displacement.sin_coef)


class TestConjugatedAction:
    def test_zero_epsilon_reduces_to_linear(self, linear_action, random_points):
        c = np.array(C_MATRIX, dtype=float)
        out = linear_action.eval((1, 0), random_points)
        expected = (random_points @ c.T) % 1.0
        assert np.max(torus_distance(out, expected)) < 1e-13

    def test_generators_commute(self, conj_action):
        assert commutation_residual(conj_action, n_points=100) < 1e-10

    def test_oracle_equivariance(self, conj_action, random_points):
        """A h = h f exactly for h = phi^{-1} (definitional identity)."""
        f = conj_action.element_map((1, 0))
        a = f.linear.matrix.astype(float)
        lhs = conj_action.oracle_h_lift(random_points) @ a.T
        rhs = conj_action.oracle_h_lift(f.apply_lift(random_points))
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_telescoping(self, conj_action, diffeo, random_points):
        """evalAction equals phi(alpha0(m)(phi^{-1} x)) by telescoping."""
        m = (2, -1)
        elem = conj_action.element_map(m)
        lin = elem.linear.matrix.astype(float)
        expected = diffeo.apply_lift(diffeo.invert_lift(random_points) @ lin.T)
        got = elem.apply_lift(random_points)
        assert np.max(np.abs(got - expected)) < 1e-11

    def test_trivial_element_is_identity(self, conj_action, random_points):
        assert np.allclose(conj_action.eval((0, 0), random_points), random_points)

    def test_linear_jacobian(self, linear_action):
        jac = linear_action.eval_jacobian((1, 0), np.array([0.2, 0.4, 0.8]))
        assert np.max(np.abs(jac - np.array(C_MATRIX))) < 1e-12

    def test_homotopy_class(self, conj_action):
        """f(x + e_j) - f(x) = A e_j: the periodic part has no linear drift."""
        f = conj_action.element_map((1, 0))
        a = f.linear.matrix.astype(float)
        x = np.array([0.37, 0.91, 0.45])
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1.0
            drift = f.apply_lift(x + e) - f.apply_lift(x)
            assert np.max(np.abs(drift - a @ e)) < 1e-12

    def test_word_too_long(self, conj_action):
        with pytest.raises(WordTooLong):
            conj_action.element_map((30, 30))

    def test_jacobian_determinant_sign_constant(self, conj_action, random_points):
        """det D(alpha(m)) keeps the sign of det alpha0(m) and stays off zero."""
        for m in [(1, 0), (0, 1), (1, 1)]:
            elem = conj_action.element_map(m)
            dets = np.linalg.det(elem.jacobian(random_points))
            assert np.all(np.sign(dets) == elem.linear.det)
            assert np.min(np.abs(dets)) > 0.5

    def test_invariant_density_normalization(self, conj_action):
        rng = np.random.default_rng(0)
        g = conj_action.invariant_density(rng.random((2000, 3)))
        assert np.all(g > 0)
        assert abs(np.mean(g) - 1.0) < 5e-3  # MC sanity, exact check elsewhere


class TestSingleMap:
    def test_homotopy_exact(self):
        poly = TrigPolynomial.from_modes(
            [{"freq": [1, 0, 0], "sin": [0.0, 0.0, 0.01], "cos": [0.0, 0.0, 0.0]}], 3
        )
        auto = ToralAutomorphism.from_matrix(C_MATRIX)
        action = make_single_map_action(auto, poly)
        f = action.generators[0]
        x = np.array([0.2, 0.6, 0.9])
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1.0
            drift = f.apply_lift(x + e) - f.apply_lift(x)
            assert np.max(np.abs(drift - auto.matrix.astype(float) @ e)) < 1e-12

    def test_displacement_is_periodic_part(self):
        poly = TrigPolynomial.from_modes(
            [{"freq": [0, 1, 0], "sin": [0.02, 0.0, 0.0], "cos": [0.0, 0.0, 0.0]}], 3
        )
        auto = ToralAutomorphism.from_matrix(C_MATRIX)
        f = make_single_map_action(auto, poly).generators[0]
        x = np.random.default_rng(1).random((50, 3))
        assert np.max(np.abs(f.displacement(x) - poly(x))) < 1e-14
        assert np.max(np.abs(f.displacement(x) - f.displacement(x + 1.0))) < 1e-12

    def test_inverse_round_trip(self):
        poly = TrigPolynomial.from_modes(
            [{"freq": [1, 1, 0], "sin": [0.01, 0.0, 0.0], "cos": [0.0, 0.01, 0.0]}], 3
        )
        auto = ToralAutomorphism.from_matrix(C_MATRIX)
        f = make_single_map_action(auto, poly).generators[0]
        x = np.random.default_rng(2).random((50, 3))
        assert np.max(np.abs(f.apply_inv_lift(f.apply_lift(x)) - x)) < 1e-11

    def test_oracle_refused(self):
        poly = TrigPolynomial.from_modes([], 3)
        action = make_single_map_action(ToralAutomorphism.from_matrix(C_MATRIX), poly)
        with pytest.raises(ValueError):
            action.oracle_h(np.zeros(3))
