"""Torus algebra: reduction, automorphisms, eigenstructure, Cartan assembly.

Expected eigenvalues are frozen from an independent bisection oracle on the
characteristic polynomials (see _bisect_roots below), not from the library
path under test.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cartanlab.errors import NonCommuting, NotCartanEligible, ProportionalExponents
from cartanlab.presets import B_MATRIX, C_MATRIX
from cartanlab.torus import (
    CartanAction,
    ToralAutomorphism,
    apply_automorphism,
    apply_automorphism_rational,
    build_cartan_action,
    char_poly,
    eigenstructure,
    integer_det,
    lyapunov_functional,
)
from cartanlab.util import reduce_point


def _bisect_roots(poly, lo=-4.0, hi=4.0, grid=20001, tol=1e-14):
    """Independent root oracle: sign scan + bisection, plain Python."""

    def p(x):
        acc = 0.0
        for c in poly:
            acc = acc * x + c
        return acc

    xs = np.linspace(lo, hi, grid)
    vals = [p(x) for x in xs]
    roots = []
    for a, b, fa, fb in zip(xs, xs[1:], vals, vals[1:]):
        if fa == 0.0:
            roots.append(a)
        if fa * fb < 0:
            while b - a > tol:
                mid = 0.5 * (a + b)
                if p(a) * p(mid) <= 0:
                    b = mid
                else:
                    a = mid
            roots.append(0.5 * (a + b))
    return sorted(roots)


# frozen from the oracle: roots of x^3 - 3x - 1 and x^3 - 3x + 1
C_EIGS = _bisect_roots([1, 0, -3, -1])     # [-1.53208..., -0.34729..., 1.87938...]
B_EIGS = _bisect_roots([1, 0, -3, 1])      # [-1.87938..., 0.34729..., 1.53208...]


class TestReduce:
    def test_identity_case(self):
        assert np.array_equal(reduce_point((0.0, 0.0, 0.0)), np.zeros(3))

    def test_fractional_part(self):
        out = reduce_point((1.25, -0.25, 3.0))
        assert np.allclose(out, [0.25, 0.75, 0.0], atol=0)

    @given(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3))
    @settings(max_examples=200, deadline=None)
    def test_idempotent(self, v):
        once = reduce_point(v)
        assert np.array_equal(reduce_point(once), once)
        assert np.all((once >= 0) & (once < 1))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            reduce_point((np.nan, 0.0, 0.0))


class TestApplyAutomorphism:
    def test_identity(self, random_points):
        ident = ToralAutomorphism.from_matrix(np.eye(3, dtype=int))
        assert np.allclose(apply_automorphism(ident, random_points), random_points)

    def test_rational_point(self):
        c = ToralAutomorphism.from_matrix(C_MATRIX)
        assert np.allclose(c.apply(np.array([0.5, 0.0, 0.0])), [0.0, 0.0, 0.5])
        nums, den = apply_automorphism_rational(c, (1, 0, 0), 2)
        assert (nums, den) == ((0, 0, 1), 2)

    def test_composition(self, random_points):
        a = ToralAutomorphism.from_matrix(C_MATRIX)
        b = ToralAutomorphism.from_matrix(B_MATRIX)
        ab = ToralAutomorphism.from_matrix(
            np.array(C_MATRIX) @ np.array(B_MATRIX)
        )
        direct = ab.apply(random_points)
        chained = a.apply(b.apply(random_points))
        assert np.max(np.abs(direct - chained)) < 1e-12

    def test_rational_denominator_cap(self):
        c = ToralAutomorphism.from_matrix(C_MATRIX)
        with pytest.raises(ValueError):
            apply_automorphism_rational(c, (1, 0, 0), 2**33)


class TestEigenstructure:
    def test_cubic_unit_eigenvalues(self):
        vals, vecs = eigenstructure(ToralAutomorphism.from_matrix(C_MATRIX))
        expected = sorted(C_EIGS, key=abs, reverse=True)
        assert np.allclose(vals, expected, atol=1e-12)
        a = np.array(C_MATRIX, dtype=float)
        for i in range(3):
            assert np.max(np.abs(a @ vecs[:, i] - vals[i] * vecs[:, i])) < 1e-10

    def test_identity_rejected(self):
        with pytest.raises(NotCartanEligible):
            eigenstructure(ToralAutomorphism.from_matrix(np.eye(3, dtype=int)))

    def test_modulus_product_is_one(self):
        vals, _ = eigenstructure(ToralAutomorphism.from_matrix(C_MATRIX))
        assert abs(np.prod(np.abs(vals)) - 1.0) < 1e-10

    def test_char_poly(self):
        assert char_poly(C_MATRIX) == [1, 0, -3, -1]
        assert char_poly(B_MATRIX) == [1, 0, -3, 1]


class TestBuildCartanAction:
    def test_preset_pair_valid(self, base_action):
        assert base_action.k == 2 and base_action.dim == 3
        assert integer_det(B_MATRIX) == -1  # cofactor-oracle value

    def test_power_pair_rejected(self):
        c2 = (np.array(C_MATRIX) @ np.array(C_MATRIX)).tolist()
        with pytest.raises(ProportionalExponents):
            build_cartan_action([C_MATRIX, c2])

    def test_inverse_pair_rejected(self):
        cinv = ToralAutomorphism.from_matrix(C_MATRIX).inverse().matrix.tolist()
        with pytest.raises(ProportionalExponents):
            build_cartan_action([C_MATRIX, cinv])

    def test_non_commuting_rejected(self):
        shear = [[1, 1, 0], [0, 1, 0], [0, 0, 1]]
        with pytest.raises(NonCommuting):
            build_cartan_action([C_MATRIX, shear])

    def test_eigenvalue_consistency_on_box(self, base_action):
        """Eigenvalues of alpha0(m) match the product formula to 1e-8 relative."""
        spec = base_action.spectrum
        for m1 in range(-3, 4):
            for m2 in range(-3, 4):
                if m1 == m2 == 0:
                    continue
                elem = base_action.element((m1, m2))
                vals, _ = eigenstructure(elem)
                formula = sorted(
                    (spec.eigenvalue_of_element(i, (m1, m2)) for i in range(3)),
                    key=abs, reverse=True,
                )
                rel = np.abs(vals - np.array(formula)) / np.abs(vals)
                assert np.max(rel) < 1e-8

    def test_json_round_trip(self, base_action):
        doc = base_action.to_json_dict()
        rebuilt = CartanAction.from_json_dict(doc)
        assert np.allclose(
            rebuilt.spectrum.coefficients, base_action.spectrum.coefficients,
            atol=1e-14,
        )
        assert doc["generators"] == [C_MATRIX, B_MATRIX]


class TestLyapunovFunctionals:
    def test_values_at_generators(self, base_action):
        """chi rows are logs of the oracle eigenvalue moduli, matched by basis."""
        chi_c = base_action.spectrum.chi([1, 0])
        chi_b = base_action.spectrum.chi([0, 1])
        logs_c = sorted(np.log(np.abs(C_EIGS)), reverse=True)
        assert np.allclose(sorted(chi_c, reverse=True), logs_c, atol=1e-12)
        # pairing through the shared eigenbasis: theta and 2*theta branches
        assert np.allclose(chi_c, [0.6309447242020460, 0.4266320893728889, -1.0575768135749350],
                           atol=1e-9)
        assert np.allclose(chi_b, [0.4266320893728889, -1.0575768135749350, 0.6309447242020460],
                           atol=1e-9)

    def test_one_based_index_contract(self, base_action):
        assert lyapunov_functional(base_action, 1, [1, 0]) == pytest.approx(
            0.6309447242020460, abs=1e-12
        )
        with pytest.raises(ValueError):
            lyapunov_functional(base_action, 0, [1, 0])

    @given(
        st.tuples(st.integers(-20, 20), st.integers(-20, 20)),
        st.tuples(st.integers(-20, 20), st.integers(-20, 20)),
    )
    @settings(max_examples=100, deadline=None)
    def test_additivity_and_zero_sum(self, base_action, m, mp):
        spec = base_action.spectrum
        total = spec.chi(np.add(m, mp)) - spec.chi(m) - spec.chi(mp)
        assert np.max(np.abs(total)) < 1e-12
        assert abs(np.sum(spec.chi(m))) < 1e-12

    def test_integer_element_matches_log_modulus(self, base_action):
        """chi_i(m) = log|rho_i(alpha0(m))| for lattice m, to 1e-10."""
        spec = base_action.spectrum
        for m in [(1, 0), (0, 1), (2, -1), (-1, 3)]:
            vals, _ = eigenstructure(base_action.element(m))
            assert np.allclose(
                sorted(spec.chi(m), reverse=True),
                sorted(np.log(np.abs(vals)), reverse=True),
                atol=1e-10,
            )
