"""Weyl chambers: enumeration, property (C) witnesses, zero-sum elements."""

import numpy as np
import pytest

from cartanlab.errors import IncompleteEnumeration, MissingChamber
from cartanlab.torus import LyapunovSpectrum
from cartanlab.weyl import (
    enumerate_chambers,
    pattern_string,
    property_c_witnesses,
    sign_pattern,
    zero_sum_chamber_elements,
)


@pytest.fixture(scope="module")
def arrangement(base_action):
    return enumerate_chambers(base_action.spectrum, search_radius=5)


class TestSignPattern:
    def test_generator_one(self, base_action):
        assert sign_pattern(base_action.spectrum, [1, 0]) == (1, 1, -1)

    def test_origin_degenerate(self, base_action):
        assert sign_pattern(base_action.spectrum, [0, 0]) is None

    def test_generator_two(self, base_action):
        assert sign_pattern(base_action.spectrum, [0, 1]) == (1, -1, 1)

    def test_real_vector_input(self, base_action):
        assert sign_pattern(base_action.spectrum, [0.3, 0.1]) is not None


class TestEnumerateChambers:
    def test_exactly_six(self, arrangement):
        assert len(arrangement.chambers) == 6

    def test_constant_patterns_absent(self, arrangement):
        assert (1, 1, 1) not in arrangement.patterns
        assert (-1, -1, -1) not in arrangement.patterns

    def test_plus_plus_minus_representative(self, arrangement):
        rep = arrangement.chamber((1, 1, -1)).representative
        assert rep.tolist() == [1, 0]

    def test_patterns_validate(self, arrangement, base_action):
        for chamber in arrangement.chambers:
            got = sign_pattern(base_action.spectrum, chamber.representative)
            assert got == chamber.pattern

    def test_pattern_constant_inside_chamber(self, arrangement, base_action):
        """Perturbing a representative within its cone keeps the pattern."""
        rng = np.random.default_rng(5)
        for chamber in arrangement.chambers:
            rep = chamber.representative.astype(float)
            for _ in range(20):
                scale = 0.5 + 2.0 * rng.random()
                jitter = 0.05 * np.linalg.norm(rep) * (rng.random(2) - 0.5)
                assert (
                    sign_pattern(base_action.spectrum, scale * rep + jitter)
                    == chamber.pattern
                )

    def test_thin_chamber_needs_radius(self):
        """Nearly parallel kernel lines defeat a radius-1 scan."""
        coeffs = np.array([[1.0, 0.0], [-1.0, 0.02], [0.0, -0.02]])
        spec = LyapunovSpectrum(
            coefficients=coeffs, signs=np.ones_like(coeffs, dtype=np.int8)
        )
        with pytest.raises(IncompleteEnumeration):
            enumerate_chambers(spec, search_radius=1)
        arr = enumerate_chambers(spec, search_radius=60)
        assert len(arr.chambers) == 6

    def test_json_shape(self, arrangement):
        doc = arrangement.to_json_dict()
        assert {c["pattern"] for c in doc["chambers"]} == {
            pattern_string(p) for p in arrangement.patterns
        }


class TestPropertyC:
    def test_witnesses_for_all_indices(self, arrangement, base_action):
        witnesses = property_c_witnesses(arrangement)
        assert set(witnesses) == {1, 2, 3}
        for i, m in witnesses.items():
            chi = base_action.spectrum.chi(m.astype(float))
            assert chi[i - 1] < 0
            assert all(chi[j] > 0 for j in range(3) if j != i - 1)

    def test_expected_representatives(self, arrangement):
        witnesses = property_c_witnesses(arrangement)
        assert witnesses[3].tolist() == [1, 0]
        assert witnesses[2].tolist() == [0, 1]

    def test_missing_chamber_error(self, arrangement):
        with pytest.raises(MissingChamber):
            arrangement.chamber((1, 1, 1))


class TestZeroSum:
    def test_sum_vanishes(self, arrangement):
        elements = zero_sum_chamber_elements(arrangement)
        assert np.max(np.abs(np.sum(elements, axis=0))) < 1e-9

    def test_elements_stay_in_chambers(self, arrangement, base_action):
        for i, t in enumerate(zero_sum_chamber_elements(arrangement)):
            pat = sign_pattern(base_action.spectrum, t)
            assert pat == tuple(-1 if j == i else 1 for j in range(3))

    def test_cone_scaling(self, arrangement, base_action):
        for i, t in enumerate(zero_sum_chamber_elements(arrangement)):
            assert sign_pattern(base_action.spectrum, 2.0 * t) == sign_pattern(
                base_action.spectrum, t
            )
