"""Named experiment presets.

"cubic-2cos-pi-9": the companion matrix C of x^3 - 3x - 1 (eigenvalues
2cos(pi/9), 2cos(7pi/9), 2cos(13pi/9)) together with B = C^2 - 2I
(eigenvalues 2cos(2 theta), a unit of the same cubic field), a rank-2 Cartan
action on T^3, perturbed by the single-harmonic rotation-symmetric
displacement v(x) = (sin 2pi x2, sin 2pi x3, sin 2pi x1) / 2pi at eps = 0.05.
"""

from __future__ import annotations

import copy
import math

from .config import ExperimentConfig
from .errors import UnknownPreset

C_MATRIX = [[0, 1, 0], [0, 0, 1], [1, 3, 0]]
B_MATRIX = [[-2, 0, 1], [1, 1, 0], [0, 1, 1]]  # C^2 - 2I

_AMP = 1.0 / (2.0 * math.pi)

DEFAULT_MODES = [
    {"freq": [0, 1, 0], "cos": [0.0, 0.0, 0.0], "sin": [_AMP, 0.0, 0.0]},
    {"freq": [0, 0, 1], "cos": [0.0, 0.0, 0.0], "sin": [0.0, _AMP, 0.0]},
    {"freq": [1, 0, 0], "cos": [0.0, 0.0, 0.0], "sin": [0.0, 0.0, _AMP]},
]

DEFAULT_TOLERANCES = {
    "exponent_match": 1e-3,
    "exponent_sum": 1e-3,
    "pesin_gap": 2e-3,
    "equivariance": 1e-6,
    "second_generator": 1e-5,
    "oracle_distance": 5e-5,
    "chart_residual": 1e-6,
    "affinity": 1e-5,
    "slope_match": 1e-6,
    "leaf_inclusion_factor": 10.0,
    "fiber_delta": 1e-3,
}

_PRESETS = {
    "cubic-2cos-pi-9": {
        "action": {"preset": "cubic-2cos-pi-9", "generators": [C_MATRIX, B_MATRIX],
                   "box_radius": 3},
        "perturbation": {"epsilon": 0.05, "modes": DEFAULT_MODES},
        "solver": {"grid_n": 64, "tol": 1e-6, "interpolation": "cubic"},
        "analysis": {
            "orbit_steps": 10**6,
            "trials": 16,
            "sign_check_steps": 10**5,
            "sign_check_trials": 8,
            "leaves": 10,
            "leaf_radius": 0.1,
            "leaf_step": 1e-3,
            "direction_depth": 60,
            "exponent_elements": [[1, 0], [0, 1], [1, 1]],
            "fiber_targets": 20,
            "tolerances": dict(DEFAULT_TOLERANCES),
        },
        "weyl": {"search_radius": 5, "degeneracy_cutoff": 1e-9},
    }
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset(name: str) -> ExperimentConfig:
    """Full ExperimentConfig of a named preset."""
    if name not in _PRESETS:
        raise UnknownPreset(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        )
    return ExperimentConfig.from_dict(copy.deepcopy(_PRESETS[name]))


def resolve_defaults(action_section: dict) -> dict:
    """Default config dict for a config that names a preset (else generic)."""
    name = action_section.get("preset")
    if name is not None:
        if name not in _PRESETS:
            raise UnknownPreset(
                f"unknown preset {name!r}; available: {', '.join(preset_names())}"
            )
        return copy.deepcopy(_PRESETS[name])
    generic = copy.deepcopy(_PRESETS["cubic-2cos-pi-9"])
    del generic["action"]
    return generic


def build_from_config(config: ExperimentConfig):
    """(CartanAction, TorusDiffeo, PerturbedAction) from a validated config."""
    from .perturbation import TorusDiffeo, TrigPolynomial, make_conjugated_action
    from .torus import build_cartan_action

    action_cfg = config.section("action")
    gens = action_cfg.get("generators")
    if gens is None:
        gens = [C_MATRIX, B_MATRIX]
    base = build_cartan_action(gens, box_radius=action_cfg.get("box_radius", 3))
    pert = config.section("perturbation")
    modes = pert.get("modes", DEFAULT_MODES)
    dim = base.dim
    poly = TrigPolynomial.from_modes(modes, dim)
    diffeo = TorusDiffeo.from_displacement(poly, pert.get("epsilon", 0.05))
    action = make_conjugated_action(diffeo, base)
    return base, diffeo, action
