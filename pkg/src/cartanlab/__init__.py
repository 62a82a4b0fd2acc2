"""cartanlab: numerical laboratory for Z^k Cartan actions on the torus.

Builds exactly-commuting smooth perturbations of linear Cartan actions,
solves the Franks semiconjugacy as a fixed point, estimates Lyapunov
spectra and Weyl chambers, computes the non-stationary affine linearization
along stable leaves, and verifies the rigidity predictions as testable
numerical properties.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND  # noqa: F401
from .torus import (  # noqa: F401
    CartanAction,
    LyapunovSpectrum,
    ToralAutomorphism,
    build_cartan_action,
    eigenstructure,
    lyapunov_functional,
)
from .perturbation import (  # noqa: F401
    PerturbedAction,
    TorusDiffeo,
    TrigPolynomial,
    make_conjugated_action,
    make_single_map_action,
)
from .semiconjugacy import SemiconjugacyField, solve_franks  # noqa: F401
from .weyl import ChamberArrangement, enumerate_chambers, sign_pattern  # noqa: F401
