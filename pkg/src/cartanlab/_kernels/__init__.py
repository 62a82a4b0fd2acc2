"""Kernel backend selection: compiled extension if present, numpy fallback.

The two backends implement the same two entry points with identical
semantics:

* ``apply_program(pack, X, want_jac=False)``
* ``orbit_exponents_batch(pack, X0, steps, Q0)``

``BACKEND`` names the one selected at import.  ``get_backend`` returns a
specific implementation (used by the benchmark and by agreement tests).
"""

from __future__ import annotations

from . import pure

try:
    from . import _native

    _default = _native
    BACKEND = "native"
except ImportError:  # extension not built; numpy fallback
    _native = None
    _default = pure
    BACKEND = "pure"


def get_backend(name: str):
    if name == "pure":
        return pure
    if name == "native":
        if _native is None:
            raise ImportError("native kernel extension is not built")
        return _native
    raise ValueError(f"unknown backend {name!r}")


def apply_program(pack, X, want_jac: bool = False):
    if _default is not pure and pack.dim > 8:
        return pure.apply_program(pack, X, want_jac)
    return _default.apply_program(pack, X, want_jac)


def orbit_exponents_batch(pack, X0, steps, Q0):
    if _default is not pure and pack.dim > 8:
        return pure.orbit_exponents_batch(pack, X0, steps, Q0)
    return _default.orbit_exponents_batch(pack, X0, steps, Q0)
