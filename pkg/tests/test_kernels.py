"""Backend parity and kernel dispatch."""

import numpy as np
import pytest

from cartanlab import _kernels
from cartanlab.errors import DegenerateQR, NoConvergence
from cartanlab.programs import ProgramBuilder

HAVE_NATIVE = _kernels.BACKEND == "native"

needs_native = pytest.mark.skipif(not HAVE_NATIVE, reason="extension not built")


@pytest.fixture(scope="module")
def generator_program(conj_action):
    return conj_action.element_map((1, 1)).program


@needs_native
class TestBackendParity:
    def test_apply_program(self, generator_program, random_points):
        pure = _kernels.get_backend("pure")
        native = _kernels.get_backend("native")
        yp, jp = pure.apply_program(generator_program, random_points, True)
        yn, jn = native.apply_program(generator_program, random_points, True)
        assert np.max(np.abs(yp - yn)) < 1e-14
        assert np.max(np.abs(jp - jn)) < 1e-13

    def test_short_orbit_parity(self, generator_program, conj_action):
        """Before chaotic decoherence the accumulators agree tightly."""
        q0 = np.linalg.qr(conj_action.base.eigenbasis)[0]
        x0 = np.array([[0.21, 0.43, 0.65], [0.11, 0.87, 0.29]])
        lp, xp = _kernels.get_backend("pure").orbit_exponents_batch(
            generator_program, x0, 30, q0
        )
        ln, xn = _kernels.get_backend("native").orbit_exponents_batch(
            generator_program, x0, 30, q0
        )
        assert np.max(np.abs(lp - ln)) < 1e-6
        assert np.max(np.abs(xp - xn)) < 1e-6

    def test_long_orbit_statistical_parity(self, generator_program, conj_action):
        """Averaged exponents agree even after trajectories decohere."""
        q0 = np.linalg.qr(conj_action.base.eigenbasis)[0]
        x0 = np.array([[0.21, 0.43, 0.65]])
        steps = 20000
        lp, _ = _kernels.get_backend("pure").orbit_exponents_batch(
            generator_program, x0, steps, q0
        )
        ln, _ = _kernels.get_backend("native").orbit_exponents_batch(
            generator_program, x0, steps, q0
        )
        assert np.max(np.abs(lp - ln)) / steps < 1e-4


@pytest.mark.parametrize("backend", ["pure"] + (["native"] if HAVE_NATIVE else []))
class TestKernelSemantics:
    def test_empty_program_is_identity(self, backend, random_points):
        impl = _kernels.get_backend(backend)
        pack = ProgramBuilder(3).build()
        y, j = impl.apply_program(pack, random_points, True)
        assert np.array_equal(y, random_points)
        assert np.allclose(j, np.eye(3)[None])

    def test_newton_failure_raises(self, backend, diffeo):
        impl = _kernels.get_backend(backend)
        import dataclasses

        crippled = dataclasses.replace(diffeo.program_inv, newton_maxiter=1)
        with pytest.raises(NoConvergence):
            impl.apply_program(crippled, np.array([[0.4, 0.9, 0.1]]))

    def test_degenerate_qr_raises(self, backend):
        impl = _kernels.get_backend(backend)
        singular = np.diag([2.0, 1.0, 0.0])
        pack = ProgramBuilder(3).poly(singular).build()
        with pytest.raises(DegenerateQR):
            impl.orbit_exponents_batch(
                pack, np.array([[0.3, 0.3, 0.3]]), 5, np.eye(3)
            )

    def test_orbit_reduces_points(self, backend, conj_action):
        impl = _kernels.get_backend(backend)
        pack = conj_action.element_map((1, 0)).program
        _, xf = impl.orbit_exponents_batch(
            pack, np.array([[0.9, 0.9, 0.9]]), 50, np.eye(3)
        )
        assert np.all((xf >= 0) & (xf < 1))


def test_high_dimension_dispatches_to_pure():
    pack = ProgramBuilder(9).poly(np.eye(9)).build()
    x = np.linspace(0, 0.8, 9)[None, :]
    assert np.allclose(_kernels.apply_program(pack, x), x)


def test_linear_exponent_exactness(linear_action):
    """Constant-Jacobian cocycle with the eigen-QR start is exact per step."""
    pack = linear_action.element_map((1, 0)).program
    q0 = np.linalg.qr(linear_action.base.eigenbasis)[0]
    steps = 1000
    logs, _ = _kernels.orbit_exponents_batch(
        pack, np.array([[0.37, 0.11, 0.59]]), steps, q0
    )
    chi = np.sort(linear_action.base.spectrum.chi([1, 0]))[::-1]
    assert np.max(np.abs(logs[0] / steps - chi)) < 1e-12
