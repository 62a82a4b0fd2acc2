"""Smooth perturbations of linear Cartan actions.

Two families:

* Conjugated: alpha = phi . alpha0 . phi^{-1} for a trig-polynomial
  diffeomorphism phi = id + eps*v homotopic to the identity.  Generators
  commute exactly as maps, and the family carries exact oracles -- the Franks
  semiconjugacy is h = phi^{-1} and the invariant measure is phi_* Lebesgue
  with density 1/|det Dphi(phi^{-1} x)|.  This family is the acceptance
  backbone.
* SingleMap: f = A + p for a periodic trig-polynomial displacement p; f is
  homotopic to A but generally not a conjugate of it, so it exercises the
  semiconjugacy solver without an oracle.  No exactly-commuting non-conjugate
  Z^k family is constructed (none is known at desk scale); SingleMap covers
  the non-conjugate case for the solver only.

All maps compile to kernel programs; displacement fields are trigonometric
polynomials so derivative bounds are finite coefficient sums and the
diffeomorphism certificate eps * sup||Dv|| < 1 is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import WordTooLong
from .programs import ProgramBuilder, ProgramPack, concat, inverse
from .torus import CartanAction, ToralAutomorphism
from .util import reduce_point

MAX_WORD_LENGTH = 32


@dataclass(frozen=True)
class TrigPolynomial:
    """Periodic R^d-valued trig polynomial sum_m a_m cos(2pi n_m.x) + b_m sin(2pi n_m.x)."""

    freqs: np.ndarray     # (n_modes, d) integer frequency vectors
    cos_coef: np.ndarray  # (n_modes, d)
    sin_coef: np.ndarray  # (n_modes, d)

    @classmethod
    def from_modes(cls, modes, dim: int) -> "TrigPolynomial":
        """modes: iterable of dicts with keys freq, cos, sin (lists of length d)."""
        modes = list(modes)
        if not modes:
            z = np.zeros((0, dim))
            return cls(freqs=z.copy(), cos_coef=z.copy(), sin_coef=z.copy())
        freqs = np.array([m["freq"] for m in modes], dtype=float)
        if not np.all(freqs == np.round(freqs)):
            raise ValueError("frequency vectors must be integer")
        return cls(
            freqs=freqs,
            cos_coef=np.array([m.get("cos", [0.0] * dim) for m in modes], dtype=float),
            sin_coef=np.array([m.get("sin", [0.0] * dim) for m in modes], dtype=float),
        )

    @property
    def dim(self) -> int:
        return int(self.freqs.shape[1])

    def __call__(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        th = pts @ (2.0 * np.pi * self.freqs).T
        return np.cos(th) @ self.cos_coef + np.sin(th) @ self.sin_coef

    def jacobian(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        w = 2.0 * np.pi * self.freqs
        th = pts @ w.T
        amp = (-np.sin(th)[:, :, None] * self.cos_coef[None, :, :]
               + np.cos(th)[:, :, None] * self.sin_coef[None, :, :])
        jac = np.einsum("nmi,mj->nij", amp, w)
        return jac[0] if single else jac

    def derivative_bound(self) -> float:
        """Upper bound on sup_x ||D p(x)||_2 from coefficient sums.

        Entrywise |Dp[i,j]| <= G[i,j] = sum_m 2pi|n_mj| sqrt(a_mi^2+b_mi^2),
        and the spectral norm is monotone on nonnegative entrywise bounds.
        """
        if self.freqs.shape[0] == 0:
            return 0.0
        amp = np.sqrt(self.cos_coef**2 + self.sin_coef**2)  # (m, d)
        g = np.einsum("mi,mj->ij", amp, 2.0 * np.pi * np.abs(self.freqs))
        return float(np.linalg.norm(g, 2))

    def sup_bound(self) -> float:
        """Upper bound on sup_x ||p(x)||_2."""
        if self.freqs.shape[0] == 0:
            return 0.0
        return float(np.sum(np.sqrt(np.sum(self.cos_coef**2 + self.sin_coef**2, axis=1))))

    def scaled(self, factor: float) -> "TrigPolynomial":
        return TrigPolynomial(
            freqs=self.freqs, cos_coef=factor * self.cos_coef,
            sin_coef=factor * self.sin_coef,
        )

    def modes_json(self) -> list[dict]:
        return [
            {
                "freq": [int(v) for v in self.freqs[m]],
                "cos": self.cos_coef[m].tolist(),
                "sin": self.sin_coef[m].tolist(),
            }
            for m in range(self.freqs.shape[0])
        ]


@dataclass(frozen=True)
class TorusDiffeo:
    """phi(x) = x + eps * v(x), a diffeomorphism homotopic to the identity.

    The certificate eps * sup||Dv|| < 1 guarantees global invertibility on
    the torus (degree-one perturbation with contractive displacement).
    """

    displacement: TrigPolynomial
    epsilon: float
    derivative_bound: float

    @classmethod
    def from_displacement(cls, displacement: TrigPolynomial, epsilon: float) -> "TorusDiffeo":
        bound = displacement.derivative_bound()
        if abs(epsilon) * bound >= 1.0:
            raise ValueError(
                f"eps*sup||Dv|| = {abs(epsilon) * bound:.6f} >= 1: not a certified diffeomorphism"
            )
        return cls(displacement=displacement, epsilon=float(epsilon),
                   derivative_bound=bound)

    @property
    def dim(self) -> int:
        return self.displacement.dim

    @property
    def margin(self) -> float:
        return 1.0 - abs(self.epsilon) * self.derivative_bound

    def _scaled(self) -> TrigPolynomial:
        return self.displacement.scaled(self.epsilon)

    @property
    def program(self) -> ProgramPack:
        p = self._scaled()
        return (ProgramBuilder(self.dim)
                .poly(None, p.freqs, p.cos_coef, p.sin_coef).build())

    @property
    def program_inv(self) -> ProgramPack:
        p = self._scaled()
        return (ProgramBuilder(self.dim)
                .poly_inv(None, p.freqs, p.cos_coef, p.sin_coef).build())

    def apply_lift(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        return pts + self.epsilon * self.displacement(pts)

    def apply(self, x) -> np.ndarray:
        return reduce_point(self.apply_lift(x))

    def jacobian(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        jac = self.epsilon * self.displacement.jacobian(pts)
        eye = np.eye(self.dim)
        return jac + (eye if jac.ndim == 2 else eye[None, :, :])

    def invert_lift(self, y) -> np.ndarray:
        pts = np.asarray(y, dtype=float)
        single = pts.ndim == 1
        out = _kernels.apply_program(self.program_inv, pts[None, :] if single else pts)
        return out[0] if single else out

    def invert(self, y) -> np.ndarray:
        return reduce_point(self.invert_lift(y))

    def to_json_dict(self) -> dict:
        return {"epsilon": self.epsilon, "modes": self.displacement.modes_json()}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TorusDiffeo":
        dim = len(doc["modes"][0]["freq"]) if doc["modes"] else 3
        poly = TrigPolynomial.from_modes(doc["modes"], dim)
        return cls.from_displacement(poly, doc["epsilon"])


def eval_diffeo(diffeo: TorusDiffeo, x) -> np.ndarray:
    return diffeo.apply(x)


def eval_diffeo_jacobian(diffeo: TorusDiffeo, x) -> np.ndarray:
    return diffeo.jacobian(x)


def invert_diffeo(diffeo: TorusDiffeo, y) -> np.ndarray:
    return diffeo.invert(y)


class TorusMap:
    """A torus map packaged with its program, inverse program and linear part."""

    def __init__(self, program: ProgramPack, linear: ToralAutomorphism,
                 program_inv: ProgramPack | None = None):
        self.program = program
        self.linear = linear
        self.program_inv = inverse(program) if program_inv is None else program_inv
        self.dim = linear.dim

    def _run(self, pack, x, want_jac=False):
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        batch = pts[None, :] if single else pts
        out = _kernels.apply_program(pack, batch, want_jac)
        if want_jac:
            y, j = out
            return (y[0], j[0]) if single else (y, j)
        return out[0] if single else out

    def apply_lift(self, x) -> np.ndarray:
        return self._run(self.program, x)

    def apply(self, x) -> np.ndarray:
        return reduce_point(self.apply_lift(x))

    def apply_inv_lift(self, y) -> np.ndarray:
        return self._run(self.program_inv, y)

    def apply_inv(self, y) -> np.ndarray:
        return reduce_point(self.apply_inv_lift(y))

    def jacobian(self, x) -> np.ndarray:
        return self._run(self.program, x, want_jac=True)[1]

    def apply_with_jacobian(self, x):
        return self._run(self.program, x, want_jac=True)

    def inverse_map(self) -> "TorusMap":
        return TorusMap(self.program_inv, self.linear.inverse(), self.program)

    def displacement(self, x) -> np.ndarray:
        """Periodic part p(x) = f_lift(x) - A x (small, no wrapping needed)."""
        pts = np.asarray(x, dtype=float)
        return self.apply_lift(pts) - pts @ self.linear.matrix.T.astype(float)


@dataclass
class PerturbedAction:
    """Z^k action by torus maps homotopic to a linear Cartan action.

    kind is "conjugated" (generators phi A_j phi^{-1}, exact oracles) or
    "single" (one map A + p, k = 1, solver-only family).
    """

    kind: str
    generators: tuple[TorusMap, ...]
    base: CartanAction | None = None
    diffeo: TorusDiffeo | None = None
    max_word_length: int = MAX_WORD_LENGTH
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def k(self) -> int:
        return len(self.generators)

    @property
    def dim(self) -> int:
        return self.generators[0].dim

    @property
    def epsilon(self) -> float:
        return self.diffeo.epsilon if self.diffeo is not None else 0.0

    def element_map(self, m) -> TorusMap:
        """alpha(m) in canonical order: generator 1 powers applied first."""
        m = tuple(int(v) for v in np.asarray(m).ravel())
        if len(m) != self.k:
            raise ValueError(f"expected m in Z^{self.k}, got {m}")
        if sum(abs(v) for v in m) > self.max_word_length:
            raise WordTooLong(
                f"|m|_1 = {sum(abs(v) for v in m)} exceeds max word length "
                f"{self.max_word_length}"
            )
        if m in self._cache:
            return self._cache[m]
        packs = []
        linear = np.eye(self.dim, dtype=object)
        for gen, power in zip(self.generators, m):
            pack = gen.program if power >= 0 else gen.program_inv
            lin = gen.linear.matrix if power >= 0 else gen.linear.inverse().matrix
            for _ in range(abs(power)):
                packs.append(pack)
                linear = np.asarray(lin, dtype=object) @ linear
        program = concat(self.dim, packs)
        tmap = TorusMap(program, ToralAutomorphism.from_matrix(linear))
        self._cache[m] = tmap
        return tmap

    def eval(self, m, x) -> np.ndarray:
        return self.element_map(m).apply(x)

    def eval_jacobian(self, m, x) -> np.ndarray:
        return self.element_map(m).jacobian(x)

    # -- conjugated-family oracles ------------------------------------------

    def oracle_h_lift(self, x) -> np.ndarray:
        """Exact semiconjugacy h = phi^{-1} (conjugated family only)."""
        self._require_conjugated()
        return self.diffeo.invert_lift(x)

    def oracle_h(self, x) -> np.ndarray:
        self._require_conjugated()
        return self.diffeo.invert(x)

    def invariant_density(self, x) -> np.ndarray:
        """Density of phi_* Lebesgue: g(x) = 1 / |det Dphi(phi^{-1} x)|."""
        self._require_conjugated()
        z = self.diffeo.invert_lift(np.atleast_2d(np.asarray(x, dtype=float)))
        dets = np.linalg.det(self.diffeo.jacobian(z))
        out = 1.0 / np.abs(dets)
        return out[0] if np.asarray(x).ndim == 1 else out

    def sample_invariant(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Exact mu-distributed sample: phi(uniform)."""
        self._require_conjugated()
        return self.diffeo.apply(rng.random((n, self.dim)))

    def _require_conjugated(self):
        if self.kind != "conjugated" or self.diffeo is None:
            raise ValueError("oracle data exists only for the conjugated family")


def make_conjugated_action(diffeo: TorusDiffeo, base: CartanAction,
                           max_word_length: int = MAX_WORD_LENGTH) -> PerturbedAction:
    """Generators f_j = phi . A_j . phi^{-1}; exact commutation by construction."""
    if diffeo.dim != base.dim:
        raise ValueError("diffeomorphism and action dimensions differ")
    gens = []
    for auto in base.generators:
        program = concat(diffeo.dim, [
            diffeo.program_inv,
            ProgramBuilder(diffeo.dim).poly(auto.matrix.astype(float)).build(),
            diffeo.program,
        ])
        gens.append(TorusMap(program, auto))
    return PerturbedAction(
        kind="conjugated", generators=tuple(gens), base=base, diffeo=diffeo,
        max_word_length=max_word_length,
    )


def make_single_map_action(automorphism: ToralAutomorphism,
                           displacement: TrigPolynomial,
                           max_word_length: int = MAX_WORD_LENGTH) -> PerturbedAction:
    """f = A + p as a Z^1 family: homotopic to A, generally not conjugate."""
    if displacement.dim != automorphism.dim:
        raise ValueError("displacement and matrix dimensions differ")
    program = (ProgramBuilder(automorphism.dim)
               .poly(automorphism.matrix.astype(float), displacement.freqs,
                     displacement.cos_coef, displacement.sin_coef)
               .build())
    gen = TorusMap(program, automorphism)
    return PerturbedAction(kind="single", generators=(gen,),
                           max_word_length=max_word_length)


def commutation_residual(action: PerturbedAction, n_points: int = 100,
                         seed: int = 0) -> float:
    """sup over sampled points of the pairwise commutator displacement."""
    from .util import substream, torus_distance

    rng = substream(seed, 0xC0)
    pts = rng.random((n_points, action.dim))
    worst = 0.0
    for a in range(action.k):
        for b in range(a + 1, action.k):
            fa, fb = action.generators[a], action.generators[b]
            ab = fa.apply(fb.apply(pts))
            ba = fb.apply(fa.apply(pts))
            worst = max(worst, float(np.max(torus_distance(ab, ba))))
    return worst
