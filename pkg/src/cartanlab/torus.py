"""Integer-matrix and torus primitives.

Toral automorphisms, Cartan actions built from commuting hyperbolic integer
matrices, their shared eigenstructure, and the Lyapunov functionals
chi_i(m) = log|rho_i(alpha0(m))| stored as coefficient vectors on Z^k
(extended linearly to R^k).

Exactness policy: everything that can be decided in integer arithmetic is
(commutation, determinants, inverses, characteristic polynomials, Sturm root
counts); floating point enters only for root refinement and eigenvectors.
Eigenvalues come from the characteristic polynomial by exact isolation,
bisection and a Newton polish -- no general eigensolver.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import NonCommuting, NotCartanEligible, ProportionalExponents
from .util import reduce_point

MAX_RATIONAL_DENOMINATOR = 2**32


# ---------------------------------------------------------------------------
# exact integer-matrix helpers (python ints via object arrays)


def _as_int_matrix(matrix) -> np.ndarray:
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.equal(m, np.round(np.asarray(m, dtype=float)))):
        raise ValueError("matrix entries must be integers")
    return np.array([[int(round(v)) for v in row] for row in np.asarray(m, dtype=float)],
                    dtype=object)


def integer_det(matrix) -> int:
    """Exact determinant by cofactor expansion (dimensions here are small)."""
    m = _as_int_matrix(matrix)
    d = m.shape[0]
    if d == 1:
        return int(m[0, 0])
    total = 0
    for j in range(d):
        if m[0, j] == 0:
            continue
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += (-1) ** j * int(m[0, j]) * integer_det(minor)
    return total


def integer_adjugate(matrix) -> np.ndarray:
    m = _as_int_matrix(matrix)
    d = m.shape[0]
    adj = np.empty((d, d), dtype=object)
    for i in range(d):
        for j in range(d):
            minor = np.delete(np.delete(m, i, axis=0), j, axis=1)
            adj[j, i] = (-1) ** (i + j) * integer_det(minor)
    return adj


def char_poly(matrix) -> list[int]:
    """Coefficients of det(xI - A), descending, by Faddeev-LeVerrier."""
    a = _as_int_matrix(matrix)
    d = a.shape[0]
    coeffs = [1]
    m = a.copy()
    c = -sum(int(m[i, i]) for i in range(d))
    coeffs.append(c)
    for i in range(2, d + 1):
        m = a @ (m + c * np.eye(d, dtype=object))
        tr = sum(int(m[j, j]) for j in range(d))
        assert tr % i == 0  # Faddeev-LeVerrier divisions are exact over Z
        c = -tr // i
        coeffs.append(c)
    return coeffs


# ---------------------------------------------------------------------------
# exact real-root isolation (Sturm) + float refinement


def _poly_eval(coeffs, x):
    acc = coeffs[0] * 0
    for c in coeffs:
        acc = acc * x + c
    return acc


def _poly_deriv(coeffs):
    d = len(coeffs) - 1
    return [c * (d - i) for i, c in enumerate(coeffs[:-1])]


def _poly_rem(num, den):
    num = list(num)
    dd = len(den) - 1
    while len(num) - 1 >= dd and any(c != 0 for c in num):
        if num[0] == 0:
            num.pop(0)
            continue
        factor = num[0] / den[0]
        for i in range(len(den)):
            num[i] = num[i] - factor * den[i]
        num.pop(0)
    while len(num) > 1 and num[0] == 0:
        num.pop(0)
    return num if num else [Fraction(0)]


def _sturm_chain(coeffs):
    chain = [[Fraction(c) for c in coeffs]]
    chain.append([Fraction(c) for c in _poly_deriv(coeffs)])
    while len(chain[-1]) > 1 or chain[-1][0] != 0:
        rem = _poly_rem(chain[-2], chain[-1])
        if len(rem) == 1 and rem[0] == 0:
            break
        chain.append([-c for c in rem])
    return chain


def _sign_changes(chain, x: Fraction) -> int:
    signs = []
    for p in chain:
        v = _poly_eval(p, x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _roots_in(chain, lo: Fraction, hi: Fraction) -> int:
    return _sign_changes(chain, lo) - _sign_changes(chain, hi)


def real_roots(coeffs: list[int], polish_tol: float = 1e-12) -> np.ndarray:
    """All real roots of an integer polynomial with simple real roots.

    Raises NotCartanEligible when the polynomial has repeated roots or any
    complex root: Cartan eligibility demands a full set of distinct real
    eigenvalues.
    """
    d = len(coeffs) - 1
    der = _poly_deriv(coeffs)
    gcd_deg = _rational_gcd_degree(coeffs, der)
    if gcd_deg > 0:
        raise NotCartanEligible("characteristic polynomial has repeated roots")
    chain = _sturm_chain(coeffs)
    bound = Fraction(1) + max(Fraction(abs(c), abs(coeffs[0])) for c in coeffs[1:])
    total = _roots_in(chain, -bound, bound)
    if total < d:
        raise NotCartanEligible(
            f"characteristic polynomial has only {total} real roots out of {d}"
        )
    intervals = [(-bound, bound, total)]
    isolated = []
    while intervals:
        lo, hi, cnt = intervals.pop()
        if cnt == 0:
            continue
        if cnt == 1:
            isolated.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        while _poly_eval([Fraction(c) for c in coeffs], mid) == 0:
            mid = (lo + mid) / 2  # never split exactly on a root
        left = _roots_in(chain, lo, mid)
        intervals.append((lo, mid, left))
        intervals.append((mid, hi, cnt - left))
    roots = []
    fcoeffs = [float(c) for c in coeffs]
    fder = [float(c) for c in der]
    for lo, hi in isolated:
        flo, fhi = _bisect_interval(coeffs, lo, hi)
        root = _newton_polish(fcoeffs, fder, 0.5 * (flo + fhi), polish_tol)
        roots.append(root)
    return np.array(sorted(roots))


def _rational_gcd_degree(p, q) -> int:
    a = [Fraction(c) for c in p]
    b = [Fraction(c) for c in q]
    while len(b) > 1 or b[0] != 0:
        r = _poly_rem(a, b)
        a, b = b, r
        if len(b) == 1 and b[0] == 0:
            break
    return len(a) - 1


def _bisect_interval(coeffs, lo: Fraction, hi: Fraction, width: float = 1e-9):
    fr = [Fraction(c) for c in coeffs]
    slo = _poly_eval(fr, lo)
    if slo == 0:
        return float(lo), float(lo)
    sgn = 1 if slo > 0 else -1
    while float(hi - lo) > width:
        mid = (lo + hi) / 2
        v = _poly_eval(fr, mid)
        if v == 0:
            return float(mid), float(mid)
        if (v > 0) == (sgn > 0):
            lo = mid
        else:
            hi = mid
    return float(lo), float(hi)


def _newton_polish(fcoeffs, fder, x: float, tol: float) -> float:
    scale = sum(abs(c) * max(1.0, abs(x)) ** (len(fcoeffs) - 1 - i)
                for i, c in enumerate(fcoeffs))
    for _ in range(100):
        fx = _poly_eval(fcoeffs, x)
        if abs(fx) <= tol * scale:
            dfx = _poly_eval(fder, x)
            if dfx != 0.0:
                x -= fx / dfx
            return x
        dfx = _poly_eval(fder, x)
        if dfx == 0.0:
            break
        x -= fx / dfx
    raise NotCartanEligible(f"Newton polish failed near x={x}")


# ---------------------------------------------------------------------------
# toral automorphisms


@dataclass(frozen=True)
class ToralAutomorphism:
    """Integer matrix with |det| = 1 acting on the torus by x -> Ax mod 1."""

    matrix: np.ndarray  # (d, d) int64
    det: int

    @classmethod
    def from_matrix(cls, matrix) -> "ToralAutomorphism":
        m = _as_int_matrix(matrix)
        det = integer_det(m)
        if abs(det) != 1:
            raise NotCartanEligible(
                f"|det| must be 1 for an automorphism, got det = {det}"
            )
        return cls(matrix=np.asarray(m, dtype=np.int64), det=det)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    def apply(self, x) -> np.ndarray:
        """reduce(A . lift(x)); batch-aware."""
        pts = np.asarray(x, dtype=float)
        return reduce_point(pts @ self.matrix.T.astype(float))

    def inverse(self) -> "ToralAutomorphism":
        adj = integer_adjugate(self.matrix)
        inv = adj * self.det  # det = +-1, so A^{-1} = det * adj(A) over Z
        return ToralAutomorphism(matrix=np.asarray(inv, dtype=np.int64), det=self.det)

    def is_hyperbolic(self, cutoff: float = 1e-9) -> bool:
        try:
            vals = real_roots(char_poly(self.matrix))
        except NotCartanEligible:
            return False
        return bool(np.all(np.abs(np.abs(vals) - 1.0) > cutoff))

    def char_poly(self) -> list[int]:
        return char_poly(self.matrix)


def apply_automorphism(automorphism: ToralAutomorphism, x) -> np.ndarray:
    return automorphism.apply(x)


def apply_automorphism_rational(
    automorphism: ToralAutomorphism, numerators, denominator: int
):
    """Exact action on the rational point (numerators / denominator) mod 1.

    Denominators are capped at 2^32; beyond that the float path loses
    exactness anyway and callers should not rely on this helper.
    """
    if not (1 <= denominator <= MAX_RATIONAL_DENOMINATOR):
        raise ValueError(f"denominator must be in [1, 2^32], got {denominator}")
    nums = [int(n) % denominator for n in numerators]
    m = automorphism.matrix
    out = []
    for i in range(automorphism.dim):
        acc = sum(int(m[i, j]) * nums[j] for j in range(automorphism.dim))
        out.append(acc % denominator)
    return tuple(out), denominator


def eigenstructure(automorphism: ToralAutomorphism, residual_tol: float = 1e-10):
    """Distinct real eigenvalues (descending modulus) and unit eigenvectors.

    Eigenvalues are the isolated real roots of the characteristic polynomial;
    eigenvectors come from two rounds of inverse iteration.  Raises
    NotCartanEligible for complex or repeated spectra.
    """
    a = automorphism.matrix.astype(float)
    d = automorphism.dim
    vals = real_roots(char_poly(automorphism.matrix))
    order = np.argsort(-np.abs(vals), kind="stable")
    vals = vals[order]
    vecs = np.empty((d, d))
    eye = np.eye(d)
    for i, lam in enumerate(vals):
        shift = a - lam * eye
        v = np.ones(d) / np.sqrt(d)
        v[i % d] += 0.5  # deterministic generic start
        v /= np.linalg.norm(v)
        for _ in range(3):
            try:
                w = np.linalg.solve(shift, v)
            except np.linalg.LinAlgError:
                w = np.linalg.solve(shift + 1e-13 * eye, v)
            v = w / np.linalg.norm(w)
        k = int(np.argmax(np.abs(v)))
        if v[k] < 0:
            v = -v
        resid = np.max(np.abs(a @ v - lam * v))
        if resid > residual_tol:
            raise NotCartanEligible(
                f"eigenpair residual {resid:.3e} exceeds {residual_tol:.1e}"
            )
        vecs[:, i] = v
    return vals, vecs


# ---------------------------------------------------------------------------
# Lyapunov spectrum and Cartan actions


@dataclass(frozen=True)
class LyapunovSpectrum:
    """k+1 linear functionals chi_i on R^k with chi_i(m) = <c_i, m>.

    coefficients[i, j] = log|rho_i(A_j)| is simultaneously the coefficient
    matrix and the table of eigenvalue logs per generator; signs[i, j] keeps
    the eigenvalue signs for exact reconstruction of rho_i(alpha0(m)).
    """

    coefficients: np.ndarray  # (d, k)
    signs: np.ndarray         # (d, k) int8

    @property
    def eigenvalue_logs(self) -> np.ndarray:
        return self.coefficients

    @property
    def n_functionals(self) -> int:
        return int(self.coefficients.shape[0])

    @property
    def k(self) -> int:
        return int(self.coefficients.shape[1])

    def chi(self, m) -> np.ndarray:
        """All functional values at m (m may be any real vector in R^k)."""
        return self.coefficients @ np.asarray(m, dtype=float)

    def eigenvalue_of_element(self, i: int, m) -> float:
        """Signed eigenvalue rho_i(alpha0(m)) for integer m via the product formula."""
        mv = np.asarray(m)
        mag = float(np.exp(self.coefficients[i] @ mv))
        sgn = 1
        for j, mj in enumerate(mv):
            if self.signs[i, j] < 0 and int(mj) % 2 == 1:
                sgn = -sgn
        return sgn * mag


@dataclass(frozen=True)
class CartanAction:
    """k pairwise-commuting hyperbolic automorphisms with shared eigenbasis."""

    generators: tuple[ToralAutomorphism, ...]
    eigenbasis: np.ndarray    # (d, d) unit columns
    eigenvalues: np.ndarray   # (d, k) signed; row i is rho_i over generators
    spectrum: LyapunovSpectrum

    @property
    def k(self) -> int:
        return len(self.generators)

    @property
    def dim(self) -> int:
        return self.generators[0].dim

    def element_matrix(self, m) -> np.ndarray:
        """Exact integer matrix of alpha0(m) = A_1^{m_1} ... A_k^{m_k}."""
        m = [int(v) for v in np.asarray(m).ravel()]
        if len(m) != self.k:
            raise ValueError(f"expected m in Z^{self.k}, got length {len(m)}")
        acc = np.eye(self.dim, dtype=object)
        for gen, power in zip(self.generators, m):
            base = gen.matrix if power >= 0 else gen.inverse().matrix
            step = _as_int_matrix(base)
            for _ in range(abs(power)):
                acc = step @ acc
        return acc

    def element(self, m) -> ToralAutomorphism:
        return ToralAutomorphism.from_matrix(self.element_matrix(m))

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "dim": self.dim,
            "generators": [g.matrix.tolist() for g in self.generators],
            "spectrum": {"coefficients": self.spectrum.coefficients.tolist()},
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CartanAction":
        return build_cartan_action(doc["generators"])


def _pair_eigenvectors(base_vecs: np.ndarray, other_vecs: np.ndarray) -> list[int]:
    d = base_vecs.shape[1]
    cos = np.abs(base_vecs.T @ other_vecs)
    assignment = []
    for i in range(d):
        assignment.append(int(np.argmax(cos[i])))
    if len(set(assignment)) != d:
        raise NotCartanEligible("eigenvector pairing across generators is ambiguous")
    return assignment


def build_cartan_action(
    generators,
    box_radius: int = 3,
    degeneracy_cutoff: float = 1e-9,
    proportionality_tol: float = 1e-9,
    pair_residual_tol: float = 1e-8,
) -> CartanAction:
    """Assemble and validate a Cartan action from k >= 2 integer matrices.

    Validation order matters for the error contract: commutation first, then
    per-generator eligibility, then functional non-degeneracy, and finally
    hyperbolicity of every element in the finite box |m|_inf <= box_radius
    (full certification over Z^k is number theory, treated as input
    validation on a configurable box).
    """
    autos = [ToralAutomorphism.from_matrix(g) for g in generators]
    k = len(autos)
    if k < 2:
        raise ValueError(f"a Cartan action needs k >= 2 generators, got {k}")
    d = autos[0].dim
    for a in autos:
        if a.dim != d:
            raise ValueError("all generators must share the same dimension")
    exact = [_as_int_matrix(a.matrix) for a in autos]
    for i in range(k):
        for j in range(i + 1, k):
            if not np.array_equal(exact[i] @ exact[j], exact[j] @ exact[i]):
                raise NonCommuting(f"generators {i} and {j} do not commute")

    base_vals, basis = eigenstructure(autos[0])
    eigvals = np.empty((d, k))
    eigvals[:, 0] = base_vals
    for j in range(1, k):
        vals_j, vecs_j = eigenstructure(autos[j])
        assignment = _pair_eigenvectors(basis, vecs_j)
        for i in range(d):
            lam = vals_j[assignment[i]]
            resid = np.max(np.abs(autos[j].matrix.astype(float) @ basis[:, i]
                                  - lam * basis[:, i]))
            if resid > pair_residual_tol:
                raise NotCartanEligible(
                    f"shared eigenbasis fails for generator {j}: residual {resid:.3e}"
                )
            eigvals[i, j] = lam

    coefficients = np.log(np.abs(eigvals))
    signs = np.sign(eigvals).astype(np.int8)
    col_sums = np.abs(coefficients.sum(axis=0))
    if np.any(col_sums > 1e-12):
        raise NotCartanEligible(
            f"functionals do not sum to zero (max |sum| = {col_sums.max():.3e})"
        )
    if np.any(np.max(np.abs(coefficients), axis=1) < 1e-12):
        raise NotCartanEligible("a Lyapunov functional is identically zero")
    for i in range(d):
        for j in range(i + 1, d):
            ci, cj = coefficients[i], coefficients[j]
            minors = np.abs(np.outer(ci, cj) - np.outer(cj, ci))
            scale = np.linalg.norm(ci) * np.linalg.norm(cj)
            if minors.max() <= proportionality_tol * scale:
                raise ProportionalExponents(
                    f"functionals {i + 1} and {j + 1} are proportional"
                )

    spectrum = LyapunovSpectrum(coefficients=coefficients, signs=signs)
    for m in product(range(-box_radius, box_radius + 1), repeat=k):
        if all(v == 0 for v in m):
            continue
        chis = spectrum.chi(np.array(m, dtype=float))
        if np.any(np.abs(chis) < degeneracy_cutoff):
            raise NotCartanEligible(
                f"element m={m} is not hyperbolic (|chi| below {degeneracy_cutoff:.1e})"
            )
        lams = np.array([spectrum.eigenvalue_of_element(i, m) for i in range(d)])
        gaps = np.abs(lams[:, None] - lams[None, :]) + np.eye(d)
        if gaps.min() < degeneracy_cutoff:
            raise NotCartanEligible(f"element m={m} has a repeated eigenvalue")

    return CartanAction(
        generators=tuple(autos),
        eigenbasis=basis,
        eigenvalues=eigvals,
        spectrum=spectrum,
    )


def lyapunov_functional(action: CartanAction, i: int, m) -> float:
    """chi_i(m) for 1-based functional index i and any m in R^k."""
    d = action.dim
    if not 1 <= i <= d:
        raise ValueError(f"functional index must be in 1..{d}, got {i}")
    return float(action.spectrum.coefficients[i - 1] @ np.asarray(m, dtype=float))
