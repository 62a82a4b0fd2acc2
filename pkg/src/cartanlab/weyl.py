"""Lyapunov hyperplane arrangement in R^k: chambers, witnesses, zero sums.

The k+1 functionals chi_i cut R^k into Weyl chambers; for a Cartan spectrum
exactly 2^(k+1) - 2 sign patterns are realizable (all-plus and all-minus are
killed by the zero-sum identity).  For k = 2 realizability is decided
exactly from the circular order of the three kernel lines; integer scanning
supplies representatives and doubles as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import IncompleteEnumeration, Infeasible, MissingChamber
from .torus import LyapunovSpectrum

DEGENERACY_CUTOFF = 1e-9


def sign_pattern(spectrum: LyapunovSpectrum, m, cutoff: float = DEGENERACY_CUTOFF):
    """Sign vector (tuple of +-1) of the functionals at m, or None if degenerate.

    None means m lies within `cutoff` of some Lyapunov hyperplane; m may be
    any real vector, not just a lattice point.
    """
    chis = spectrum.chi(np.asarray(m, dtype=float))
    if np.any(np.abs(chis) < cutoff):
        return None
    return tuple(1 if c > 0 else -1 for c in chis)


def pattern_string(pattern) -> str:
    return "".join("+" if s > 0 else "-" for s in pattern)


@dataclass(frozen=True)
class Chamber:
    pattern: tuple[int, ...]
    representative: np.ndarray  # integer vector in Z^k

    def __repr__(self) -> str:
        return f"Chamber({pattern_string(self.pattern)}, m={self.representative.tolist()})"


@dataclass(frozen=True)
class ChamberArrangement:
    spectrum: LyapunovSpectrum
    chambers: tuple[Chamber, ...]
    search_radius: int

    @property
    def patterns(self) -> set[tuple[int, ...]]:
        return {c.pattern for c in self.chambers}

    def chamber(self, pattern) -> Chamber:
        for c in self.chambers:
            if c.pattern == tuple(pattern):
                return c
        raise MissingChamber(f"no chamber with pattern {pattern_string(pattern)}")

    def to_json_dict(self) -> dict:
        return {
            "chambers": [
                {
                    "pattern": pattern_string(c.pattern),
                    "representative": c.representative.tolist(),
                }
                for c in self.chambers
            ]
        }


def _realizable_patterns_exact_k2(spectrum: LyapunovSpectrum, cutoff: float):
    """Realizable sign patterns for k = 2 from the circular line arrangement.

    Each kernel line of a functional c_i contributes two boundary rays; the
    open sectors between consecutive rays carry constant sign patterns, read
    off at the angular bisectors.
    """
    coeffs = spectrum.coefficients
    angles = []
    for c in coeffs:
        theta = np.arctan2(c[1], c[0]) + 0.5 * np.pi  # direction of the kernel line
        angles.extend([theta % (2 * np.pi), (theta + np.pi) % (2 * np.pi)])
    angles = np.sort(np.array(angles))
    patterns = set()
    for a, b in zip(angles, np.roll(angles, -1)):
        if b <= a:
            b += 2 * np.pi
        mid = 0.5 * (a + b)
        direction = np.array([np.cos(mid), np.sin(mid)])
        pat = sign_pattern(spectrum, direction, cutoff)
        if pat is not None:
            patterns.add(pat)
    return patterns


def enumerate_chambers(
    spectrum: LyapunovSpectrum,
    search_radius: int = 5,
    cutoff: float = DEGENERACY_CUTOFF,
) -> ChamberArrangement:
    """Find all realizable chambers with minimal-|m|_1 integer representatives.

    Integer points with |m|_inf <= search_radius are scanned for
    representatives (ties broken lexicographically); for k = 2 the exact
    sector enumeration guards against thin chambers the scan could miss.
    Raises IncompleteEnumeration when fewer than 2^(k+1)-2 patterns get a
    representative at this radius.
    """
    k = spectrum.k
    d = spectrum.n_functionals
    expected = 2 ** d - 2

    best: dict[tuple[int, ...], tuple] = {}
    for m in product(range(-search_radius, search_radius + 1), repeat=k):
        if all(v == 0 for v in m):
            continue
        pat = sign_pattern(spectrum, np.array(m, dtype=float), cutoff)
        if pat is None:
            continue
        key = (int(np.sum(np.abs(m))), tuple(m))
        if pat not in best or key < best[pat]:
            best[pat] = key

    found = set(best)
    if k == 2:
        exact = _realizable_patterns_exact_k2(spectrum, cutoff)
        missing = exact - found
        if missing:
            raise IncompleteEnumeration(
                f"patterns {sorted(pattern_string(p) for p in missing)} are realizable "
                f"but have no integer representative with |m|_inf <= {search_radius}; "
                "increase the search radius"
            )
        extra = found - exact
        if extra:  # scan found a pattern exact reasoning excluded: inconsistent spectrum
            raise IncompleteEnumeration(
                f"scan and exact enumeration disagree on {sorted(map(pattern_string, extra))}"
            )
    if len(found) < expected:
        raise IncompleteEnumeration(
            f"found {len(found)} chambers, expected {expected}; "
            f"increase the search radius (currently {search_radius})"
        )

    all_plus = tuple([1] * d)
    all_minus = tuple([-1] * d)
    if all_plus in found or all_minus in found:
        raise IncompleteEnumeration(
            "all-positive or all-negative pattern realized; spectrum does not sum to zero"
        )

    chambers = tuple(
        Chamber(pattern=pat, representative=np.array(best[pat][1], dtype=np.int64))
        for pat in sorted(found)
    )
    return ChamberArrangement(
        spectrum=spectrum, chambers=chambers, search_radius=search_radius
    )


def property_c_witnesses(arrangement: ChamberArrangement) -> dict[int, np.ndarray]:
    """For each i (1-based) an integer m with chi_i(m) < 0 and chi_j(m) > 0, j != i.

    This is property (C); the witness is the stored representative of the
    chamber whose pattern is minus at slot i and plus elsewhere.
    """
    d = arrangement.spectrum.n_functionals
    witnesses = {}
    for i in range(1, d + 1):
        pattern = tuple(-1 if j == i - 1 else 1 for j in range(d))
        witnesses[i] = arrangement.chamber(pattern).representative.copy()
    return witnesses


def zero_sum_chamber_elements(arrangement: ChamberArrangement) -> list[np.ndarray]:
    """Elements t_i of the chambers C_i (minus at slot i) with sum(t_i) = 0.

    Scales the chamber representatives r_i by the kernel vector of
    Q[j][i] = chi_j(r_i).  Q has negative diagonal, positive off-diagonal and
    zero column sums (a CTMC-generator shape), so its kernel vector is
    strictly positive for a genuine Cartan spectrum; a sign failure is
    reported as Infeasible.
    """
    witnesses = property_c_witnesses(arrangement)
    d = arrangement.spectrum.n_functionals
    reps = [witnesses[i].astype(float) for i in range(1, d + 1)]
    q = np.empty((d, d))
    for i, r in enumerate(reps):
        q[:, i] = arrangement.spectrum.chi(r)
    system = np.vstack([q, np.ones((1, d))])
    rhs = np.zeros(d + 1)
    rhs[-1] = float(d)
    scales, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    if np.any(scales <= 0):
        raise Infeasible(
            f"kernel vector has non-positive entries {scales.tolist()}; "
            "spectrum is not Cartan-like"
        )
    elements = [s * r for s, r in zip(scales, reps)]
    total = np.sum(elements, axis=0)
    if np.max(np.abs(total)) >= 1e-9:
        raise Infeasible(f"zero-sum residual {np.max(np.abs(total)):.3e} exceeds 1e-9")
    for i, t in enumerate(elements):
        pat = sign_pattern(arrangement.spectrum, t)
        want = tuple(-1 if j == i else 1 for j in range(d))
        if pat != want:
            raise Infeasible(f"scaled element {i + 1} left its chamber")
    return elements
