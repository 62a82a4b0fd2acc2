"""Composable torus-map programs: the ABI between high level maps and kernels.

A program is a sequence of atomic operations applied left to right to a lift
x in R^d.  Two opcodes cover every map in the package:

* OP_POLY:      y = M x + p(x)  with p a trigonometric polynomial
                (an integer-matrix automorphism is the zero-mode case,
                a displacement diffeomorphism is the M = I case).
* OP_POLY_INV:  y solves M y + p(y) = x by a Newton iteration started from
                M^{-1} x.

Coefficient layout is flat and contiguous so the compiled kernel can walk it
without Python objects: per-op mode ranges index into shared (n_modes, d)
arrays of angular frequencies (2*pi*n) and cosine/sine coefficient vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OP_POLY = 0
OP_POLY_INV = 1

NEWTON_TOL = 1e-13
NEWTON_MAXITER = 50


@dataclass(frozen=True)
class ProgramPack:
    """Flattened program ready for kernel execution."""

    dim: int
    ops: np.ndarray        # (n_ops,) int32
    mats: np.ndarray       # (n_ops, d, d) float64
    mat_invs: np.ndarray   # (n_ops, d, d) float64, Newton initial-guess matrices
    mode_off: np.ndarray   # (n_ops + 1,) int32
    ang_freqs: np.ndarray  # (n_modes, d) float64, rows are 2*pi*n
    cos_coef: np.ndarray   # (n_modes, d) float64
    sin_coef: np.ndarray   # (n_modes, d) float64
    newton_tol: float = NEWTON_TOL
    newton_maxiter: int = NEWTON_MAXITER

    @property
    def n_ops(self) -> int:
        return int(self.ops.shape[0])


class ProgramBuilder:
    """Accumulates atomic operations and emits a ProgramPack."""

    def __init__(self, dim: int):
        self.dim = dim
        self._ops: list[int] = []
        self._mats: list[np.ndarray] = []
        self._freqs: list[np.ndarray] = []
        self._cos: list[np.ndarray] = []
        self._sin: list[np.ndarray] = []

    def poly(self, matrix=None, freqs=None, cos_coef=None, sin_coef=None) -> "ProgramBuilder":
        return self._push(OP_POLY, matrix, freqs, cos_coef, sin_coef)

    def poly_inv(self, matrix=None, freqs=None, cos_coef=None, sin_coef=None) -> "ProgramBuilder":
        return self._push(OP_POLY_INV, matrix, freqs, cos_coef, sin_coef)

    def _push(self, op, matrix, freqs, cos_coef, sin_coef):
        d = self.dim
        m = np.eye(d) if matrix is None else np.asarray(matrix, dtype=float)
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match dimension {d}")
        if freqs is None:
            freqs = np.zeros((0, d))
            cos_coef = np.zeros((0, d))
            sin_coef = np.zeros((0, d))
        self._ops.append(op)
        self._mats.append(m)
        self._freqs.append(np.asarray(freqs, dtype=float).reshape(-1, d))
        self._cos.append(np.asarray(cos_coef, dtype=float).reshape(-1, d))
        self._sin.append(np.asarray(sin_coef, dtype=float).reshape(-1, d))
        return self

    def extend(self, pack: ProgramPack) -> "ProgramBuilder":
        """Append every operation of an existing pack."""
        for i in range(pack.n_ops):
            lo, hi = pack.mode_off[i], pack.mode_off[i + 1]
            self._ops.append(int(pack.ops[i]))
            self._mats.append(pack.mats[i].copy())
            self._freqs.append(pack.ang_freqs[lo:hi] / (2.0 * np.pi))
            self._cos.append(pack.cos_coef[lo:hi].copy())
            self._sin.append(pack.sin_coef[lo:hi].copy())
        return self

    def build(self) -> ProgramPack:
        d = self.dim
        n_ops = len(self._ops)
        mats = np.array(self._mats).reshape(n_ops, d, d)
        mat_invs = np.empty_like(mats)
        for i, (op, m) in enumerate(zip(self._ops, mats)):
            mat_invs[i] = np.linalg.inv(m) if op == OP_POLY_INV else np.eye(d)
        counts = [f.shape[0] for f in self._freqs]
        mode_off = np.concatenate([[0], np.cumsum(counts)]).astype(np.int32)
        freqs = (
            np.concatenate(self._freqs, axis=0) if n_ops else np.zeros((0, d))
        )
        return ProgramPack(
            dim=d,
            ops=np.asarray(self._ops, dtype=np.int32),
            mats=np.ascontiguousarray(mats),
            mat_invs=np.ascontiguousarray(mat_invs),
            mode_off=mode_off,
            ang_freqs=np.ascontiguousarray(2.0 * np.pi * freqs),
            cos_coef=np.ascontiguousarray(
                np.concatenate(self._cos, axis=0) if n_ops else np.zeros((0, d))
            ),
            sin_coef=np.ascontiguousarray(
                np.concatenate(self._sin, axis=0) if n_ops else np.zeros((0, d))
            ),
        )


def concat(dim: int, packs: list[ProgramPack]) -> ProgramPack:
    """Compose programs left to right (packs[0] applied first)."""
    b = ProgramBuilder(dim)
    for p in packs:
        b.extend(p)
    return b.build()


def inverse(pack: ProgramPack) -> ProgramPack:
    """Program computing the inverse map: reversed ops with flipped opcodes.

    The inverse of y = M x + p(x) is the Newton solve, and vice versa, so the
    matrix/mode payload is reused unchanged.
    """
    b = ProgramBuilder(pack.dim)
    for i in reversed(range(pack.n_ops)):
        lo, hi = pack.mode_off[i], pack.mode_off[i + 1]
        op = OP_POLY_INV if pack.ops[i] == OP_POLY else OP_POLY
        b._push(
            op,
            pack.mats[i],
            pack.ang_freqs[lo:hi] / (2.0 * np.pi),
            pack.cos_coef[lo:hi],
            pack.sin_coef[lo:hi],
        )
    return b.build()
