"""Pure-numpy kernel backend.

Mirrors the semantics of the compiled extension exactly: same opcodes, same
Newton iteration, same modified-Gram-Schmidt QR accumulation.  Vectorized
over points / trials so it stays usable (if slower) without the extension.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateQR, NoConvergence
from ..programs import OP_POLY, OP_POLY_INV, ProgramPack

BACKEND_NAME = "pure"


def _trig(pack: ProgramPack, i: int, X: np.ndarray):
    """Displacement p(X) of op i; returns (p, theta-dependent pieces) or None."""
    lo, hi = int(pack.mode_off[i]), int(pack.mode_off[i + 1])
    if hi == lo:
        return None
    W = pack.ang_freqs[lo:hi]          # (m, d)
    A = pack.cos_coef[lo:hi]           # (m, d)
    B = pack.sin_coef[lo:hi]           # (m, d)
    th = X @ W.T                       # (n, m)
    ct, st = np.cos(th), np.sin(th)
    p = ct @ A + st @ B                # (n, d)
    return W, A, B, ct, st, p


def _poly_forward(pack, i, X, want_jac):
    M = pack.mats[i]
    Y = X @ M.T
    J = None
    trig = _trig(pack, i, X)
    if trig is not None:
        W, A, B, ct, st, p = trig
        Y = Y + p
        if want_jac:
            # dp_i/dx_j = sum_m W[m,j] * (-A[m,i] st + B[m,i] ct)
            amp = -st[:, :, None] * A[None, :, :] + ct[:, :, None] * B[None, :, :]
            J = M[None, :, :] + np.einsum("nmi,mj->nij", amp, W)
    elif want_jac:
        J = np.broadcast_to(M, (X.shape[0], *M.shape)).copy()
    if want_jac and J is None:
        J = np.broadcast_to(M, (X.shape[0], *M.shape)).copy()
    return Y, J


def _poly_inverse(pack, i, X, want_jac):
    """Newton solve of M y + p(y) = x, vectorized with an active-point mask."""
    M = pack.mats[i]
    Y = X @ pack.mat_invs[i].T
    n = X.shape[0]
    jac_at_sol = None
    active = np.ones(n, dtype=bool)
    for _ in range(pack.newton_maxiter):
        trig = _trig(pack, i, Y[active])
        if trig is None:
            val = Y[active] @ M.T
            Jloc = np.broadcast_to(M, (int(active.sum()), *M.shape)).copy()
        else:
            W, A, B, ct, st, p = trig
            val = Y[active] @ M.T + p
            amp = -st[:, :, None] * A[None, :, :] + ct[:, :, None] * B[None, :, :]
            Jloc = M[None, :, :] + np.einsum("nmi,mj->nij", amp, W)
        res = val - X[active]
        done = np.max(np.abs(res), axis=1) < pack.newton_tol
        if done.all():
            active[active] = False
            break
        step = np.linalg.solve(Jloc, res[..., None])[..., 0]
        upd = Y[active]
        upd[~done] -= step[~done]
        Y[active] = upd
        still = active.copy()
        still[active] = ~done
        active = still
        if not active.any():
            break
    if active.any():
        raise NoConvergence(
            f"Newton inversion failed for {int(active.sum())} point(s) "
            f"after {pack.newton_maxiter} iterations"
        )
    if want_jac:
        trig = _trig(pack, i, Y)
        if trig is None:
            Jf = np.broadcast_to(M, (n, *M.shape)).copy()
        else:
            W, A, B, ct, st, p = trig
            amp = -st[:, :, None] * A[None, :, :] + ct[:, :, None] * B[None, :, :]
            Jf = M[None, :, :] + np.einsum("nmi,mj->nij", amp, W)
        jac_at_sol = np.linalg.inv(Jf)
    return Y, jac_at_sol


def apply_program(pack: ProgramPack, X: np.ndarray, want_jac: bool = False):
    """Run the program on a batch of lifts.

    Returns Y of shape (n, d), or (Y, J) with J the (n, d, d) chain-rule
    Jacobians of the full composition.
    """
    X = np.ascontiguousarray(X, dtype=float)
    Y = X
    J_total = None
    for i in range(pack.n_ops):
        if pack.ops[i] == OP_POLY:
            Y, J = _poly_forward(pack, i, Y, want_jac)
        elif pack.ops[i] == OP_POLY_INV:
            Y, J = _poly_inverse(pack, i, Y, want_jac)
        else:
            raise ValueError(f"unknown opcode {pack.ops[i]}")
        if want_jac:
            J_total = J if J_total is None else J @ J_total
    if J_total is None and want_jac:
        n, d = X.shape
        J_total = np.broadcast_to(np.eye(d), (n, d, d)).copy()
    return (Y, J_total) if want_jac else Y


def orbit_exponents_batch(
    pack: ProgramPack, X0: np.ndarray, steps: int, Q0: np.ndarray
):
    """QR-accumulated Lyapunov sums along orbits of the program map.

    For each row of X0 runs `steps` iterations of x <- reduce(P(x)), pushing
    an orthonormal frame through the Jacobian cocycle with a modified
    Gram-Schmidt re-orthonormalization every step, accumulating log column
    norms.  Returns (log_sums (r, d), X_final (r, d)).
    """
    X = np.ascontiguousarray(X0, dtype=float)
    r, d = X.shape
    Q = np.broadcast_to(np.asarray(Q0, dtype=float), (r, d, d)).copy()
    logs = np.zeros((r, d))
    for _ in range(steps):
        Y, J = apply_program(pack, X, want_jac=True)
        X = Y - np.floor(Y)
        B = J @ Q
        for i in range(d):
            nrm = np.sqrt(np.sum(B[:, :, i] ** 2, axis=1))
            if np.any(nrm < 1e-290):
                raise DegenerateQR("QR column collapsed during cocycle accumulation")
            logs[:, i] += np.log(nrm)
            B[:, :, i] /= nrm[:, None]
            if i + 1 < d:
                coef = np.einsum("nk,nkj->nj", B[:, :, i], B[:, :, i + 1 :])
                B[:, :, i + 1 :] -= B[:, :, i][:, :, None] * coef[:, None, :]
        Q = B
    return logs, X
