# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel backend: program evaluation and QR-cocycle accumulation.

Same semantics as the numpy backend in pure.py; all inner loops run without
the GIL so trial-level thread pools parallelize for real.  Dimension is
capped at 8 (stack buffers); higher dimensions fall back to the pure backend
at the dispatch layer.
"""

from libc.math cimport cos, sin, log, sqrt, fabs, floor

import numpy as np

from ..errors import DegenerateQR, NoConvergence

BACKEND_NAME = "native"

cdef enum:
    MAXD = 8


cdef int _solve_inplace(int d, double* A, double* b) noexcept nogil:
    """Gaussian elimination with partial pivoting; overwrites A and b."""
    cdef int i, j, k, piv
    cdef double amax, tmp, f
    for k in range(d):
        piv = k
        amax = fabs(A[k * d + k])
        for i in range(k + 1, d):
            if fabs(A[i * d + k]) > amax:
                amax = fabs(A[i * d + k])
                piv = i
        if amax == 0.0:
            return -1
        if piv != k:
            for j in range(d):
                tmp = A[k * d + j]; A[k * d + j] = A[piv * d + j]; A[piv * d + j] = tmp
            tmp = b[k]; b[k] = b[piv]; b[piv] = tmp
        for i in range(k + 1, d):
            f = A[i * d + k] / A[k * d + k]
            if f != 0.0:
                for j in range(k, d):
                    A[i * d + j] -= f * A[k * d + j]
                b[i] -= f * b[k]
    for k in range(d - 1, -1, -1):
        tmp = b[k]
        for j in range(k + 1, d):
            tmp -= A[k * d + j] * b[j]
        b[k] = tmp / A[k * d + k]
    return 0


cdef int _invert_inplace(int d, const double* A, double* Ainv) noexcept nogil:
    cdef double work[MAXD * MAXD]
    cdef double col[MAXD]
    cdef int i, j, c
    for c in range(d):
        for i in range(d * d):
            work[i] = A[i]
        for i in range(d):
            col[i] = 1.0 if i == c else 0.0
        if _solve_inplace(d, work, col):
            return -1
        for i in range(d):
            Ainv[i * d + c] = col[i]
    return 0


cdef void _op_forward(int d, const double[:, :, ::1] mats, int opi,
                      int mlo, int mhi,
                      const double[:, ::1] W, const double[:, ::1] CA,
                      const double[:, ::1] CB,
                      const double* x, double* y, double* J,
                      bint want_jac) noexcept nogil:
    """y = M x + p(x); J = M + Dp(x) when requested."""
    cdef int i, j, m
    cdef double s, th, ct, st, amp
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += mats[opi, i, j] * x[j]
        y[i] = s
        if want_jac:
            for j in range(d):
                J[i * d + j] = mats[opi, i, j]
    for m in range(mlo, mhi):
        th = 0.0
        for j in range(d):
            th += W[m, j] * x[j]
        ct = cos(th)
        st = sin(th)
        for i in range(d):
            y[i] += CA[m, i] * ct + CB[m, i] * st
            if want_jac:
                amp = CB[m, i] * ct - CA[m, i] * st
                for j in range(d):
                    J[i * d + j] += amp * W[m, j]


cdef int _op_inverse(int d, const double[:, :, ::1] mats,
                     const double[:, :, ::1] minvs, int opi,
                     int mlo, int mhi,
                     const double[:, ::1] W, const double[:, ::1] CA,
                     const double[:, ::1] CB,
                     double tol, int maxiter,
                     const double* x, double* y, double* Jout,
                     bint want_jac) noexcept nogil:
    """Newton solve of M y + p(y) = x from y0 = M^{-1} x."""
    cdef double val[MAXD]
    cdef double res[MAXD]
    cdef double Jloc[MAXD * MAXD]
    cdef int i, j, it
    cdef double s, maxres
    cdef bint ok = 0
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += minvs[opi, i, j] * x[j]
        y[i] = s
    for it in range(maxiter):
        _op_forward(d, mats, opi, mlo, mhi, W, CA, CB, y, val, Jloc, 1)
        maxres = 0.0
        for i in range(d):
            res[i] = val[i] - x[i]
            if fabs(res[i]) > maxres:
                maxres = fabs(res[i])
        if maxres < tol:
            ok = 1
            break
        if _solve_inplace(d, Jloc, res):
            return -1
        for i in range(d):
            y[i] -= res[i]
    if not ok:
        return -1
    if want_jac:
        _op_forward(d, mats, opi, mlo, mhi, W, CA, CB, y, val, Jloc, 1)
        if _invert_inplace(d, Jloc, Jout):
            return -1
    return 0


cdef int _run(int d, int n_ops, const int[:] ops,
              const double[:, :, ::1] mats, const double[:, :, ::1] minvs,
              const int[:] moff,
              const double[:, ::1] W, const double[:, ::1] CA,
              const double[:, ::1] CB,
              double tol, int maxiter,
              const double* xin, double* xout, double* Jtot,
              bint want_jac) noexcept nogil:
    cdef double xcur[MAXD]
    cdef double xnext[MAXD]
    cdef double Jop[MAXD * MAXD]
    cdef double Jtmp[MAXD * MAXD]
    cdef int i, j, k, o, rc
    cdef double s
    for i in range(d):
        xcur[i] = xin[i]
    if want_jac:
        for i in range(d):
            for j in range(d):
                Jtot[i * d + j] = 1.0 if i == j else 0.0
    for o in range(n_ops):
        if ops[o] == 0:
            _op_forward(d, mats, o, moff[o], moff[o + 1], W, CA, CB,
                        xcur, xnext, Jop, want_jac)
        else:
            rc = _op_inverse(d, mats, minvs, o, moff[o], moff[o + 1],
                             W, CA, CB, tol, maxiter, xcur, xnext, Jop,
                             want_jac)
            if rc:
                return -1
        if want_jac:
            for i in range(d):
                for j in range(d):
                    s = 0.0
                    for k in range(d):
                        s += Jop[i * d + k] * Jtot[k * d + j]
                    Jtmp[i * d + j] = s
            for i in range(d * d):
                Jtot[i] = Jtmp[i]
        for i in range(d):
            xcur[i] = xnext[i]
    for i in range(d):
        xout[i] = xcur[i]
    return 0


def apply_program(pack, X, bint want_jac=False):
    """Run the program on a batch of lifts; see pure.apply_program."""
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef int n = Xv.shape[0]
    cdef int d = pack.dim
    if d > MAXD:
        raise ValueError(f"native kernel supports dim <= {MAXD}, got {d}")
    cdef const int[:] ops = pack.ops
    cdef const double[:, :, ::1] mats = pack.mats
    cdef const double[:, :, ::1] minvs = pack.mat_invs
    cdef const int[:] moff = pack.mode_off
    cdef const double[:, ::1] W = pack.ang_freqs
    cdef const double[:, ::1] CA = pack.cos_coef
    cdef const double[:, ::1] CB = pack.sin_coef
    cdef double tol = pack.newton_tol
    cdef int maxiter = pack.newton_maxiter
    cdef int n_ops = pack.n_ops
    Y = np.empty((n, d))
    cdef double[:, ::1] Yv = Y
    J = np.empty((n, d, d)) if want_jac else None
    cdef double[:, :, ::1] Jv = J if want_jac else np.empty((1, d, d))
    cdef double Jbuf[MAXD * MAXD]
    cdef int p, i, j, failed = 0
    with nogil:
        for p in range(n):
            if _run(d, n_ops, ops, mats, minvs, moff, W, CA, CB, tol,
                    maxiter, &Xv[p, 0], &Yv[p, 0], Jbuf, want_jac):
                failed = 1
                break
            if want_jac:
                for i in range(d):
                    for j in range(d):
                        Jv[p, i, j] = Jbuf[i * d + j]
    if failed:
        raise NoConvergence("Newton inversion failed inside program evaluation")
    return (Y, J) if want_jac else Y


def orbit_exponents_batch(pack, X0, long steps, Q0):
    """QR-accumulated Lyapunov sums; see pure.orbit_exponents_batch."""
    cdef double[:, ::1] Xv = np.ascontiguousarray(X0, dtype=np.float64)
    cdef double[:, ::1] Q0v = np.ascontiguousarray(Q0, dtype=np.float64)
    cdef int r = Xv.shape[0]
    cdef int d = pack.dim
    if d > MAXD:
        raise ValueError(f"native kernel supports dim <= {MAXD}, got {d}")
    cdef const int[:] ops = pack.ops
    cdef const double[:, :, ::1] mats = pack.mats
    cdef const double[:, :, ::1] minvs = pack.mat_invs
    cdef const int[:] moff = pack.mode_off
    cdef const double[:, ::1] W = pack.ang_freqs
    cdef const double[:, ::1] CA = pack.cos_coef
    cdef const double[:, ::1] CB = pack.sin_coef
    cdef double tol = pack.newton_tol
    cdef int maxiter = pack.newton_maxiter
    cdef int n_ops = pack.n_ops
    logs = np.zeros((r, d))
    Xfin = np.empty((r, d))
    cdef double[:, ::1] logsv = logs
    cdef double[:, ::1] Xfv = Xfin
    cdef double x[MAXD]
    cdef double y[MAXD]
    cdef double Q[MAXD * MAXD]
    cdef double B[MAXD * MAXD]
    cdef double Jop[MAXD * MAXD]
    cdef int trial, i, j, k
    cdef long t
    cdef double s, nrm, c
    cdef int failed = 0, degenerate = 0
    with nogil:
        for trial in range(r):
            if failed or degenerate:
                break
            for i in range(d):
                x[i] = Xv[trial, i]
                for j in range(d):
                    Q[i * d + j] = Q0v[i, j]
            for t in range(steps):
                if _run(d, n_ops, ops, mats, minvs, moff, W, CA, CB, tol,
                        maxiter, x, y, Jop, 1):
                    failed = 1
                    break
                for i in range(d):
                    x[i] = y[i] - floor(y[i])
                for i in range(d):
                    for j in range(d):
                        s = 0.0
                        for k in range(d):
                            s += Jop[i * d + k] * Q[k * d + j]
                        B[i * d + j] = s
                for i in range(d):
                    nrm = 0.0
                    for k in range(d):
                        nrm += B[k * d + i] * B[k * d + i]
                    nrm = sqrt(nrm)
                    if nrm < 1e-290:
                        degenerate = 1
                        break
                    logsv[trial, i] += log(nrm)
                    for k in range(d):
                        B[k * d + i] /= nrm
                    for j in range(i + 1, d):
                        c = 0.0
                        for k in range(d):
                            c += B[k * d + i] * B[k * d + j]
                        for k in range(d):
                            B[k * d + j] -= c * B[k * d + i]
                if degenerate:
                    break
                for i in range(d * d):
                    Q[i] = B[i]
            for i in range(d):
                Xfv[trial, i] = x[i]
    if failed:
        raise NoConvergence("Newton inversion failed during orbit accumulation")
    if degenerate:
        raise DegenerateQR("QR column collapsed during cocycle accumulation")
    return logs, Xfin
