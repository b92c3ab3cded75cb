# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernel for the gated decision score.

Same contract and operation sequence as _kernels_py.gated_score_batch;
see that module for the semantics. Kept header-free (no numpy C API):
output arrays are allocated with numpy and written through memoryviews.
"""

import numpy as np

from .errors import DomainError

from libc.math cimport exp

GODEL, PRODUCT, LUKASIEWICZ = 0, 1, 2

cdef int N_CHANNELS = 11
cdef int N_POS = 7
cdef int[7] POS_IDX
POS_IDX[0] = 0; POS_IDX[1] = 2; POS_IDX[2] = 4; POS_IDX[3] = 5
POS_IDX[4] = 6; POS_IDX[5] = 7; POS_IDX[6] = 8

cdef double DOMAIN_TOL = 1e-9


def gated_score_batch(channels, alpha, int backend_id, bint want_channel_grad=False):
    """Return (scores (N,), d_alpha (N,11), d_channels (N,11) or None)."""
    p_arr = np.ascontiguousarray(channels, dtype=np.float64)
    a_arr = np.ascontiguousarray(alpha, dtype=np.float64)
    if p_arr.ndim != 2 or p_arr.shape[1] != N_CHANNELS:
        raise DomainError(f"channels must have shape (N, {N_CHANNELS}), got {p_arr.shape}")
    if a_arr.shape != (N_CHANNELS,):
        raise DomainError(f"alpha must have shape ({N_CHANNELS},), got {a_arr.shape}")
    if p_arr.size and (p_arr.min() < -DOMAIN_TOL or p_arr.max() > 1.0 + DOMAIN_TOL):
        raise DomainError("channel value outside [0, 1]")
    if backend_id not in (GODEL, PRODUCT, LUKASIEWICZ):
        raise DomainError(f"unknown backend id {backend_id}")
    p_arr = np.clip(p_arr, 0.0, 1.0)

    cdef int n = p_arr.shape[0]
    out_o = np.zeros(n, dtype=np.float64)
    out_da = np.zeros((n, N_CHANNELS), dtype=np.float64)
    out_dp = np.zeros((n, N_CHANNELS), dtype=np.float64) if want_channel_grad else None

    cdef double[:, ::1] p = p_arr
    cdef double[::1] a = a_arr
    cdef double[::1] o = out_o
    cdef double[:, ::1] da = out_da
    cdef double[:, ::1] dp = out_dp if want_channel_grad else out_da  # unused alias when off

    cdef double[11] g
    cdef double[11] gprime
    cdef int i, row, k, idx
    for i in range(N_CHANNELS):
        g[i] = 1.0 / (1.0 + exp(-a[i]))
        gprime[i] = g[i] * (1.0 - g[i])

    cdef double[11] q
    cdef double[11] do_dq
    cdef double pos, neg, notneg, acc, x, s
    cdef double[11] dpos
    cdef double[11] dneg
    cdef int pos_arg, neg_arg
    cdef bint open_

    for row in range(n):
        for i in range(N_CHANNELS):
            q[i] = p[row, i] * g[i]
            do_dq[i] = 0.0

        if backend_id == GODEL:
            pos = q[POS_IDX[0]]
            pos_arg = POS_IDX[0]
            for k in range(1, N_POS):
                idx = POS_IDX[k]
                if q[idx] > pos:
                    pos = q[idx]
                    pos_arg = idx
            neg = q[9]
            neg_arg = 9
            if q[10] > neg:
                neg = q[10]
                neg_arg = 10
            notneg = 1.0 - neg
            if pos <= notneg:
                o[row] = pos
                do_dq[pos_arg] = 1.0
            else:
                o[row] = notneg
                do_dq[neg_arg] = -1.0
        elif backend_id == PRODUCT:
            for i in range(N_CHANNELS):
                dpos[i] = 0.0
                dneg[i] = 0.0
            acc = q[POS_IDX[0]]
            dpos[POS_IDX[0]] = 1.0
            for k in range(1, N_POS):
                idx = POS_IDX[k]
                x = q[idx]
                for i in range(N_CHANNELS):
                    dpos[i] *= (1.0 - x)
                dpos[idx] += 1.0 - acc
                acc = acc + x - acc * x
            pos = acc
            acc = q[9]
            dneg[9] = 1.0
            x = q[10]
            dneg[9] *= (1.0 - x)
            dneg[10] = 1.0 - acc
            acc = acc + x - acc * x
            neg = acc
            notneg = 1.0 - neg
            o[row] = pos * notneg
            for i in range(N_CHANNELS):
                do_dq[i] = dpos[i] * notneg - dneg[i] * pos
        else:
            for i in range(N_CHANNELS):
                dpos[i] = 0.0
                dneg[i] = 0.0
            acc = q[POS_IDX[0]]
            dpos[POS_IDX[0]] = 1.0
            for k in range(1, N_POS):
                idx = POS_IDX[k]
                s = acc + q[idx]
                open_ = s < 1.0
                if open_:
                    dpos[idx] += 1.0
                    acc = s
                else:
                    for i in range(N_CHANNELS):
                        dpos[i] = 0.0
                    acc = 1.0
            pos = acc
            acc = q[9]
            dneg[9] = 1.0
            s = acc + q[10]
            if s < 1.0:
                dneg[10] = 1.0
                acc = s
            else:
                dneg[9] = 0.0
                acc = 1.0
            neg = acc
            notneg = 1.0 - neg
            s = pos + notneg - 1.0
            if s > 0.0:
                o[row] = s
                for i in range(N_CHANNELS):
                    do_dq[i] = dpos[i] - dneg[i]
            else:
                o[row] = 0.0

        for i in range(N_CHANNELS):
            da[row, i] = do_dq[i] * p[row, i] * gprime[i]
        if want_channel_grad:
            for i in range(N_CHANNELS):
                dp[row, i] = do_dq[i] * g[i]

    return out_o, out_da, out_dp
