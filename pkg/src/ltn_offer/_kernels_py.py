"""Pure-numpy batch kernel for the gated decision score.

Computes, for a batch of channel vectors p (N, 11) and gate parameters
alpha (11,):

    g = sigmoid(alpha)
    q = g * p
    pos = OR-fold of q over the positive channels (0, 2, 4, 5, 6, 7, 8)
    neg = q[9] OR q[10]
    o   = pos AND (1 - neg)

plus exact partials dO/dalpha (N, 11) and optionally dO/dp (N, 11).

The fold order and kink/tie conventions mirror the scalar dual-number
path in fuzzy.py exactly (left fold; min/max ties go left; Łukasiewicz
clamps kill the gradient at and beyond the kink). The compiled kernel in
_core.pyx follows the same operation sequence so both routes agree to
float noise.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

GODEL, PRODUCT, LUKASIEWICZ = 0, 1, 2

POSITIVE_CHANNELS = (0, 2, 4, 5, 6, 7, 8)
NEGATIVE_CHANNELS = (9, 10)
N_CHANNELS = 11

_DOMAIN_TOL = 1e-9


def gated_score_batch(channels, alpha, backend_id, want_channel_grad=False):
    """Return (scores (N,), d_alpha (N,11), d_channels (N,11) or None)."""
    p = np.asarray(channels, dtype=np.float64)
    a = np.asarray(alpha, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != N_CHANNELS:
        raise DomainError(f"channels must have shape (N, {N_CHANNELS}), got {p.shape}")
    if a.shape != (N_CHANNELS,):
        raise DomainError(f"alpha must have shape ({N_CHANNELS},), got {a.shape}")
    if p.size and (p.min() < -_DOMAIN_TOL or p.max() > 1.0 + _DOMAIN_TOL):
        raise DomainError("channel value outside [0, 1]")
    if backend_id not in (GODEL, PRODUCT, LUKASIEWICZ):
        raise DomainError(f"unknown backend id {backend_id}")
    p = np.clip(p, 0.0, 1.0)

    n = p.shape[0]
    g = 1.0 / (1.0 + np.exp(-a))          # (11,)
    q = p * g[None, :]                     # (N, 11)

    # dO/dq, filled per backend
    do_dq = np.zeros((n, N_CHANNELS))

    if backend_id == GODEL:
        pos, pos_arg = _godel_fold_max(q, POSITIVE_CHANNELS)
        neg, neg_arg = _godel_fold_max(q, NEGATIVE_CHANNELS)
        notneg = 1.0 - neg
        take_pos = pos <= notneg           # AND tie goes to the left (pos)
        o = np.where(take_pos, pos, notneg)
        rows = np.arange(n)
        do_dq[rows[take_pos], pos_arg[take_pos]] = 1.0
        do_dq[rows[~take_pos], neg_arg[~take_pos]] = -1.0
    elif backend_id == PRODUCT:
        pos, dpos = _product_fold_or(q, POSITIVE_CHANNELS, n)
        neg, dneg = _product_fold_or(q, NEGATIVE_CHANNELS, n)
        notneg = 1.0 - neg
        o = pos * notneg
        do_dq = dpos * notneg[:, None] - dneg * pos[:, None]
    else:
        pos, dpos = _luk_fold_or(q, POSITIVE_CHANNELS, n)
        neg, dneg = _luk_fold_or(q, NEGATIVE_CHANNELS, n)
        s = pos + (1.0 - neg) - 1.0        # same op order as the scalar path
        active = s > 0.0                   # at the kink the constant side wins
        o = np.where(active, s, 0.0)
        do_dq = np.where(active[:, None], dpos - dneg, 0.0)

    dq_da = p * (g * (1.0 - g))[None, :]   # dq_i/dalpha_i
    d_alpha = do_dq * dq_da
    d_channels = do_dq * g[None, :] if want_channel_grad else None
    return o, d_alpha, d_channels


def _godel_fold_max(q, idxs):
    """Left max fold; strictly greater replaces, so ties keep the earliest."""
    acc = q[:, idxs[0]].copy()
    arg = np.full(q.shape[0], idxs[0], dtype=np.intp)
    for i in idxs[1:]:
        take = q[:, i] > acc
        acc[take] = q[take, i]
        arg[take] = i
    return acc, arg


def _product_fold_or(q, idxs, n):
    """Left fold of acc OR x = acc + x - acc*x with running jacobian."""
    acc = q[:, idxs[0]].copy()
    dacc = np.zeros((n, N_CHANNELS))
    dacc[:, idxs[0]] = 1.0
    for i in idxs[1:]:
        x = q[:, i]
        dacc *= (1.0 - x)[:, None]
        dacc[:, i] += 1.0 - acc
        acc = acc + x - acc * x
    return acc, dacc


def _luk_fold_or(q, idxs, n):
    """Left fold of min(1, acc + x); once clamped the gradient is zero."""
    acc = q[:, idxs[0]].copy()
    dacc = np.zeros((n, N_CHANNELS))
    dacc[:, idxs[0]] = 1.0
    for i in idxs[1:]:
        s = acc + q[:, i]
        open_ = s < 1.0                    # at the kink the clamp wins
        dacc[:, i][open_] += 1.0
        dacc[~open_] = 0.0
        acc = np.where(open_, s, 1.0)
    return acc, dacc
