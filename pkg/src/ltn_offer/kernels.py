"""Kernel selection: compiled extension when importable, numpy otherwise.

Set LTN_OFFER_PURE_PYTHON=1 to force the numpy fallback regardless of
whether the extension was built. Both implementations share one contract
(see _kernels_py) and are tested against each other and against the
scalar dual-number path.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py
from .fuzzy import Backend

BACKEND_IDS = {
    Backend.GODEL: _kernels_py.GODEL,
    Backend.PRODUCT: _kernels_py.PRODUCT,
    Backend.LUKASIEWICZ: _kernels_py.LUKASIEWICZ,
}

if os.environ.get("LTN_OFFER_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

IMPLEMENTATION = "compiled" if _impl.__name__.endswith("_core") else "python"


def score_batch(channels, alpha, backend: Backend, want_channel_grad: bool = False):
    """Gated decision scores plus gradients for a batch.

    channels: array-like (N, 11) of truth degrees, alpha: (11,) gate
    parameters. Returns (scores (N,), d_alpha (N, 11), d_channels
    (N, 11) or None).
    """
    return _impl.gated_score_batch(
        np.asarray(channels, dtype=np.float64),
        np.asarray(alpha, dtype=np.float64),
        BACKEND_IDS[backend],
        want_channel_grad,
    )


def implementation_name() -> str:
    return IMPLEMENTATION
