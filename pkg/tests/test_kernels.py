"""Batch kernels: implementation parity and agreement with the scalar path."""

import os
import subprocess
import sys

import numpy as np
import pytest

from ltn_offer import _kernels_py, kernels
from ltn_offer.fuzzy import Backend
from ltn_offer.ltn import o_base, o_base_dual
from ltn_offer.predicates import N_CHANNELS

try:
    from ltn_offer import _core
except ImportError:
    _core = None


def _random_batch(rng, rows):
    channels = rng.random((rows, N_CHANNELS))
    alpha = rng.normal(0.0, 2.0, N_CHANNELS)
    return channels, alpha


def test_score_batch_matches_scalar_dual():
    rng = np.random.default_rng(42)
    channels, alpha = _random_batch(rng, 60)
    for backend in Backend:
        scores, d_alpha, d_chan = kernels.score_batch(channels, alpha, backend,
                                                      want_channel_grad=True)
        for i in range(channels.shape[0]):
            dual = o_base_dual(channels[i], alpha, backend, channel_params=True)
            assert scores[i] == pytest.approx(dual.value, abs=1e-12)
            assert scores[i] == pytest.approx(o_base(channels[i], alpha, backend), abs=1e-12)
            for j in range(N_CHANNELS):
                assert d_alpha[i, j] == pytest.approx(dual.partial(("alpha", j)), abs=1e-12)
                assert d_chan[i, j] == pytest.approx(dual.partial(("p", j)), abs=1e-12)


def test_channel_grad_is_optional():
    rng = np.random.default_rng(3)
    channels, alpha = _random_batch(rng, 8)
    scores, d_alpha, d_chan = kernels.score_batch(channels, alpha, Backend.PRODUCT)
    assert d_chan is None
    assert scores.shape == (8,)
    assert d_alpha.shape == (8, N_CHANNELS)


@pytest.mark.skipif(_core is None, reason="compiled extension not built")
def test_compiled_equals_python_bitwise():
    rng = np.random.default_rng(9)
    for rows in (1, 7, 250):
        channels, alpha = _random_batch(rng, rows)
        for backend_id in (_kernels_py.GODEL, _kernels_py.PRODUCT, _kernels_py.LUKASIEWICZ):
            for want in (False, True):
                py = _kernels_py.gated_score_batch(channels, alpha, backend_id, want)
                cc = _core.gated_score_batch(channels, alpha, backend_id, want)
                for a, b in zip(py, cc):
                    if a is None:
                        assert b is None
                        continue
                    np.testing.assert_allclose(np.asarray(a), np.asarray(b), atol=1e-12)


def test_pure_python_env_override():
    code = ("import ltn_offer.kernels as k; print(k.implementation_name())")
    env = dict(os.environ, LTN_OFFER_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.skipif(_core is None, reason="compiled extension not built")
def test_compiled_selected_by_default():
    env = {k: v for k, v in os.environ.items() if k != "LTN_OFFER_PURE_PYTHON"}
    code = ("import ltn_offer.kernels as k; print(k.implementation_name())")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "compiled"


def test_degenerate_inputs():
    alpha = np.zeros(N_CHANNELS)
    # all-zero channels: PosCore 0, NegCore 0, O = 0 AND NOT 0
    zeros = np.zeros((1, N_CHANNELS))
    ones = np.ones((1, N_CHANNELS))
    for backend in Backend:
        s0, _, _ = kernels.score_batch(zeros, alpha, backend)
        assert s0[0] == pytest.approx(0.0, abs=1e-15)
        s1, _, _ = kernels.score_batch(ones, alpha, backend)
        assert 0.0 <= s1[0] <= 1.0
    empty, d_alpha, _ = kernels.score_batch(np.zeros((0, N_CHANNELS)), alpha, Backend.GODEL)
    assert empty.shape == (0,)
    assert d_alpha.shape == (0, N_CHANNELS)
