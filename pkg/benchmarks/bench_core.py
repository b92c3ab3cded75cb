"""Benchmark the compiled scoring kernel against the numpy fallback.

Times gated_score_batch on random batches for each backend and prints a
per-backend speedup table. Both implementations are also cross-checked
on every timed batch so a performance run doubles as an agreement run.

Usage:
    python3 benchmarks/bench_core.py --rows 20000 --repeats 7
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time

import numpy as np

from ltn_offer import _kernels_py
from ltn_offer.fuzzy import Backend
from ltn_offer.kernels import BACKEND_IDS
from ltn_offer.predicates import N_CHANNELS

try:
    from ltn_offer import _core
except ImportError:
    _core = None


def _time_one(fn, channels, alpha, backend_id, want_grad, repeats):
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(channels, alpha, backend_id, want_grad)
        best.append(time.perf_counter() - t0)
    return min(best), statistics.median(best)


def run(rows: int, repeats: int, seed: int, want_grad: bool) -> int:
    rng = np.random.default_rng(seed)
    channels = rng.random((rows, N_CHANNELS))
    alpha = rng.normal(0.0, 2.0, N_CHANNELS)

    if _core is None:
        print("compiled extension not available; nothing to compare", file=sys.stderr)
        return 1

    print(f"rows={rows} repeats={repeats} channel_grad={want_grad}")
    print(f"{'backend':<14}{'numpy':>12}{'compiled':>12}{'speedup':>10}")
    for backend in Backend:
        bid = BACKEND_IDS[backend]
        py_out = _kernels_py.gated_score_batch(channels, alpha, bid, want_grad)
        c_out = _core.gated_score_batch(channels, alpha, bid, want_grad)
        for a, b in zip(py_out, c_out):
            if a is None or b is None:
                assert a is b, "implementations disagree on returned arrays"
                continue
            diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
            assert diff <= 1e-12, f"{backend.value}: implementations differ by {diff}"
        py_best, _ = _time_one(_kernels_py.gated_score_batch, channels, alpha,
                               bid, want_grad, repeats)
        c_best, _ = _time_one(_core.gated_score_batch, channels, alpha,
                              bid, want_grad, repeats)
        print(f"{backend.value:<14}{py_best * 1e3:>10.2f}ms{c_best * 1e3:>10.2f}ms"
              f"{py_best / c_best:>9.1f}x")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=20000)
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--channel-grad", action="store_true",
                        help="also produce per-channel gradients")
    args = parser.parse_args(argv)
    return run(args.rows, args.repeats, args.seed, args.channel_grad)


if __name__ == "__main__":
    raise SystemExit(main())
