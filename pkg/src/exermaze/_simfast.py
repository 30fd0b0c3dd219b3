"""Numba fast path for batched maze traversal.

The walk here must stay move-for-move identical to the pure-Python
implementation in sim.py: same candidate ordering, same single RNG draw per
multi-candidate choice, same SplitMix64 stream.  tests/test_sim.py asserts
run-level equality between the two.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV_2_53 = 1.0 / float(1 << 53)


@njit(cache=True)
def walk_batch(nbr, start, goal, effort_of, beta, cap, seed0, n_runs):
    """Run n_runs independent walks; returns (steps, effort) per run.

    steps[k] == -1 flags a walk that hit the step cap (treated as an error
    by the caller).  Per-run seeds are seed0 + k.
    """
    m = nbr.shape[0]
    steps_out = np.empty(n_runs, np.int64)
    effort_out = np.empty(n_runs, np.float64)
    weights = np.empty((m, 4), np.float64)
    for k in range(n_runs):
        state = np.uint64(seed0) + np.uint64(k)
        for i in range(m):
            for j in range(4):
                weights[i, j] = 1.0
        pos = start
        prev = -1
        steps = 0
        effort = 0.0
        failed = False
        while pos != goal:
            count = 0
            c0 = 0
            c1 = 0
            c2 = 0
            c3 = 0
            for j in range(4):
                n = nbr[pos, j]
                if n < 0:
                    break
                if n != prev:
                    if count == 0:
                        c0 = j
                    elif count == 1:
                        c1 = j
                    elif count == 2:
                        c2 = j
                    else:
                        c3 = j
                    count += 1
            if count == 0:
                # dead end: turning back is the only option
                chosen = 0
                for j in range(4):
                    if nbr[pos, j] == prev:
                        chosen = j
                        break
            elif count == 1:
                chosen = c0
            else:
                total = weights[pos, c0] + weights[pos, c1]
                if count > 2:
                    total += weights[pos, c2]
                if count > 3:
                    total += weights[pos, c3]
                state = state + _GOLDEN
                z = state
                z = (z ^ (z >> _S30)) * _MIX1
                z = (z ^ (z >> _S27)) * _MIX2
                z = z ^ (z >> _S31)
                r = float(z >> _S11) * _INV_2_53 * total
                acc = weights[pos, c0]
                chosen = c0
                if r >= acc and count >= 2:
                    acc += weights[pos, c1]
                    chosen = c1
                if r >= acc and count >= 3:
                    acc += weights[pos, c2]
                    chosen = c2
                if r >= acc and count >= 4:
                    chosen = c3
            weights[pos, chosen] *= beta
            prev = pos
            pos = nbr[pos, chosen]
            steps += 1
            effort += effort_of[pos]
            if steps > cap:
                failed = True
                break
        if failed:
            steps_out[k] = -1
            effort_out[k] = 0.0
        else:
            steps_out[k] = steps
            effort_out[k] = effort
    return steps_out, effort_out
