"""Hot Monte Carlo kernels with numba and pure-numpy implementations.

The numba path is used when numba imports cleanly and the environment
variable ``GRAPHDP_DISABLE_NUMBA`` is unset or ``0``.  Both paths are always
importable as ``*_numpy`` / ``*_numba`` so they can be benchmarked against
each other.
"""
import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("GRAPHDP_DISABLE_NUMBA", "0").lower() in (
    "",
    "0",
    "false",
    "no",
)


def _null_njit(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


njit = numba.njit if HAVE_NUMBA else _null_njit
prange = numba.prange if HAVE_NUMBA else range


# -- privacy loss for structured (temporal Kronecker) whitening ---------------
#
# z has shape (N, T, n): standard normal draws, one n-vector per time step.
# The loss is offset + 0.5 * (||A z_t + b_t||^2 summed over t - ||z||^2).


def kron_losses_numpy(z, a, b, offset):
    w = z @ a.T
    w += b
    return offset + 0.5 * (np.einsum("ktn,ktn->k", w, w) - np.einsum("ktn,ktn->k", z, z))


@njit(cache=True, fastmath=False, parallel=False)
def kron_losses_numba(z, a, b, offset):
    nsamp, tlen, n = z.shape
    out = np.empty(nsamp)
    for k in prange(nsamp):
        acc = 0.0
        for t in range(tlen):
            for i in range(n):
                wi = b[t, i]
                zi = z[k, t, i]
                for j in range(n):
                    wi += a[i, j] * z[k, t, j]
                acc += wi * wi - zi * zi
        out[k] = offset + 0.5 * acc
    return out


# -- privacy loss for dense whitening ----------------------------------------


def dense_losses_numpy(z, a, b, offset):
    w = z @ a.T
    w += b
    return offset + 0.5 * (np.einsum("kd,kd->k", w, w) - np.einsum("kd,kd->k", z, z))


@njit(cache=True)
def dense_losses_numba(z, a, b, offset):
    # the product goes through BLAS; only the reductions are fused
    w = np.dot(z, a.T)
    nsamp, d = z.shape
    out = np.empty(nsamp)
    for k in range(nsamp):
        acc = 0.0
        for i in range(d):
            wi = w[k, i] + b[i]
            acc += wi * wi - z[k, i] * z[k, i]
        out[k] = offset + 0.5 * acc
    return out


# -- exceedance counting ------------------------------------------------------


def tail_counts_numpy(losses, eps_grid, two_sided):
    vals = np.abs(losses) if two_sided else losses
    srt = np.sort(vals)
    # count of values strictly greater than each threshold
    return (srt.size - np.searchsorted(srt, eps_grid, side="right")).astype(np.int64)


@njit(cache=True)
def tail_counts_numba(losses, eps_grid, two_sided):
    counts = np.zeros(eps_grid.size, dtype=np.int64)
    for k in range(losses.size):
        v = abs(losses[k]) if two_sided else losses[k]
        for e in range(eps_grid.size):
            if v > eps_grid[e]:
                counts[e] += 1
    return counts


if USE_NUMBA:
    kron_losses = kron_losses_numba
    dense_losses = dense_losses_numba
    tail_counts = tail_counts_numba
else:
    kron_losses = kron_losses_numpy
    dense_losses = dense_losses_numpy
    tail_counts = tail_counts_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
logger.debug("graphdp kernels backend: %s", BACKEND)
