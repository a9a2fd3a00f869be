"""Monte Carlo estimates of the privacy-loss tail Pr[L > eps].

Samples are drawn under P in fixed-size batches; batch b uses the substream
``SeedSequence(seed, spawn_key=(b,))`` so the estimate does not depend on how
the batches are scheduled.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np
import scipy.linalg

from . import _kernels
from .errors import SupportMismatch
from .privacy import OutputGaussian, _chol, _logdet_pd, _same_temporal

BATCH = 10_000


@dataclasses.dataclass(frozen=True)
class TailEstimate:
    p_hat: float
    stderr: float
    n_samples: int
    epsilon: float
    two_sided: bool


def _tail(count: int, n: int, eps: float, two_sided: bool) -> TailEstimate:
    p = count / n
    return TailEstimate(p, math.sqrt(p * (1.0 - p) / n), n, float(eps), two_sided)


def log_likelihood_ratio(y, P: OutputGaussian, Q: OutputGaussian) -> np.ndarray | float:
    """ln p(y) - ln q(y) for one release (shape (d,)) or a batch (shape (N, d)).

    Evaluated directly from Cholesky factors of both covariances.
    """
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    Y = np.atleast_2d(y)
    if Y.shape[1] != P.dim or P.dim != Q.dim:
        raise SupportMismatch(f"release has dimension {Y.shape[1]}, distributions {P.dim}/{Q.dim}")
    if P.dim == 0:
        out = np.zeros(Y.shape[0])
        return float(out[0]) if single else out
    K, Kq = P.dense_cov(), Q.dense_cov()
    L, Lq = _chol(K), _chol(Kq)
    r = scipy.linalg.solve_triangular(L, (Y - P.mu).T, lower=True)
    rq = scipy.linalg.solve_triangular(Lq, (Y - Q.mu).T, lower=True)
    ld = 2.0 * (np.sum(np.log(np.diag(Lq))) - np.sum(np.log(np.diag(L))))
    out = 0.5 * (ld + np.sum(rq * rq, axis=0) - np.sum(r * r, axis=0))
    return float(out[0]) if single else out


class _LossSampler:
    """Draws privacy losses under P through a whitened affine map.

    For y = mu + L z (K = L L^T) the loss is
    0.5 (logdet K' - logdet K + ||A z + b||^2 - ||z||^2)
    with A = L'^{-1} L and b = L'^{-1}(mu - mu').  When both laws share the
    temporal factor, A acts on each time step as an n x n matrix.
    """

    def __init__(self, P: OutputGaussian, Q: OutputGaussian):
        self.dim = P.dim
        if self.dim == 0:
            return
        if _same_temporal(P, Q):
            Lg, Lgq = _chol(P.gram), _chol(Q.gram)
            Lt = _chol(P.sigma_t)
            self.kron = True
            self.n, self.T = P.n, P.T
            self.A = scipy.linalg.solve_triangular(Lgq, Lg, lower=True)
            D = (P.mu - Q.mu).reshape((P.n, P.T), order="F")
            B = scipy.linalg.solve_triangular(Lgq, D, lower=True)
            B = scipy.linalg.solve_triangular(Lt, B.T, lower=True)  # (T, n)
            self.b = np.ascontiguousarray(B)
            self.offset = 0.5 * P.T * (_logdet_pd(Q.gram) - _logdet_pd(P.gram))
        else:
            L, Lq = _chol(P.dense_cov()), _chol(Q.dense_cov())
            self.kron = False
            self.A = scipy.linalg.solve_triangular(Lq, L, lower=True)
            self.b = scipy.linalg.solve_triangular(Lq, P.mu - Q.mu, lower=True)
            self.offset = float(np.sum(np.log(np.diag(Lq))) - np.sum(np.log(np.diag(L))))

    def losses(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.dim == 0:
            return np.zeros(count)
        if self.kron:
            z = rng.standard_normal((count, self.T, self.n))
            return _kernels.kron_losses(z, self.A, self.b, self.offset)
        z = rng.standard_normal((count, self.dim))
        return _kernels.dense_losses(z, self.A, self.b, self.offset)


def sample_losses(P: OutputGaussian, Q: OutputGaussian, n_samples: int, seed: int) -> np.ndarray:
    """Privacy losses L(y) for ``n_samples`` releases y ~ P."""
    sampler = _LossSampler(P, Q)
    out = np.empty(n_samples)
    for b, start in enumerate(range(0, n_samples, BATCH)):
        m = min(BATCH, n_samples - start)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        out[start : start + m] = sampler.losses(rng, m)
    return out


def tail_curve(
    P: OutputGaussian,
    Q: OutputGaussian,
    eps_grid,
    n_samples: int = 100_000,
    seed: int = 0,
    two_sided: bool = False,
) -> list[TailEstimate]:
    """Estimates of Pr_P[L > eps] (or |L| > eps) at every grid point from one sample."""
    eps_grid = np.atleast_1d(np.asarray(eps_grid, dtype=float))
    losses = sample_losses(P, Q, n_samples, seed)
    counts = _kernels.tail_counts(losses, eps_grid, two_sided)
    return [_tail(int(c), n_samples, e, two_sided) for c, e in zip(counts, eps_grid)]


def estimate_tail(
    P: OutputGaussian,
    Q: OutputGaussian,
    epsilon: float,
    n_samples: int = 100_000,
    seed: int = 0,
    two_sided: bool = False,
) -> TailEstimate:
    """Monte Carlo estimate of Pr_{y~P}[L(y) > epsilon]."""
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    return tail_curve(P, Q, [epsilon], n_samples, seed, two_sided)[0]
