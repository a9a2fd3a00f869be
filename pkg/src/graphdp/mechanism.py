"""Structured Gaussian input noise, the input-side epsilon and release MSE.

Matrices of signals are n x T (one column per time step) and ``vec`` stacks
columns, so vec(U) is the time-ordered concatenation of the n-vectors u_t.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, InvalidCorrelation, SingularCovariance

logger = logging.getLogger(__name__)

PSD_TOL = 1e-10


def vec(X) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(X, dtype=float).reshape(-1, order="F")


def unvec(x, n: int, T: int) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape((n, T), order="F")


def _check_psd(A, what):
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max(initial=0))):
        raise ValueError(f"{what} must be symmetric")
    ev = np.linalg.eigvalsh(A) if A.size else np.zeros(0)
    if ev.size and ev[0] < -PSD_TOL * max(ev[-1], 0.0) - 1e-300:
        raise ValueError(f"{what} is not positive semidefinite (min eigenvalue {ev[0]:.3g})")


@dataclasses.dataclass(frozen=True, eq=False)
class CovarianceModel:
    """Covariance of vec(U~), dense or Sigma_T kron I_n.

    Build with :meth:`dense` or :meth:`kron_temporal`.
    """

    T: int
    n: int
    sigma_t: np.ndarray | None = None
    matrix: np.ndarray | None = None

    @classmethod
    def dense(cls, sigma, n: int, T: int) -> CovarianceModel:
        sigma = np.array(sigma, dtype=float)
        if sigma.shape != (n * T, n * T):
            raise DimensionMismatch(f"dense covariance must be {(n * T, n * T)}, got {sigma.shape}")
        _check_psd(sigma, "covariance")
        sigma.setflags(write=False)
        return cls(T=T, n=n, matrix=sigma)

    @classmethod
    def kron_temporal(cls, sigma_t, n: int) -> CovarianceModel:
        sigma_t = np.array(sigma_t, dtype=float)
        if sigma_t.ndim != 2 or sigma_t.shape[0] != sigma_t.shape[1]:
            raise DimensionMismatch("temporal covariance must be square")
        _check_psd(sigma_t, "temporal covariance")
        sigma_t.setflags(write=False)
        return cls(T=sigma_t.shape[0], n=n, sigma_t=sigma_t)

    @property
    def is_kron(self) -> bool:
        return self.sigma_t is not None

    @property
    def dim(self) -> int:
        return self.n * self.T

    def to_dense(self) -> np.ndarray:
        if self.is_kron:
            return np.kron(self.sigma_t, np.eye(self.n))
        return self.matrix

    def eigvalsh(self) -> np.ndarray:
        """Ascending eigenvalues; the Kronecker case repeats each temporal one n times."""
        if self.is_kron:
            return np.repeat(np.linalg.eigvalsh(self.sigma_t), self.n)
        return np.linalg.eigvalsh(self.matrix)

    def extreme_eigenvalues(self) -> tuple[float, float]:
        src = self.sigma_t if self.is_kron else self.matrix
        ev = np.linalg.eigvalsh(src)
        return float(ev[0]), float(ev[-1])

    def scaled(self, s2: float) -> CovarianceModel:
        if self.is_kron:
            return CovarianceModel.kron_temporal(s2 * self.sigma_t, self.n)
        return CovarianceModel.dense(s2 * self.matrix, self.n, self.T)

    def factor(self) -> np.ndarray:
        """A with A A^T equal to the (temporal factor of the) covariance.

        Cholesky when positive definite, otherwise a PSD eigen-factor with
        clipped negative eigenvalues.  For the Kronecker model this is the
        T x T factor of Sigma_T.
        """
        src = self.sigma_t if self.is_kron else self.matrix
        return psd_factor(src)


def psd_factor(A) -> np.ndarray:
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(A)
        # roundoff eigenvalues would otherwise survive as sqrt(eps)-sized columns
        cut = w.size * np.finfo(float).eps * max(float(np.max(np.abs(w), initial=0.0)), 0.0)
        return V * np.sqrt(np.where(w > cut, w, 0.0))


def ar1_covariance(T: int, sigma: float, rho: float) -> np.ndarray:
    """Sigma_T[i, j] = sigma^2 rho^|i-j|."""
    if not abs(rho) < 1:
        raise InvalidCorrelation(f"|rho| must be < 1, got {rho}")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    lag = np.abs(np.subtract.outer(np.arange(T), np.arange(T)))
    return sigma**2 * np.power(float(rho), lag)


def sample_inputs(M, cov: CovarianceModel, count: int, seed) -> np.ndarray:
    """Draw ``count`` Gaussian DP inputs with vec(U~) ~ N(vec(M), cov).

    Returns an array of shape (count, n, T).  ``seed`` is anything accepted by
    :func:`numpy.random.default_rng` (an int or a ``SeedSequence``).
    """
    M = np.asarray(M, dtype=float)
    n, T = M.shape
    if (cov.n, cov.T) != (n, T):
        raise DimensionMismatch(f"mean is {n}x{T} but covariance is for {cov.n}x{cov.T}")
    rng = np.random.default_rng(seed)
    A = cov.factor()
    if cov.is_kron:
        Z = rng.standard_normal((count, n, T))
        return M + Z @ A.T
    z = rng.standard_normal((count, n * T))
    noise = z @ A.T
    # vec is column-major: reshape each row back to (T, n) then transpose
    return M + noise.reshape(count, T, n).transpose(0, 2, 1)


def gaussian_epsilon(sensitivity: float, noise_std: float, delta: float) -> float:
    """Classical Gaussian-mechanism epsilon: sensitivity * sqrt(2 ln(1.25/delta)) / std."""
    return sensitivity * math.sqrt(2.0 * math.log(1.25 / delta)) / noise_std


def input_epsilon(delta_u: float, cov: CovarianceModel, delta: float) -> float:
    """Epsilon w.r.t. the input signal under the worst noise direction.

    The classical formula is only proven for epsilon < 1; larger values are
    returned as-is and logged as extrapolations.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if delta_u < 0:
        raise ValueError("delta_u must be nonnegative")
    lam_min, _ = cov.extreme_eigenvalues()
    if lam_min <= 0:
        raise SingularCovariance("input epsilon needs a positive definite covariance")
    eps = gaussian_epsilon(delta_u, math.sqrt(lam_min), delta)
    if eps > 1:
        logger.debug("input epsilon %.4g is a classical-formula extrapolation", eps)
    return eps


def classical_regime(eps: float) -> bool:
    """Whether the classical Gaussian-mechanism formula is in its proven range."""
    return eps < 1.0


def mse(released, clean) -> float:
    released = np.asarray(released, dtype=float)
    clean = np.asarray(clean, dtype=float)
    if released.shape[-2:] != clean.shape[-2:]:
        raise DimensionMismatch(f"shapes {released.shape} and {clean.shape} differ")
    return float(np.mean((released - clean) ** 2))


def load_mean_csv(path) -> np.ndarray:
    """Mean signal matrix from CSV: n rows, T columns, no header."""
    M = np.loadtxt(Path(path), delimiter=",", ndmin=2, encoding="utf-8")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{path}: non-finite entries")
    return M


def cov_from_dict(d: dict, n: int, T: int) -> CovarianceModel:
    """Build a covariance from its config form.

    ``{"type": "ar1_kron", "sigma": s, "rho": r}`` gives AR(1) kron I_n.  An
    optional ``"support"`` list of vertex indices restricts the noise to those
    coordinates, yielding a dense, rank-deficient model.
    """
    kind = d.get("type")
    if kind != "ar1_kron":
        raise ValueError(f"unknown covariance type {kind!r}")
    sigma_t = ar1_covariance(T, d["sigma"], d.get("rho", 0.5))
    support = d.get("support")
    if support is None:
        return CovarianceModel.kron_temporal(sigma_t, n)
    mask = np.zeros(n)
    mask[list(support)] = 1.0
    return CovarianceModel.dense(np.kron(sigma_t, np.diag(mask)), n, T)


__all__ = [
    "CovarianceModel",
    "ar1_covariance",
    "sample_inputs",
    "input_epsilon",
    "gaussian_epsilon",
    "classical_regime",
    "mse",
    "vec",
    "unvec",
    "load_mean_csv",
    "cov_from_dict",
    "psd_factor",
]
