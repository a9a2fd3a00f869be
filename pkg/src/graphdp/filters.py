"""Graph filters H(S) and their spectral constants."""
from __future__ import annotations

import dataclasses
from typing import Sequence, Union

import numpy as np
import scipy.linalg

from .errors import NoUniformLowerBound, NotInvertible
from .graph import AdjacentPair, Gso, spectral_norm

COND_LIMIT = 1e12
RANK_TOL = 1e-10


@dataclasses.dataclass(frozen=True)
class Polynomial:
    """H(S) = sum_k h[k] S^k."""

    h: tuple

    def __post_init__(self):
        h = tuple(float(x) for x in self.h)
        if len(h) == 0:
            raise ValueError("polynomial filter needs at least one coefficient")
        if not all(np.isfinite(h)):
            raise ValueError("polynomial coefficients must be finite")
        object.__setattr__(self, "h", h)

    def to_dict(self):
        return {"type": "polynomial", "h": list(self.h)}


@dataclasses.dataclass(frozen=True)
class Diffusion:
    """H(S) = (I - c S)^{-1}."""

    c: float

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c > 0):
            raise ValueError("diffusion rate c must be positive")
        object.__setattr__(self, "c", float(self.c))

    def to_dict(self):
        return {"type": "diffusion", "c": self.c}


FilterSpec = Union[Polynomial, Diffusion]


def filter_from_dict(d: dict) -> FilterSpec:
    kind = d.get("type")
    if kind == "diffusion":
        return Diffusion(d["c"])
    if kind == "polynomial":
        return Polynomial(tuple(d["h"]))
    raise ValueError(f"unknown filter type {kind!r}")


@dataclasses.dataclass(frozen=True)
class FilterBounds:
    """Spectral constants of a filter class.

    Attributes:
      gamma: lower bound on sigma_min(H(S)).
      Gamma: upper bound on ||H(S)||_2.
      kappa: Lipschitz constant, ||H(S) - H(S')|| <= kappa * ||S - S'||.
      B: bound on ||S||_2 defining the class (nan for instance bounds).
      source: "certified" or "empirical".
    """

    gamma: float
    Gamma: float
    kappa: float
    B: float = float("nan")
    source: str = "certified"

    def __post_init__(self):
        # gamma == 0 marks a class (or instance set) that reaches a singular filter
        if not (0 <= self.gamma <= self.Gamma * (1 + 1e-12)) or self.kappa < 0:
            raise ValueError(f"inconsistent filter bounds {self}")

    def to_dict(self):
        return dataclasses.asdict(self)


def _as_matrix(g) -> np.ndarray:
    return g.S if isinstance(g, Gso) else np.asarray(g, dtype=float)


def filter_matrix(spec: FilterSpec, g) -> np.ndarray:
    """Materialize H(S) for a concrete shift operator."""
    S = _as_matrix(g)
    n = S.shape[0]
    if isinstance(spec, Polynomial):
        # Horner evaluation
        H = np.zeros((n, n))
        for hk in reversed(spec.h):
            H = H @ S
            H[np.diag_indices(n)] += hk
        return H
    if isinstance(spec, Diffusion):
        A = np.eye(n) - spec.c * S
        if n and np.linalg.cond(A) > COND_LIMIT:
            raise NotInvertible(f"I - {spec.c} S is numerically singular")
        try:
            H = scipy.linalg.solve(A, np.eye(n), assume_a="sym")
        except np.linalg.LinAlgError as exc:
            raise NotInvertible(str(exc)) from exc
        return 0.5 * (H + H.T)
    raise TypeError(f"unsupported filter spec {spec!r}")


def filter_bounds(spec: FilterSpec, B: float) -> FilterBounds:
    """Certified constants over all symmetric S with ||S||_2 <= B.

    Diffusion filters use the Neumann-series bounds and the resolvent identity
    H(S) - H(S') = c H(S) (S - S') H(S').  Polynomial filters bound the
    spectrum of p(S) by |h_0| -/+ sum_{k>=1} |h_k| B^k.

    Raises:
      NotInvertible: diffusion with c * B >= 1.
      NoUniformLowerBound: polynomial whose spectrum may touch zero on the class.
    """
    if B < 0:
        raise ValueError("B must be nonnegative")
    if isinstance(spec, Diffusion):
        cB = spec.c * B
        if cB >= 1:
            raise NotInvertible(f"c*B = {cB} >= 1, the class contains singular I - cS")
        Gamma = 1.0 / (1.0 - cB)
        return FilterBounds(1.0 / (1.0 + cB), Gamma, spec.c * Gamma**2, B)
    h = np.abs(np.asarray(spec.h))
    k = np.arange(h.size)
    powers = np.array([B**j for j in k], dtype=float)
    Gamma = float(np.sum(h * powers))
    dpow = np.array([j * B ** (j - 1) if j else 0.0 for j in k], dtype=float)
    kappa = float(np.sum(h * dpow))
    gamma = float(h[0] - np.sum(h[1:] * powers[1:]))
    if gamma <= 0:
        exc = NoUniformLowerBound(
            "polynomial filter may be singular on ||S|| <= B; use empirical_instance_bounds"
        )
        # upper constants remain valid and are handed back to the caller
        exc.Gamma, exc.kappa = Gamma, kappa
        raise exc
    return FilterBounds(gamma, Gamma, kappa, B)


def empirical_instance_bounds(spec: FilterSpec, pairs: Sequence[AdjacentPair]) -> FilterBounds:
    """Constants measured on the concrete graphs appearing in ``pairs``."""
    if not pairs:
        raise ValueError("need at least one adjacent pair")
    cache = {}

    def H(g):
        if id(g) not in cache:
            cache[id(g)] = filter_matrix(spec, g)
        return cache[id(g)]

    svals = []
    kappa = 0.0
    for pr in pairs:
        Hb, Ho = H(pr.base), H(pr.other)
        svals.append(np.linalg.svd(Hb, compute_uv=False))
        svals.append(np.linalg.svd(Ho, compute_uv=False))
        kappa = max(kappa, spectral_norm(Hb - Ho) / pr.delta_s)
    gamma = max(0.0, min(float(s[-1]) for s in svals))
    Gamma = max(float(s[0]) for s in svals)
    return FilterBounds(gamma, Gamma, kappa, source="empirical")


def column_space_basis(M, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of range(M) from a thin SVD.

    Singular values at or below ``tol * sigma_max`` are treated as zero.
    Returns an (m, r) array, r = 0 for the zero matrix.
    """
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.zeros((M.shape[0], 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((M.shape[0], 0))
    r = int(np.sum(s > tol * s[0]))
    return U[:, :r]
