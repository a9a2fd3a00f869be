"""Renyi-divergence privacy accounting for a graph shift operator.

The release is vec(Y~) = (I_T kron H(S)) vec(U~) with Gaussian inputs, so the
release under S and under an adjacent S' are two Gaussians P and Q.  The
exact order-alpha Renyi divergence between them is turned into an
(epsilon, delta) statement with the Chernoff bound

    Pr_P[L > eps] <= exp((alpha - 1) (D_alpha(P||Q) - eps)),   alpha > 1,

optimized over alpha.  A closed-form spectral certificate built only from
filter constants (gamma, Gamma, kappa) and the extreme noise eigenvalues is
provided as well; it is always checked against the exact divergence before
being reported as valid.
"""
from __future__ import annotations

import dataclasses
import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import AlphaInfeasible, SupportMismatch
from .filters import RANK_TOL, FilterBounds, FilterSpec, column_space_basis, filter_matrix
from .graph import AdjacentPair, Gso, enumerate_adjacent
from .mechanism import CovarianceModel, psd_factor, unvec, vec

logger = logging.getLogger(__name__)

ALPHA_MIN = 1.0 + 1e-6
ALPHA_MARGIN = 1e-6
ALPHA_CAP = 1e8
GRID_POINTS = 64
DUAL_RTOL = 1e-8
ANGLE_TOL = 1e-8

# test-only: perturbs the alpha weight inside the precision mixture
_precision_fault = 0.0

METHODS = (
    "exact",
    "closed_form",
    "kernel_collapse",
    "singular_projection",
    "not_absolutely_continuous",
)


@dataclasses.dataclass(frozen=True, eq=False)
class OutputGaussian:
    """Distribution of the vectorized release.

    Either ``cov`` holds a dense covariance, or ``sigma_t`` and ``gram`` hold
    the factors of K = Sigma_T kron (H H^T).  ``support`` is the orthonormal
    basis the distribution was projected onto, if any.
    """

    mu: np.ndarray
    n: int
    T: int
    cov: np.ndarray | None = None
    sigma_t: np.ndarray | None = None
    gram: np.ndarray | None = None
    factor_parts: tuple | None = None
    support: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return int(self.mu.size)

    @property
    def is_kron(self) -> bool:
        return self.sigma_t is not None

    def dense_cov(self) -> np.ndarray:
        if self.cov is not None:
            return self.cov
        return np.kron(self.sigma_t, self.gram)

    @functools.cached_property
    def factor(self) -> np.ndarray:
        """F with F F^T = K."""
        if self.factor_parts is None:
            return psd_factor(self.dense_cov())
        kind, A, H = self.factor_parts
        if kind == "kron":
            return np.kron(A, H)
        return np.kron(np.eye(self.T), H) @ A

    @functools.cached_property
    def rank(self) -> int:
        if self.dim == 0:
            return 0
        if self.is_kron and self.factor_parts is not None:
            _, A, H = self.factor_parts
            return column_space_basis(A).shape[1] * column_space_basis(H).shape[1]
        return column_space_basis(self.factor).shape[1]

    @property
    def full_rank(self) -> bool:
        return self.rank == self.dim


class ClosedFormBound(NamedTuple):
    value: float
    valid: bool | None


@dataclasses.dataclass(frozen=True)
class PairResult:
    edge: tuple[int, int]
    epsilon: float
    alpha_star: float
    method: str
    ordering: str  # "SS'" or "S'S": which ordering attained the max
    dual_form_ok: bool = True


@dataclasses.dataclass(frozen=True)
class PrivacyAssessment:
    """(epsilon, delta) certificate for releasing Y w.r.t. the GSO.

    ``epsilon`` is one-sided: Pr[L > epsilon] <= delta for every adjacent pair
    and both orderings.  The two-sided event |L| > epsilon then has
    probability at most ``delta_two_sided = 2 delta``.
    """

    epsilon: float
    delta: float
    alpha_star: float
    method: str
    edge: tuple[int, int] | None = None
    bounds_used: FilterBounds | None = None
    validity_flags: dict = dataclasses.field(default_factory=dict)
    per_pair: tuple = ()

    @property
    def delta_two_sided(self) -> float:
        return min(1.0, 2.0 * self.delta)

    def to_dict(self) -> dict:
        def num(x):
            return None if x is None or not math.isfinite(x) else float(x)

        return {
            "epsilon": num(self.epsilon),
            "delta": self.delta,
            "delta_two_sided": self.delta_two_sided,
            "alpha_star": num(self.alpha_star),
            "method": self.method,
            "edge": list(self.edge) if self.edge is not None else None,
            "bounds_used": self.bounds_used.to_dict() if self.bounds_used else None,
            "validity_flags": self.validity_flags,
        }


# -- linear algebra helpers ---------------------------------------------------


def _chol(A):
    return np.linalg.cholesky(0.5 * (A + A.T))


def _logdet_pd(A) -> float:
    """log det of a positive definite matrix via Cholesky."""
    if A.size == 0:
        return 0.0
    L = _chol(A)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def _inv_pd(A):
    L = _chol(A)
    Linv = scipy.linalg.solve_triangular(L, np.eye(A.shape[0]), lower=True)
    return Linv.T @ Linv


# -- building output distributions -----------------------------------------


def output_distribution(spec: FilterSpec, g, M, cov: CovarianceModel) -> OutputGaussian:
    """Gaussian law of vec(H(S) U~) for vec(U~) ~ N(vec(M), cov)."""
    H = filter_matrix(spec, g)
    return output_from_filter(H, M, cov)


def output_from_filter(H, M, cov: CovarianceModel) -> OutputGaussian:
    M = np.asarray(M, dtype=float)
    n, T = M.shape
    mu = vec(H @ M)
    A = cov.factor()
    if cov.is_kron:
        return OutputGaussian(
            mu=mu,
            n=n,
            T=T,
            sigma_t=cov.sigma_t,
            gram=H @ H.T,
            factor_parts=("kron", A, H),
        )
    HS = np.kron(np.eye(T), H)
    K = HS @ cov.matrix @ HS.T
    return OutputGaussian(mu=mu, n=n, T=T, cov=0.5 * (K + K.T), factor_parts=("dense", A, H))


def _same_temporal(P: OutputGaussian, Q: OutputGaussian) -> bool:
    return (
        P.is_kron
        and Q.is_kron
        and (P.sigma_t is Q.sigma_t or np.array_equal(P.sigma_t, Q.sigma_t))
    )


def _check_pair(P: OutputGaussian, Q: OutputGaussian):
    if P.dim != Q.dim:
        raise SupportMismatch(f"dimensions differ: {P.dim} vs {Q.dim}")


# -- divergences ----------------------------------------------------------------


def renyi_exact(P: OutputGaussian, Q: OutputGaussian, alpha: float, crosscheck: bool = True) -> float:
    """Order-alpha Renyi divergence D_alpha(P || Q) between full-rank Gaussians.

    Uses the covariance mixture K_a = alpha K' + (1 - alpha) K,

        D = alpha/2 dmu^T K_a^{-1} dmu
            - 1/(2(alpha-1)) [logdet K_a - (1-alpha) logdet K - alpha logdet K'].

    With ``crosscheck`` the precision-mixture form is evaluated too and the
    two must agree to a relative 1e-8, up to log-determinant roundoff that
    grows like 1/(alpha - 1).

    Raises:
      AlphaInfeasible: K_a is not positive definite.
      SupportMismatch: either covariance is singular (project first).
    """
    if alpha <= 1:
        raise AlphaInfeasible("alpha must exceed 1")
    _check_pair(P, Q)
    if P.dim == 0:
        return 0.0
    if _same_temporal(P, Q):
        val = _renyi_kron(P, Q, alpha)
    else:
        val = _renyi_cov_mixture(P.mu, P.dense_cov(), Q.mu, Q.dense_cov(), alpha)
    if crosscheck:
        other, ld_p, ld_q = _precision_parts(P, Q, alpha)
        # the log term loses ~eps_mach * |logdet| / (alpha - 1) to cancellation
        slack = 1e-13 * (abs(ld_p) + abs(ld_q) + P.dim) / (alpha - 1.0)
        if not math.isclose(val, other, rel_tol=DUAL_RTOL, abs_tol=max(1e-12, slack)):
            raise ArithmeticError(
                f"covariance- and precision-mixture forms disagree: {val!r} vs {other!r}"
            )
    return val


def _renyi_cov_mixture(mu_p, Kp, mu_q, Kq, alpha):
    try:
        ld_p, ld_q = _logdet_pd(Kp), _logdet_pd(Kq)
    except np.linalg.LinAlgError as exc:
        raise SupportMismatch("singular output covariance; project onto the support first") from exc
    Ka = alpha * Kq + (1.0 - alpha) * Kp
    try:
        La = _chol(Ka)
    except np.linalg.LinAlgError as exc:
        raise AlphaInfeasible(f"alpha={alpha} outside the feasible range") from exc
    ld_a = 2.0 * float(np.sum(np.log(np.diag(La))))
    r = scipy.linalg.solve_triangular(La, mu_p - mu_q, lower=True)
    quad = float(r @ r)
    return 0.5 * alpha * quad - (ld_a - (1.0 - alpha) * ld_p - alpha * ld_q) / (2.0 * (alpha - 1.0))


def _renyi_kron(P, Q, alpha):
    # K = St kron G: Sigma_T drops out of the log term entirely
    G, Gq, St = P.gram, Q.gram, P.sigma_t
    try:
        ld_p, ld_q = _logdet_pd(G), _logdet_pd(Gq)
        Lt = _chol(St)
    except np.linalg.LinAlgError as exc:
        raise SupportMismatch("singular output covariance; project onto the support first") from exc
    Ga = alpha * Gq + (1.0 - alpha) * G
    try:
        La = _chol(Ga)
    except np.linalg.LinAlgError as exc:
        raise AlphaInfeasible(f"alpha={alpha} outside the feasible range") from exc
    ld_a = 2.0 * float(np.sum(np.log(np.diag(La))))
    D = unvec(P.mu - Q.mu, P.n, P.T)
    # tr(D^T Ga^{-1} D St^{-1}) = ||La^{-1} D Lt^{-T}||_F^2
    X = scipy.linalg.solve_triangular(La, D, lower=True)
    X = scipy.linalg.solve_triangular(Lt, X.T, lower=True)
    quad = float(np.sum(X * X))
    logterm = P.T * (ld_a - (1.0 - alpha) * ld_p - alpha * ld_q)
    return 0.5 * alpha * quad - logterm / (2.0 * (alpha - 1.0))


def renyi_precision_form(P: OutputGaussian, Q: OutputGaussian, alpha: float) -> float:
    """D_alpha via the precision mixture B_a = (1 - alpha) K'^{-1} + alpha K^{-1}.

    Log term 1/(2(alpha-1)) ln[det B_a^{-1} / (det K'^{1-alpha} det K^alpha)];
    mean term alpha/2 dmu^T K'^{-1} B_a^{-1} K^{-1} dmu, since the covariance
    mixture factors as K B_a K'.  Always computed densely.
    """
    return _precision_parts(P, Q, alpha)[0]


def _precision_parts(P, Q, alpha):
    if alpha <= 1:
        raise AlphaInfeasible("alpha must exceed 1")
    _check_pair(P, Q)
    if P.dim == 0:
        return 0.0, 0.0, 0.0
    K, Kq = P.dense_cov(), Q.dense_cov()
    try:
        Ki, Kqi = _inv_pd(K), _inv_pd(Kq)
        ld_p, ld_q = _logdet_pd(K), _logdet_pd(Kq)
    except np.linalg.LinAlgError as exc:
        raise SupportMismatch("singular output covariance; project onto the support first") from exc
    a = alpha + _precision_fault
    Ba = (1.0 - a) * Kqi + a * Ki
    try:
        Lb = _chol(Ba)
    except np.linalg.LinAlgError as exc:
        raise AlphaInfeasible(f"alpha={alpha} outside the feasible range") from exc
    ld_b = 2.0 * float(np.sum(np.log(np.diag(Lb))))
    logterm = -ld_b - (1.0 - alpha) * ld_q - alpha * ld_p
    dmu = P.mu - Q.mu
    v = scipy.linalg.cho_solve((Lb, True), Ki @ dmu)
    quad = float((Kqi @ dmu) @ v)
    return logterm / (2.0 * (alpha - 1.0)) + 0.5 * alpha * quad, ld_p, ld_q


def kl_divergence(P: OutputGaussian, Q: OutputGaussian) -> float:
    """KL(P || Q) from its Gaussian closed form."""
    _check_pair(P, Q)
    if P.dim == 0:
        return 0.0, 0.0, 0.0
    K, Kq = P.dense_cov(), Q.dense_cov()
    Lq = _chol(Kq)
    X = scipy.linalg.solve_triangular(Lq, _chol(K), lower=True)
    r = scipy.linalg.solve_triangular(Lq, P.mu - Q.mu, lower=True)
    return 0.5 * (float(np.sum(X * X)) + float(r @ r) - P.dim + _logdet_pd(Kq) - _logdet_pd(K))


def alpha_max(P: OutputGaussian, Q: OutputGaussian) -> float:
    """Supremum of the orders for which D_alpha(P || Q) is finite.

    With lam the largest generalized eigenvalue of (K, K'), the mixture stays
    positive definite for alpha < lam / (lam - 1); unbounded when lam <= 1.
    """
    _check_pair(P, Q)
    if P.dim == 0:
        return math.inf
    if _same_temporal(P, Q):
        lam = scipy.linalg.eigh(P.gram, Q.gram, eigvals_only=True)[-1]
    else:
        lam = scipy.linalg.eigh(P.dense_cov(), Q.dense_cov(), eigvals_only=True)[-1]
    if lam <= 1.0 + 1e-14:
        return math.inf
    return float(lam / (lam - 1.0))


# -- optimization over alpha --------------------------------------------------


def minimize_over_alpha(objective: Callable[[float], float], amax: float) -> tuple[float, float]:
    """Minimize ``objective`` over alpha in (1, amax).

    A 64-point grid in log(alpha - 1) locates the basin, then a bounded
    Brent/golden-section search refines it.  Infeasible orders score +inf.

    Returns:
      (minimum value, minimizing alpha).
    """
    hi = ALPHA_CAP if not math.isfinite(amax) else amax - ALPHA_MARGIN
    if hi <= ALPHA_MIN:
        hi = 0.5 * (1.0 + amax) if math.isfinite(amax) else ALPHA_CAP
    lo = min(ALPHA_MIN, 0.5 * (1.0 + hi))
    xlo, xhi = math.log(lo - 1.0), math.log(hi - 1.0)

    def f(x):
        try:
            v = objective(1.0 + math.exp(x))
        except AlphaInfeasible:
            return math.inf
        return v if math.isfinite(v) else math.inf

    xs = np.linspace(xlo, xhi, GRID_POINTS)
    vals = np.array([f(x) for x in xs])
    i = int(np.argmin(vals))
    best_x, best_v = xs[i], vals[i]
    if not math.isfinite(best_v):
        raise AlphaInfeasible("no feasible Renyi order found")
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
    if b > a:
        res = scipy.optimize.minimize_scalar(
            f, bounds=(a, b), method="bounded", options={"xatol": 1e-10, "maxiter": 500}
        )
        if res.fun < best_v:
            best_x, best_v = float(res.x), float(res.fun)
    return float(best_v), 1.0 + math.exp(best_x)


def _require_support(P, Q):
    _check_pair(P, Q)
    if P.dim and not (P.full_rank and Q.full_rank):
        raise SupportMismatch("rank-deficient release; call project_singular first")


def delta_bound(P: OutputGaussian, Q: OutputGaussian, epsilon: float) -> tuple[float, float]:
    """Smallest Chernoff delta for Pr_P[L > epsilon], clipped to 1."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    _require_support(P, Q)
    if P.dim == 0:
        return 0.0, math.inf
    amax = alpha_max(P, Q)
    logd, a = minimize_over_alpha(
        lambda al: (al - 1.0) * (renyi_exact(P, Q, al, crosscheck=False) - epsilon), amax
    )
    return min(1.0, math.exp(logd)), a


def epsilon_for_delta(P: OutputGaussian, Q: OutputGaussian, delta: float) -> tuple[float, float]:
    """inf over alpha of D_alpha(P||Q) + ln(1/delta)/(alpha - 1)."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    _require_support(P, Q)
    if P.dim == 0:
        return 0.0, math.inf
    amax = alpha_max(P, Q)
    logi = math.log(1.0 / delta)
    eps, a = minimize_over_alpha(
        lambda al: renyi_exact(P, Q, al, crosscheck=False) + logi / (al - 1.0), amax
    )
    return max(eps, 0.0), a


# -- closed-form spectral certificate ------------------------------------------


def spectral_constants(bounds: FilterBounds, lambda_min_cov: float, lambda_max_cov: float):
    """(omega, Omega): extreme eigenvalue bounds of the output covariance."""
    return bounds.gamma**2 * lambda_min_cov, bounds.Gamma**2 * lambda_max_cov


def closed_form_alpha_max(bounds: FilterBounds, lambda_min_cov: float, lambda_max_cov: float) -> float:
    omega, Omega = spectral_constants(bounds, lambda_min_cov, lambda_max_cov)
    if Omega <= omega:
        return math.inf
    return Omega / (Omega - omega)


def spectral_closed_form(
    bounds: FilterBounds,
    lambda_min_cov: float,
    lambda_max_cov: float,
    T: int,
    n: int,
    delta_s: float,
    norm_M: float,
    alpha: float,
    exact: float | None = None,
) -> ClosedFormBound:
    """Spectral upper bound on D_alpha built from class constants only.

    With omega = gamma^2 lam_min, Omega = Gamma^2 lam_max and
    C_a = (alpha - (alpha - 1) Omega/omega) / Omega:

        Tn/(2(alpha-1)) ln[Omega^(alpha-1) / (C_a omega^(-alpha))]
        + alpha (2 alpha - 1) (kappa delta_s ||M||)^2 / (2 (alpha-1) omega^2)

    ``norm_M`` is the Euclidean norm of vec(M).  If ``exact`` is given, the
    result is flagged valid only when it is at least that value.

    Raises:
      AlphaInfeasible: C_a <= 0, or alpha <= 1.
    """
    if alpha <= 1:
        raise AlphaInfeasible("alpha must exceed 1")
    if lambda_min_cov <= 0 or bounds.gamma <= 0:
        raise AlphaInfeasible("closed form needs gamma > 0 and a positive definite covariance")
    omega, Omega = spectral_constants(bounds, lambda_min_cov, lambda_max_cov)
    C = (alpha - (alpha - 1.0) * Omega / omega) / Omega
    if C <= 0:
        raise AlphaInfeasible(f"C_alpha = {C} <= 0 at alpha={alpha}")
    am1 = alpha - 1.0
    log_arg = am1 * math.log(Omega) + alpha * math.log(omega) - math.log(C)
    logterm = T * n / (2.0 * am1) * log_arg
    meanterm = alpha * (2.0 * alpha - 1.0) * (bounds.kappa * delta_s * norm_M) ** 2 / (
        2.0 * am1 * omega**2
    )
    value = logterm + meanterm
    valid = None if exact is None else bool(value >= exact)
    return ClosedFormBound(value, valid)


def closed_form_epsilon(
    bounds: FilterBounds,
    cov: CovarianceModel,
    delta_s: float,
    norm_M: float,
    delta: float,
    instances: Sequence[tuple[OutputGaussian, OutputGaussian]] = (),
) -> tuple[float, float, bool | None]:
    """Epsilon certified by the closed form, with its validity against exact divergences.

    The closed form is checked at every grid order where it is finite and at
    its optimum, for every (P, Q) in ``instances``; an exact divergence that
    is infinite or larger than the closed form marks it invalid.

    Returns:
      (epsilon, alpha_star, valid); valid is None when no instances are given.
    """
    lam_min, lam_max = cov.extreme_eigenvalues()
    logi = math.log(1.0 / delta)

    def D(al):
        return spectral_closed_form(bounds, lam_min, lam_max, cov.T, cov.n, delta_s, norm_M, al).value

    amax = closed_form_alpha_max(bounds, lam_min, lam_max)
    if amax <= ALPHA_MIN + ALPHA_MARGIN:
        # omega = 0 (singular noise or gamma = 0): no feasible order
        raise AlphaInfeasible("closed form has no feasible order (omega = 0)")
    eps, a_star = minimize_over_alpha(lambda al: D(al) + logi / (al - 1.0), amax)
    if not instances:
        return eps, a_star, None
    hi = ALPHA_CAP if not math.isfinite(amax) else amax - ALPHA_MARGIN
    hi = max(hi, ALPHA_MIN * (1 + 1e-9))
    alphas = list(1.0 + np.geomspace(ALPHA_MIN - 1.0, hi - 1.0, 16)) + [a_star]
    valid = True
    for P, Q in instances:
        for al in alphas:
            try:
                cf = D(al)
            except AlphaInfeasible:
                continue
            try:
                ex = renyi_exact(P, Q, al, crosscheck=False)
            except AlphaInfeasible:
                ex = math.inf
            if not cf >= ex:
                valid = False
                break
        if not valid:
            break
    return eps, a_star, valid


# -- singular cases -------------------------------------------------------------


def _range_basis_of_cov(cov: CovarianceModel, tol: float):
    if cov.is_kron:
        Bt = column_space_basis(cov.sigma_t, tol)
        return np.kron(Bt, np.eye(cov.n))
    return column_space_basis(cov.matrix, tol)


def kernel_collapse_check(spec: FilterSpec, pair: AdjacentPair, M, cov: CovarianceModel, tol: float = RANK_TOL) -> bool:
    """True when range(Sigma) and vec(M) both lie in ker(H_S - H_S').

    Then the release has the same law under S and S' and the divergence is 0.
    """
    dH = filter_matrix(spec, pair.base) - filter_matrix(spec, pair.other)
    M = np.asarray(M, dtype=float)
    if np.linalg.norm(dH @ M) > tol * max(1.0, np.linalg.norm(M)):
        return False
    basis = _range_basis_of_cov(cov, tol)
    if basis.shape[1] == 0:
        return True
    # (I_T kron dH) v for each basis column v, with v reshaped to n x T
    V = basis.T.reshape(basis.shape[1], cov.T, cov.n)
    return bool(np.max(np.linalg.norm(V @ dH.T, axis=(1, 2))) <= tol)


def project_singular(
    P: OutputGaussian, Q: OutputGaussian, tol: float = RANK_TOL, angle_tol: float = ANGLE_TOL
) -> tuple[OutputGaussian, OutputGaussian]:
    """Restrict two degenerate Gaussians to their common support.

    W = range(H_S Sigma^(1/2)) must equal W' = range(H_S' Sigma^(1/2)) and the
    mean difference must lie in W; otherwise the laws are mutually singular.

    Raises:
      SupportMismatch: the supports differ.
    """
    _check_pair(P, Q)
    W = column_space_basis(P.factor, tol)
    Wq = column_space_basis(Q.factor, tol)
    if W.shape[1] != Wq.shape[1]:
        raise SupportMismatch(f"support dimensions differ: {W.shape[1]} vs {Wq.shape[1]}")
    r = W.shape[1]
    if r:
        angles = scipy.linalg.subspace_angles(W, Wq)
        if np.max(angles) > angle_tol:
            raise SupportMismatch(f"supports differ (largest principal angle {np.max(angles):.3g})")
    dmu = P.mu - Q.mu
    off = dmu - W @ (W.T @ dmu)
    if np.linalg.norm(off) > angle_tol * max(1.0, np.linalg.norm(P.mu), np.linalg.norm(Q.mu)):
        raise SupportMismatch("mean difference leaves the common support")

    def proj(X: OutputGaussian) -> OutputGaussian:
        F = W.T @ X.factor
        return OutputGaussian(mu=W.T @ X.mu, n=X.n, T=X.T, cov=F @ F.T, support=W)

    return proj(P), proj(Q)


# -- per-pair and worst-case assessment ---------------------------------------


def _prepare(P, Q):
    """Full-rank pair as-is, rank-deficient pair projected; returns (P, Q, method)."""
    if P.full_rank and Q.full_rank:
        return P, Q, "exact"
    Pp, Qp = project_singular(P, Q)
    return Pp, Qp, "singular_projection"


def assess_pair(spec: FilterSpec, pair: AdjacentPair, M, cov: CovarianceModel, delta: float) -> PairResult:
    """Worst of both orderings for one adjacent pair."""
    if kernel_collapse_check(spec, pair, M, cov):
        return PairResult(pair.edge, 0.0, math.inf, "kernel_collapse", "SS'")
    P = output_distribution(spec, pair.base, M, cov)
    Q = output_distribution(spec, pair.other, M, cov)
    try:
        Pp, Qp, method = _prepare(P, Q)
    except SupportMismatch as exc:
        logger.info("edge %s: %s", pair.edge, exc)
        return PairResult(pair.edge, math.inf, math.nan, "not_absolutely_continuous", "SS'")
    best = None
    ok = True
    for label, (A, B) in (("SS'", (Pp, Qp)), ("S'S", (Qp, Pp))):
        eps, a = epsilon_for_delta(A, B, delta)
        if A.dim and math.isfinite(a):
            try:
                renyi_exact(A, B, a, crosscheck=True)
            except ArithmeticError as exc:
                logger.warning("edge %s: %s", pair.edge, exc)
                ok = False
            except AlphaInfeasible:
                pass
        if best is None or eps > best[0]:
            best = (eps, a, label)
    return PairResult(pair.edge, best[0], best[1], method, best[2], ok)


def worst_case_assessment(
    spec: FilterSpec,
    g: Gso,
    M,
    cov: CovarianceModel,
    delta: float,
    delta_s: float = 1.0,
    edges=None,
    bounds: FilterBounds | None = None,
    workers: int = 1,
) -> PrivacyAssessment:
    """Largest epsilon over all single-edge neighbours of ``g`` and both orderings.

    Ties go to the lexicographically smallest edge.
    """
    pairs = enumerate_adjacent(g, delta_s, edges)
    run = functools.partial(assess_pair, spec, M=M, cov=cov, delta=delta)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, pairs))
    else:
        results = [run(p) for p in pairs]
    results.sort(key=lambda r: r.edge)
    if not results:
        return PrivacyAssessment(0.0, delta, math.inf, "kernel_collapse", None, bounds)
    worst = results[0]
    for r in results[1:]:
        if r.epsilon > worst.epsilon:
            worst = r
    flags = {
        "dual_form_agreement": all(r.dual_form_ok for r in results),
        "worst_ordering": worst.ordering,
        "norm_M": "euclidean norm of vec(M)",
        "pairs": len(results),
    }
    return PrivacyAssessment(
        epsilon=worst.epsilon,
        delta=delta,
        alpha_star=worst.alpha_star,
        method=worst.method,
        edge=worst.edge,
        bounds_used=bounds,
        validity_flags=flags,
        per_pair=tuple(results),
    )
