"""Built-in property suite run by ``graphdp check``."""
from __future__ import annotations

import contextlib
import math
from typing import Callable

import numpy as np

from . import privacy
from .filters import Diffusion
from .graph import enumerate_adjacent, generate_erdos_renyi
from .mechanism import CovarianceModel, ar1_covariance
from .privacy import (
    OutputGaussian,
    alpha_max,
    kl_divergence,
    output_distribution,
    renyi_exact,
    renyi_precision_form,
)


def random_gaussian(rng, d, cond=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    ev = np.exp(rng.uniform(0, math.log(cond), d))
    return OutputGaussian(mu=rng.standard_normal(d), n=d, T=1, cov=(Q * ev) @ Q.T)


def random_pair(rng, max_n=5, max_T=5):
    n, T = int(rng.integers(1, max_n + 1)), int(rng.integers(1, max_T + 1))
    d = n * T
    return random_gaussian(rng, d), random_gaussian(rng, d)


def random_release_pair(rng, max_n=5, max_T=5, c_range=(0.005, 0.05)):
    """Release laws under a random graph and one random single-edge neighbour.

    The default diffusion rates stay in the weakly-filtered regime of the
    7-vertex experiment (c = 0.01).
    """
    n, T = int(rng.integers(2, max_n + 1)), int(rng.integers(1, max_T + 1))
    g = generate_erdos_renyi(n, 0.5, int(rng.integers(2**31)))
    pairs = enumerate_adjacent(g)
    pr = pairs[int(rng.integers(len(pairs)))]
    spec = Diffusion(float(rng.uniform(*c_range)))
    sigma_t = ar1_covariance(T, float(rng.uniform(0.5, 2.0)), float(rng.uniform(-0.8, 0.8)))
    cov = CovarianceModel.kron_temporal(sigma_t, n)
    M = rng.standard_normal((n, T))
    return output_distribution(spec, pr.base, M, cov), output_distribution(spec, pr.other, M, cov)


def feasible_alpha(rng, P, Q):
    amax = alpha_max(P, Q)
    hi = min(amax, 20.0)
    return 1.0 + (hi - 1.0) * rng.uniform(0.05, 0.9)


def _dual_form(seed=0, count=100):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        P, Q = random_pair(rng)
        a = feasible_alpha(rng, P, Q)
        x = renyi_exact(P, Q, a, crosscheck=False)
        y = renyi_precision_form(P, Q, a)
        worst = max(worst, abs(x - y) / max(abs(x), 1e-300))
    return worst <= privacy.DUAL_RTOL, f"max relative gap {worst:.2e}"


def _er7_pair(sigma=1.0, n=7, T=20, seed=1):
    g = generate_erdos_renyi(n, 0.5, seed)
    pr = enumerate_adjacent(g)[0]
    M = np.random.default_rng(seed).standard_normal((n, T))
    cov = CovarianceModel.kron_temporal(ar1_covariance(T, sigma, 0.5), n)
    spec = Diffusion(0.01)
    return output_distribution(spec, pr.base, M, cov), output_distribution(spec, pr.other, M, cov)


def _kron_vs_dense():
    P, Q = _er7_pair()
    Pd = OutputGaussian(mu=P.mu, n=P.n, T=P.T, cov=P.dense_cov())
    Qd = OutputGaussian(mu=Q.mu, n=Q.n, T=Q.T, cov=Q.dense_cov())
    worst = 0.0
    for a in (1.5, 3.0, 10.0):
        x, y = renyi_exact(P, Q, a, crosscheck=False), renyi_exact(Pd, Qd, a, crosscheck=False)
        worst = max(worst, abs(x - y) / abs(y))
    return worst <= 1e-8, f"max relative gap {worst:.2e}"


def _kl_limit(seed=1, count=20):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        P, Q = random_release_pair(rng)
        kl = kl_divergence(P, Q)
        d = renyi_exact(P, Q, 1.001, crosscheck=False)
        worst = max(worst, abs(d - kl) / (1.0 + kl))
    return worst <= 1e-3, f"max |D_1.001 - KL|/(1+KL) {worst:.2e}"


def _monotone(seed=2, count=20):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        P, Q = random_pair(rng)
        hi = min(alpha_max(P, Q), 50.0)
        vals = [renyi_exact(P, Q, a, crosscheck=False) for a in np.linspace(1.01, hi - 1e-3, 25)]
        if np.any(np.diff(vals) < -1e-10 * (1 + abs(vals[-1]))):
            return False, "divergence decreased in alpha"
    return True, f"{count} instances nondecreasing"


def _scale_free():
    vals = []
    for s in (10.0, 100.0, 1000.0):
        P, Q = _er7_pair(sigma=s)
        vals.append(renyi_exact(P, Q, 5.0, crosscheck=False))
    ok = vals[-1] > 0 and abs(vals[1] - vals[2]) <= 0.02 * vals[2] and vals[0] >= vals[1] >= vals[2]
    return ok, "D_5 at sigma=10,100,1000: " + ", ".join(f"{v:.6g}" for v in vals)


CHECKS: list[tuple[str, Callable]] = [
    ("dual-form agreement", _dual_form),
    ("kron vs dense", _kron_vs_dense),
    ("KL limit", _kl_limit),
    ("monotone in alpha", _monotone),
    ("scale-freeness", _scale_free),
]


@contextlib.contextmanager
def injected_fault(amount: float):
    """Temporarily perturb the precision-mixture formula (mutation testing only)."""
    old = privacy._precision_fault
    privacy._precision_fault = amount
    try:
        yield
    finally:
        privacy._precision_fault = old


def run_check(fault: float = 0.0) -> tuple[bool, list[str]]:
    """Run every property check; returns (all passed, summary lines)."""
    lines, ok_all = [], True
    with injected_fault(fault):
        for name, fn in CHECKS:
            try:
                ok, msg = fn()
            except Exception as exc:  # a crashing check is a failing check
                ok, msg = False, f"{type(exc).__name__}: {exc}"
            ok_all &= ok
            lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {msg}")
    return ok_all, lines
