"""Config-driven sweeps, audits and the built-in property check."""
from __future__ import annotations

import copy
import csv
import dataclasses
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .errors import ConfigError, GraphDPError
from .filters import FilterSpec, empirical_instance_bounds, filter_from_dict, filter_matrix
from .graph import PRNG_NAME, Gso, enumerate_adjacent, generate_erdos_renyi, load_edge_list
from .mechanism import CovarianceModel, cov_from_dict, input_epsilon, load_mean_csv, vec
from .montecarlo import tail_curve
from .privacy import (
    AlphaInfeasible,
    SupportMismatch,
    closed_form_alpha_max,
    closed_form_epsilon,
    delta_bound,
    kernel_collapse_check,
    output_distribution,
    project_singular,
    renyi_exact,
    spectral_closed_form,
    worst_case_assessment,
)

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "sigma",
    "rho",
    "mse_mean",
    "mse_stderr",
    "eps_S_exact",
    "eps_S_closed_form",
    "closed_form_valid",
    "eps_U",
    "alpha_star",
    "worst_edge",
    "mc_tail_at_eps",
    "mc_stderr",
]

DEFAULTS = {
    "graph": {"n": 7, "p": 0.5, "seed": 1},
    "T": 20,
    "filter": {"type": "diffusion", "c": 0.01},
    "covariance": {"type": "ar1_kron", "rho": 0.5, "sigma": {"logspace": [-2, 1, 13]}},
    "mean": {"type": "gaussian", "scale": 1.0, "seed": 7},
    "privacy": {"delta": 1e-5, "delta_u": 1.0, "delta_s": 1.0, "edges": None},
    "mc": {"samples": 100_000, "seed": 2024},
    "audit": {"sigma": 1.0},
    "output": "results",
}

MC_RESOLUTION = 1e-4


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("graph", "filter", "mean"):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclasses.dataclass
class ExperimentConfig:
    """Resolved experiment configuration (see ``configs/er7_diffusion.json``)."""

    raw: dict
    graph: Gso
    filter: FilterSpec
    M: np.ndarray
    sigmas: list
    rho: float
    delta: float
    delta_u: float
    delta_s: float
    edges: list | None
    mc_samples: int
    mc_seed: int
    audit_sigma: float
    output: str
    cov_extra: dict

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def T(self) -> int:
        return self.M.shape[1]

    def covariance(self, sigma: float) -> CovarianceModel:
        d = dict(self.cov_extra, type="ar1_kron", sigma=sigma, rho=self.rho)
        return cov_from_dict(d, self.n, self.T)

    def pairs(self):
        return enumerate_adjacent(self.graph, self.delta_s, self.edges)


def _field(cond, path, msg):
    if not cond:
        raise ConfigError(f"config field '{path}': {msg}")


def _sigma_grid(spec) -> list:
    if isinstance(spec, (int, float)):
        return [float(spec)]
    if isinstance(spec, dict) and "logspace" in spec:
        a, b, num = spec["logspace"]
        return [float(x) for x in np.logspace(a, b, int(num))]
    if isinstance(spec, list):
        return [float(x) for x in spec]
    raise ConfigError(f"config field 'covariance.sigma': unsupported value {spec!r}")


def resolve_config(raw: dict, base_dir=None) -> ExperimentConfig:
    """Validate a config dict and materialize graph, filter and mean."""
    base_dir = Path(base_dir or ".")
    cfg = _merge(DEFAULTS, raw)
    g = cfg["graph"]
    if "edge_list" in g:
        graph = load_edge_list(base_dir / g["edge_list"])
    else:
        _field(isinstance(g.get("n"), int) and g["n"] >= 1, "graph.n", "must be an integer >= 1")
        p = g.get("p", 0.5)
        _field(isinstance(p, (int, float)) and 0 <= p <= 1, "graph.p", "must lie in [0, 1]")
        graph = generate_erdos_renyi(g["n"], float(p), int(g.get("seed", 0)))
    try:
        filt = filter_from_dict(cfg["filter"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"config field 'filter': {exc}") from exc
    T = cfg["T"]
    _field(isinstance(T, int) and T >= 1, "T", "must be an integer >= 1")
    m = cfg["mean"]
    if "path" in m:
        M = load_mean_csv(base_dir / m["path"])
        _field(M.shape == (graph.n, T), "mean.path", f"expected {graph.n}x{T} matrix, got {M.shape}")
    elif m.get("type") == "gaussian":
        rng = np.random.Generator(np.random.PCG64(int(m.get("seed", 0))))
        M = float(m.get("scale", 1.0)) * rng.standard_normal((graph.n, T))
    elif m.get("type") == "constant":
        M = np.full((graph.n, T), float(m.get("value", 1.0)))
    elif m.get("type") == "zero":
        M = np.zeros((graph.n, T))
    else:
        raise ConfigError(f"config field 'mean': unknown type {m.get('type')!r}")
    if "support" in m:
        mask = np.zeros((graph.n, 1))
        mask[list(m["support"])] = 1.0
        M = M * mask
    c = cfg["covariance"]
    _field(c.get("type") == "ar1_kron", "covariance.type", "only 'ar1_kron' is supported")
    sigmas = _sigma_grid(c.get("sigma"))
    _field(len(sigmas) > 0 and all(s > 0 for s in sigmas), "covariance.sigma", "must be positive")
    _field(all(a < b for a, b in zip(sigmas, sigmas[1:])), "covariance.sigma", "must be strictly increasing")
    rho = float(c.get("rho", 0.5))
    _field(abs(rho) < 1, "covariance.rho", "must satisfy |rho| < 1")
    extra = {k: v for k, v in c.items() if k == "support"}
    pv = cfg["privacy"]
    _field(0 < pv["delta"] < 1, "privacy.delta", "must lie in (0, 1)")
    _field(pv["delta_u"] >= 0, "privacy.delta_u", "must be nonnegative")
    _field(pv["delta_s"] > 0, "privacy.delta_s", "must be positive")
    edges = pv.get("edges")
    if edges is not None:
        edges = [tuple(int(v) for v in e) for e in edges]
        for e in edges:
            _field(len(e) == 2 and e[0] != e[1] and max(e) < graph.n, "privacy.edges", f"bad edge {e}")
    mc = cfg["mc"]
    _field(int(mc["samples"]) >= 1000, "mc.samples", "must be >= 1000")
    return ExperimentConfig(
        raw=cfg,
        graph=graph,
        filter=filt,
        M=M,
        sigmas=sigmas,
        rho=rho,
        delta=float(pv["delta"]),
        delta_u=float(pv["delta_u"]),
        delta_s=float(pv["delta_s"]),
        edges=edges,
        mc_samples=int(mc["samples"]),
        mc_seed=int(mc["seed"]),
        audit_sigma=float(cfg["audit"]["sigma"]),
        output=str(cfg["output"]),
        cov_extra=extra,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return resolve_config(raw, base_dir=path.parent)


def _threads() -> int:
    return max(1, int(os.environ.get("GRAPHDP_THREADS", "1")))


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def _json_num(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def to_json(obj) -> str:
    """Strict JSON (non-finite floats become null), stable key order."""

    def clean(v):
        if isinstance(v, dict):
            return {str(k): clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, (np.floating, np.integer, np.bool_)):
            v = v.item()
        return _json_num(v)

    return json.dumps(clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


# -- sweep ----------------------------------------------------------------------


def _mse_stats(cfg: ExperimentConfig, H, cov, seed_key) -> tuple[float, float]:
    """Mean and standard error of the per-replicate MSE of H U~ against H M."""
    A = cov.factor()
    vals = []
    remaining, b = cfg.mc_samples, 0
    while remaining > 0:
        m = min(10_000, remaining)
        rng = np.random.default_rng(np.random.SeedSequence(cfg.mc_seed, spawn_key=seed_key + (b,)))
        if cov.is_kron:
            Z = rng.standard_normal((m, cfg.n, cfg.T))
            noise = H @ (Z @ A.T)
        else:
            z = rng.standard_normal((m, cfg.n * cfg.T)) @ A.T
            noise = H @ z.reshape(m, cfg.T, cfg.n).transpose(0, 2, 1)
        vals.append(np.mean(noise**2, axis=(1, 2)))
        remaining -= m
        b += 1
    v = np.concatenate(vals)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def _instances(cfg, cov, pairs):
    out = []
    for pr in pairs:
        P = output_distribution(cfg.filter, pr.base, cfg.M, cov)
        Q = output_distribution(cfg.filter, pr.other, cfg.M, cov)
        out += [(P, Q), (Q, P)]
    return out


def sweep_row(cfg: ExperimentConfig, index: int, sigma: float) -> dict:
    """All CSV fields for one noise scale."""
    row = {k: math.nan for k in CSV_COLUMNS}
    row.update(sigma=sigma, rho=cfg.rho, closed_form_valid=False, worst_edge="")
    try:
        cov = cfg.covariance(sigma)
        pairs = cfg.pairs()
        H = filter_matrix(cfg.filter, cfg.graph)
        row["mse_mean"], row["mse_stderr"] = _mse_stats(cfg, H, cov, (1, index))
        ass = worst_case_assessment(cfg.filter, cfg.graph, cfg.M, cov, cfg.delta, cfg.delta_s, cfg.edges)
        row["eps_S_exact"] = ass.epsilon
        row["alpha_star"] = ass.alpha_star
        row["worst_edge"] = f"{ass.edge[0]}-{ass.edge[1]}" if ass.edge else ""
        try:
            row["eps_U"] = input_epsilon(cfg.delta_u, cov, cfg.delta)
        except GraphDPError:
            pass
        try:
            bounds = empirical_instance_bounds(cfg.filter, pairs)
            insts = _instances(cfg, cov, pairs)
            eps_cf, _, valid = closed_form_epsilon(
                bounds, cov, cfg.delta_s, float(np.linalg.norm(cfg.M)), cfg.delta, insts
            )
            row["eps_S_closed_form"] = eps_cf
            row["closed_form_valid"] = bool(valid) and eps_cf >= ass.epsilon
        except (AlphaInfeasible, SupportMismatch):
            pass
        if ass.edge is not None and math.isfinite(ass.epsilon) and ass.method != "kernel_collapse":
            worst = next(r for r in ass.per_pair if r.edge == ass.edge)
            pr = next(p for p in pairs if p.edge == ass.edge)
            P = output_distribution(cfg.filter, pr.base, cfg.M, cov)
            Q = output_distribution(cfg.filter, pr.other, cfg.M, cov)
            if worst.method == "singular_projection":
                P, Q = project_singular(P, Q)
            if worst.ordering == "S'S":
                P, Q = Q, P
            est = tail_curve(P, Q, [ass.epsilon], cfg.mc_samples, _seed(cfg, 2, index))[0]
            row["mc_tail_at_eps"], row["mc_stderr"] = est.p_hat, est.stderr
        elif ass.method == "kernel_collapse":
            row["mc_tail_at_eps"], row["mc_stderr"] = 0.0, 0.0
    except GraphDPError as exc:
        logger.error("sigma=%g failed: %s", sigma, exc)
        row["worst_edge"] = f"error: {type(exc).__name__}"
    return row


def _seed(cfg, *key) -> int:
    return int(np.random.SeedSequence(cfg.mc_seed, spawn_key=key).generate_state(1, np.uint32)[0])


def run_sweep(cfg: ExperimentConfig, out_dir=None) -> Path:
    """Write ``sweep.csv`` (one row per sigma) and ``sweep_meta.json``; returns the CSV path."""
    out = Path(out_dir or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    work = list(enumerate(cfg.sigmas))
    if _threads() > 1:
        with ThreadPoolExecutor(_threads()) as ex:
            rows = list(ex.map(lambda a: sweep_row(cfg, *a), work))
    else:
        rows = [sweep_row(cfg, i, s) for i, s in work]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in CSV_COLUMNS])
    path = out / "sweep.csv"
    path.write_text(buf.getvalue(), encoding="utf-8")
    meta = run_header(cfg)
    meta["extrapolated_eps_U"] = [
        r["sigma"] for r in rows if isinstance(r["eps_U"], float) and r["eps_U"] >= 1
    ]
    meta["figure_axes"] = {"x": "mse_mean", "y": ["eps_S_exact", "eps_U"]}
    (out / "sweep_meta.json").write_text(to_json(meta), encoding="utf-8")
    return path


def run_header(cfg: ExperimentConfig) -> dict:
    return {
        "config": cfg.raw,
        "prng": PRNG_NAME,
        "numpy": np.__version__,
        "graphdp": __version__,
        "kernels": _kernels.BACKEND,
        "graph_edges": [[i, j, w] for i, j, w in cfg.graph.edges()],
    }


# -- audit ----------------------------------------------------------------------


def _pair_laws(cfg, pr, cov):
    """(method, P, Q) for one pair with singular releases projected."""
    if kernel_collapse_check(cfg.filter, pr, cfg.M, cov):
        method = "kernel_collapse"
    else:
        method = None
    P = output_distribution(cfg.filter, pr.base, cfg.M, cov)
    Q = output_distribution(cfg.filter, pr.other, cfg.M, cov)
    if not (P.full_rank and Q.full_rank):
        try:
            P, Q = project_singular(P, Q)
        except SupportMismatch:
            return "not_absolutely_continuous", None, None
        method = method or "singular_projection"
    return method or "exact", P, Q


def closed_form_checks(cfg: ExperimentConfig, cov, pairs, alphas=None) -> list[dict]:
    """Closed form vs exact divergence for every pair, ordering and order alpha."""
    try:
        bounds = empirical_instance_bounds(cfg.filter, pairs)
    except GraphDPError:
        return []
    lam_min, lam_max = cov.extreme_eigenvalues()
    if lam_min <= 0 or bounds.gamma <= 0:
        return []
    amax = closed_form_alpha_max(bounds, lam_min, lam_max)
    if alphas is None:
        hi = 1e3 if not math.isfinite(amax) else amax
        alphas = list(1.0 + np.geomspace(1e-4, (hi - 1.0) * (1 - 1e-6), 12))
    norm_M = float(np.linalg.norm(cfg.M))
    out = []
    for pr in pairs:
        P = output_distribution(cfg.filter, pr.base, cfg.M, cov)
        Q = output_distribution(cfg.filter, pr.other, cfg.M, cov)
        for order, (A, B) in (("SS'", (P, Q)), ("S'S", (Q, P))):
            for al in alphas:
                try:
                    cf = spectral_closed_form(bounds, lam_min, lam_max, cfg.T, cfg.n, cfg.delta_s, norm_M, al)
                except AlphaInfeasible:
                    continue
                try:
                    ex = renyi_exact(A, B, al, crosscheck=False)
                except AlphaInfeasible:
                    ex = math.inf
                except SupportMismatch:
                    continue
                valid = cf.value >= ex
                out.append(
                    {
                        "edge": list(pr.edge),
                        "ordering": order,
                        "alpha": al,
                        "closed_form": cf.value,
                        "exact": _json_num(ex),
                        "valid": bool(valid),
                    }
                )
    return out


def run_audit(cfg: ExperimentConfig, eps_grid, out_dir=None) -> dict:
    """Analytic Chernoff delta vs Monte Carlo tail for every pair and epsilon.

    Writes ``audit.json`` under ``out_dir`` when given and returns the report.
    """
    eps_grid = [float(e) for e in eps_grid]
    cov = cfg.covariance(cfg.audit_sigma)
    pairs = cfg.pairs()
    report = {
        "sigma": cfg.audit_sigma,
        "epsilon_grid": eps_grid,
        "edges": [],
        "methods": [],
        "p_hat": [],
        "stderr": [],
        "analytic_delta": [],
        "two_sided": [],
        "violations": [],
        "below_mc_resolution": [],
    }
    for k, pr in enumerate(pairs):
        method, P, Q = _pair_laws(cfg, pr, cov)
        report["edges"].append(list(pr.edge))
        report["methods"].append(method)
        if P is None:
            nan = [None] * len(eps_grid)
            report["p_hat"].append(nan)
            report["stderr"].append(nan)
            report["analytic_delta"].append([1.0] * len(eps_grid))
            report["two_sided"].append(None)
            continue
        fwd = tail_curve(P, Q, eps_grid, cfg.mc_samples, _seed(cfg, 3, k, 0))
        bwd = tail_curve(Q, P, eps_grid, cfg.mc_samples, _seed(cfg, 3, k, 1))
        d_fwd = [delta_bound(P, Q, e)[0] for e in eps_grid]
        d_bwd = [delta_bound(Q, P, e)[0] for e in eps_grid]
        report["p_hat"].append([t.p_hat for t in fwd])
        report["stderr"].append([t.stderr for t in fwd])
        report["analytic_delta"].append(d_fwd)
        report["two_sided"].append(
            {
                "p_hat": [a.p_hat + b.p_hat for a, b in zip(fwd, bwd)],
                "stderr": [math.hypot(a.stderr, b.stderr) for a, b in zip(fwd, bwd)],
                "analytic_delta": [min(1.0, a + b) for a, b in zip(d_fwd, d_bwd)],
            }
        )
        for e, t, d in zip(eps_grid, fwd, d_fwd):
            if t.p_hat - 3 * t.stderr > d:
                report["violations"].append({"edge": list(pr.edge), "epsilon": e, "p_hat": t.p_hat, "delta": d})
            if d < MC_RESOLUTION:
                report["below_mc_resolution"].append({"edge": list(pr.edge), "epsilon": e})
    checks = closed_form_checks(cfg, cov, pairs)
    report["closed_form"] = {
        "checks": len(checks),
        "invalid": [c for c in checks if not c["valid"]],
        "unflagged_violations": sum(
            1 for c in checks if c["valid"] and c["exact"] is not None and c["closed_form"] < c["exact"]
        ),
    }
    report["header"] = run_header(cfg)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "audit.json").write_text(to_json(report), encoding="utf-8")
    return report


def bound_for_edge(cfg: ExperimentConfig, edge, sigma: float | None = None) -> dict:
    """Single-pair certificate, exact and closed-form."""
    sigma = cfg.audit_sigma if sigma is None else sigma
    cov = cfg.covariance(sigma)
    ass = worst_case_assessment(cfg.filter, cfg.graph, cfg.M, cov, cfg.delta, cfg.delta_s, edges=[tuple(edge)])
    pairs = enumerate_adjacent(cfg.graph, cfg.delta_s, [tuple(edge)])
    rec = ass.to_dict()
    rec["sigma"] = sigma
    try:
        bounds = empirical_instance_bounds(cfg.filter, pairs)
        eps_cf, a_cf, valid = closed_form_epsilon(
            bounds, cov, cfg.delta_s, float(np.linalg.norm(cfg.M)), cfg.delta, _instances(cfg, cov, pairs)
        )
        rec["bounds_used"] = bounds.to_dict()
        rec["closed_form"] = {"epsilon": eps_cf, "alpha_star": a_cf, "valid": bool(valid) and eps_cf >= ass.epsilon}
    except (AlphaInfeasible, SupportMismatch, GraphDPError) as exc:
        rec["closed_form"] = {"epsilon": None, "error": str(exc)}
    rec["validity_flags"]["closed_form"] = rec["closed_form"].get("valid", False)
    return rec
