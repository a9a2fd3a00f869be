"""Graph shift operators, random graphs and edge-level adjacency."""
from __future__ import annotations

import dataclasses
import itertools
from pathlib import Path

import numpy as np

PRNG_NAME = "numpy.random.PCG64"


@dataclasses.dataclass(frozen=True, eq=False)
class Gso:
    """Symmetric, hollow graph shift operator.

    Attributes:
      S: (n, n) real matrix of edge weights.
      kind: "adjacency" or "laplacian".
    """

    S: np.ndarray
    kind: str = "adjacency"

    def __post_init__(self):
        S = np.array(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ValueError(f"GSO must be square, got shape {S.shape}")
        if not np.all(np.isfinite(S)):
            raise ValueError("GSO has non-finite entries")
        if not np.array_equal(S, S.T):
            raise ValueError("GSO must be symmetric")
        if self.kind == "adjacency" and np.any(np.diag(S) != 0):
            raise ValueError("adjacency GSO must have a zero diagonal (no self-loops)")
        S.setflags(write=False)
        object.__setattr__(self, "S", S)

    @property
    def n(self) -> int:
        return self.S.shape[0]

    def edges(self) -> list[tuple[int, int, float]]:
        A = self.adjacency()
        iu, ju = np.nonzero(np.triu(A, k=1))
        return [(int(i), int(j), float(A[i, j])) for i, j in zip(iu, ju)]

    def adjacency(self) -> np.ndarray:
        if self.kind == "adjacency":
            return self.S
        return -(self.S - np.diag(np.diag(self.S)))


@dataclasses.dataclass(frozen=True, eq=False)
class AdjacentPair:
    base: Gso
    other: Gso
    edge: tuple[int, int]
    delta_s: float


def spectral_norm(M) -> float:
    """Largest singular value of ``M``."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def laplacian(adj) -> Gso:
    """Combinatorial Laplacian D - A as a GSO.

    Toggling one unit edge changes the Laplacian by a matrix of spectral norm 2,
    so adjacency pairs built on it need ``delta_s=2``.
    """
    A = np.asarray(adj.S if isinstance(adj, Gso) else adj, dtype=float)
    return Gso(np.diag(A.sum(axis=1)) - A, kind="laplacian")


def generate_erdos_renyi(n: int, p: float, seed: int) -> Gso:
    """Unweighted G(n, p) adjacency matrix.

    One uniform draw is consumed per unordered pair, in row-major order over
    the strict upper triangle, from a PCG64 stream seeded with ``seed``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.Generator(np.random.PCG64(seed))
    iu, ju = np.triu_indices(n, k=1)
    u = rng.random(iu.size)
    A = np.zeros((n, n))
    on = u < p
    A[iu[on], ju[on]] = 1.0
    A[ju[on], iu[on]] = 1.0
    return Gso(A)


def toggle_edge(g: Gso, i: int, j: int, weight: float = 1.0) -> Gso:
    """Add edge (i, j) with ``weight`` if absent, remove it if present."""
    if i == j:
        raise ValueError("self-loops are not allowed")
    A = np.array(g.adjacency())
    new = 0.0 if A[i, j] != 0 else weight
    A[i, j] = A[j, i] = new
    if g.kind == "laplacian":
        return laplacian(A)
    return Gso(A)


def enumerate_adjacent(g: Gso, delta_s: float = 1.0, edges=None) -> list[AdjacentPair]:
    """All single-edge neighbours of ``g``.

    Every unordered vertex pair is toggled with weight ``delta_s`` for
    adjacency GSOs; for Laplacian GSOs the toggle has unit weight and the
    caller is expected to pass ``delta_s=2``.

    Args:
      g: base graph.
      delta_s: spectral-norm budget recorded on each pair.
      edges: optional subset of (i, j) pairs to toggle.
    """
    if delta_s <= 0:
        raise ValueError("delta_s must be positive")
    if edges is None:
        edges = itertools.combinations(range(g.n), 2)
    weight = delta_s if g.kind == "adjacency" else 1.0
    out = []
    for i, j in edges:
        i, j = (int(i), int(j)) if i < j else (int(j), int(i))
        A = g.adjacency()
        if A[i, j] != 0 and A[i, j] != weight:
            raise ValueError(
                f"edge ({i},{j}) has weight {A[i, j]}, cannot toggle with delta_s={delta_s}"
            )
        out.append(AdjacentPair(g, toggle_edge(g, i, j, weight), (i, j), float(delta_s)))
    return out


def save_edge_list(g: Gso, path) -> None:
    lines = [f"n={g.n}"]
    lines += [f"{i} {j} {w!r}" for i, j, w in g.edges()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_edge_list(path) -> Gso:
    """Read a graph written by :func:`save_edge_list`.

    Format: a header ``n=<count>`` followed by ``i j weight`` lines, 0-indexed.
    Blank lines and ``#`` comments are ignored.
    """
    text = Path(path).read_text(encoding="utf-8").splitlines()
    rows = [ln.split("#", 1)[0].strip() for ln in text]
    rows = [r for r in rows if r]
    if not rows or not rows[0].startswith("n="):
        raise ValueError(f"{path}: first line must be 'n=<count>'")
    n = int(rows[0][2:])
    A = np.zeros((n, n))
    for lineno, row in enumerate(rows[1:], start=2):
        parts = row.split()
        if len(parts) != 3:
            raise ValueError(f"{path}: line {lineno}: expected 'i j weight'")
        i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        if i == j:
            raise ValueError(f"{path}: line {lineno}: self-loop ({i},{j})")
        A[i, j] = A[j, i] = w
    return Gso(A)
