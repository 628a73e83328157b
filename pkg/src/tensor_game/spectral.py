"""Axis-graph Laplacian, local-to-global variance transfer, binomial tails and the operator Chernoff check."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .opalg import matrix_function, trace_state
from .tensor import enumerate_lines, point_index

GRAPH_BUDGET = 2000


@dataclass
class AxisGraph:
    n: int
    m: int
    K: np.ndarray
    L: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def N(self) -> int:
        return self.n**self.m

    @property
    def lambda2(self) -> float:
        """Second smallest Laplacian eigenvalue (the spectral gap)."""
        return float(self.eigenvalues[1])


def edge_distribution(n: int, m: int) -> np.ndarray:
    """P[u, v] for: uniform axis, uniform line along it, independent uniform u, v on the line."""
    N = n**m
    K = np.zeros((N, N))
    lines = enumerate_lines(n, m)
    per_axis = n ** (m - 1)
    for ln in lines:
        idx = [point_index(p, n) for p in ln.points(n)]
        w = 1.0 / (m * per_axis * n * n)
        K[np.ix_(idx, idx)] += w
    return K


def axis_graph(n: int, m: int) -> AxisGraph:
    N = n**m
    if N > GRAPH_BUDGET:
        raise ValueError(f"graph on {N} vertices exceeds budget {GRAPH_BUDGET}")
    K = edge_distribution(n, m)
    L = np.eye(N) / N - K
    w, V = np.linalg.eigh(L)
    return AxisGraph(n, m, K, L, w, V)


def closed_form_spectrum(n: int, m: int) -> list[tuple[float, int]]:
    """Laplacian eigenvalues (1/N)(1 - s/m) with multiplicity C(m, s) (n-1)^(m-s)."""
    N = n**m
    return [((1 - s / m) / N, math.comb(m, s) * (n - 1) ** (m - s)) for s in range(m, -1, -1)]


@dataclass
class LocalGlobal:
    global_value: float
    local_value: float
    ratio_bound: float
    bound_ok: bool


def local_to_global_check(family: np.ndarray, W: np.ndarray, n: int, m: int, graph: AxisGraph | None = None) -> LocalGlobal:
    """Compare E_{u,v uniform} rho(D*D) with E_{(u,v) edge} rho(D*D), D = A^u - A^v.

    `family` has shape (n^m, ..., r, r); extra axes (e.g. outcomes) are summed.
    The positive functional is rho(X) = tr(X W).
    """
    N = n**m
    graph = graph or axis_graph(n, m)
    A = np.asarray(family, dtype=complex).reshape(N, -1, W.shape[0], W.shape[0])
    AW = A @ W
    gram = np.einsum("uoji,vojk->uvik", A.conj(), AW)
    gram = np.trace(gram, axis1=-2, axis2=-1)
    diag = np.real(np.diag(gram))
    dist = diag[:, None] + diag[None, :] - 2 * np.real(gram)
    glob = float(dist.mean())
    loc = float(np.sum(graph.K * dist))
    factor = 1.0 / (N * graph.lambda2)
    return LocalGlobal(glob, loc, factor, glob <= factor * loc + 1e-9)


def binomial_tail(k: int, t: int, x):
    """sum_{j=t}^{k} C(k, j) x^j (1-x)^(k-j), elementwise in x."""
    if not 0 <= t <= k:
        raise ValueError("need 0 <= t <= k")
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    total = np.zeros_like(x)
    for j in range(t, k + 1):
        total = total + math.comb(k, j) * x**j * (1 - x) ** (k - j)
    return float(total) if total.ndim == 0 else total


@dataclass
class ChernoffCheck:
    lhs: float
    rhs: float
    kappa: float
    precondition_met: bool

    @property
    def ok(self) -> bool:
        return self.lhs >= self.rhs - 1e-9


def chernoff_operator_check(G: np.ndarray, k: int, t: int, theta: float, require_precondition: bool = True) -> ChernoffCheck:
    """tau(F(G)) against 1 - kappa/(1-theta) - exp(-theta^2 k / 2), kappa = 1 - tau(G).

    The bound is proved for k >= 2t/theta. With `require_precondition` off the
    inequality is still evaluated and the flag records whether it was covered.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    met = k * theta >= 2 * t
    if require_precondition and not met:
        raise ValueError(f"k = {k} is below 2t/theta = {2 * t / theta:.3g}")
    w = np.linalg.eigvalsh((G + G.conj().T) / 2)
    if w.min() < -1e-9 or w.max() > 1 + 1e-9:
        raise ValueError("G must satisfy 0 <= G <= 1")
    FG = matrix_function(G, lambda x: binomial_tail(k, t, x))
    lhs = float(np.real(trace_state(FG)))
    kappa = float(1 - np.real(trace_state(G)))
    rhs = 1 - kappa / (1 - theta) - math.exp(-theta * theta * k / 2)
    return ChernoffCheck(lhs, rhs, kappa, met)


def tv_uniform_vs_distinct(n: int, k: int) -> Fraction:
    """Exact total-variation distance between uniform [n]^k and uniform distinct k-tuples."""
    if not 1 <= k <= n:
        raise ValueError(f"distinct {k}-tuples from {n} points need 1 <= k <= n")
    tuples = list(itertools.product(range(n), repeat=k))
    distinct = [x for x in tuples if len(set(x)) == k]
    p_u = Fraction(1, len(tuples))
    p_d = Fraction(1, len(distinct)) if distinct else Fraction(0)
    total = Fraction(0)
    for x in tuples:
        total += abs(p_u - (p_d if len(set(x)) == k else 0))
    return total / 2
