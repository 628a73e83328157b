"""Global codeword extraction: restriction, self-improvement, pasting and diagnostics.

A codeword measurement over the m-fold tensor code is stored densely as an
array of shape (|C^(m)|, r, r), indexed in the canonical (lexicographic
coefficient) order of `tensor.tensor_codewords`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .codes import LinearCode
from .duality import DualitySolution, solve_duality
from .galois import inverse_mod, rank_mod
from .game import build_game, goodness_synchronous
from .opalg import Submeasurement, herm, orthogonalize, psd_sqrt
from .spectral import LocalGlobal, local_to_global_check
from .strategies import SynchronousStrategy
from .tensor import AxisLine, TensorCodeword, enumerate_lines, gamma, line_index, tensor_codewords

PRUNE_NORM = 1e-14


class ConclusionViolated(AssertionError):
    """A measured inequality that must hold on every run did not."""


# ---------------------------------------------------------------- codeword tables

@lru_cache(maxsize=16)
def codeword_tables(code: LinearCode, m: int) -> np.ndarray:
    """Flattened evaluation tables of C^(m), shape (|C^(m)|, n^m), read-only."""
    cw = tensor_codewords(code, m)
    cw.setflags(write=False)
    return cw


@lru_cache(maxsize=16)
def _coefficient_decoder(code: LinearCode):
    """Inverse of the generator restricted to its first k rows, if invertible."""
    sub = code.G[: code.k]
    if rank_mod(sub, code.q) != code.k:
        return None
    return inverse_mod(sub, code.q)


def codeword_rank(code: LinearCode, m: int, tables: np.ndarray) -> np.ndarray:
    """Canonical indices of tensor codewords given their tables, shape (B, n, ..., n) or (B, n^m)."""
    n, k, q = code.n, code.k, code.q
    tables = np.asarray(tables, dtype=np.int64).reshape((-1,) + (n,) * m)
    inv = _coefficient_decoder(code)
    if inv is None:
        lookup = _table_lookup(code, m)
        return np.array([lookup[row.tobytes()] for row in tables.reshape(len(tables), -1)], dtype=np.int64)
    coeffs = tables[(slice(None),) + (slice(0, k),) * m]
    for axis in range(1, m + 1):
        coeffs = np.moveaxis(np.tensordot(inv, coeffs, axes=([1], [axis])), 0, axis) % q
    flat = coeffs.reshape(len(tables), -1)
    weights = q ** np.arange(flat.shape[1] - 1, -1, -1, dtype=np.int64)
    return flat @ weights


@lru_cache(maxsize=4)
def _table_lookup(code: LinearCode, m: int) -> dict:
    return {row.tobytes(): i for i, row in enumerate(np.ascontiguousarray(codeword_tables(code, m)))}


@dataclass
class CodewordMeasurement:
    code: LinearCode
    m: int
    elements: np.ndarray

    def __post_init__(self):
        self.elements = np.asarray(self.elements, dtype=complex)
        size = self.code.size ** (self.code.k ** (self.m - 1)) if self.m >= 1 else 1
        if self.elements.ndim != 3 or self.elements.shape[0] != size:
            raise ValueError(f"expected {size} outcomes, got shape {self.elements.shape}")

    @property
    def r(self) -> int:
        return self.elements.shape[-1]

    @property
    def size(self) -> int:
        return self.elements.shape[0]

    def total(self) -> np.ndarray:
        return self.elements.sum(axis=0)

    def weights(self) -> np.ndarray:
        """Normalized trace of each outcome."""
        return np.real(np.trace(self.elements, axis1=1, axis2=2)) / self.r

    def completeness(self) -> float:
        return float(self.weights().sum())

    def support(self, tol: float = 1e-12) -> np.ndarray:
        return np.flatnonzero(self.weights() > tol)

    def completed(self, index: int = 0) -> "CodewordMeasurement":
        """Add the missing mass 1 - sum to one outcome (the lexicographically first by default)."""
        E = self.elements.copy()
        E[index] += np.eye(self.r) - self.total()
        return CodewordMeasurement(self.code, self.m, herm(E))

    def is_projective(self, tol: float = 1e-8) -> bool:
        E = self.elements
        return bool(np.max(np.abs(E @ E - E), initial=0.0) <= tol)

    def as_submeasurement(self) -> Submeasurement:
        return Submeasurement(range(self.size), self.elements)

    def codeword(self, index: int) -> TensorCodeword:
        n = self.code.n
        return TensorCodeword(self.code, self.m, codeword_tables(self.code, self.m)[index].reshape((n,) * self.m))

    def mode(self) -> int:
        return int(np.argmax(self.weights()))


def indicator_measurement(code: LinearCode, m: int, index: int, r: int = 1) -> CodewordMeasurement:
    E = np.zeros((code.q ** (code.k**m), r, r), dtype=complex)
    E[index] = np.eye(r)
    return CodewordMeasurement(code, m, E)


def _point_elements(s: SynchronousStrategy, cw: np.ndarray) -> np.ndarray:
    """P[g, u] = A^u_{g(u)}, shape (|C^(m)|, N, r, r)."""
    return s.points[np.arange(cw.shape[1])[None, :], cw]


def codeword_point_average(s: SynchronousStrategy) -> np.ndarray:
    """A_g = E_u A^u_{g(u)} for every tensor codeword g."""
    return _point_elements(s, codeword_tables(s.code, s.m)).mean(axis=1)


def _agreement(A: np.ndarray, M: np.ndarray) -> float:
    """sum_g tau(M_g A_g)."""
    return float(np.real(np.einsum("gij,gji->", M, A)) / A.shape[-1])


def point_agreement(s: SynchronousStrategy, G: CodewordMeasurement) -> float:
    """E_u sum_c tau(G_c A^u_{c(u)})."""
    return _agreement(codeword_point_average(s), G.elements)


# ---------------------------------------------------------------- restriction

def restrict_strategy(s: SynchronousStrategy, x: int) -> SynchronousStrategy:
    """Fix the last coordinate to x, keeping points, lines and pairs inside that slice."""
    n, m, q, r = s.n, s.m, s.q, s.r
    if m < 2:
        raise ValueError("restriction needs at least two coordinates")
    if not 0 <= x < n:
        raise ValueError(f"slice {x} out of range for n = {n}")
    Np = n ** (m - 1)
    points = s.points.reshape(Np, n, q, r, r)[:, x]
    idx = [line_index(AxisLine(ln.axis, ln.intercept + (x,)), n) for ln in enumerate_lines(n, m - 1)]
    lines = s.lines[idx]
    pairs = s.pairs.reshape(Np, n, Np, n, q * q, r, r)[:, x, :, x]
    return SynchronousStrategy(s.code, m - 1, points.copy(), lines.copy(), pairs.copy())


# ---------------------------------------------------------------- self-improvement

@dataclass
class SelfImprovement:
    H: CodewordMeasurement
    raw: np.ndarray
    duality: DualitySolution
    A: np.ndarray
    nu: float
    completeness: float
    completeness_raw: float
    inconsistency: float
    psi_deficit: float
    zeta: float
    rounding_distance: float
    rounding_bound: float

    @property
    def W(self) -> np.ndarray:
        return self.duality.W

    def psi(self, X: np.ndarray) -> float:
        return float(np.real(self.duality.psi(X)))

    def explained_gap(self, h: int, X: np.ndarray) -> float:
        """psi(X) - E_u tau(X A^u_{h(u)}); nonnegative for positive X."""
        return self.psi(X) - float(np.real(np.trace(X @ self.A[h]))) / self.A.shape[-1]

    def metrics(self) -> dict:
        return {
            "nu": self.nu, "zeta": self.zeta, "completeness": self.completeness,
            "completeness_raw": self.completeness_raw, "inconsistency": self.inconsistency,
            "psi_deficit": self.psi_deficit, "duality_gap": self.duality.gap,
            "rounding_distance": self.rounding_distance, "rounding_bound": self.rounding_bound,
        }


def self_improve(s: SynchronousStrategy, G: CodewordMeasurement, tol: float = 1e-9,
                 threshold: float = 0.5, check: bool = True) -> SelfImprovement:
    """Replace a complete codeword measurement by a projective one explained by the points.

    The returned H satisfies tau(H) >= 1 - nu - zeta, where nu is the measured
    inconsistency of G with the points and zeta the largest measured deficit.
    """
    if G.code is not s.code or G.m != s.m:
        raise ValueError("measurement and strategy disagree on code or dimension")
    r = s.r
    if np.max(np.abs(G.total() - np.eye(r))) > 1e-8:
        raise ValueError("self-improvement needs a complete measurement")
    cw = codeword_tables(s.code, s.m)
    P = _point_elements(s, cw)
    A = P.mean(axis=1)
    nu = 1.0 - _agreement(A, G.elements)
    sol = solve_duality(A, tol=tol)
    raw = herm(np.einsum("guij,gjk,gukl->gil", P, sol.T, P) / cw.shape[1])
    rounded = orthogonalize(Submeasurement(range(len(raw)), raw), threshold=threshold)
    H = CodewordMeasurement(s.code, s.m, rounded.measurement.elements)

    tau_raw = float(np.real(np.trace(raw.sum(axis=0)))) / r
    tau_H = H.completeness()
    inconsistency = max(tau_H - _agreement(A, H.elements), 0.0)
    psi_deficit = float(np.real(np.trace((np.eye(r) - H.total()) @ sol.W)))
    zeta = max(inconsistency, psi_deficit, max(tau_raw - tau_H, 0.0) + max(sol.gap, 0.0))
    if check and tau_H < 1 - nu - zeta - 1e-9:
        raise ConclusionViolated(f"completeness {tau_H:.6g} below 1 - nu - zeta = {1 - nu - zeta:.6g}")
    return SelfImprovement(H, raw, sol, A, nu, tau_H, tau_raw, inconsistency, psi_deficit, zeta,
                           rounded.distance, rounded.bound)


# ---------------------------------------------------------------- pasting

@dataclass
class PastingConfig:
    method: int = 2
    k: Optional[int] = None
    tuple_budget: int = 10**4
    tuple_samples: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.method not in (1, 2):
            raise ValueError("pasting method must be 1 or 2")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be positive")
        if self.tuple_budget < 1 or self.tuple_samples < 1:
            raise ValueError("tuple budget and sample count must be positive")

    def resolve_k(self, code: LinearCode, m: int) -> int:
        """Repetition count: the configured k, else min(12 m t, n)."""
        t = code.t
        k = self.k if self.k is not None else min(12 * max(m, 1) * t, code.n)
        if self.method == 1:
            return t
        if k < t:
            raise ValueError(f"k = {k} is below t = {t}")
        if k > code.n:
            raise ValueError(f"k = {k} exceeds n = {code.n}; distinct tuples do not exist")
        return k


@dataclass
class PastingResult:
    H: CodewordMeasurement
    precompletion: CodewordMeasurement
    method: int
    k: int
    tuples: int
    sampled: bool
    pruned: int
    kappa: float
    completeness: float
    inconsistency: float
    completeness_bound: Optional[float] = None

    @property
    def pruned_mass_bound(self) -> float:
        return self.pruned * PRUNE_NORM**2

    @property
    def bound_ok(self) -> Optional[bool]:
        if self.completeness_bound is None:
            return None
        return self.completeness >= self.completeness_bound - 1e-9


def _tuples(n: int, k: int, config: PastingConfig):
    count = math.perm(n, k)
    if count <= config.tuple_budget:
        return list(itertools.permutations(range(n), k)), False
    rng = np.random.default_rng(config.seed)
    return [tuple(int(v) for v in rng.permutation(n)[:k]) for _ in range(config.tuple_samples)], True


def _check_slices(s: SynchronousStrategy, slices: Sequence[CodewordMeasurement]):
    if len(slices) != s.n:
        raise ValueError("one slice measurement per coordinate value required")
    for G in slices:
        if G.code is not s.code or G.m != s.m - 1 or G.r != s.r:
            raise ValueError("slice measurement does not match the strategy")


def _interpolator(code: LinearCode, m: int):
    """Maps (coords, slice indices) to the index and slice indices of the interpolated codeword."""
    n = code.n
    slice_tables = codeword_tables(code, m).reshape((-1,) + (n,) * m)

    def interp(coords, choices):
        phi = code.interpolation_map(coords)
        h = np.stack([slice_tables[g] for g in choices], axis=-1) @ phi.T % code.q
        return h

    return interp


def _finish(s, slices, Hpre, method, k, tuples, sampled, pruned, bound=None) -> PastingResult:
    code, m1 = s.code, s.m
    pre = CodewordMeasurement(code, m1, herm(Hpre))
    H = pre.completed(0)
    A = codeword_point_average(s)
    kappa = 1.0 - float(np.mean([G.completeness() for G in slices]))
    inconsistency = max(1.0 - _agreement(A, H.elements), 0.0)
    return PastingResult(H, pre, method, k, tuples, sampled, pruned, kappa, pre.completeness(),
                         inconsistency, bound)


def paste_method1(s: SynchronousStrategy, slices: Sequence[CodewordMeasurement],
                  config: PastingConfig | None = None) -> PastingResult:
    """Sandwich t slice measurements and interpolate the t slice answers."""
    config = config or PastingConfig(method=1)
    _check_slices(s, slices)
    code, m, n, r = s.code, s.m - 1, s.n, s.r
    t = code.t
    tuples, sampled = _tuples(n, t, config)
    interp = _interpolator(code, m)
    supports = [G.support() for G in slices]
    size = code.q ** (code.k ** (m + 1))
    Hpre = np.zeros((size, r, r), dtype=complex)
    pruned = 0
    eye = np.eye(r, dtype=complex)
    for xs in tuples:
        leaves_K, leaves_g = [], []
        stack = [(0, eye, ())]
        while stack:
            depth, K, chosen = stack.pop()
            if depth == t:
                leaves_K.append(K)
                leaves_g.append(chosen)
                continue
            x = xs[depth]
            for g in supports[x][::-1]:
                K2 = slices[x].elements[g] @ K
                if np.linalg.norm(K2) < PRUNE_NORM:
                    pruned += 1
                    continue
                stack.append((depth + 1, K2, chosen + (int(g),)))
        if not leaves_K:
            continue
        tables = np.stack([interp(xs, g) for g in leaves_g])
        hs = codeword_rank(code, m + 1, tables)
        Ks = np.stack(leaves_K)
        np.add.at(Hpre, hs, np.conj(np.swapaxes(Ks, 1, 2)) @ Ks / len(tuples))
    return _finish(s, slices, Hpre, 1, t, len(tuples), sampled, pruned)


def completeness_bound_method2(kappa: float, m: int, k: int, nu: float = 0.0) -> float:
    """1 - kappa (1 + 1/(3m)) - nu - exp(-k / (72 m^2))."""
    return 1.0 - kappa * (1.0 + 1.0 / (3 * m)) - nu - math.exp(-k / (72.0 * m * m))


def paste_method2(s: SynchronousStrategy, slices: Sequence[CodewordMeasurement],
                  config: PastingConfig | None = None, nu: float = 0.0) -> PastingResult:
    """Sandwich k completed slice measurements (with a bottom outcome) and interpolate
    whenever at least t factors produced a real codeword that one tensor codeword explains.
    """
    config = config or PastingConfig(method=2)
    _check_slices(s, slices)
    code, m, n, r = s.code, s.m - 1, s.n, s.r
    t = code.t
    k = PastingConfig(2, config.k).resolve_k(code, m)
    tuples, sampled = _tuples(n, k, config)
    interp = _interpolator(code, m)
    supports = [G.support() for G in slices]
    eye = np.eye(r, dtype=complex)
    bottoms = [herm(eye - G.total()) for G in slices]
    size = code.q ** (code.k ** (m + 1))
    Hpre = np.zeros((size, r, r), dtype=complex)
    pruned = 0
    for xs in tuples:
        leaves_K, leaves_h = [], []
        # state: depth, K, chosen (coord, slice index) pairs, (h index, slice indices of h) once fixed
        stack = [(0, eye, (), None)]
        while stack:
            depth, K, chosen, fixed = stack.pop()
            if depth == k:
                leaves_K.append(K)
                leaves_h.append(fixed[0])
                continue
            x = xs[depth]
            remaining = k - depth - 1
            options = []
            if len(chosen) + remaining >= t:
                options.append((-1, bottoms[x]))
            if fixed is None:
                options.extend((int(g), slices[x].elements[g]) for g in supports[x])
            else:
                g = int(fixed[1][x])
                if g in set(supports[x].tolist()):
                    options.append((g, slices[x].elements[g]))
            for g, E in options:
                K2 = E @ K
                if np.linalg.norm(K2) < PRUNE_NORM:
                    pruned += 1
                    continue
                new_chosen, new_fixed = chosen, fixed
                if g >= 0:
                    new_chosen = chosen + ((x, g),)
                    if fixed is None and len(new_chosen) == t:
                        h = interp([c for c, _ in new_chosen], [gg for _, gg in new_chosen])
                        h_idx = int(codeword_rank(code, m + 1, h[None])[0])
                        h_slices = codeword_rank(code, m, np.moveaxis(h, -1, 0)) if m >= 1 else None
                        new_fixed = (h_idx, h_slices)
                stack.append((depth + 1, K2, new_chosen, new_fixed))
        if not leaves_K:
            continue
        Ks = np.stack(leaves_K)
        np.add.at(Hpre, np.array(leaves_h), np.conj(np.swapaxes(Ks, 1, 2)) @ Ks / len(tuples))
    kappa = 1.0 - float(np.mean([G.completeness() for G in slices]))
    bound = completeness_bound_method2(kappa, max(m, 1), k, nu)
    return _finish(s, slices, Hpre, 2, k, len(tuples), sampled, pruned, bound)


def paste(s: SynchronousStrategy, slices: Sequence[CodewordMeasurement], config: PastingConfig,
          nu: float = 0.0) -> PastingResult:
    if config.method == 1:
        return paste_method1(s, slices, config)
    return paste_method2(s, slices, config, nu=nu)


@lru_cache(maxsize=8)
def _game(code: LinearCode, m: int):
    return build_game(code, m)


# ---------------------------------------------------------------- diagnostics

@dataclass
class CommutatorReport:
    points: float
    delta: float
    bound: float
    slices: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.points <= self.bound + 1e-9


def _pairwise_commutator(E: np.ndarray) -> float:
    """sqrt(E_{x,y} sum_{a,b} ||[E^x_a, E^y_b]||_tau^2) for a stack (X, outcomes, r, r)."""
    r = E.shape[-1]
    total = 0.0
    for x in range(len(E)):
        XY = np.einsum("aij,ybjk->ybaik", E[x], E)
        YX = np.einsum("ybij,ajk->ybaik", E, E[x])
        total += float(np.sum(np.abs(XY - YX) ** 2)) / r
    return math.sqrt(total / len(E) ** 2)


def commutator_report(s: SynchronousStrategy, slices: Sequence[CodewordMeasurement] | None = None,
                      game=None) -> CommutatorReport:
    """Average commutator size of the points measurements over independent uniform pairs,
    against sqrt(32 m delta) with delta the measured subcube rejection rate."""
    game = game or _game(s.code, s.m)
    rep = goodness_synchronous(s, game)
    delta = max(1.0 - rep.subcube_pass, 0.0)
    pts = _pairwise_commutator(s.points)
    sl = None
    if slices:
        sup = sorted(set().union(*[set(G.support().tolist()) for G in slices]))
        sl = _pairwise_commutator(np.stack([G.elements[sup] for G in slices]))
    return CommutatorReport(pts, delta, math.sqrt(32 * s.m * delta), sl)


@dataclass
class VarianceReport:
    zeta_local: float
    zeta_var: float
    bound_local: float
    bound_var: float
    eps: float
    gamma: float
    spread: LocalGlobal

    @property
    def ok(self) -> bool:
        return (self.zeta_local <= self.bound_local + 1e-9 and self.zeta_var <= self.bound_var + 1e-9
                and self.spread.bound_ok)


def variance_report(s: SynchronousStrategy, T: CodewordMeasurement, game=None) -> VarianceReport:
    """Spread of A^u_{g(u)} T_g^{1/2} across points, along lines and globally."""
    if np.max(np.abs(T.total() - np.eye(s.r))) > 1e-8:
        raise ValueError("variance report needs a complete measurement")
    game = game or _game(s.code, s.m)
    eps = goodness_synchronous(s, game).eps
    cw = codeword_tables(s.code, s.m)
    roots = np.stack([psd_sqrt(X) for X in T.elements])
    F = np.swapaxes(_point_elements(s, cw) @ roots[:, None], 0, 1)  # (N, |C|, r, r)
    spread = local_to_global_check(F, np.eye(s.r) / s.r, s.n, s.m)
    g = gamma(s.n, s.code.d, 1)
    bound_local = 2 * math.sqrt(2 * eps) + 2 * math.sqrt(g)
    return VarianceReport(math.sqrt(max(spread.local_value, 0.0)), math.sqrt(max(spread.global_value, 0.0)),
                          bound_local, math.sqrt(s.m) * bound_local, eps, g, spread)


# ---------------------------------------------------------------- error bookkeeping

def error_terms(eps: float, delta: float, zeta: float, kappa: float, m: int, n: int, d: int, t: int, k: int) -> dict:
    """Closed-form error terms for pasting slices of dimension m into dimension m + 1."""
    g_m = gamma(n, d, m)
    nu1 = 8 * (math.sqrt(zeta) + math.sqrt((m + 1) * delta))
    nu2 = 4 * (g_m + nu1)
    root = math.sqrt(zeta + math.sqrt(2 * (m + 1) * eps))
    nu3 = t * (t * nu2 + root)
    nu4 = nu3 + math.sqrt(2 * (m + 1) * eps)
    nu5 = math.sqrt(nu4) + math.sqrt(zeta)
    nu6 = 2 * t * t * (nu2 + 1.0 / n)
    nu7 = nu6 + 2 * (nu5 + 2 * nu6) ** (1.0 / t)
    nu2p = 27 * nu2**0.25
    nu3pp = k * nu2p + root
    nu3p = k * nu3pp + k * k / n
    nu4p = nu3p + math.sqrt(2 * (m + 1) * eps)
    nu5p = 2 * k * k / n + k * nu3pp + g_m
    nu6p = 2 * k * k * nu2p
    return {
        "gamma_m": g_m, "nu1": nu1, "nu2": nu2, "nu3": nu3, "nu4": nu4, "nu5": nu5, "nu6": nu6, "nu7": nu7,
        "nu2p": nu2p, "nu3pp": nu3pp, "nu3p": nu3p, "nu4p": nu4p, "nu5p": nu5p, "nu6p": nu6p,
        "mu_method1": kappa + nu4 + nu7,
        "mu_method2": kappa * (1 + 1 / (3 * m)) + nu5p + nu6p + math.exp(-k / (72 * m * m)),
    }


# ---------------------------------------------------------------- driver

@dataclass
class LevelRecord:
    m: int
    method: int
    k: int
    nu_max: float
    zeta_max: float
    eps: float
    delta: float
    slice_completeness: float
    kappa: float
    pasted_completeness: float
    pasted_inconsistency: float
    tuples: int
    sampled: bool
    pruned: int
    slice_commutator: float
    completeness_bound: Optional[float] = None
    bounds: dict = field(default_factory=dict)


@dataclass
class ExtractionReport:
    m: int
    r: int
    method: int
    eps: float
    delta: float
    eta: float
    eta_before_final: float
    levels: list = field(default_factory=list)
    final: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    decoded: int = 0
    decoded_weight: float = 0.0

    FIELDS = ("m", "r", "method", "eps", "delta", "eta", "eta_before_final", "levels", "final",
              "bounds", "decoded", "decoded_weight")

    def as_dict(self) -> dict:
        return {k: _plain(v) for k, v in asdict(self).items()}


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


def _extract(s: SynchronousStrategy, config: PastingConfig, tol: float, levels: list) -> CodewordMeasurement:
    if s.m == 1:
        return CodewordMeasurement(s.code, 1, s.lines[0].copy())
    improved = []
    for x in range(s.n):
        sub = restrict_strategy(s, x)
        G = _extract(sub, config, tol, levels)
        improved.append(self_improve(sub, G, tol=tol))
    slices = [imp.H for imp in improved]
    nu_max = max(imp.nu for imp in improved)
    zeta_max = max(imp.zeta for imp in improved)
    good = goodness_synchronous(s, _game(s.code, s.m))
    kappa = 1.0 - float(np.mean([G.completeness() for G in slices]))
    k = config.resolve_k(s.code, s.m - 1)
    terms = error_terms(good.eps, good.delta, zeta_max, kappa, s.m - 1, s.n, s.code.d, s.code.t, k)
    res = paste(s, slices, config, nu=terms["nu5p"] + terms["nu6p"])
    levels.append(LevelRecord(
        m=s.m, method=res.method, k=res.k, nu_max=nu_max, zeta_max=zeta_max, eps=good.eps, delta=good.delta,
        slice_completeness=float(np.mean([imp.completeness for imp in improved])), kappa=res.kappa,
        pasted_completeness=res.completeness, pasted_inconsistency=res.inconsistency,
        tuples=res.tuples, sampled=res.sampled, pruned=res.pruned,
        slice_commutator=_pairwise_commutator(np.stack([G.elements for G in slices])) if s.r > 1 else 0.0,
        completeness_bound=res.completeness_bound, bounds=terms,
    ))
    return res.H


def extract_global(s: SynchronousStrategy, config: PastingConfig | None = None, tol: float = 1e-9,
                   final_improve: bool = True) -> tuple[CodewordMeasurement, ExtractionReport]:
    """Build a complete measurement over C^(m) that agrees with the points measurements.

    Slices are extracted recursively, self-improved and pasted. A last
    self-improvement on the full strategy decodes toward the codeword the
    points favor.
    """
    config = config or PastingConfig()
    if s.m >= 2:
        config.resolve_k(s.code, s.m - 1)
    levels: list = []
    G = _extract(s, config, tol, levels)
    eta0 = 1.0 - point_agreement(s, G)
    final = {}
    if final_improve:
        imp = self_improve(s, G, tol=tol)
        G = imp.H.completed(0)
        final = imp.metrics()
    eta = max(1.0 - point_agreement(s, G), 0.0)
    rep = goodness_synchronous(s, _game(s.code, s.m))
    bounds = {}
    if levels:
        top = levels[-1]
        bounds = dict(top.bounds, kappa=top.kappa, zeta=top.zeta_max)
    report = ExtractionReport(
        m=s.m, r=s.r, method=config.method, eps=rep.eps, delta=rep.delta, eta=eta,
        eta_before_final=max(eta0, 0.0), levels=levels, final=final, bounds=bounds,
        decoded=G.mode(), decoded_weight=float(G.weights().max()),
    )
    return G, report
