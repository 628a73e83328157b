"""The augmented tensor code test and its two-prover variant as executable games."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .codes import ENUMERATION_BUDGET, BudgetExceeded, LinearCode
from .strategies import SynchronousStrategy
from .tensor import AxisLine, enumerate_points, enumerate_subcubes, line_index, point_index


@dataclass(frozen=True)
class Point:
    u: tuple


@dataclass(frozen=True)
class Line:
    line: AxisLine


@dataclass(frozen=True)
class Pair:
    """An ordered pair of points. The subcube it was drawn from only enters the weights."""

    u: tuple
    v: tuple


Question = Union[Point, Line, Pair]


@dataclass(frozen=True)
class QuestionPair:
    """One weighted entry of the question distribution.

    `kind` selects the decision rule: "line" compares the line answer at
    position `pos` with the point answer, "first"/"second" compare one
    coordinate of the pair answer with the point answer, "same" accepts equal
    answers. `point_first` marks entries where the first prover got the point.
    """

    first: Question
    second: Question
    kind: str
    weight: Fraction
    test: str
    pos: int = 0
    point_first: bool = False


@dataclass
class GameSpec:
    code: LinearCode
    m: int
    entries: list
    two_prover: bool = False

    @property
    def total_weight(self) -> Fraction:
        return sum((e.weight for e in self.entries), Fraction(0))

    def weight_of(self, test: str) -> Fraction:
        return sum((e.weight for e in self.entries if e.test == test), Fraction(0))


@dataclass
class GoodnessReport:
    eps: float
    delta: float
    pass_probability: float
    xi: Optional[float] = None
    delta_first: float = 0.0
    delta_second: float = 0.0
    lines_pass: float = 1.0
    subcube_pass: float = 1.0
    sync_pass: Optional[float] = None

    def __post_init__(self):
        for k, v in self.__dict__.items():
            if v is not None:
                setattr(self, k, float(v))

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def pair_distribution(n: int, m: int) -> dict[tuple, Fraction]:
    """Probability of the ordered pair (u, v) under subcube sampling."""
    mu: dict[tuple, Fraction] = defaultdict(Fraction)
    for cube, w in enumerate_subcubes(n, m):
        pts = enumerate_points(n, m, cube)
        share = w / (len(pts) ** 2)
        for u in pts:
            for v in pts:
                mu[u, v] += share
    return dict(mu)


def _check_budget(code: LinearCode, m: int):
    if (code.n**m) ** 2 > ENUMERATION_BUDGET:
        raise BudgetExceeded(f"[{code.n}]^{m} is too large to enumerate pair questions")
    if not code.interpolable:
        raise ValueError("the test needs an interpolable base code")


def build_game(code: LinearCode, m: int) -> GameSpec:
    _check_budget(code, m)
    n = code.n
    half = Fraction(1, 2)
    entries = []
    pts = enumerate_points(n, m)
    for u in pts:
        for j in range(m):
            w = half / (len(pts) * m)
            entries.append(QuestionPair(Line(AxisLine.through(u, j)), Point(u), "line", w, "lines", pos=u[j]))
    for (u, v), p in pair_distribution(n, m).items():
        w = half * half * p
        entries.append(QuestionPair(Pair(u, v), Point(u), "first", w, "subcube"))
        # order bit t = 1: the pair is sent as (v, u) and its second coordinate is checked
        entries.append(QuestionPair(Pair(v, u), Point(u), "second", w, "subcube"))
    return GameSpec(code, m, _merge(entries))


def _merge(entries):
    acc: dict = {}
    for e in entries:
        key = (e.first, e.second, e.kind, e.test, e.pos, e.point_first)
        if key in acc:
            acc[key] = QuestionPair(e.first, e.second, e.kind, acc[key].weight + e.weight, e.test, e.pos, e.point_first)
        else:
            acc[key] = e
    return list(acc.values())


def build_two_prover_game(code: LinearCode, m: int) -> GameSpec:
    _check_budget(code, m)
    n = code.n
    third, half = Fraction(1, 3), Fraction(1, 2)
    pts = enumerate_points(n, m)
    entries = []
    for u in pts:
        for j in range(m):
            w = third * half / (len(pts) * m)
            ln = Line(AxisLine.through(u, j))
            entries.append(QuestionPair(ln, Point(u), "line", w, "lines", pos=u[j]))
            entries.append(QuestionPair(Point(u), ln, "line", w, "lines", pos=u[j], point_first=True))
    mu = pair_distribution(n, m)
    for (u, v), p in mu.items():
        w = third * half * half * p
        for pf in (False, True):
            a, b = (Point(u), Pair(u, v)) if pf else (Pair(u, v), Point(u))
            entries.append(QuestionPair(a, b, "first", w, "subcube", point_first=pf))
            a, b = (Point(u), Pair(v, u)) if pf else (Pair(v, u), Point(u))
            entries.append(QuestionPair(a, b, "second", w, "subcube", point_first=pf))
    for u in pts:
        entries.append(QuestionPair(Point(u), Point(u), "same", third * third / len(pts), "sync"))
    lines = {AxisLine.through(u, j) for u in pts for j in range(m)}
    for ln in sorted(lines):
        entries.append(QuestionPair(Line(ln), Line(ln), "same", third * third / len(lines), "sync"))
    for (u, v), p in mu.items():
        entries.append(QuestionPair(Pair(u, v), Pair(u, v), "same", third * third * p, "sync"))
    return GameSpec(code, m, _merge(entries), two_prover=True)


def measurement_for(s: SynchronousStrategy, question: Question) -> np.ndarray:
    n = s.n
    if isinstance(question, Point):
        return s.points[point_index(question.u, n)]
    if isinstance(question, Line):
        return s.lines[line_index(question.line, n)]
    return s.pairs[point_index(question.u, n), point_index(question.v, n)]


def accept_mask(code: LinearCode, e: QuestionPair) -> np.ndarray:
    """Boolean table over (first answer, second answer)."""
    q = code.q
    if e.kind == "same":
        size = {Point: q, Line: code.size, Pair: q * q}[type(e.first)]
        return np.eye(size, dtype=bool)
    if e.kind == "line":
        mask = code.codewords[:, e.pos][:, None] == np.arange(q)[None, :]
    else:
        pair_ans = np.arange(q * q)
        coord = pair_ans // q if e.kind == "first" else pair_ans % q
        mask = coord[:, None] == np.arange(q)[None, :]
    return mask.T if e.point_first else mask


def joint_synchronous(s: SynchronousStrategy, e: QuestionPair) -> np.ndarray:
    """tau(M_a N_b) over answer pairs."""
    X = measurement_for(s, e.first)
    Y = measurement_for(s, e.second)
    return np.einsum("aij,bji->ab", X, Y).real / s.r


def _check_game(s, game: GameSpec):
    if s.code is not game.code or s.m != game.m:
        raise ValueError("strategy and game use different codes or dimensions")


def evaluate_synchronous(strategy: SynchronousStrategy, game: GameSpec) -> float:
    _check_game(strategy, game)
    total = 0.0
    for e in game.entries:
        total += float(e.weight) * joint_synchronous(strategy, e)[accept_mask(game.code, e)].sum()
    return float(total)


def _test_rejections(game: GameSpec, joint_fn) -> dict:
    """Per-test (weight, rejected mass) plus per-kind splits."""
    acc = defaultdict(lambda: [0.0, 0.0])
    for e in game.entries:
        J = joint_fn(e)
        mask = accept_mask(game.code, e)
        w = float(e.weight)
        rej = J.sum() - J[mask].sum()
        for key in (e.test, (e.test, e.kind)):
            acc[key][0] += w
            acc[key][1] += w * rej
    return acc


def goodness_synchronous(strategy: SynchronousStrategy, game: GameSpec) -> GoodnessReport:
    _check_game(strategy, game)
    acc = _test_rejections(game, lambda e: joint_synchronous(strategy, e))
    eps = acc["lines"][1] / acc["lines"][0]
    d1 = acc["subcube", "first"][1] / acc["subcube", "first"][0]
    d2 = acc["subcube", "second"][1] / acc["subcube", "second"][0]
    fail = acc["lines"][1] + acc["subcube"][1]
    return GoodnessReport(
        eps=eps, delta=max(d1, d2), pass_probability=1.0 - fail,
        delta_first=d1, delta_second=d2,
        lines_pass=1.0 - eps, subcube_pass=1.0 - acc["subcube"][1] / acc["subcube"][0],
    )


@dataclass
class BipartiteStrategy:
    """State psi on C^rA (x) C^rB (index i*rB + j) and one family set per prover."""

    psi: np.ndarray
    first: SynchronousStrategy
    second: SynchronousStrategy

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex).reshape(-1)
        if self.psi.size != self.first.r * self.second.r:
            raise ValueError("state dimension does not match the provers")
        if abs(np.linalg.norm(self.psi) - 1) > 1e-10:
            raise ValueError("state is not normalized")
        if self.first.code is not self.second.code or self.first.m != self.second.m:
            raise ValueError("provers play different games")

    @property
    def code(self):
        return self.first.code

    @property
    def m(self):
        return self.first.m

    @property
    def state_matrix(self) -> np.ndarray:
        return self.psi.reshape(self.first.r, self.second.r)


def correlation(M: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """<psi| X_a (x) Y_b |psi> for all a, b, with psi given as a matrix M."""
    XM = X @ M
    return np.einsum("ij,aik,bjk->ab", M.conj(), XM, Y).real


def joint_bipartite(s: BipartiteStrategy, e: QuestionPair) -> np.ndarray:
    return correlation(s.state_matrix, measurement_for(s.first, e.first), measurement_for(s.second, e.second))


def evaluate_bipartite(strategy: BipartiteStrategy, game: GameSpec) -> tuple[float, GoodnessReport]:
    _check_game(strategy.first, game)
    if not game.two_prover:
        raise ValueError("evaluate_bipartite needs the two-prover game")
    # agreement-based readings: 1 - accepted mass
    acc_mass = defaultdict(lambda: [0.0, 0.0])
    for e in game.entries:
        J = joint_bipartite(strategy, e)
        w = float(e.weight)
        a = J[accept_mask(game.code, e)].sum()
        for key in (e.test, (e.test, e.kind)):
            acc_mass[key][0] += w
            acc_mass[key][1] += w * a
    frac = lambda key: acc_mass[key][1] / acc_mass[key][0]
    eps = 1 - frac("lines")
    d1, d2 = 1 - frac(("subcube", "first")), 1 - frac(("subcube", "second"))
    xi = 1 - frac("sync")
    value = sum(v[1] for k, v in acc_mass.items() if isinstance(k, str))
    rep = GoodnessReport(
        eps=eps, delta=max(d1, d2), xi=xi, pass_probability=value,
        delta_first=d1, delta_second=d2, lines_pass=1 - eps,
        subcube_pass=frac("subcube"), sync_pass=1 - xi,
    )
    return value, rep


def maximally_entangled(r: int) -> np.ndarray:
    return np.eye(r, dtype=complex).reshape(-1) / np.sqrt(r)


def _transpose_strategy(s: SynchronousStrategy) -> SynchronousStrategy:
    T = lambda E: np.swapaxes(E, -1, -2).copy()
    return SynchronousStrategy(s.code, s.m, T(s.points), T(s.lines), T(s.pairs))


def _conjugate_strategy(s: SynchronousStrategy, U: np.ndarray) -> SynchronousStrategy:
    """Families X -> U X U^dagger."""
    C = lambda E: U @ E @ U.conj().T
    return SynchronousStrategy(s.code, s.m, C(s.points), C(s.lines), C(s.pairs))


def embed_synchronous(s: SynchronousStrategy) -> BipartiteStrategy:
    """Maximally entangled state; the second prover uses transposed operators."""
    return BipartiteStrategy(maximally_entangled(s.r), s, _transpose_strategy(s))


def _pad_strategy(s: SynchronousStrategy, r: int) -> SynchronousStrategy:
    """Extend to dimension r; the extra block is assigned to each question's first outcome."""
    extra = r - s.r
    if extra == 0:
        return s

    def pad(E):
        out = np.zeros(E.shape[:-2] + (r, r), dtype=complex)
        out[..., : s.r, : s.r] = E
        out[..., 0, s.r:, s.r:] = np.eye(extra)
        return out

    return SynchronousStrategy(s.code, s.m, pad(s.points), pad(s.lines), pad(s.pairs))


def symmetrize(strategy: BipartiteStrategy) -> BipartiteStrategy:
    """Symmetric strategy (psi', X', X'^T) built from two copies with swapped roles.

    The state is first rotated by local unitaries to its Schmidt form with a
    real nonnegative diagonal, and the provers' operators are conjugated to
    match. The output lives on (C^r (x) C^2) for each prover with
    X' = X (x) |0><0| + (X~)^T (x) |1><1| and state
    (psi (x) |0>|1> + SWAP psi (x) |1>|0>) / sqrt(2).
    """
    rA, rB = strategy.first.r, strategy.second.r
    r = max(rA, rB)
    M = np.zeros((r, r), dtype=complex)
    M[:rA, :rB] = strategy.state_matrix
    first = _pad_strategy(strategy.first, r)
    second = _pad_strategy(strategy.second, r)
    U, sig, Vh = np.linalg.svd(M)
    # psi = sum_k sig_k u_k (x) conj(v_k); rotate with U^dagger on the first prover, V^T on the second
    first = _conjugate_strategy(first, U.conj().T)
    second = _conjugate_strategy(second, Vh.conj())
    D = np.diag(sig).astype(complex)

    def lift(X, Xt):
        out = np.zeros(X.shape[:-2] + (2 * r, 2 * r), dtype=complex)
        out[..., 0::2, 0::2] = X
        out[..., 1::2, 1::2] = np.swapaxes(Xt, -1, -2)
        return out

    A = SynchronousStrategy(
        first.code, first.m,
        lift(first.points, second.points), lift(first.lines, second.lines), lift(first.pairs, second.pairs),
    )
    # index (i, s) -> 2*i + s on each side
    Mp = np.zeros((2 * r, 2 * r), dtype=complex)
    Mp[0::2, 1::2] = D / np.sqrt(2)
    Mp[1::2, 0::2] = D.T / np.sqrt(2)
    return BipartiteStrategy(Mp.reshape(-1), A, _transpose_strategy(A))


def is_symmetric_form(s: BipartiteStrategy, tol: float = 1e-10) -> bool:
    if s.first.r != s.second.r:
        return False
    M = s.state_matrix
    T = lambda E: np.swapaxes(E, -1, -2)
    return (
        np.abs(M - M.T).max() <= tol
        and all(np.abs(T(x) - y).max() <= tol for x, y in [
            (s.first.points, s.second.points), (s.first.lines, s.second.lines), (s.first.pairs, s.second.pairs)])
    )


@dataclass
class MonteCarloResult:
    rate: float
    stderr: float
    rounds: int
    seed: int


BLOCK = 4096


def _entry_tables(strategy, game: GameSpec):
    joint = joint_bipartite if isinstance(strategy, BipartiteStrategy) else joint_synchronous
    tables = []
    for e in game.entries:
        J = joint(strategy, e)
        if J.min() < -1e-9:
            raise ValueError("negative outcome probability; the strategy is not a valid measurement family")
        J = np.clip(J, 0, None)
        total = J.sum()
        if abs(total - 1) > 1e-6:
            raise ValueError("outcome distribution is not normalized")
        tables.append((np.cumsum(J.reshape(-1)) / total, accept_mask(game.code, e).reshape(-1)))
    return tables


def monte_carlo_play(strategy, game: GameSpec, rounds: int, seed: int = 0) -> MonteCarloResult:
    """Referee simulation. Rounds are drawn in fixed-size blocks seeded by (seed, block index)."""
    tables = _entry_tables(strategy, game)
    weights = np.array([float(e.weight) for e in game.entries])
    cdf_q = np.cumsum(weights) / weights.sum()
    wins = 0
    for b, start in enumerate(range(0, rounds, BLOCK)):
        size = min(BLOCK, rounds - start)
        rng = np.random.default_rng([seed, b])
        qs = np.minimum(np.searchsorted(cdf_q, rng.random(size), side="right"), len(tables) - 1)
        draws = rng.random(size)
        for idx in np.unique(qs):
            sel = qs == idx
            cdf, mask = tables[idx]
            ans = np.minimum(np.searchsorted(cdf, draws[sel], side="right"), len(cdf) - 1)
            wins += int(mask[ans].sum())
    rate = wins / rounds
    return MonteCarloResult(rate, float(np.sqrt(max(rate * (1 - rate), 1e-300) / rounds)), rounds, seed)
