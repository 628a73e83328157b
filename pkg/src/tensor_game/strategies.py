"""Strategy containers and constructors: honest, classical, mixtures, corruptions, exhibits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .codes import LinearCode, interpolate, make_reed_solomon
from .opalg import DEFAULT_TOL, MeasurementFamily, Submeasurement, Tolerances, random_unitary, projective_from_assignment
from .tensor import AxisLine, TensorCodeword, enumerate_lines, enumerate_points, line_index, point_index


def _check_stack(E: np.ndarray, tol: Tolerances, what: str) -> None:
    """Vectorized projective-measurement check over leading axes (..., outcomes, r, r)."""
    r = E.shape[-1]
    if np.max(np.abs(E - np.swapaxes(E, -1, -2).conj()), initial=0.0) > tol.hermitian:
        raise ValueError(f"{what}: non-Hermitian element")
    sq = E @ E - E
    if np.max(np.linalg.norm(sq, axis=(-2, -1)), initial=0.0) > tol.idempotence:
        raise ValueError(f"{what}: element is not a projector")
    total = E.sum(axis=-3)
    if np.max(np.abs(total - np.eye(r)), initial=0.0) > tol.completeness:
        raise ValueError(f"{what}: elements do not sum to the identity")


@dataclass
class SynchronousStrategy:
    """Projective families for points, lines and point pairs at a common dimension r.

    points[i] has shape (q, r, r) for the i-th point in row-major order;
    lines[i] has shape (|C|, r, r) over base codewords in canonical order;
    pairs[i, j] has shape (q*q, r, r) with outcome (a, b) stored at a*q + b.
    """

    code: LinearCode
    m: int
    points: np.ndarray
    lines: np.ndarray
    pairs: np.ndarray

    def __post_init__(self):
        n, q, m = self.code.n, self.code.q, self.m
        N = n**m
        r = self.points.shape[-1]
        if self.points.shape != (N, q, r, r):
            raise ValueError(f"points shape {self.points.shape} != {(N, q, r, r)}")
        if self.lines.shape != (m * n ** (m - 1), self.code.size, r, r):
            raise ValueError(f"lines shape {self.lines.shape} is wrong")
        if self.pairs.shape != (N, N, q * q, r, r):
            raise ValueError(f"pairs shape {self.pairs.shape} is wrong")

    @property
    def r(self) -> int:
        return self.points.shape[-1]

    @property
    def n(self) -> int:
        return self.code.n

    @property
    def q(self) -> int:
        return self.code.q

    def validate(self, tol: Tolerances = DEFAULT_TOL) -> "SynchronousStrategy":
        _check_stack(self.points, tol, "points")
        _check_stack(self.lines, tol, "lines")
        _check_stack(self.pairs, tol, "pairs")
        return self

    def point(self, u: Sequence[int]) -> np.ndarray:
        return self.points[point_index(u, self.n)]

    def line(self, line: AxisLine) -> np.ndarray:
        return self.lines[line_index(line, self.n)]

    def pair(self, u, v) -> np.ndarray:
        return self.pairs[point_index(u, self.n), point_index(v, self.n)]

    def point_family(self) -> MeasurementFamily:
        pts = enumerate_points(self.n, self.m)
        return MeasurementFamily(pts, [Submeasurement(range(self.q), E) for E in self.points])


@dataclass
class ClassicalStrategy:
    """Deterministic answers: a points table, a line answer per line, a pair answer per pair."""

    code: LinearCode
    m: int
    points_fn: Callable[[tuple], int]
    lines_fn: Callable[[AxisLine], np.ndarray]
    pairs_fn: Callable[[tuple, tuple], tuple]


@dataclass(frozen=True)
class CorruptionModel:
    kind: str = "point-flips"
    rate: float = 0.0
    seed: int = 0
    rederive_pairs: bool = False

    def __post_init__(self):
        if not 0 <= self.rate <= 1:
            raise ValueError("corruption rate must lie in [0, 1]")
        if self.kind not in ("point-flips", "slice-scramble", "mixture-of-codewords"):
            raise ValueError(f"unknown corruption kind {self.kind!r}")


def _indicator(labels: int, answers: np.ndarray) -> np.ndarray:
    out = np.zeros(answers.shape + (labels, 1, 1), dtype=complex)
    np.put_along_axis(out[..., 0, 0], answers[..., None], 1.0, axis=-1)
    return out


def classical_tables(c: TensorCodeword | np.ndarray, code: LinearCode, m: int):
    """(points answers, line codeword indices) for an evaluation table."""
    table = c.table if isinstance(c, TensorCodeword) else np.asarray(c)
    n = code.n
    pts = table.reshape(-1)
    line_ans = []
    for ln in enumerate_lines(n, m):
        word = tuple(int(table[p]) for p in ln.points(n))
        line_ans.append(code.index[word])
    return pts, np.array(line_ans, dtype=np.int64)


def _from_tables(code: LinearCode, m: int, pts: np.ndarray, line_ans: np.ndarray, pair_ans: np.ndarray):
    q = code.q
    return SynchronousStrategy(
        code, m,
        points=_indicator(q, pts),
        lines=_indicator(code.size, line_ans),
        pairs=_indicator(q * q, pair_ans),
    )


def honest_strategy(c: TensorCodeword) -> SynchronousStrategy:
    code, m = c.base, c.m
    pts, line_ans = classical_tables(c, code, m)
    pair_ans = pts[:, None] * code.q + pts[None, :]
    return _from_tables(code, m, pts, line_ans, pair_ans)


def embed_classical(s: ClassicalStrategy) -> SynchronousStrategy:
    code, m, n, q = s.code, s.m, s.code.n, s.code.q
    points = enumerate_points(n, m)
    pts = np.array([int(s.points_fn(u)) % q for u in points], dtype=np.int64)
    line_ans = []
    for ln in enumerate_lines(n, m):
        word = tuple(int(v) % q for v in s.lines_fn(ln))
        if word not in code.index:
            raise ValueError(f"line answer on {ln} is not a codeword")
        line_ans.append(code.index[word])
    pair_ans = np.empty((len(points), len(points)), dtype=np.int64)
    for i, u in enumerate(points):
        for j, v in enumerate(points):
            a, b = s.pairs_fn(u, v)
            pair_ans[i, j] = (int(a) % q) * q + int(b) % q
    return _from_tables(code, m, pts, np.array(line_ans), pair_ans)


def classical_from_codeword(c: TensorCodeword) -> ClassicalStrategy:
    table = c.table
    return ClassicalStrategy(
        c.base, c.m,
        points_fn=lambda u: int(table[tuple(u)]),
        lines_fn=lambda ln: [int(table[p]) for p in ln.points(c.base.n)],
        pairs_fn=lambda u, v: (int(table[tuple(u)]), int(table[tuple(v)])),
    )


def _block_diag(stacks: list[np.ndarray], mult: list[int]) -> np.ndarray:
    lead = stacks[0].shape[:-2]
    dims = [s.shape[-1] for s in stacks]
    R = sum(d * k for d, k in zip(dims, mult))
    out = np.zeros(lead + (R, R), dtype=complex)
    pos = 0
    for s, d, k in zip(stacks, dims, mult):
        for _ in range(k):
            out[..., pos:pos + d, pos:pos + d] = s
            pos += d
    return out


def mixture(strategies: Sequence[SynchronousStrategy], weights: Sequence, max_denominator: int = 64) -> SynchronousStrategy:
    """Block-diagonal strategy whose block multiplicities realize rational weights.

    Block i appears n_i times with n_i proportional to p_i / r_i, so that block i
    carries normalized-trace mass exactly p_i.
    """
    if len(strategies) != len(weights) or not strategies:
        raise ValueError("one weight per strategy required")
    fr = [Fraction(w).limit_denominator(max_denominator) for w in weights]
    if any(abs(float(f) - float(w)) > 1e-12 for f, w in zip(fr, weights)):
        raise ValueError("weights must be rationals with small denominators")
    if sum(fr) != 1 or any(f < 0 for f in fr):
        raise ValueError("weights must form a distribution")
    code, m = strategies[0].code, strategies[0].m
    if any(s.code is not code or s.m != m for s in strategies):
        raise ValueError("strategies belong to different games")
    keep = [(s, f) for s, f in zip(strategies, fr) if f > 0]
    rs = [s.r for s, _ in keep]
    L = math.lcm(*rs)
    scaled = [f * L / r for (_, f), r in zip(keep, rs)]
    den = math.lcm(*[x.denominator for x in scaled])
    mult = [int(x * den) for x in scaled]
    g = math.gcd(*mult)
    mult = [x // g for x in mult]
    ss = [s for s, _ in keep]
    return SynchronousStrategy(
        code, m,
        points=_block_diag([s.points for s in ss], mult),
        lines=_block_diag([s.lines for s in ss], mult),
        pairs=_block_diag([s.pairs for s in ss], mult),
    )


def _flip_points(pts: np.ndarray, q: int, model: CorruptionModel) -> np.ndarray:
    rng = np.random.default_rng(model.seed)
    count = math.ceil(model.rate * len(pts) - 1e-12)
    where = rng.permutation(len(pts))[:count]
    out = pts.copy()
    out[where] = (out[where] + rng.integers(1, q, size=count)) % q
    return out


def corrupt(s, model: CorruptionModel):
    """Point-flip corruption of an r = 1 or classical strategy; lines stay honest.

    Pairs stay honest unless `rederive_pairs`, which recomputes them from the
    corrupted points.
    """
    if model.kind != "point-flips":
        raise NotImplementedError(f"corruption kind {model.kind!r} is not implemented")
    if isinstance(s, ClassicalStrategy):
        n, q = s.code.n, s.code.q
        points = enumerate_points(n, s.m)
        orig = np.array([s.points_fn(u) for u in points], dtype=np.int64)
        flipped = _flip_points(orig, q, model)
        table = dict(zip(points, flipped.tolist()))
        pairs_fn = (lambda u, v: (table[tuple(u)], table[tuple(v)])) if model.rederive_pairs else s.pairs_fn
        return ClassicalStrategy(s.code, s.m, lambda u: table[tuple(u)], s.lines_fn, pairs_fn)
    if s.r != 1:
        raise ValueError("point flips apply to deterministic (r = 1) strategies")
    pts = np.argmax(s.points[:, :, 0, 0].real, axis=1)
    flipped = _flip_points(pts, s.q, model)
    pairs = s.pairs
    if model.rederive_pairs:
        pairs = _indicator(s.q * s.q, flipped[:, None] * s.q + flipped[None, :])
    return SynchronousStrategy(s.code, s.m, _indicator(s.q, flipped), s.lines.copy(), pairs.copy())


_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Two-qubit observables on a 3 x 3 grid: commuting along rows and columns,
# anticommuting for every pair that shares neither.
MAGIC_SQUARE = (
    (("XI", 1), ("IX", 1), ("XX", 1)),
    (("IZ", 1), ("ZI", 1), ("ZZ", 1)),
    (("XZ", -1), ("ZX", -1), ("YY", 1)),
)

# Fixed embedding of the eigenvalues into GF(3): +1 -> 1, -1 -> 2.
SIGN_TO_FIELD = {1: 1, -1: 2}


def magic_square_observable(i: int, j: int) -> np.ndarray:
    word, sign = MAGIC_SQUARE[i][j]
    return sign * np.kron(_PAULI[word[0]], _PAULI[word[1]])


def anticommuting_pair_strategy(code: LinearCode | None = None) -> SynchronousStrategy:
    """r = 4 exhibit on [3]^2 whose non-aligned point observables anticommute.

    Lines measure the three commuting observables jointly and report the base
    codeword interpolated from the first two answers. Pair questions measure
    both points when they commute; otherwise they measure the first point and
    report +1 for the second.
    """
    code = code or make_reed_solomon(3, 3, 1)
    if (code.q, code.n) != (3, 3):
        raise ValueError("the exhibit lives over GF(3) with n = 3")
    n, m, q, r = 3, 2, 3, 4
    I4 = np.eye(r, dtype=complex)
    proj = {}
    points = np.zeros((n * n, q, r, r), dtype=complex)
    for i in range(n):
        for j in range(n):
            O = magic_square_observable(i, j)
            for sgn in (1, -1):
                P = (I4 + sgn * O) / 2
                points[point_index((i, j), n), SIGN_TO_FIELD[sgn]] = P
                proj[(i, j), sgn] = P
    lines = np.zeros((m * n, code.size, r, r), dtype=complex)
    for ln in enumerate_lines(n, m):
        pts = ln.points(n)
        for signs in np.ndindex(2, 2, 2):
            sg = [(1, -1)[s] for s in signs]
            P = proj[pts[0], sg[0]] @ proj[pts[1], sg[1]] @ proj[pts[2], sg[2]]
            if np.abs(P).max() < 1e-12:
                continue
            vals = [SIGN_TO_FIELD[s] for s in sg]
            word = tuple(int(v) for v in interpolate(code, (0, 1), vals[:2]))
            lines[line_index(ln, n), code.index[word]] += P
    pts_all = enumerate_points(n, m)
    pairs = np.zeros((n * n, n * n, q * q, r, r), dtype=complex)
    for a, u in enumerate(pts_all):
        for b, v in enumerate(pts_all):
            Ou, Ov = magic_square_observable(*u), magic_square_observable(*v)
            commute = np.abs(Ou @ Ov - Ov @ Ou).max() < 1e-12
            for su in (1, -1):
                if commute:
                    for sv in (1, -1):
                        P = proj[u, su] @ proj[v, sv]
                        pairs[a, b, SIGN_TO_FIELD[su] * q + SIGN_TO_FIELD[sv]] += P
                else:
                    pairs[a, b, SIGN_TO_FIELD[su] * q + SIGN_TO_FIELD[1]] += proj[u, su]
    return SynchronousStrategy(code, m, points, lines, pairs)


def random_strategy(code: LinearCode, m: int, r: int, seed=None, honest: TensorCodeword | None = None,
                    noise: float = 1.0) -> SynchronousStrategy:
    """Random projective strategy.

    Each question gets a seeded random projective measurement whose r basis
    vectors carry random labels. With `honest` given, each basis vector keeps
    the honest label with probability 1 - noise, which yields strategies that
    pass with high but imperfect probability.
    """
    rng = np.random.default_rng(seed)
    n, q = code.n, code.q
    N = n**m
    base = None if honest is None else honest_strategy(honest)

    def draw(labels: int, honest_label: int | None):
        U = random_unitary(r, rng)
        assign = rng.integers(0, labels, size=r)
        if honest_label is not None:
            keep = rng.random(r) >= noise
            assign[keep] = honest_label
        return projective_from_assignment(U, assign, labels)

    def honest_of(stack, idx):
        return None if base is None else int(np.argmax(stack[idx][:, 0, 0].real))

    points = np.stack([draw(q, honest_of(base.points, i) if base else None) for i in range(N)])
    L = m * n ** (m - 1)
    lines = np.stack([draw(code.size, honest_of(base.lines, i) if base else None) for i in range(L)])
    pairs = np.stack([
        np.stack([draw(q * q, int(np.argmax(base.pairs[i, j][:, 0, 0].real)) if base else None) for j in range(N)])
        for i in range(N)
    ])
    return SynchronousStrategy(code, m, points, lines, pairs)
