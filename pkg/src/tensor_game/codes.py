"""Interpolable linear codes over prime fields."""
from __future__ import annotations

import itertools
from functools import cached_property
from typing import Sequence

import numpy as np

from .galois import (
    FieldElement,
    FieldMatrix,
    check_modulus,
    inverse_mod,
    nullspace_mod,
    rank_mod,
    solve_linear,
)

ENUMERATION_BUDGET = 10**6


class BudgetExceeded(RuntimeError):
    pass


def message_vectors(q: int, k: int) -> np.ndarray:
    """All vectors of GF(q)^k in lexicographic order (last entry fastest)."""
    if q**k > ENUMERATION_BUDGET:
        raise BudgetExceeded(f"q^k = {q**k} exceeds the enumeration budget")
    return np.array(list(itertools.product(range(q), repeat=k)), dtype=np.int64).reshape(-1, k)


class LinearCode:
    """A linear [n, k, d] code over GF(q) given by an n x k generator matrix.

    Codewords are length-n integer vectors; their canonical order is the
    lexicographic order of the messages that encode them.
    """

    def __init__(self, generator: FieldMatrix | np.ndarray, q: int | None = None, eval_points=None):
        if isinstance(generator, FieldMatrix):
            q = generator.q
            G = generator.entries
        else:
            if q is None:
                raise ValueError("modulus required for a raw generator array")
            G = np.asarray(generator, dtype=np.int64) % check_modulus(q)
        if rank_mod(G, q) != G.shape[1]:
            raise ValueError("generator columns are not independent")
        self.q = q
        self.generator = FieldMatrix(q, G)
        self.eval_points = None if eval_points is None else tuple(int(x) for x in eval_points)

    @property
    def G(self) -> np.ndarray:
        return self.generator.entries

    @property
    def n(self) -> int:
        return self.G.shape[0]

    @property
    def k(self) -> int:
        return self.G.shape[1]

    @property
    def size(self) -> int:
        return self.q**self.k

    def __repr__(self):
        return f"LinearCode(q={self.q}, n={self.n}, k={self.k})"

    @cached_property
    def codewords(self) -> np.ndarray:
        cw = message_vectors(self.q, self.k) @ self.G.T % self.q
        cw.setflags(write=False)
        return cw

    @cached_property
    def index(self) -> dict[tuple, int]:
        return {tuple(int(v) for v in w): i for i, w in enumerate(self.codewords)}

    @cached_property
    def d(self) -> int:
        return distance(self)

    @property
    def t(self) -> int:
        return self.n - self.d + 1

    @cached_property
    def parity_check(self) -> np.ndarray:
        return nullspace_mod(self.G.T, self.q)

    @cached_property
    def interpolable(self) -> bool:
        return check_interpolable(self)

    def interpolation_map(self, coords: Sequence[int]) -> np.ndarray:
        """n x t matrix sending values at `coords` to the unique codeword."""
        coords = tuple(int(c) for c in coords)
        cache = self.__dict__.setdefault("_phi", {})
        if coords not in cache:
            if len(set(coords)) != len(coords):
                raise ValueError(f"duplicate coordinates {coords}")
            if not self.interpolable:
                raise ValueError("code is not interpolable")
            if len(coords) != self.t:
                raise ValueError(f"need exactly t={self.t} coordinates")
            sub = self.G[list(coords)]
            phi = self.G @ inverse_mod(sub, self.q) % self.q
            phi.setflags(write=False)
            cache[coords] = phi
        return cache[coords]

    def is_codeword_batch(self, words: np.ndarray) -> np.ndarray:
        words = np.asarray(words, dtype=np.int64)
        if self.parity_check.shape[0] == 0:
            return np.ones(words.shape[:-1], dtype=bool)
        return np.all(words @ self.parity_check.T % self.q == 0, axis=-1)

    def to_dict(self) -> dict:
        return {"q": self.q, "generator": self.G.tolist(), "eval_points": self.eval_points}


def make_reed_solomon(q: int, n: int, s: int, eval_points: Sequence | None = None) -> LinearCode:
    """Degree-<=s polynomial evaluations; column j evaluates x^j."""
    q = check_modulus(q)
    if eval_points is None:
        eval_points = list(range(n))
    pts = [int(x) % q for x in eval_points]
    if len(pts) != n:
        raise ValueError("need exactly n evaluation points")
    if n > q:
        raise ValueError(f"n = {n} exceeds field size {q}")
    if len(set(pts)) != n:
        raise ValueError("repeated evaluation points")
    if not 0 <= s < n:
        raise ValueError(f"degree s = {s} must satisfy 0 <= s < n")
    G = np.array([[pow(x, j, q) for j in range(s + 1)] for x in pts], dtype=np.int64)
    code = LinearCode(G, q=q, eval_points=pts)
    code.degree = s
    return code


def _as_ints(vec, q: int) -> np.ndarray:
    out = []
    for v in vec:
        if isinstance(v, FieldElement) and v.q != q:
            raise ValueError("modulus mismatch")
        out.append(int(v) % q)
    return np.array(out, dtype=np.int64)


def encode(code: LinearCode, message) -> np.ndarray:
    msg = _as_ints(message, code.q)
    if msg.shape != (code.k,):
        raise ValueError(f"message length {msg.shape[0]} != k = {code.k}")
    return code.G @ msg % code.q


def is_codeword(code: LinearCode, word) -> bool:
    w = _as_ints(word, code.q)
    if w.shape != (code.n,):
        raise ValueError(f"word length {w.shape[0]} != n = {code.n}")
    return solve_linear(code.generator, w) is not None


def distance(code: LinearCode) -> int:
    """Minimum weight of a nonzero codeword, by exhaustive enumeration."""
    cw = code.codewords
    weights = np.count_nonzero(cw[1:], axis=1)
    return int(weights.min()) if weights.size else code.n


def check_interpolable(code: LinearCode) -> bool:
    """True iff every t-subset of generator rows is independent."""
    t = code.t
    for rows in itertools.combinations(range(code.n), t):
        if rank_mod(code.G[list(rows)], code.q) != t:
            return False
    return True


def interpolate(code: LinearCode, coords: Sequence[int], values) -> np.ndarray:
    vals = _as_ints(values, code.q)
    phi = code.interpolation_map(coords)
    if vals.shape != (phi.shape[1],):
        raise ValueError("one value per coordinate required")
    return phi @ vals % code.q
