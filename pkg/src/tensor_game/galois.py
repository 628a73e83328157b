"""Exact arithmetic and linear algebra over prime fields GF(q)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

MAX_MODULUS = 10_000


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    f = 2
    while f * f <= q:
        if q % f == 0:
            return False
        f += 1
    return True


def check_modulus(q: int) -> int:
    q = int(q)
    if q > MAX_MODULUS or not is_prime(q):
        raise ValueError(f"modulus {q} is not a prime <= {MAX_MODULUS}")
    return q


@dataclass(frozen=True)
class FieldElement:
    value: int
    q: int

    def __post_init__(self):
        check_modulus(self.q)
        if not 0 <= self.value < self.q:
            raise ValueError(f"value {self.value} out of range for GF({self.q})")

    @classmethod
    def of(cls, value: int, q: int) -> "FieldElement":
        return cls(int(value) % q, q)

    def __add__(self, other):
        return field_add(self, other)

    def __sub__(self, other):
        return field_sub(self, other)

    def __mul__(self, other):
        return field_mul(self, other)

    def __neg__(self):
        return FieldElement((-self.value) % self.q, self.q)

    def __int__(self):
        return self.value


def _same_modulus(a: FieldElement, b: FieldElement) -> int:
    if a.q != b.q:
        raise ValueError(f"modulus mismatch: {a.q} vs {b.q}")
    return a.q


def field_add(a: FieldElement, b: FieldElement) -> FieldElement:
    q = _same_modulus(a, b)
    return FieldElement((a.value + b.value) % q, q)


def field_sub(a: FieldElement, b: FieldElement) -> FieldElement:
    q = _same_modulus(a, b)
    return FieldElement((a.value - b.value) % q, q)


def field_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    q = _same_modulus(a, b)
    return FieldElement((a.value * b.value) % q, q)


def inv_mod(a: int, q: int) -> int:
    a %= q
    if a == 0:
        raise ZeroDivisionError("zero has no inverse")
    return pow(a, q - 2, q)


def field_inv(a: FieldElement) -> FieldElement:
    return FieldElement(inv_mod(a.value, a.q), a.q)


@dataclass(frozen=True)
class FieldMatrix:
    """Dense matrix over GF(q); entries kept as a read-only int64 array."""

    q: int
    entries: np.ndarray

    def __post_init__(self):
        check_modulus(self.q)
        arr = np.array(self.entries, dtype=np.int64) % self.q
        if arr.ndim != 2 or min(arr.shape) < 1:
            raise ValueError("FieldMatrix needs a non-empty 2-d grid")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], q: int | None = None) -> "FieldMatrix":
        flat = [x for row in rows for x in row]
        if q is None:
            mods = {x.q for x in flat if isinstance(x, FieldElement)}
            if len(mods) != 1:
                raise ValueError("cannot infer a single modulus")
            q = mods.pop()
        for x in flat:
            if isinstance(x, FieldElement) and x.q != q:
                raise ValueError("entries do not share one modulus")
        return cls(q, np.array([[int(x) for x in row] for row in rows]))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def __getitem__(self, idx) -> FieldElement:
        i, j = idx
        return FieldElement(int(self.entries[i, j]), self.q)


def row_reduce(A: np.ndarray, q: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form mod q; returns (R, pivot columns)."""
    R = np.array(A, dtype=np.int64) % q
    rows, cols = R.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(R[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            R[[r, p]] = R[[p, r]]
        R[r] = (R[r] * inv_mod(int(R[r, c]), q)) % q
        others = np.nonzero(R[:, c])[0]
        for i in others:
            if i != r:
                R[i] = (R[i] - R[i, c] * R[r]) % q
        pivots.append(c)
        r += 1
    return R, pivots


def rank_mod(A: np.ndarray, q: int) -> int:
    return len(row_reduce(A, q)[1])


def nullspace_mod(A: np.ndarray, q: int) -> np.ndarray:
    """Basis of {x : A x = 0} over GF(q), one vector per row."""
    R, pivots = row_reduce(A, q)
    cols = R.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for r, p in enumerate(pivots):
            basis[i, p] = (-R[r, f]) % q
    return basis


def inverse_mod(A: np.ndarray, q: int) -> np.ndarray:
    A = np.asarray(A, dtype=np.int64)
    k = A.shape[0]
    if A.shape != (k, k):
        raise ValueError("inverse needs a square matrix")
    R, pivots = row_reduce(np.hstack([A, np.eye(k, dtype=np.int64)]), q)
    if pivots[:k] != list(range(k)):
        raise ValueError("matrix is singular over GF(q)")
    return R[:, k:]


class LinearSolution(NamedTuple):
    x: np.ndarray
    rank: int


def solve_linear(A: FieldMatrix, b: Sequence) -> LinearSolution | None:
    """Particular solution of A x = b and rank(A), or None when inconsistent."""
    q = A.q
    bv = np.array([int(v) for v in b], dtype=np.int64)
    for v in b:
        if isinstance(v, FieldElement) and v.q != q:
            raise ValueError("modulus mismatch between A and b")
    if bv.shape != (A.rows,):
        raise ValueError(f"rhs length {bv.shape[0]} does not match {A.rows} rows")
    R, pivots = row_reduce(np.hstack([A.entries, bv[:, None]]), q)
    if A.cols in pivots:
        return None
    x = np.zeros(A.cols, dtype=np.int64)
    for r, p in enumerate(pivots):
        x[p] = R[r, -1]
    return LinearSolution(x, len(pivots))
