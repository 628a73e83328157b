"""Tensor codes: evaluation tables over [n]^m, axis lines, subcubes, slices."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .codes import ENUMERATION_BUDGET, BudgetExceeded, LinearCode, message_vectors


@dataclass(frozen=True)
class TensorCodeword:
    base: LinearCode
    m: int
    table: np.ndarray

    def __post_init__(self):
        tbl = np.asarray(self.table, dtype=np.int64) % self.base.q
        if tbl.shape != (self.base.n,) * self.m:
            raise ValueError(f"table shape {tbl.shape} != {(self.base.n,) * self.m}")
        tbl.setflags(write=False)
        object.__setattr__(self, "table", tbl)

    def __call__(self, u: Sequence[int]) -> int:
        return int(self.table[tuple(u)])

    def __eq__(self, other):
        return (
            isinstance(other, TensorCodeword)
            and self.m == other.m
            and self.base is other.base
            and np.array_equal(self.table, other.table)
        )

    def __hash__(self):
        return hash((self.m, self.table.tobytes()))


@dataclass(frozen=True, order=True)
class AxisLine:
    """Points varying in coordinate `axis` (0-based) with the others fixed to `intercept`."""

    axis: int
    intercept: tuple

    def points(self, n: int) -> list[tuple]:
        return [self.intercept[: self.axis] + (i,) + self.intercept[self.axis:] for i in range(n)]

    @staticmethod
    def through(u: Sequence[int], axis: int) -> "AxisLine":
        u = tuple(int(x) for x in u)
        return AxisLine(axis, u[:axis] + u[axis + 1:])


@dataclass(frozen=True, order=True)
class Subcube:
    """Points whose last j-1 coordinates equal `tail`; j = 1 is the whole cube."""

    j: int
    tail: tuple

    def contains(self, u: Sequence[int]) -> bool:
        return len(self.tail) == 0 or tuple(u[len(u) - len(self.tail):]) == self.tail


def tensor_encode(code: LinearCode, m: int, coeffs) -> TensorCodeword:
    coeffs = np.asarray(coeffs, dtype=np.int64)
    if coeffs.shape != (code.k,) * m:
        raise ValueError(f"coefficient shape {coeffs.shape} != {(code.k,) * m}")
    table = coeffs
    for axis in range(m):
        table = np.moveaxis(np.tensordot(code.G, table, axes=([1], [axis])), 0, axis) % code.q
    return TensorCodeword(code, m, table)


def is_tensor_codeword(code: LinearCode, m: int, table) -> bool:
    table = np.asarray(table, dtype=np.int64)
    if table.shape != (code.n,) * m:
        raise ValueError(f"table shape {table.shape} != {(code.n,) * m}")
    for axis in range(m):
        lines = np.moveaxis(table, axis, -1).reshape(-1, code.n)
        if not code.is_codeword_batch(lines).all():
            return False
    return True


def restrict_line(c: TensorCodeword, line: AxisLine) -> np.ndarray:
    n, m = c.base.n, c.m
    if not 0 <= line.axis < m or len(line.intercept) != m - 1:
        raise ValueError(f"{line} is not a line of [{n}]^{m}")
    if any(not 0 <= x < n for x in line.intercept):
        raise ValueError(f"{line} is out of range")
    idx = line.intercept[: line.axis] + (slice(None),) + line.intercept[line.axis:]
    return np.array(c.table[idx])


def restrict_slice(c: TensorCodeword, x: int) -> TensorCodeword:
    """Fix the last coordinate to x."""
    if c.m < 1 or not 0 <= x < c.base.n:
        raise ValueError(f"slice {x} out of range")
    return TensorCodeword(c.base, c.m - 1, c.table[..., x])


def interpolate_slices(code: LinearCode, m_plus_1: int, coords: Sequence[int], slices) -> TensorCodeword:
    """The unique h in C^(m+1) whose last-coordinate slices at `coords` are `slices`."""
    m = m_plus_1 - 1
    tables = []
    for g in slices:
        tbl = g.table if isinstance(g, TensorCodeword) else np.asarray(g, dtype=np.int64)
        if tbl.shape != (code.n,) * m or (m > 0 and not is_tensor_codeword(code, m, tbl)):
            raise ValueError("slice is not a codeword of the m-fold tensor code")
        tables.append(tbl)
    phi = code.interpolation_map(coords)
    if len(tables) != phi.shape[1]:
        raise ValueError("one slice per coordinate required")
    stacked = np.stack(tables, axis=-1)
    return TensorCodeword(code, m_plus_1, stacked @ phi.T % code.q)


def agreement_fraction(c, c2) -> Fraction:
    a = c.table if isinstance(c, TensorCodeword) else np.asarray(c)
    b = c2.table if isinstance(c2, TensorCodeword) else np.asarray(c2)
    if a.shape != b.shape:
        raise ValueError("tables differ in shape")
    return Fraction(int(np.count_nonzero(a == b)), a.size)


def gamma(n: int, d: int, m: int) -> float:
    """Largest agreement fraction of two distinct codewords of the m-fold tensor code."""
    return 1.0 - (d / n) ** m


def enumerate_points(n: int, m: int, subcube: Subcube | None = None) -> list[tuple]:
    pts = list(itertools.product(range(n), repeat=m))
    if subcube is not None:
        pts = [u for u in pts if subcube.contains(u)]
    return pts


def point_index(u: Sequence[int], n: int) -> int:
    idx = 0
    for x in u:
        idx = idx * n + int(x)
    return idx


def enumerate_lines(n: int, m: int) -> list[AxisLine]:
    return [AxisLine(j, tail) for j in range(m) for tail in itertools.product(range(n), repeat=m - 1)]


def line_index(line: AxisLine, n: int) -> int:
    return line.axis * n ** (len(line.intercept)) + point_index(line.intercept, n)


def enumerate_subcubes(n: int, m: int) -> list[tuple[Subcube, Fraction]]:
    """Each subcube with its sampling weight: uniform j in 1..m, then uniform tail."""
    out = []
    for j in range(1, m + 1):
        for tail in itertools.product(range(n), repeat=j - 1):
            out.append((Subcube(j, tail), Fraction(1, m * n ** (j - 1))))
    return out


@lru_cache(maxsize=32)
def _kron_generator(code: LinearCode, m: int) -> np.ndarray:
    K = np.ones((1, 1), dtype=np.int64)
    for _ in range(m):
        K = np.kron(K, code.G) % code.q
    return K


def tensor_codewords(code: LinearCode, m: int, budget: int = ENUMERATION_BUDGET) -> np.ndarray:
    """All codewords of C^(m) as flattened tables, ordered lexicographically by coefficients."""
    count = code.q ** (code.k**m)
    if count > budget:
        raise BudgetExceeded(f"{count} tensor codewords exceed budget {budget}")
    coeffs = message_vectors(code.q, code.k**m)
    return coeffs @ _kron_generator(code, m).T % code.q


def tensor_distance(code: LinearCode, m: int) -> int:
    cw = tensor_codewords(code, m)
    return int(np.count_nonzero(cw[1:], axis=1).min())
