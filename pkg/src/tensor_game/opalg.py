"""Dense operator algebra under the normalized trace tr(X)/r.

Measurements are stored as stacked arrays of shape (outcomes, r, r).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    psd: float = 1e-9
    idempotence: float = 1e-8
    completeness: float = 1e-9
    hermitian: float = 1e-9


DEFAULT_TOL = Tolerances()


def trace_state(X: np.ndarray) -> complex:
    return np.trace(X, axis1=-2, axis2=-1) / X.shape[-1]


def tau_inner(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """tau(X Y) for stacks of matrices, without forming the product."""
    return np.einsum("...ij,...ji->...", X, Y) / X.shape[-1]


def tau_norm(X: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(X) ** 2) / X.shape[-1]))


def one_norm(X: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(X, compute_uv=False)) / X.shape[-1])


def op_norm(X: np.ndarray) -> float:
    return float(np.linalg.norm(X, 2)) if X.size else 0.0


def herm(X: np.ndarray) -> np.ndarray:
    return (X + np.swapaxes(X, -1, -2).conj()) / 2


def commutator(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return X @ Y - Y @ X


class Submeasurement:
    """Positive operators indexed by outcome labels, summing to at most the identity."""

    def __init__(self, labels: Sequence[Hashable], elements, validate: bool = False, projective: bool = False,
                 tol: Tolerances = DEFAULT_TOL):
        self.labels = tuple(labels)
        self.elements = np.asarray(elements, dtype=complex)
        if self.elements.ndim != 3 or self.elements.shape[0] != len(self.labels):
            raise ValueError("elements must have shape (len(labels), r, r)")
        if self.elements.shape[1] != self.elements.shape[2]:
            raise ValueError("elements must be square")
        self._index = None
        if validate:
            check_submeasurement(self, projective=projective, tol=tol)

    @property
    def r(self) -> int:
        return self.elements.shape[1]

    @property
    def index(self) -> dict:
        if self._index is None:
            self._index = {a: i for i, a in enumerate(self.labels)}
        return self._index

    def __getitem__(self, label) -> np.ndarray:
        return self.elements[self.index[label]]

    def __len__(self):
        return len(self.labels)

    def total(self) -> np.ndarray:
        return self.elements.sum(axis=0)

    def is_projective(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        try:
            check_submeasurement(self, projective=True, tol=tol)
        except ValueError:
            return False
        return True

    def completed(self, label) -> "Submeasurement":
        """Add the missing mass 1 - sum to the given outcome."""
        E = self.elements.copy()
        E[self.index[label]] += np.eye(self.r) - self.total()
        return Submeasurement(self.labels, E)

    def __repr__(self):
        return f"Submeasurement(outcomes={len(self.labels)}, r={self.r})"


def check_submeasurement(M: Submeasurement, projective: bool = False, complete: bool = False,
                         tol: Tolerances = DEFAULT_TOL) -> None:
    E = M.elements
    if not np.all(np.isfinite(E)):
        raise ValueError("non-finite entries")
    if np.max(np.abs(E - np.swapaxes(E, 1, 2).conj()), initial=0.0) > tol.hermitian:
        raise ValueError("element is not Hermitian")
    if len(E) and np.linalg.eigvalsh(herm(E)).min() < -tol.psd:
        raise ValueError("element is not positive semidefinite")
    S = herm(M.total())
    eig = np.linalg.eigvalsh(np.eye(M.r) - S)
    if eig.min() < -tol.psd:
        raise ValueError("elements sum above the identity")
    if complete and eig.max() > tol.completeness:
        raise ValueError("measurement is not complete")
    if projective:
        for a in range(len(E)):
            if op_norm(E[a] @ E[a] - E[a]) > tol.idempotence:
                raise ValueError(f"outcome {M.labels[a]!r} is not idempotent")
        # pairwise orthogonality follows from idempotence + sum <= 1, but check cheaply
        nz = [a for a in range(len(E)) if np.abs(E[a]).max() > tol.idempotence]
        for i, a in enumerate(nz):
            for b in nz[i + 1:]:
                if op_norm(E[a] @ E[b]) > tol.idempotence:
                    raise ValueError(f"outcomes {M.labels[a]!r}, {M.labels[b]!r} overlap")


@dataclass
class MeasurementFamily:
    """One submeasurement per question plus a question distribution."""

    questions: list
    measurements: list
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        if len(self.questions) != len(self.measurements):
            raise ValueError("one measurement per question required")
        if self.weights is None:
            self.weights = np.full(len(self.questions), 1.0 / len(self.questions))
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1) > 1e-12:
            raise ValueError("question weights must be a distribution")
        if len({M.r for M in self.measurements}) > 1:
            raise ValueError("measurements act on different dimensions")

    def __iter__(self):
        return iter(zip(self.questions, self.measurements, self.weights))


def _aligned(M: Submeasurement, N: Submeasurement) -> np.ndarray:
    if M.labels == N.labels:
        return N.elements
    if set(M.labels) != set(N.labels):
        raise ValueError("outcome labels differ")
    return N.elements[[N.index[a] for a in M.labels]]


def _check_families(M: MeasurementFamily, N: MeasurementFamily):
    if list(M.questions) != list(N.questions) or not np.allclose(M.weights, N.weights, atol=1e-15):
        raise ValueError("families use different questions or distributions")


def consistency(M: MeasurementFamily, N: MeasurementFamily) -> float:
    """E_x sum_{a != b} tau(M^x_a N^x_b); zero means perfectly consistent."""
    _check_families(M, N)
    total = 0.0
    for (_, Mx, w), Nx in zip(M, N.measurements):
        NE = _aligned(Mx, Nx)
        cross = tau_inner(Mx.total(), NE.sum(axis=0)) - tau_inner(Mx.elements, NE).sum()
        total += w * cross.real
    return float(total)


def closeness(M: MeasurementFamily, N: MeasurementFamily) -> float:
    """sqrt(E_x sum_a ||M^x_a - N^x_a||_tau^2)."""
    _check_families(M, N)
    total = 0.0
    for (_, Mx, w), Nx in zip(M, N.measurements):
        D = Mx.elements - _aligned(Mx, Nx)
        total += w * np.sum(np.abs(D) ** 2) / Mx.r
    return float(np.sqrt(total))


def data_process(M: Submeasurement, f: Callable | dict) -> Submeasurement:
    """Coarse-grain outcomes: element for b is the sum of M_a over f(a) = b."""
    fn = f.__getitem__ if isinstance(f, dict) else f
    images = [fn(a) for a in M.labels]
    labels = list(dict.fromkeys(images))
    pos = {b: i for i, b in enumerate(labels)}
    out = np.zeros((len(labels), M.r, M.r), dtype=complex)
    np.add.at(out, [pos[b] for b in images], M.elements)
    return Submeasurement(labels, out)


def matrix_function(H: np.ndarray, f: Callable, tol: float = 1e-9) -> np.ndarray:
    if np.max(np.abs(H - H.conj().T), initial=0.0) > tol:
        raise ValueError("matrix_function needs a Hermitian input")
    w, V = np.linalg.eigh(herm(H))
    vals = np.asarray(f(w), dtype=complex) * np.ones_like(w)
    return herm((V * vals) @ V.conj().T)


def psd_sqrt(X: np.ndarray) -> np.ndarray:
    return matrix_function(herm(X), lambda w: np.sqrt(np.clip(w, 0, None)), tol=np.inf)


@dataclass
class RoundingResult:
    measurement: Submeasurement
    zeta: float
    distance: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.distance <= self.bound + 1e-12


def projectivity_deficit(A: Submeasurement) -> float:
    """sum_a tau(A_a (1 - A_a))."""
    E = A.elements
    return float(np.real(trace_state(E).sum() - tau_inner(E, E).sum()))


def orthogonalize(A: Submeasurement, threshold: float = 0.5) -> RoundingResult:
    """Greedy spectral rounding to a projective submeasurement on the same labels.

    Outcomes are visited by decreasing trace. Each one is compressed onto the
    still-unassigned subspace and keeps its eigenvectors with eigenvalue at
    least `threshold`.
    """
    r = A.r
    E = herm(A.elements)
    P = np.zeros_like(E)
    free = np.eye(r, dtype=complex)  # orthonormal basis of the unassigned subspace (columns)
    order = sorted(range(len(E)), key=lambda a: (-float(np.real(np.trace(E[a]))), a))
    for a in order:
        if free.shape[1] == 0:
            break
        C = free.conj().T @ E[a] @ free
        w, V = np.linalg.eigh(herm(C))
        keep = w >= threshold
        if not keep.any():
            continue
        vecs = free @ V[:, keep]
        P[a] = vecs @ vecs.conj().T
        free = free @ V[:, ~keep]
    out = Submeasurement(A.labels, P)
    zeta = max(projectivity_deficit(A), 0.0)
    dist = float(np.sqrt(np.sum(np.abs(A.elements - P) ** 2) / r))
    return RoundingResult(out, zeta, dist, float(np.sqrt(18 * zeta)))


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_unitary(r: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    Z = rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_hermitian(r: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    Z = rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r))
    return herm(Z)


def random_psd(r: int, seed=None, rank: int | None = None) -> np.ndarray:
    rng = _rng(seed)
    Z = rng.standard_normal((r, rank or r)) + 1j * rng.standard_normal((r, rank or r))
    return Z @ Z.conj().T


def projective_from_assignment(U: np.ndarray, assignment: Sequence[int], outcomes: int) -> np.ndarray:
    """Projectors onto groups of columns of a unitary; column i goes to outcome assignment[i]."""
    r = U.shape[0]
    E = np.zeros((outcomes, r, r), dtype=complex)
    for i, a in enumerate(assignment):
        E[a] += np.outer(U[:, i], U[:, i].conj())
    return E


def random_projective_measurement(r: int, outcomes: int, seed=None, labels=None,
                                  allow_empty: bool = False) -> Submeasurement:
    """Complete projective measurement from a partition of a random unitary's columns.

    Every outcome receives at least one column unless `allow_empty` is set, in
    which case columns are assigned to uniformly random outcomes.
    """
    if outcomes > r and not allow_empty:
        raise ValueError(f"{outcomes} outcomes cannot all be nonzero in dimension {r}")
    rng = _rng(seed)
    U = random_unitary(r, rng)
    if allow_empty:
        assignment = rng.integers(0, outcomes, size=r)
    else:
        assignment = np.concatenate([np.arange(outcomes), rng.integers(0, outcomes, size=r - outcomes)])
        rng.shuffle(assignment)
    labels = range(outcomes) if labels is None else labels
    return Submeasurement(labels, projective_from_assignment(U, assignment, outcomes))


def random_submeasurement(r: int, outcomes: int, seed=None, slack: float = 0.0, labels=None) -> Submeasurement:
    """Random POVM scaled by (1 - slack); slack = 0 gives a complete measurement."""
    rng = _rng(seed)
    raw = np.stack([random_psd(r, rng) for _ in range(outcomes)])
    S = raw.sum(axis=0)
    root = matrix_function(herm(S), lambda w: 1 / np.sqrt(w))
    E = (1 - slack) * herm(root @ raw @ root)
    labels = range(outcomes) if labels is None else labels
    return Submeasurement(labels, E)


def near_projective(r: int, outcomes: int, noise: float, seed=None) -> Submeasurement:
    """A projective measurement perturbed toward a random POVM; deficit grows with noise."""
    rng = _rng(seed)
    P = random_projective_measurement(r, outcomes, rng).elements
    Q = random_submeasurement(r, outcomes, rng).elements
    return Submeasurement(range(outcomes), (1 - noise) * P + noise * Q)
