"""The measurement-valued SDP behind self-improvement.

    primal: minimize tr(W)  subject to  W >= rho_g for every outcome g
    dual:   maximize sum_g tr(T_g rho_g) over complete measurements {T_g}

Solved by a log-barrier path-following Newton method on W. For barrier
weight mu the stationarity condition mu * sum_g (W - rho_g)^{-1} = 1 makes
T_g = mu (W - rho_g)^{-1} an exactly complete measurement, so each barrier
point carries a strictly feasible primal W and a dual T with gap mu * r * |g|.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .opalg import herm


class DualityNotConverged(RuntimeError):
    def __init__(self, msg, solution):
        super().__init__(msg)
        self.solution = solution


@dataclass
class DualitySolution:
    W: np.ndarray
    T: np.ndarray
    primal: float
    dual: float
    iterations: int
    residual: float = 0.0
    history: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        return self.primal - self.dual

    def psi(self, X: np.ndarray) -> complex:
        """psi(X) = tr(X W)."""
        return np.trace(X @ self.W)


def _hermitian_basis(r: int) -> np.ndarray:
    """Orthonormal basis of r x r Hermitian matrices (real inner product Re tr(A B))."""
    out = []
    for i in range(r):
        E = np.zeros((r, r), dtype=complex)
        E[i, i] = 1
        out.append(E)
    s = 1 / np.sqrt(2)
    for i in range(r):
        for j in range(i + 1, r):
            E = np.zeros((r, r), dtype=complex)
            E[i, j] = E[j, i] = s
            out.append(E)
            F = np.zeros((r, r), dtype=complex)
            F[i, j], F[j, i] = -1j * s, 1j * s
            out.append(F)
    return np.stack(out)


def _barrier_parts(W, rho):
    Z = W[None] - rho
    L = np.linalg.cholesky(Z)  # raises if any slack is not positive definite
    logdet = 2 * np.sum(np.log(np.real(np.diagonal(L, axis1=1, axis2=2))))
    Y = np.linalg.inv(Z)
    return herm(Y), logdet


def _newton_center(W, rho, mu, basis, vecs, max_steps=100, tol=1e-11):
    r = W.shape[0]
    steps = 0
    for steps in range(1, max_steps + 1):
        Y, logdet = _barrier_parts(W, rho)
        grad_m = np.eye(r) - mu * Y.sum(axis=0)
        g = np.real(np.einsum("kij,ji->k", basis, grad_m))
        # Hessian: mu * sum_g tr(E_k Y E_l Y) = mu * Re vec(E_k)^H (sum_g Y^T kron Y) vec(E_l)
        K = np.einsum("gij,gkl->iljk", Y, Y).reshape(r * r, r * r)
        H = mu * np.real(vecs.conj().T @ K @ vecs)
        step = -np.linalg.solve(H + 1e-300 * np.eye(len(g)), g)
        decrement = float(-g @ step)
        # the decrement shrinks with mu, so stop on the centering residual instead
        if np.abs(g).max() <= tol or decrement <= 1e-24:
            break
        D = np.einsum("k,kij->ij", step, basis)
        f0 = np.real(np.trace(W)) - mu * logdet
        t = 1.0
        while True:
            Wn = W + t * D
            try:
                _, ld = _barrier_parts(Wn, rho)
            except np.linalg.LinAlgError:
                t *= 0.5
                if t < 1e-14:
                    return W, steps
                continue
            if np.real(np.trace(Wn)) - mu * ld <= f0 - 0.25 * t * decrement + 1e-15 * abs(f0) or t < 1e-14:
                break
            t *= 0.5
        W = herm(Wn)
    return W, steps


def solve_duality(A: np.ndarray, tol: float = 1e-7, max_outer: int = 200, normalize: bool = True) -> DualitySolution:
    """Solve the pair of programs for rho_g = A_g / r (r = dimension).

    A has shape (outcomes, r, r) with positive semidefinite entries.
    """
    A = herm(np.asarray(A, dtype=complex))
    G, r, _ = A.shape
    rho = A / r if normalize else A
    if G == 1:
        W = rho[0].copy()
        T = np.eye(r, dtype=complex)[None]
        val = float(np.real(np.trace(W)))
        return DualitySolution(W, T, val, val, 0)
    basis = _hermitian_basis(r)
    vecs = basis.reshape(len(basis), -1).T  # row-major vec; consistent with the einsum ordering above
    top = max(float(np.linalg.eigvalsh(p).max()) for p in rho)
    W = (top + 1.0) * np.eye(r, dtype=complex)
    mu = 1.0 / (r * G)
    best = None
    history = []
    total_steps = 0
    for outer in range(max_outer):
        W, steps = _newton_center(W, rho, mu, basis, vecs)
        total_steps += steps
        sol = _certify(W, rho, mu, total_steps)
        history.append((mu, sol.gap))
        if best is None or sol.gap < best.gap:
            best = sol
        if sol.gap <= tol:
            break
        mu *= 0.2
    best.history = history
    if best.gap > tol:
        raise DualityNotConverged(f"duality gap {best.gap:.3g} above tolerance {tol:.3g}", best)
    return best


def _certify(W, rho, mu, steps) -> DualitySolution:
    Y, _ = _barrier_parts(W, rho)
    T = mu * Y
    S = T.sum(axis=0)
    w, V = np.linalg.eigh(herm(S))
    Si = (V / np.sqrt(w)) @ V.conj().T
    T = herm(Si @ T @ Si)
    residual = float(np.abs(S - np.eye(W.shape[0])).max())
    primal = float(np.real(np.trace(W)))
    dual = float(np.real(np.einsum("gij,gji->", T, rho)))
    return DualitySolution(herm(W), T, primal, dual, steps, residual)


def slackness_residual(sol: DualitySolution, A: np.ndarray, X: np.ndarray) -> float:
    """|psi(X) - sum_g tau(T_g X A_g)| for one test operator X."""
    r = A.shape[1]
    rhs = np.einsum("gij,jk,gki->", sol.T, X, A) / r
    return float(abs(sol.psi(X) - rhs))
