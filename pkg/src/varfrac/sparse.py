"""CSR storage, Jacobi-preconditioned conjugate gradients and inverse iteration.

Storage is scipy's CSR; the iterative solvers are written here so that
stopping rules and failure reporting follow this package's contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = ["SparseMatrix", "csr_from_triplets", "NonConvergence", "CGResult",
           "cg_solve", "smallest_generalized_eig", "default_max_iter"]

SparseMatrix = sp.csr_matrix


class NonConvergence(RuntimeError):
    """An iterative solve stopped at ``max_iter`` above its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int, x=None, floor: float | None = None):
        text = f"{message} (relative residual {residual:.3e} after {iterations} iterations)"
        if floor is not None and residual <= 100.0 * floor:
            text += (f"; rounding limits the residual to about {floor:.1e}, "
                     "so raise the tolerance or use a milder grading")
        super().__init__(text)
        self.residual = residual
        self.iterations = iterations
        self.x = x
        self.floor = floor


def csr_from_triplets(rows, cols, vals, n: int) -> sp.csr_matrix:
    """Square CSR matrix with duplicates summed and column indices sorted."""
    m = sp.coo_matrix((np.asarray(vals, dtype=float),
                       (np.asarray(rows), np.asarray(cols))), shape=(n, n)).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def default_max_iter(n: int) -> int:
    return int(50 * np.sqrt(n)) + 1000


@dataclass
class CGResult:
    x: np.ndarray
    iters: int
    residual: float
    history: list[float]

    def __iter__(self):
        return iter((self.x, self.iters, self.residual))


def cg_solve(A, b, tol: float = 1e-10, max_iter: int | None = None, x0=None,
             raise_on_fail: bool = True) -> CGResult:
    """Solve ``A x = b`` for SPD ``A`` by Jacobi-preconditioned conjugate gradients.

    Stops when the true residual satisfies ``||A x - b||_2 <= tol * ||b||_2``;
    the recursive residual only triggers the check, and a failed check
    restarts the iteration from the current iterate. ``history`` holds the
    relative residual every iteration. Raises :class:`NonConvergence` when
    ``max_iter`` is exhausted unless ``raise_on_fail`` is false.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if max_iter is None:
        max_iter = default_max_iter(n)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return CGResult(np.zeros(n), 0, 0.0, [0.0])
    diag = A.diagonal() if sp.issparse(A) else np.diag(A)
    if np.any(diag <= 0):
        raise ValueError("matrix has non-positive diagonal entries; not SPD")
    inv_d = 1.0 / diag
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    res = float(np.linalg.norm(r)) / bnorm
    history = [res]
    if res <= tol:
        return CGResult(x, 0, res, history)
    z = inv_d * r
    d = z.copy()
    rz = float(r @ z)
    for it in range(1, max_iter + 1):
        Ad = A @ d
        dAd = float(d @ Ad)
        if dAd <= 0:
            raise ValueError("matrix is not positive definite")
        alpha = rz / dAd
        x += alpha * d
        r -= alpha * Ad
        res = float(np.linalg.norm(r)) / bnorm
        if res <= tol:
            # the recursive residual drifts on ill-conditioned systems: confirm, else restart
            r = b - A @ x
            res = float(np.linalg.norm(r)) / bnorm
            history.append(res)
            if res <= tol:
                return CGResult(x, it, res, history)
            z = inv_d * r
            d = z.copy()
            rz = float(r @ z)
            continue
        history.append(res)
        z = inv_d * r
        rz_new = float(r @ z)
        d = z + (rz_new / rz) * d
        rz = rz_new
    res = float(np.linalg.norm(b - A @ x)) / bnorm
    if raise_on_fail:
        absA = abs(A) if sp.issparse(A) else np.abs(A)
        floor = np.finfo(float).eps * float(np.linalg.norm(absA @ np.abs(x))) / bnorm
        raise NonConvergence("conjugate gradients did not converge", res, max_iter, x, floor)
    return CGResult(x, max_iter, res, history)


@dataclass
class EigResult:
    nu_min: float
    v: np.ndarray
    iterations: int

    def __iter__(self):
        return iter((self.nu_min, self.v))


def smallest_generalized_eig(A, B, tol: float = 1e-10, max_iter: int = 500,
                             inner_tol: float | None = None, seed: int = 0) -> EigResult:
    """Smallest eigenpair of ``A v = nu B v`` (A, B SPD) by inverse iteration.

    Iterates ``v <- A^{-1} B v`` with B-normalization; inner solves use
    :func:`cg_solve` warm-started from the previous iterate. Converged when
    the Rayleigh quotient changes by less than ``tol`` relatively.
    """
    n = A.shape[0]
    if B.shape != A.shape:
        raise ValueError("A and B must have matching shapes")
    if inner_tol is None:
        inner_tol = max(1e-10, min(1e-8, tol))
    rng = np.random.default_rng(seed)
    v = rng.random(n) + 0.5
    v /= np.sqrt(v @ (B @ v))
    nu = float(v @ (A @ v))
    for it in range(1, max_iter + 1):
        rhs = B @ v
        w = cg_solve(A, rhs, tol=inner_tol, x0=v / nu).x
        w /= np.sqrt(w @ (B @ w))
        nu_new = float(w @ (A @ w))
        v = w
        if abs(nu_new - nu) <= tol * abs(nu_new):
            return EigResult(nu_new, v, it)
        nu = nu_new
    raise NonConvergence("inverse iteration did not converge", abs(nu_new - nu) / abs(nu_new), max_iter, v)
