"""Poisson solve, weighted harmonic extension, penalty extension, DtN map and Poincare constant."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import ExtensionSystem
from .sparse import cg_solve, smallest_generalized_eig

__all__ = ["PoissonSolution", "DtNResult", "solve_poisson", "harmonic_extension",
           "penalty_extension", "apply_operator", "poincare_constant", "energy"]

DEFAULT_TOL = 1e-10


@dataclass
class PoissonSolution:
    u: np.ndarray
    v: np.ndarray
    energy: float
    iterations: int = 0
    residual: float = 0.0


@dataclass
class DtNResult:
    lam: np.ndarray
    raw_residual: np.ndarray
    extension: np.ndarray = field(repr=False, default=None)


def energy(sys: ExtensionSystem, u: np.ndarray, b: np.ndarray | None = None) -> float:
    """``1/2 u^T A u - b^T u``."""
    e = 0.5 * float(u @ (sys.A @ u))
    if b is not None:
        e -= float(b @ u)
    return e


def _as_free(sys: ExtensionSystem, h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape[0] == sys.n_free:
        if np.any(h[sys.n_base:] != 0.0):
            raise ValueError("load must vanish off the base")
        return h
    if h.shape[0] == sys.n_base:
        return sys.pad_base(h)
    raise ValueError(f"load has length {h.shape[0]}, expected {sys.n_base} or {sys.n_free}")


def solve_poisson(sys: ExtensionSystem, h: np.ndarray, tol: float = DEFAULT_TOL,
                  max_iter: int | None = None) -> PoissonSolution:
    """Minimize ``1/2 u^T A u - b^T u``; the base trace of the minimizer solves the fractional problem.

    ``h`` is the base load vector (length ``n_base``, or a free vector that
    vanishes off the base).
    """
    b = _as_free(sys, h)
    res = cg_solve(sys.A, b, tol=tol, max_iter=max_iter)
    u = res.x
    return PoissonSolution(u, u[: sys.n_base].copy(), energy(sys, u, b), res.iters, res.residual)


def harmonic_extension(sys: ExtensionSystem, v: np.ndarray, tol: float = DEFAULT_TOL,
                       max_iter: int | None = None) -> np.ndarray:
    """Free-node vector equal to ``v`` on the base and discretely weighted-harmonic inside."""
    v = np.asarray(v, dtype=float)
    nb = sys.n_base
    A_IB = sys.A[nb:, :nb]
    A_II = sys.A[nb:, nb:]
    u_I = cg_solve(A_II, -(A_IB @ v), tol=tol, max_iter=max_iter).x
    return np.concatenate([v, u_I])


def penalty_extension(sys: ExtensionSystem, v: np.ndarray, mu: float, tol: float = DEFAULT_TOL,
                      max_iter: int | None = None) -> np.ndarray:
    """Minimizer of ``1/2 u^T A u + mu/2 (u_B - v)^T M_base (u_B - v)``."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    v = np.asarray(v, dtype=float)
    nb = sys.n_base
    A = sys.A.tolil(copy=True)
    A[:nb, :nb] = A[:nb, :nb] + mu * sys.M_base
    rhs = np.zeros(sys.n_free)
    rhs[:nb] = mu * (sys.M_base @ v)
    return cg_solve(A.tocsr(), rhs, tol=tol, max_iter=max_iter).x


def apply_operator(sys: ExtensionSystem, v: np.ndarray, tol: float = DEFAULT_TOL,
                   max_iter: int | None = None) -> DtNResult:
    """Discrete Dirichlet-to-Neumann map: residual of the extension on the base, as an L2 density."""
    u = harmonic_extension(sys, v, tol=tol, max_iter=max_iter)
    raw = (sys.A @ u)[: sys.n_base]
    lam = cg_solve(sys.M_base, raw, tol=min(tol, 1e-12)).x
    return DtNResult(lam, raw, u)


def poincare_constant(sys: ExtensionSystem, tol: float = 1e-10, seed: int = 0) -> float:
    """``1 / sqrt(nu_min)`` for the pencil ``A u = nu M_w u``."""
    res = smallest_generalized_eig(sys.A, sys.M_w, tol=tol, seed=seed)
    return 1.0 / np.sqrt(res.nu_min)
