"""Spectral fractional Laplacian on the unit interval/square and a per-mode extension check."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .assembly import weighted_y_matrices
from .order_field import g_of_order
from .quadrature import gauss_legendre

__all__ = ["SpectralField", "analyze", "apply_power", "solve_power", "mode_dtn_1d"]


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients ``b_k`` in the Dirichlet sine basis ``phi_k = 2^(N/2) prod sin(k_i pi x_i)``.

    ``coeffs`` has shape ``(K,)`` for N = 1 and ``(K, K)`` for N = 2 (index k - 1).
    """

    N: int
    coeffs: np.ndarray

    @property
    def K(self) -> int:
        return self.coeffs.shape[0]

    def eigenvalues(self) -> np.ndarray:
        k = np.arange(1, self.K + 1, dtype=float)
        if self.N == 1:
            return np.pi ** 2 * k ** 2
        return np.pi ** 2 * (k[:, None] ** 2 + k[None, :] ** 2)

    def evaluate(self, x) -> np.ndarray:
        k = np.arange(1, self.K + 1)
        x = np.asarray(x, dtype=float)
        if self.N == 1:
            basis = np.sqrt(2.0) * np.sin(np.pi * np.multiply.outer(x, k))
            return basis @ self.coeffs
        s1 = np.sqrt(2.0) * np.sin(np.pi * np.multiply.outer(x[..., 0], k))
        s2 = np.sqrt(2.0) * np.sin(np.pi * np.multiply.outer(x[..., 1], k))
        return np.einsum("...a,ab,...b->...", s1, self.coeffs, s2)

    def energy(self) -> float:
        return float((self.coeffs ** 2).sum())

    def tail_estimate(self) -> float:
        """Energy in the outermost computed shell, a proxy for the truncated tail."""
        if self.N == 1:
            return float(self.coeffs[-1] ** 2)
        c = self.coeffs
        return float((c[-1, :] ** 2).sum() + (c[:-1, -1] ** 2).sum())


def analyze(f, K: int, quad_pts: int = 128, N: int = 1, panels: int = 1) -> SpectralField:
    """Sine coefficients ``b_k = int f phi_k`` by tensor Gauss-Legendre quadrature.

    ``quad_pts`` points per panel and axis; ``panels`` splits (0, 1) uniformly.
    """
    u, w = gauss_legendre(quad_pts)
    edges = np.linspace(0.0, 1.0, panels + 1)
    x = (edges[:-1, None] + np.diff(edges)[:, None] * u[None, :]).ravel()
    wx = (np.diff(edges)[:, None] * w[None, :]).ravel()
    k = np.arange(1, K + 1)
    basis = np.sqrt(2.0) * np.sin(np.pi * np.outer(k, x)) * wx[None, :]
    if N == 1:
        return SpectralField(1, basis @ np.asarray(f(x), dtype=float))
    X2, X1 = np.meshgrid(x, x, indexing="ij")
    vals = np.asarray(f(np.stack([X1, X2], axis=-1)), dtype=float)  # [i2, i1]
    coeffs = basis @ vals.T @ basis.T  # [k1, k2]
    return SpectralField(2, coeffs)


def apply_power(field: SpectralField, s: float) -> SpectralField:
    return SpectralField(field.N, field.eigenvalues() ** s * field.coeffs)


def solve_power(field: SpectralField, s: float) -> SpectralField:
    return SpectralField(field.N, field.eigenvalues() ** (-s) * field.coeffs)


def mode_dtn_1d(lam: float, s: float, n_y: int, gamma: float, tau: float) -> float:
    """Discrete weighted Neumann value at y = 0 of a single extension mode.

    Solves ``-(y^(1-2s) g')' + lam y^(1-2s) g = 0`` on a graded grid of ``n_y``
    nodes with ``g(0) = 1``, ``g(tau) = 0`` and returns the residual at y = 0,
    scaled by the pointwise G; this approximates ``lam**s``.
    """
    if n_y < 3:
        raise ValueError("need at least 3 nodes")
    y = tau * (np.arange(n_y) / (n_y - 1)) ** gamma
    y[-1] = tau
    if np.any(np.diff(y) <= 0):
        raise ValueError("degenerate grid")
    K, M = weighted_y_matrices(s, y)
    E = K + lam * M
    # unknown d = 1 - g (d(0) = 0, d(tau) = 1): K annihilates constants, so no
    # O(1) terms cancel when the thin first cells make K huge
    diag = np.zeros(n_y)
    diag[:-1] += E[:, 0, 0]
    diag[1:] += E[:, 1, 1]
    off = E[:, 0, 1]
    mrow = np.zeros(n_y)
    mrow[:-1] += M[:, 0, 0] + M[:, 0, 1]
    mrow[1:] += M[:, 1, 0] + M[:, 1, 1]
    m = n_y - 2
    ab = np.zeros((3, m))
    ab[0, 1:] = off[1:m]
    ab[1, :] = diag[1:-1]
    ab[2, :-1] = off[1:m]
    rhs = lam * mrow[1:-1]
    rhs[-1] -= off[-1]
    d = solve_banded((1, 1), ab, rhs)
    if not np.all(np.isfinite(d)):
        raise np.linalg.LinAlgError("tridiagonal solve failed")
    # flux = E[0,0] g0 + E[0,1] g1 = lam * (M00 + M01) - E01 d1 on the first cell
    flux = lam * mrow[0] - off[0] * d[0]
    return float(g_of_order(s) * flux)
