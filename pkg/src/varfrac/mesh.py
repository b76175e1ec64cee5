"""Tensor-product meshes of the truncated cylinder (0,1)^N x (0, tau), graded toward y = 0."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .order_field import OrderField

__all__ = ["CylinderMesh", "build_mesh", "default_gamma", "default_tau"]


@dataclass(frozen=True, eq=False)
class CylinderMesh:
    """Nodes are numbered layer by layer in y, the base layer first.

    Inside a layer the x index runs fastest: node ``j * nx**N + iy * nx + ix``.
    """

    N: int
    n_x: int
    n_y: int
    tau: float
    gamma: float
    x_nodes: np.ndarray = field(repr=False)
    y_nodes: np.ndarray = field(repr=False)

    @property
    def layer_size(self) -> int:
        return self.n_x ** self.N

    @property
    def n_nodes(self) -> int:
        return self.layer_size * self.n_y

    @property
    def n_elements(self) -> int:
        return (self.n_x - 1) ** self.N * (self.n_y - 1)

    @property
    def hx(self) -> float:
        return 1.0 / (self.n_x - 1)

    def layer_coords(self) -> np.ndarray:
        """x coordinates of one layer, shape ``(layer_size, N)``."""
        x = self.x_nodes
        if self.N == 1:
            return x[:, None]
        return np.column_stack([np.tile(x, self.n_x), np.repeat(x, self.n_x)])

    def coords(self) -> np.ndarray:
        """All node coordinates, shape ``(n_nodes, N + 1)``; the last column is y."""
        xs = self.layer_coords()
        x_all = np.tile(xs, (self.n_y, 1))
        y_all = np.repeat(self.y_nodes, self.layer_size)
        return np.column_stack([x_all, y_all])

    def _layer_boundary(self) -> np.ndarray:
        xs = self.layer_coords()
        return np.any((xs == 0.0) | (xs == 1.0), axis=1)

    @property
    def base(self) -> np.ndarray:
        """Global indices of base nodes (y = 0, x interior)."""
        return np.flatnonzero(~self._layer_boundary())

    @property
    def lateral(self) -> np.ndarray:
        on = self._layer_boundary()
        return (np.arange(self.n_y)[:, None] * self.layer_size + np.flatnonzero(on)[None, :]).ravel()

    @property
    def top(self) -> np.ndarray:
        return (self.n_y - 1) * self.layer_size + np.arange(self.layer_size)

    @property
    def interior(self) -> np.ndarray:
        inner = np.flatnonzero(~self._layer_boundary())
        return (np.arange(1, self.n_y - 1)[:, None] * self.layer_size + inner[None, :]).ravel()

    @property
    def free(self) -> np.ndarray:
        """Base and interior nodes in increasing global order (base first)."""
        return np.concatenate([self.base, self.interior])

    @property
    def dirichlet(self) -> np.ndarray:
        return np.union1d(self.lateral, self.top)

    def x_cells(self) -> np.ndarray:
        """Lower-left corner layer index of each x-cell, x1 fastest."""
        c = np.arange(self.n_x - 1)
        if self.N == 1:
            return c
        return (c[:, None] * self.n_x + c[None, :]).ravel()

    def x_cell_midpoints(self) -> np.ndarray:
        mids = 0.5 * (self.x_nodes[:-1] + self.x_nodes[1:])
        if self.N == 1:
            return mids
        g2, g1 = np.meshgrid(mids, mids, indexing="ij")
        return np.column_stack([g1.ravel(), g2.ravel()])

    def x_cell_local_nodes(self) -> np.ndarray:
        """Layer indices of the corners of every x-cell, shape ``(n_cells, 2**N)``."""
        corner = self.x_cells()
        if self.N == 1:
            return np.column_stack([corner, corner + 1])
        n = self.n_x
        return np.column_stack([corner, corner + 1, corner + n, corner + n + 1])

    def elements(self) -> np.ndarray:
        """Global node indices per element, shape ``(n_elements, 2**(N+1))``.

        Local order: bottom layer corners then top layer corners; within a
        layer the x1 index runs fastest.
        """
        loc = self.x_cell_local_nodes()
        j = np.arange(self.n_y - 1)
        bottom = j[:, None, None] * self.layer_size + loc[None, :, :]
        return np.concatenate([bottom, bottom + self.layer_size], axis=2).reshape(-1, loc.shape[1] * 2)


def build_mesh(N: int, n_x: int, n_y: int, tau: float, gamma: float) -> CylinderMesh:
    """Tensor mesh with ``n_x`` uniform nodes per x-axis and ``n_y`` graded nodes in y."""
    if N not in (1, 2):
        raise ValueError("only N = 1 or 2 is supported")
    if n_x < 3 or n_y < 3:
        raise ValueError("need at least 3 nodes per direction")
    if not tau > 0:
        raise ValueError("tau must be positive")
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    x = np.linspace(0.0, 1.0, n_x)
    y = tau * (np.arange(n_y) / (n_y - 1)) ** gamma
    y[0], y[-1] = 0.0, tau
    return CylinderMesh(N, n_x, n_y, float(tau), float(gamma), x, y)


def default_gamma(order: OrderField) -> float:
    return min(7.0, max(1.0, 3.0 / (2.0 * order.min_value())))


def default_tau(lambda_1: float, decay_tol: float) -> float:
    """Height at which the slowest mode ``exp(-sqrt(lambda_1) y)`` has decayed to ``decay_tol``."""
    if lambda_1 <= 0 or not (0.0 < decay_tol < 1.0):
        raise ValueError("need lambda_1 > 0 and decay_tol in (0, 1)")
    return -math.log(decay_tol) / math.sqrt(lambda_1)
