"""Assembly of the weighted extension operator on a cylinder mesh.

The order s(.) and G_s are frozen at each x-cell midpoint. With that, the
y factors ``int y^(1-2s) (...)`` are integrated in closed form and the x
factors are polynomials, so every element matrix is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import CylinderMesh
from .order_field import WeightSpec
from .quadrature import gauss_legendre
from .sparse import csr_from_triplets

__all__ = ["ExtensionSystem", "y_weight_moments", "assemble", "load_from_base_function",
           "weighted_y_matrices", "step_alignment_gap"]

_KX = np.array([[1.0, -1.0], [-1.0, 1.0]])
_MX = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0


def y_weight_moments(s, a, b, k: int):
    """``int_a^b y^(1-2s+k) dy`` in closed form."""
    e = 1.0 - 2.0 * np.asarray(s, dtype=float) + k + 1.0
    out = (np.asarray(b, dtype=float) ** e - np.asarray(a, dtype=float) ** e) / e
    return out if np.ndim(out) else float(out)


def weighted_y_matrices(s: float, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell 2x2 stiffness and mass matrices for linear elements with weight y^(1-2s)."""
    a, b = y[:-1], y[1:]
    h = b - a
    m0 = y_weight_moments(s, a, b, 0)
    m1 = y_weight_moments(s, a, b, 1)
    m2 = y_weight_moments(s, a, b, 2)
    K = (m0 / h ** 2)[:, None, None] * _KX[None]
    M = np.empty((len(h), 2, 2))
    M[:, 0, 0] = (b * b * m0 - 2.0 * b * m1 + m2) / h ** 2
    M[:, 1, 1] = (a * a * m0 - 2.0 * a * m1 + m2) / h ** 2
    M[:, 0, 1] = M[:, 1, 0] = (-(a * b) * m0 + (a + b) * m1 - m2) / h ** 2
    return K, M


def _x_local(N: int, hx: float) -> tuple[np.ndarray, np.ndarray]:
    """Local x stiffness and mass on one x-cell (tensor order, x1 fastest)."""
    kx, mx = _KX / hx, _MX * hx
    if N == 1:
        return kx, mx
    return np.kron(mx, kx) + np.kron(kx, mx), np.kron(mx, mx)


@dataclass(eq=False)
class ExtensionSystem:
    """Discrete weighted energy on the free nodes (base + interior).

    Free unknowns are ordered by global node index, so the first ``n_base``
    unknowns are the base nodes in base order.
    """

    mesh: CylinderMesh
    spec: WeightSpec
    A: sp.csr_matrix
    M_w: sp.csr_matrix
    M_base: sp.csr_matrix
    M_base_tilde: sp.csr_matrix
    free: np.ndarray
    base: np.ndarray
    s_cells: np.ndarray
    G_cells: np.ndarray
    A_full: sp.csr_matrix

    @property
    def n_free(self) -> int:
        return len(self.free)

    @property
    def n_base(self) -> int:
        return len(self.base)

    @property
    def free_index_map(self) -> np.ndarray:
        """Global node -> free index (-1 on Dirichlet nodes)."""
        m = np.full(self.mesh.n_nodes, -1)
        m[self.free] = np.arange(self.n_free)
        return m

    @property
    def base_index_map(self) -> np.ndarray:
        """Global node -> base index (-1 off the base)."""
        m = np.full(self.mesh.n_nodes, -1)
        m[self.base] = np.arange(self.n_base)
        return m

    def to_global(self, u_free: np.ndarray) -> np.ndarray:
        u = np.zeros(self.mesh.n_nodes)
        u[self.free] = u_free
        return u

    def base_part(self, u_free: np.ndarray) -> np.ndarray:
        return np.asarray(u_free)[: self.n_base]

    def pad_base(self, v_base: np.ndarray) -> np.ndarray:
        """Embed a base vector into the free space (zero on interior nodes)."""
        out = np.zeros(self.n_free)
        out[: self.n_base] = v_base
        return out


def _element_arrays(mesh: CylinderMesh, spec: WeightSpec):
    mids = mesh.x_cell_midpoints()
    s_cells = np.asarray(spec.order(mids), dtype=float).reshape(-1)
    G_cells = np.asarray(spec.G_of_s(s_cells), dtype=float).reshape(-1)
    XK, XM = _x_local(mesh.N, mesh.hx)
    nl = XK.shape[0]
    n_xc, n_yc = len(s_cells), mesh.n_y - 1
    Ky = np.empty((n_xc, n_yc, 2, 2))
    My = np.empty((n_xc, n_yc, 2, 2))
    for val in np.unique(s_cells):
        k, m = weighted_y_matrices(float(val), mesh.y_nodes)
        sel = s_cells == val
        Ky[sel] = k
        My[sel] = m
    # kron(Y, X)[ay*nl + ax, by*nl + bx] = Y[ay, by] X[ax, bx]
    stiff = (np.einsum("cjab,xz->jcaxbz", My, XK) + np.einsum("cjab,xz->jcaxbz", Ky, XM))
    mass = np.einsum("cjab,xz->jcaxbz", My, XM)
    scale = G_cells[None, :, None, None, None, None]
    L = 2 * nl
    stiff = (stiff * scale).reshape(n_yc * n_xc, L, L)
    mass = (mass * scale).reshape(n_yc * n_xc, L, L)
    return stiff, mass, s_cells, G_cells


def _base_matrix(mesh: CylinderMesh, cell_weights: np.ndarray) -> sp.csr_matrix:
    _, XM = _x_local(mesh.N, mesh.hx)
    loc = mesh.x_cell_local_nodes()
    vals = cell_weights[:, None, None] * XM[None]
    rows = np.repeat(loc[:, :, None], loc.shape[1], axis=2)
    cols = np.repeat(loc[:, None, :], loc.shape[1], axis=1)
    full = csr_from_triplets(rows.ravel(), cols.ravel(), vals.ravel(), mesh.layer_size)
    b = mesh.base
    return full[b][:, b].tocsr()


def assemble(mesh: CylinderMesh, spec: WeightSpec, element_permutation=None) -> ExtensionSystem:
    """Assemble stiffness, weighted mass and base mass matrices on the free nodes.

    ``element_permutation`` reorders the element loop; the result does not
    depend on it beyond round-off.
    """
    stiff, mass, s_cells, G_cells = _element_arrays(mesh, spec)
    elems = mesh.elements()
    if element_permutation is not None:
        perm = np.asarray(element_permutation)
        elems, stiff, mass = elems[perm], stiff[perm], mass[perm]
    L = elems.shape[1]
    rows = np.repeat(elems[:, :, None], L, axis=2).ravel()
    cols = np.repeat(elems[:, None, :], L, axis=1).ravel()
    n = mesh.n_nodes
    A_full = csr_from_triplets(rows, cols, stiff.ravel(), n)
    M_full = csr_from_triplets(rows, cols, mass.ravel(), n)
    free = mesh.free
    A = A_full[free][:, free].tocsr()
    M_w = M_full[free][:, free].tocsr()
    A = 0.5 * (A + A.T)
    M_w = 0.5 * (M_w + M_w.T)
    M_base = _base_matrix(mesh, np.ones_like(s_cells))
    M_base_tilde = _base_matrix(mesh, np.asarray(spec.trace_weight_of_s(s_cells)).reshape(-1))
    return ExtensionSystem(mesh, spec, A.tocsr(), M_w.tocsr(), M_base, M_base_tilde,
                           free, mesh.base, s_cells, G_cells, A_full)


def load_from_base_function(mesh: CylinderMesh, h, n_gauss: int = 3) -> np.ndarray:
    """Free-node vector with entries ``int_Omega h psi_i(., 0) dx`` (zero off the base)."""
    u, w = gauss_legendre(n_gauss)
    hx = mesh.hx
    corner = mesh.x_nodes[:-1]
    if mesh.N == 1:
        pts = corner[:, None] + hx * u[None, :]
        vals = np.asarray(h(pts.ravel()), dtype=float).reshape(pts.shape) * (hx * w)[None, :]
        shapes = np.stack([1.0 - u, u])  # (2, q)
        contrib = vals @ shapes.T  # (cells, 2)
    else:
        c2, c1 = np.meshgrid(corner, corner, indexing="ij")
        q2, q1 = np.meshgrid(u, u, indexing="ij")
        wq = np.outer(w, w) * hx * hx
        x1 = c1.ravel()[:, None] + hx * q1.ravel()[None, :]
        x2 = c2.ravel()[:, None] + hx * q2.ravel()[None, :]
        pts = np.stack([x1, x2], axis=-1)
        vals = np.asarray(h(pts.reshape(-1, 2)), dtype=float).reshape(x1.shape) * wq.ravel()[None, :]
        a1, a2 = q1.ravel(), q2.ravel()
        shapes = np.stack([(1 - a1) * (1 - a2), a1 * (1 - a2), (1 - a1) * a2, a1 * a2])
        contrib = vals @ shapes.T
    layer = np.zeros(mesh.layer_size)
    np.add.at(layer, mesh.x_cell_local_nodes(), contrib)
    out = np.zeros(len(mesh.free))
    out[: len(mesh.base)] = layer[mesh.base]
    return out


def step_alignment_gap(mesh: CylinderMesh, spec: WeightSpec) -> float:
    """Distance from the order's jump locations to the nearest x grid line (0 if aligned)."""
    gaps = [0.0]
    for axis in range(mesh.N):
        br = spec.order.breaks_along(axis)
        if br is None or len(br) == 0:
            continue
        d = np.abs(br[:, None] - mesh.x_nodes[None, :]).min(axis=1)
        gaps.append(float(d.max()))
    return max(gaps)
