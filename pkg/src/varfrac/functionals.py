"""Weighted trace norms, variable-smoothness seminorms and Hardy-type inequalities.

Notation: ``delta = 1 - 2 s``, ``p' = p / (p - 1)`` and ``e = delta (1 - p')``.
Along axis i the kernel is ``Phi(t, tau) = G_s(x_t) |t - tau|^delta(x_t)``;
``phi`` integrates ``Phi^(1-p')`` in the point variable, ``psi`` in the pole
variable, and the seminorm weight is ``w_i = min(phi, psi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .assembly import ExtensionSystem
from .order_field import Kind, WeightSpec
from .quadrature import (Status, composite_nodes, dyadic_batch, gauss_legendre,
                         gauss_power, graded_integral, integrate_with_singular_points)

__all__ = [
    "SeminormConfig", "GridFunction1D", "GridFunction2D", "SeminormResult", "InequalityResult",
    "trace_norm", "sobolev_norm", "trace_constant", "improved_trace_constant",
    "hardy_constant", "classical_hardy_constant", "trace_inequality_check",
    "phi_weights", "PhiWeights", "seminorm_A", "SeminormQuadrature", "gagliardo_integral",
    "improved_trace_check", "hardy_weighted_check", "hardy_classical_check",
]


# ---------------------------------------------------------------------------
# configuration and carriers


@dataclass(frozen=True)
class SeminormConfig:
    """Quadrature settings for the seminorms and the trace-constant parameter.

    Parameters
    ----------
    p : float
        Integrability exponent, ``p >= 2``.
    levels : int
        Dyadic refinement depth toward the diagonal ``t = tau``. The band
        ``|t - tau| < 2**-levels`` is not integrated; its contribution is
        bounded analytically and reported as a remainder.
    sigma : float
        Free parameter in ``C(p, sigma)``, strictly inside (0, 1).
    n_gauss : int
        Gauss points per quadrature piece.
    outer : str
        ``"gauss5"`` averages the transverse direction (N = 2) with a
        5-point Gauss rule; ``"full"`` uses a composite rule on every grid cell.
    """

    p: float = 2.0
    levels: int = 30
    sigma: float = 0.5
    n_gauss: int = 6
    outer: str = "gauss5"

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("p must be >= 2")
        if not (0.0 < self.sigma < 1.0):
            raise ValueError("sigma must lie in (0, 1)")
        if self.levels < 4:
            raise ValueError("need at least 4 dyadic levels")
        if self.outer not in ("gauss5", "full"):
            raise ValueError("outer must be 'gauss5' or 'full'")

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def eta(self) -> float:
        return 2.0 ** -self.levels


@dataclass(frozen=True, eq=False)
class GridFunction1D:
    """Piecewise-linear function from nodal values on a uniform grid of [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("need at least two nodal values")
        if not np.all(np.isfinite(vals)):
            raise ValueError("nodal values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_base(cls, v_base) -> "GridFunction1D":
        """Base-node vector (interior nodes only) padded with the lateral zeros."""
        return cls(np.concatenate([[0.0], np.asarray(v_base, dtype=float), [0.0]]))

    @classmethod
    def sample(cls, f, n_cells: int) -> "GridFunction1D":
        return cls(np.asarray(f(np.linspace(0.0, 1.0, n_cells + 1)), dtype=float))

    @property
    def n_cells(self) -> int:
        return self.values.size - 1

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.values.size)

    def __call__(self, t):
        return np.interp(t, self.nodes, self.values)

    @cached_property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) * self.n_cells

    def lipschitz_on(self, lo, hi) -> np.ndarray:
        """Largest |slope| over cells meeting ``[lo, hi]`` (vectorized in lo, hi)."""
        n = self.n_cells
        c0 = np.clip(np.floor(np.asarray(lo) * n).astype(int), 0, n - 1)
        c1 = np.clip(np.ceil(np.asarray(hi) * n).astype(int) - 1, 0, n - 1)
        a = np.abs(self.slopes)
        # prefix maxima are not invertible, so use a sparse table for range maxima
        table = [a]
        k = 1
        while 2 * k <= n:
            prev = table[-1]
            table.append(np.maximum(prev[:-k], prev[k:]))
            k *= 2
        length = c1 - c0 + 1
        lvl = np.floor(np.log2(np.maximum(length, 1))).astype(int)
        out = np.empty(np.broadcast(c0, c1).shape)
        for L in np.unique(lvl):
            sel = lvl == L
            t = table[L]
            span = 1 << L
            out[sel] = np.maximum(t[c0[sel]], t[c1[sel] - span + 1])
        return out

    def is_constant(self) -> bool:
        return bool(np.all(self.values == self.values[0]))


@dataclass(frozen=True, eq=False)
class GridFunction2D:
    """Bilinear function from nodal values ``values[i2, i1]`` on a uniform grid of [0, 1]^2."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1] or vals.shape[0] < 2:
            raise ValueError("need a square array of nodal values")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_base(cls, v_base) -> "GridFunction2D":
        v = np.asarray(v_base, dtype=float)
        m = int(round(math.sqrt(v.size)))
        if m * m != v.size:
            raise ValueError("base vector length is not a square")
        out = np.zeros((m + 2, m + 2))
        out[1:-1, 1:-1] = v.reshape(m, m)
        return cls(out)

    @property
    def n_cells(self) -> int:
        return self.values.shape[0] - 1

    def line(self, axis: int, coord: float) -> GridFunction1D:
        """Restriction to the line where the other coordinate equals ``coord``."""
        n = self.n_cells
        k = min(int(coord * n), n - 1)
        th = coord * n - k
        if axis == 0:  # vary x1, fix x2
            vals = (1 - th) * self.values[k, :] + th * self.values[k + 1, :]
        else:
            vals = (1 - th) * self.values[:, k] + th * self.values[:, k + 1]
        return GridFunction1D(vals)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        n = self.n_cells
        k = np.clip((x * n).astype(int), 0, n - 1)
        th = x * n - k
        i1, i2 = k[..., 0], k[..., 1]
        a, b = th[..., 0], th[..., 1]
        v = self.values
        return ((1 - a) * (1 - b) * v[i2, i1] + a * (1 - b) * v[i2, i1 + 1]
                + (1 - a) * b * v[i2 + 1, i1] + a * b * v[i2 + 1, i1 + 1])


@dataclass(frozen=True)
class InequalityResult:
    lhs: float
    rhs: float
    holds: bool
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.holds))


# ---------------------------------------------------------------------------
# constants


def trace_constant(p: float, sigma: float) -> float:
    """``(p + 1) sigma^(-2/p')``."""
    return (p + 1.0) * sigma ** (-2.0 * (p - 1.0) / p)


def hardy_constant(p: float) -> float:
    """``p^p / (p - 1)^(p - 1)``."""
    return p ** p / (p - 1.0) ** (p - 1.0)


def classical_hardy_constant(p: float, eps: float) -> float:
    """``p^p / (eps - p + 1)^p``, requires ``eps > p - 1``."""
    if eps <= p - 1.0:
        raise ValueError("need eps > p - 1")
    return p ** p / (eps - p + 1.0) ** p


def improved_trace_constant(p: float, sigma: float) -> float:
    """``(C_H(p) 2^p 2^(p/2) (2^(p-1) + 1) + (1 + p)^p sigma^(-2p/p'))^(1/p)``."""
    pc = p / (p - 1.0)
    a = hardy_constant(p) * 2.0 ** p * 2.0 ** (p / 2.0) * (2.0 ** (p - 1.0) + 1.0)
    b = (1.0 + p) ** p * sigma ** (-2.0 * p / pc)
    return (a + b) ** (1.0 / p)


# ---------------------------------------------------------------------------
# norms


def _breaks_on_axis(spec: WeightSpec, n_cells: int) -> np.ndarray:
    br = spec.order.breaks_along(0)
    grid = np.linspace(0.0, 1.0, n_cells + 1)
    if br is None:
        return grid
    return np.union1d(grid, br)


def trace_norm(spec: WeightSpec, v, p: float | None = None, n_gauss: int = 6) -> float:
    """``(int_Omega |v|^p w~ dx)^(1/p)`` with the order evaluated exactly.

    ``v`` is a :class:`GridFunction1D`, a :class:`GridFunction2D`, or a base
    vector (interior nodes of a uniform grid; N inferred from ``spec``).
    """
    p = spec.p if p is None else float(p)
    tw = WeightSpec(spec.order, spec.g, p)
    if not isinstance(v, (GridFunction1D, GridFunction2D)):
        v = GridFunction2D.from_base(v) if spec.order.dim == 2 else GridFunction1D.from_base(v)
    if isinstance(v, GridFunction1D):
        x, w = composite_nodes(_breaks_on_axis(tw, v.n_cells), n_gauss)
        vals = np.abs(v(x)) ** p * tw.trace_weight(x)
        return float(np.dot(w, vals)) ** (1.0 / p)
    n = v.n_cells
    b1 = np.linspace(0.0, 1.0, n + 1)
    b2 = b1
    br0, br1 = spec.order.breaks_along(0), spec.order.breaks_along(1)
    if br0 is not None:
        b1 = np.union1d(b1, br0)
    if br1 is not None:
        b2 = np.union1d(b2, br1)
    x1, w1 = composite_nodes(b1, n_gauss)
    x2, w2 = composite_nodes(b2, n_gauss)
    X2, X1 = np.meshgrid(x2, x1, indexing="ij")
    pts = np.stack([X1, X2], axis=-1)
    vals = np.abs(v(pts)) ** p * tw.trace_weight(pts)
    return float(np.einsum("ij,i,j->", vals, w2, w1)) ** (1.0 / p)


def _frozen_trace_norm(sys: ExtensionSystem, v_base: np.ndarray, p: float, n_gauss: int = 4) -> float:
    """Trace norm with the order frozen per x-cell, as in the assembled system."""
    v_base = np.asarray(v_base, dtype=float)
    if p == 2.0:
        return math.sqrt(max(float(v_base @ (sys.M_base_tilde @ v_base)), 0.0))
    mesh = sys.mesh
    layer = np.zeros(mesh.layer_size)
    layer[mesh.base] = v_base
    loc = layer[mesh.x_cell_local_nodes()]
    wt = WeightSpec(sys.spec.order, sys.spec.g, p).trace_weight_of_s(sys.s_cells)
    u, w = gauss_legendre(n_gauss)
    if mesh.N == 1:
        shapes = np.stack([1 - u, u], axis=1)
        ww = w * mesh.hx
    else:
        a1, a2 = np.meshgrid(u, u, indexing="ij")
        a1, a2 = a2.ravel(), a1.ravel()
        shapes = np.stack([(1 - a1) * (1 - a2), a1 * (1 - a2), (1 - a1) * a2, a1 * a2], axis=1)
        ww = np.outer(w, w).ravel() * mesh.hx ** 2
    vals = np.abs(loc @ shapes.T) ** p
    return float(np.sum(wt * (vals @ ww))) ** (1.0 / p)


def _element_shapes(N: int, xi: np.ndarray, hx: float):
    """Values and x-gradients of the layer shape functions at tensor Gauss points."""
    one = np.stack([1 - xi, xi], axis=1)
    d_one = np.tile(np.array([-1.0, 1.0]) / hx, (xi.size, 1))
    if N == 1:
        return one, [d_one]
    q = xi.size
    # point index a = a2 * q + a1, local node index = n2 * 2 + n1
    X = np.einsum("ik,jl->jilk", one, one).reshape(q * q, 4)
    D1 = np.einsum("ik,jl->jilk", d_one, one).reshape(q * q, 4)
    D2 = np.einsum("ik,jl->jilk", one, d_one).reshape(q * q, 4)
    return X, [D1, D2]


def sobolev_norm(sys: ExtensionSystem, u: np.ndarray, p: float | None = None,
                 method: str = "auto", n_gauss: int = 4) -> float:
    """``(int_C |u|^p w + int_C |grad u|^p w)^(1/p)`` of a free-node vector.

    For ``p = 2`` and ``method="auto"`` this is ``u^T (A + M_w) u``; otherwise
    element quadrature is used (Gauss-Jacobi on the first y-layer, where the
    weight ``y^delta`` is singular, Gauss-Legendre elsewhere).
    """
    p = sys.spec.p if p is None else float(p)
    u = np.asarray(u, dtype=float)
    if p == 2.0 and method == "auto":
        return math.sqrt(max(float(u @ (sys.A @ u) + u @ (sys.M_w @ u)), 0.0))
    mesh = sys.mesh
    ug = sys.to_global(u)
    n_xc = len(sys.s_cells)
    n_yc = mesh.n_y - 1
    L = 2 ** (mesh.N + 1)
    nl = L // 2
    uloc = ug[mesh.elements()].reshape(n_yc, n_xc, 2, nl)
    xi, wx = gauss_legendre(n_gauss)
    X, DX = _element_shapes(mesh.N, xi, mesh.hx)
    wxx = wx * mesh.hx if mesh.N == 1 else np.outer(wx, wx).ravel() * mesh.hx ** 2
    y = mesh.y_nodes
    hy = np.diff(y)
    total = 0.0
    for sval in np.unique(sys.s_cells):
        cells = np.flatnonzero(sys.s_cells == sval)
        G = float(sys.G_cells[cells[0]])
        delta = 1.0 - 2.0 * float(sval)
        ul = uloc[:, cells]
        for rows, (eta, weta) in (
            (slice(0, 1), gauss_power(n_gauss + 2, delta)),
            (slice(1, n_yc), gauss_legendre(n_gauss + 2)),
        ):
            h = hy[rows]
            if h.size == 0:
                continue
            if rows.start == 0:
                wy = h[:, None] ** (1.0 + delta) * weta[None, :]
            else:
                yq = y[rows][:, None] + h[:, None] * eta[None, :]
                wy = h[:, None] * weta[None, :] * yq ** delta
            Y = np.stack([1 - eta, eta], axis=1)
            dY = np.array([-1.0, 1.0])
            uu = ul[rows]
            val = np.einsum("jcyx,by,ax->jcba", uu, Y, X)
            gy = np.einsum("jcyx,y,ax->jca", uu, dY, X) / h[:, None, None]
            g2 = np.broadcast_to(gy[:, :, None, :] ** 2, val.shape)
            for D in DX:
                g2 = g2 + np.einsum("jcyx,by,ax->jcba", uu, Y, D) ** 2
            integrand = np.abs(val) ** p + g2 ** (p / 2.0)
            total += G * float(np.einsum("jcba,jb,a->", integrand, wy, wxx))
    return total ** (1.0 / p)


def trace_inequality_check(sys: ExtensionSystem, u: np.ndarray, sigma: float = 0.5,
                           p: float | None = None) -> InequalityResult:
    """First trace inequality ``||u(., 0)||_{L^p(w~)} <= C(p, sigma) ||u||_{W^{1,p}(C^tau, w)}``.

    The order is frozen per x-cell on both sides, matching the assembled
    weight. Requires ``sigma <= tau`` (on short cylinders take ``sigma = tau``).
    """
    p = sys.spec.p if p is None else float(p)
    if not (0.0 < sigma < 1.0):
        raise ValueError("sigma must lie in (0, 1)")
    if sigma > sys.mesh.tau:
        raise ValueError("sigma must not exceed the cylinder height")
    u = np.asarray(u, dtype=float)
    lhs = _frozen_trace_norm(sys, u[: sys.n_base], p)
    C = trace_constant(p, sigma)
    rhs = C * sobolev_norm(sys, u, p)
    return InequalityResult(lhs, rhs, lhs <= rhs, {"C": C})


# ---------------------------------------------------------------------------
# Phi, phi, psi and w_i


class _LineOrder:
    """The order and G along one coordinate line of the cube."""

    def __init__(self, spec: WeightSpec, axis: int = 0, point=None):
        self.spec = spec
        self.axis = axis
        dim = spec.order.dim
        self.dim = dim or 1
        base = np.full(self.dim, 0.5) if point is None else np.asarray(point, dtype=float).copy()
        self.base = base
        pc = spec.p_conj
        self.pc = pc
        br = spec.order.breaks_along(axis, base if self.dim > 1 else None)
        self.piecewise = br is not None
        if self.piecewise:
            edges = np.concatenate([[0.0], br, [1.0]])
            mids = 0.5 * (edges[:-1] + edges[1:])
            s = np.atleast_1d(self.s(mids))
            self.edges = edges
            self.piece_s = s
            d = 1.0 - 2.0 * s
            self.piece_e = d * (1.0 - pc)
            self.piece_g = np.atleast_1d(spec.G_of_s(s)) ** (1.0 - pc)

    def s(self, t):
        t = np.asarray(t, dtype=float)
        if self.spec.order.kind is Kind.CONSTANT:
            return np.broadcast_to(np.asarray(self.spec.order(0.5)), t.shape).astype(float)
        if self.dim == 1:
            return np.asarray(self.spec.order(t), dtype=float)
        pts = np.broadcast_to(self.base, t.shape + (self.dim,)).copy()
        pts[..., self.axis] = t
        return np.asarray(self.spec.order(pts), dtype=float)

    def inner_integral(self, t, tau) -> np.ndarray:
        """``int between tau and t of Phi(t', tau)^(1-p') dt'`` (point variable moves)."""
        t, tau = np.broadcast_arrays(np.asarray(t, float), np.asarray(tau, float))
        lo, hi = np.minimum(t, tau), np.maximum(t, tau)
        if self.piecewise:
            out = np.zeros(t.shape)
            for a, b, e, g in zip(self.edges[:-1], self.edges[1:], self.piece_e, self.piece_g):
                ca, cb = np.maximum(lo, a), np.minimum(hi, b)
                on = cb > ca
                if not np.any(on):
                    continue
                r1 = np.abs(np.where(on, ca, tau) - tau)
                r2 = np.abs(np.where(on, cb, tau) - tau)
                near, far = np.minimum(r1, r2), np.maximum(r1, r2)
                out += np.where(on, g * (far ** (1.0 + e) - near ** (1.0 + e)) / (1.0 + e), 0.0)
            return out
        sign = np.sign(t - tau).ravel()
        tau_f = tau.ravel()
        pc = self.pc

        def g(r):
            pos = tau_f[:, None] + sign[:, None] * r
            s = self.s(np.clip(pos, 0.0, 1.0))
            return np.asarray(self.spec.G_of_s(s)) ** (1.0 - pc) * r ** ((1.0 - 2.0 * s) * (1.0 - pc))

        return dyadic_batch(g, np.abs(t - tau).ravel()).reshape(t.shape)

    def weights(self, t, tau):
        """``(Phi, phi, psi, w)`` at ``x_t`` with pole ``tau``."""
        t, tau = np.broadcast_arrays(np.asarray(t, float), np.asarray(tau, float))
        p, pc = self.spec.p, self.pc
        s = self.s(t)
        delta = 1.0 - 2.0 * s
        G = np.asarray(self.spec.G_of_s(s), dtype=float)
        r = np.abs(t - tau)
        Phi = G * r ** delta
        e = delta * (1.0 - pc)
        psi = G * (1.0 + e) ** p * r ** (delta - p)
        phi = Phi ** (1.0 - pc) * self.inner_integral(t, tau) ** (-p)
        return Phi, phi, psi, np.minimum(phi, psi)


@dataclass(frozen=True)
class PhiWeights:
    Phi: float
    phi: float
    psi: float
    w: float

    def __iter__(self):
        return iter((self.Phi, self.phi, self.psi, self.w))


def phi_weights(spec: WeightSpec, i: int, x, t: float, tau_pt: float) -> PhiWeights:
    """``Phi_i, phi_i, psi_i, w_i`` at ``(x_t^i, tau_pt)``; p is taken from ``spec``.

    ``x`` supplies the coordinates other than ``i`` (ignored for N = 1).
    """
    if t == tau_pt:
        raise ValueError("t and tau_pt must differ")
    line = _LineOrder(spec, i, None if x is None or np.ndim(x) == 0 else x)
    vals = line.weights(np.array([t]), np.array([tau_pt]))
    return PhiWeights(*(float(a[0]) for a in vals))


# ---------------------------------------------------------------------------
# seminorm A_i


@dataclass(frozen=True)
class SeminormResult:
    """Off-band quadrature ``value`` plus an upper bound ``remainder`` for the band."""

    value: float
    remainder: float
    status: Status

    @property
    def upper(self) -> float:
        return self.value + self.remainder

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


class SeminormQuadrature:
    """Reusable quadrature table for ``int int w_i |v(t) - v(tau)|^p`` on one line.

    The pole variable tau runs over Gauss points of every piece between grid
    nodes and order jumps. For each tau the point variable t uses those pieces
    plus dyadic pieces ``tau +- eta 2^k``; the band ``|t - tau| < eta`` is left
    out and bounded by ``Lip(v)^p int_band psi |t - tau|^p``.
    """

    def __init__(self, spec: WeightSpec, n_cells: int, cfg: SeminormConfig | None = None,
                 axis: int = 0, point=None):
        cfg = cfg or SeminormConfig(p=spec.p)
        if cfg.p != spec.p:
            spec = WeightSpec(spec.order, spec.g, cfg.p)
        self.spec, self.cfg, self.n_cells = spec, cfg, n_cells
        line = _LineOrder(spec, axis, point)
        grid = np.linspace(0.0, 1.0, n_cells + 1)
        breaks = np.union1d(grid, line.edges) if line.piecewise else grid
        self.breaks = breaks
        eta = cfg.eta
        n = cfg.n_gauss
        u, wq = gauss_legendre(n)
        a, b = breaks[:-1], breaks[1:]
        tau = (a[:, None] + (b - a)[:, None] * u[None, :]).ravel()
        wtau = ((b - a)[:, None] * wq[None, :]).ravel()
        offsets = eta * 2.0 ** np.arange(0, cfg.levels + 1)
        T, TAU, W, SH = [], [], [], []
        for tq, wt in zip(tau, wtau):
            pts = np.concatenate([breaks, tq - offsets, tq + offsets])
            pts = np.unique(pts[(pts >= 0.0) & (pts <= 1.0)])
            lo, hi = pts[:-1], pts[1:]
            keep = (hi > lo) & ((hi <= tq - eta) | (lo >= tq + eta))
            lo, hi = lo[keep], hi[keep]
            h = hi - lo
            t = (lo[:, None] + h[:, None] * u[None, :]).ravel()
            T.append(t)
            TAU.append(np.full(t.size, tq))
            W.append((h[:, None] * wq[None, :]).ravel() * wt)
            mid = np.abs(0.5 * (lo + hi) - tq)
            SH.append(np.repeat(np.floor(np.log2(mid / eta)).astype(int), n))
        self.T = np.concatenate(T)
        self.TAU = np.concatenate(TAU)
        _, _, _, w = line.weights(self.T, self.TAU)
        self.W = np.concatenate(W) * w
        self.shell = np.concatenate(SH)
        # band bound per outer piece: (b - a) Gmax (1+e)max^p 2 eta^(1+dmin) / (1+dmin)
        p, pc = spec.p, spec.p_conj
        coef = np.empty(len(a))
        for k, (lo_k, hi_k) in enumerate(zip(a, b)):
            s_lo, s_hi = self._s_range(line, max(lo_k - eta, 0.0), min(hi_k + eta, 1.0))
            dmin = 1.0 - 2.0 * s_hi
            gmax = max(spec.G_range(s_lo, s_hi))
            emax = 1.0 + dmin * (1.0 - pc)
            coef[k] = (hi_k - lo_k) * gmax * emax ** p * 2.0 * eta ** (1.0 + dmin) / (1.0 + dmin)
        self.band_coef = coef
        self.piece_lo, self.piece_hi = a, b

    @staticmethod
    def _s_range(line: _LineOrder, lo: float, hi: float) -> tuple[float, float]:
        if line.piecewise:
            sel = (line.edges[:-1] < hi) & (line.edges[1:] > lo)
            vals = line.piece_s[sel]
            return float(vals.min()), float(vals.max())
        ts = np.linspace(lo, hi, 65)
        s = line.s(ts)
        # widen by the sampled variation to cover values between samples
        slack = float(np.max(np.abs(np.diff(s)))) if s.size > 1 else 0.0
        order = line.spec.order
        return (max(float(s.min()) - slack, order.s_min), min(float(s.max()) + slack, order.s_max))

    def evaluate(self, v: GridFunction1D) -> SeminormResult:
        if v.n_cells != self.n_cells:
            raise ValueError("grid function does not match the quadrature grid")
        p = self.cfg.p
        diff = np.abs(v(self.T) - v(self.TAU)) ** p
        contrib = self.W * diff
        value = float(contrib.sum())
        lip = v.lipschitz_on(np.maximum(self.piece_lo - self.cfg.eta, 0.0),
                             np.minimum(self.piece_hi + self.cfg.eta, 1.0))
        remainder = float(np.dot(self.band_coef, lip ** p))
        return SeminormResult(value, remainder, self._status(contrib))

    def _status(self, contrib: np.ndarray) -> Status:
        """Ratio test on the innermost dyadic shells (they must shrink toward the diagonal)."""
        shells = [float(contrib[self.shell == k].sum()) for k in range(4)]
        if all(sh == 0.0 for sh in shells):
            return Status.CONVERGED
        ratios = [shells[k] / shells[k + 1] if shells[k + 1] > 0 else np.inf for k in range(3)]
        if all(r >= 1.0 for r in ratios):
            return Status.DIVERGENT
        return Status.CONVERGED


def seminorm_A(spec: WeightSpec, v, i: int = 0, cfg: SeminormConfig | None = None) -> SeminormResult:
    """Directional seminorm ``A_i(v) = int int w_i(x_t, tau) |v(x_t) - v(x_tau)|^p``.

    N = 1 takes a :class:`GridFunction1D`; N = 2 a :class:`GridFunction2D`,
    with the transverse coordinate averaged by a 5-point Gauss rule (or a
    composite rule over all grid cells when ``cfg.outer == "full"``).
    """
    cfg = cfg or SeminormConfig(p=spec.p)
    if isinstance(v, GridFunction1D):
        if v.is_constant():
            return SeminormResult(0.0, 0.0, Status.CONVERGED)
        return SeminormQuadrature(spec, v.n_cells, cfg, axis=i).evaluate(v)
    if not isinstance(v, GridFunction2D):
        raise TypeError("v must be a GridFunction1D or GridFunction2D")
    n = v.n_cells
    if cfg.outer == "full":
        xs, ws = composite_nodes(np.linspace(0.0, 1.0, n + 1), 3)
    else:
        xs, ws = gauss_legendre(5)
    total, rem, status = 0.0, 0.0, Status.CONVERGED
    for xc, wc in zip(xs, ws):
        line = v.line(i, xc)
        if line.is_constant():
            continue
        point = np.array([0.5, 0.5])
        point[1 - i] = xc
        res = SeminormQuadrature(spec, n, cfg, axis=i, point=point).evaluate(line)
        total += wc * res.value
        rem += wc * res.remainder
        if res.status is not Status.CONVERGED:
            status = res.status
    return SeminormResult(total, rem, status)


def gagliardo_integral(v: GridFunction1D, p: float, kernel_exponent: float, n_gauss: int = 8,
                       rtol: float = 1e-11) -> float:
    """``int_0^1 int_0^1 |v(t) - v(tau)|^p / |t - tau|^kernel_exponent`` by the lag variable.

    With ``r = |t - tau|`` the integral is ``2 int_0^1 r^-k F(r) dr`` with
    ``F(r) = int_0^(1-r) |v(tau + r) - v(tau)|^p dtau``. F is integrated
    exactly per kink interval; in r the first grid cell is graded toward 0
    and the others, where F is smooth between multiples of h, use Gauss.
    """
    nodes = v.nodes
    h = 1.0 / v.n_cells

    def F(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty(r.shape)
        for k, rk in enumerate(r.ravel()):
            br = np.concatenate([nodes, nodes - rk, [0.0, 1.0 - rk]])
            br = np.unique(br[(br >= 0.0) & (br <= 1.0 - rk)])
            x, ww = composite_nodes(br, n_gauss)
            out.flat[k] = np.dot(ww, np.abs(v(x + rk) - v(x)) ** p)
        return out

    def integrand(r):
        return F(r) * np.asarray(r) ** (-kernel_exponent)

    near = graded_integral(integrand, 0.0, h, toward="a", n=n_gauss, rtol=rtol)
    r, w = composite_nodes(nodes[1:], n_gauss)
    return 2.0 * (near.value + float(np.dot(w, integrand(r))))


def improved_trace_check(sys: ExtensionSystem, u: np.ndarray, sigma: float = 0.5,
                         cfg: SeminormConfig | None = None,
                         quad: SeminormQuadrature | None = None) -> InequalityResult:
    """Improved trace inequality on Q_1 (N = 1, tau >= 1).

    ``lhs = (||v||^p_{L^p(w~)} + A_1(v) + band remainder)^(1/p)`` with ``v`` the
    base trace, ``rhs = C(p, sigma) ||u||_{W^{1,p}}``. Pass ``quad`` to reuse
    a precomputed seminorm table across samples.
    """
    if sys.mesh.N != 1:
        raise ValueError("the improved trace check is implemented for N = 1")
    if sys.mesh.tau < 1.0:
        raise ValueError("the improved trace inequality needs tau >= 1")
    p = sys.spec.p
    cfg = cfg or SeminormConfig(p=p, sigma=sigma)
    u = np.asarray(u, dtype=float)
    v = GridFunction1D.from_base(u[: sys.n_base])
    if quad is None:
        quad = SeminormQuadrature(sys.spec, v.n_cells, cfg)
    if v.is_constant():
        sem = SeminormResult(0.0, 0.0, Status.CONVERGED)
    else:
        sem = quad.evaluate(v)
    if sem.status is Status.DIVERGENT:
        raise ArithmeticError("seminorm quadrature failed the ratio test")
    tr = _frozen_trace_norm(sys, u[: sys.n_base], p)
    lhs = (tr ** p + sem.value + sem.remainder) ** (1.0 / p)
    C = improved_trace_constant(p, sigma)
    rhs = C * sobolev_norm(sys, u, p)
    return InequalityResult(lhs, rhs, lhs <= rhs,
                            {"C": C, "A1": sem.value, "remainder": sem.remainder, "trace": tr})


# ---------------------------------------------------------------------------
# Hardy inequalities


def _derivative(f, df):
    if df is not None:
        return df
    h = 1e-3

    def d(t):
        t = np.asarray(t, dtype=float)
        return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)

    return d


def hardy_weighted_check(rho, f, p: float = 2.0, a: float = 0.0, b: float = 1.0, df=None,
                         kinks=(), rtol: float = 1e-12) -> InequalityResult:
    """Weighted Hardy inequality ``int rho^ |f|^p <= C_H(p) int rho |f'|^p`` on (a, b).

    ``rho^(t) = rho(t)^(1-p') (int_a^t rho^(1-p'))^(-p)``; ``f(a+) = 0`` is
    required. ``kinks`` lists interior points where f or rho are not smooth.
    """
    if p < 1.0 + 1e-12:
        raise ValueError("need p > 1")
    pc = p / (p - 1.0)
    integ = integrate_with_singular_points(lambda t: np.asarray(rho(t), float) ** (1.0 - pc),
                                           a, b, kinks, rtol=rtol)
    if integ.status is Status.DIVERGENT or not np.isfinite(integ.value):
        raise ValueError("rho^(1-p') is not integrable on (a, b)")
    if abs(float(f(np.array([a + 1e-14]))[0])) > 1e-6 * (1.0 + abs(float(f(np.array([0.5 * (a + b)]))[0]))):
        raise ValueError("f must vanish at the left end point")
    d = _derivative(f, df)
    cuts = np.array(sorted({a, b, *[k for k in kinks if a < k < b]}))
    seg_int = [0.0]
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        seg_int.append(integrate_with_singular_points(
            lambda t: np.asarray(rho(t), float) ** (1.0 - pc), lo, hi, rtol=rtol).value)
    seg_cum = np.cumsum(seg_int)

    def cumulative(t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(cuts, t, side="right") - 1, 0, len(cuts) - 2)
        start = cuts[k]
        part = dyadic_batch(lambda r: np.asarray(rho(np.clip(start[:, None] + r, a, b)), float) ** (1.0 - pc),
                            np.maximum(t.ravel() - start.ravel(), 0.0), levels=50, n=8)
        # the graded rule runs toward the left end of each segment
        return seg_cum[k].ravel() + part

    def lhs_integrand(t):
        t = np.asarray(t, dtype=float)
        R = cumulative(t).reshape(t.shape)
        rr = np.asarray(rho(t), float) ** (1.0 - pc)
        return rr * R ** (-p) * np.abs(np.asarray(f(t), float)) ** p

    def rhs_integrand(t):
        t = np.asarray(t, dtype=float)
        return np.asarray(rho(t), float) * np.abs(np.asarray(d(t), float)) ** p

    L = integrate_with_singular_points(lhs_integrand, a, b, kinks, rtol=rtol)
    R = integrate_with_singular_points(rhs_integrand, a, b, kinks, rtol=rtol)
    C = hardy_constant(p)
    lhs, rhs = L.value, C * R.value
    return InequalityResult(lhs, rhs, lhs <= rhs,
                            {"C": C, "status": (L.status.value, R.status.value)})


def hardy_classical_check(f, p: float = 2.0, eps: float = 2.0, support: float = 1.0, df=None,
                          kinks=(), rtol: float = 1e-12) -> InequalityResult:
    """Classical Hardy inequality ``int t^(eps-p)|f|^p <= C_H(p, eps) int t^eps |f'|^p``.

    ``f`` vanishes for ``t >= support``; integrals run over (0, support).
    """
    C = classical_hardy_constant(p, eps)
    d = _derivative(f, df)
    pts = [k for k in kinks if 0.0 < k < support]
    R = integrate_with_singular_points(
        lambda t: np.asarray(t, float) ** eps * np.abs(np.asarray(d(t), float)) ** p,
        0.0, support, pts, rtol=rtol)
    if R.status is Status.DIVERGENT or not np.isfinite(R.value):
        raise ValueError("int t^eps |f'|^p is not finite")
    L = integrate_with_singular_points(
        lambda t: np.asarray(t, float) ** (eps - p) * np.abs(np.asarray(f(t), float)) ** p,
        0.0, support, pts, rtol=rtol)
    lhs, rhs = L.value, C * R.value
    return InequalityResult(lhs, rhs, lhs <= rhs,
                            {"C": C, "status": (L.status.value, R.status.value)})
