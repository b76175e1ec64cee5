"""Variable fractional order s(x), the normalization G_s and the cylinder weights."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from .quadrature import GradedIntegral, Status, composite_nodes, graded_integral

__all__ = [
    "OrderField", "Box", "GsVariant", "WeightSpec", "gamma_fn",
    "eval_order", "eval_G", "eval_weight", "eval_trace_weight", "check_H5",
    "H5Result",
]


def gamma_fn(x):
    """Euler Gamma for positive real arguments."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("gamma_fn is only defined here for positive arguments")
    out = special.gamma(arr)
    return out if np.ndim(out) else float(out)


def g_of_order(s):
    """``2^(2s-1) Gamma(s) / Gamma(1-s)``."""
    s = np.asarray(s, dtype=float)
    out = 2.0 ** (2.0 * s - 1.0) * gamma_fn(s) / gamma_fn(1.0 - s)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``prod [lo_i, hi_i]`` inside the unit cube."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("box bounds have different dimensions")
        for a, b in zip(self.lo, self.hi):
            if not (0.0 <= a < b <= 1.0):
                raise ValueError(f"invalid box interval [{a}, {b}]")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def contains(self, x: np.ndarray) -> np.ndarray:
        # half-open [lo, hi) except on the far face of the unit cube
        inside = np.ones(x.shape[:-1], dtype=bool)
        for i, (a, b) in enumerate(zip(self.lo, self.hi)):
            xi = x[..., i]
            upper = (xi < b) | ((b == 1.0) & (xi == 1.0))
            inside &= (xi >= a) & upper
        return inside

    def overlap(self, other: "Box") -> float:
        ext = [max(0.0, min(b1, b2) - max(a1, a2))
               for a1, b1, a2, b2 in zip(self.lo, self.hi, other.lo, other.hi)]
        return float(np.prod(ext))


class Kind(enum.Enum):
    CONSTANT = "constant"
    STEP = "step"
    DISTANCE = "distance"


@dataclass(frozen=True)
class OrderField:
    """The order s(.) on the unit cube, clamped to ``[s_min, s_max]``.

    Build instances with :meth:`constant`, :meth:`step` or :meth:`distance`.
    ``dim`` is ``None`` for constant fields, which accept points of any dimension.
    """

    kind: Kind
    value: float = 0.5
    cells: tuple[tuple[Box, float], ...] = ()
    sigma: float = 0.5
    eps: float = 0.5
    anchors: tuple[tuple[float, ...], ...] = ()
    power: float = 1.0
    s_min: float = 0.05
    s_max: float = 0.95

    def __post_init__(self):
        if not (0.0 < self.s_min <= self.s_max < 1.0):
            raise ValueError("need 0 < s_min <= s_max < 1")
        if self.kind is Kind.STEP:
            if not self.cells:
                raise ValueError("step field needs at least one cell")
            dims = {box.dim for box, _ in self.cells}
            if len(dims) != 1:
                raise ValueError("step cells have mixed dimensions")
            total = sum(box.volume for box, _ in self.cells)
            if abs(total - 1.0) > 1e-12:
                raise ValueError("step cells must cover the unit cube")
            for i, (b1, _) in enumerate(self.cells):
                for b2, _ in self.cells[i + 1:]:
                    if b1.overlap(b2) > 1e-14:
                        raise ValueError("step cells overlap")
        elif self.kind is Kind.DISTANCE:
            if not (0.0 < self.sigma < 1.0 and 0.0 < self.eps < 1.0):
                raise ValueError("distance field needs sigma, eps in (0, 1)")
            if not self.anchors:
                raise ValueError("distance field needs a non-empty anchor set")
            if len({len(a) for a in self.anchors}) != 1:
                raise ValueError("anchors have mixed dimensions")
            if self.power <= 0:
                raise ValueError("power must be positive")

    @classmethod
    def constant(cls, value: float, s_min: float = 0.05, s_max: float = 0.95) -> "OrderField":
        return cls(Kind.CONSTANT, value=float(value), s_min=s_min, s_max=s_max)

    @classmethod
    def step(cls, cells, s_min: float = 0.05, s_max: float = 0.95) -> "OrderField":
        """``cells``: iterable of ``(box, value)``; a box is a Box or ``[(lo, hi), ...]``."""
        norm = []
        for box, val in cells:
            if not isinstance(box, Box):
                box = Box(tuple(float(a) for a, _ in box), tuple(float(b) for _, b in box))
            norm.append((box, float(val)))
        return cls(Kind.STEP, cells=tuple(norm), s_min=s_min, s_max=s_max)

    @classmethod
    def distance(cls, sigma: float, eps: float, anchors, power: float = 1.0,
                 s_min: float = 0.05, s_max: float = 0.95) -> "OrderField":
        pts = tuple(tuple(float(c) for c in np.atleast_1d(a)) for a in anchors)
        return cls(Kind.DISTANCE, sigma=float(sigma), eps=float(eps), anchors=pts,
                   power=float(power), s_min=s_min, s_max=s_max)

    @property
    def dim(self) -> int | None:
        if self.kind is Kind.STEP:
            return self.cells[0][0].dim
        if self.kind is Kind.DISTANCE:
            return len(self.anchors[0])
        return None

    def _points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = self.dim
        if d is None:
            return x[..., None] if x.ndim == 0 else x
        if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != d:
            raise ValueError(f"point dimension {x.shape[-1]} does not match field dimension {d}")
        return x

    def raw(self, x) -> np.ndarray:
        """Unclamped order values at points ``x`` (shape ``(..., N)``; scalars allowed for N=1)."""
        if self.kind is Kind.CONSTANT:
            x = np.asarray(x, dtype=float)
            shape = x.shape if self.dim is None and x.ndim <= 1 else x.shape[:-1]
            return np.full(shape, self.value)
        pts = self._points(x)
        if self.kind is Kind.STEP:
            out = np.full(pts.shape[:-1], np.nan)
            for box, val in self.cells:
                out = np.where(np.isnan(out) & box.contains(pts), val, out)
            if np.any(np.isnan(out)):
                raise ValueError("point outside the unit cube")
            return out
        anchors = np.asarray(self.anchors)
        diff = pts[..., None, :] - anchors
        dist = np.sqrt((diff ** 2).sum(axis=-1)).min(axis=-1)
        return self.sigma * np.minimum(dist, self.eps) ** self.power

    def __call__(self, x):
        out = np.clip(self.raw(x), self.s_min, self.s_max)
        return out if np.ndim(out) else float(out)

    def breaks_along(self, axis: int, point=None) -> np.ndarray | None:
        """Coordinates in (0, 1) along ``axis`` where a step field may jump.

        Returns an empty array for constant fields and ``None`` for fields
        that vary continuously.
        """
        if self.kind is Kind.CONSTANT:
            return np.empty(0)
        if self.kind is Kind.DISTANCE:
            return None
        cuts = set()
        for box, _ in self.cells:
            if point is not None and self.dim > 1:
                p = np.asarray(point, dtype=float)
                if any(not (box.lo[j] <= p[j] <= box.hi[j]) for j in range(self.dim) if j != axis):
                    continue
            cuts.update((box.lo[axis], box.hi[axis]))
        return np.array(sorted(c for c in cuts if 0.0 < c < 1.0))

    def range_on(self, lo, hi) -> tuple[float, float]:
        """Bounds for the clamped order over the box ``[lo, hi]``."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if self.kind is Kind.CONSTANT:
            v = float(np.clip(self.value, self.s_min, self.s_max))
            return v, v
        if self.kind is Kind.STEP:
            vals = [val for box, val in self.cells
                    if all(box.lo[i] <= hi[i] and lo[i] <= box.hi[i] for i in range(box.dim))]
            vals = np.clip(vals, self.s_min, self.s_max)
            return float(vals.min()), float(vals.max())
        # sigma * min(dist, eps)**power: evaluate at the center, widen by a modulus of continuity
        center = 0.5 * (lo + hi)
        radius = 0.5 * float(np.linalg.norm(hi - lo))
        d0 = float(np.sqrt(((np.asarray(self.anchors) - center) ** 2).sum(axis=-1)).min())
        lo_d, hi_d = max(d0 - radius, 0.0), d0 + radius
        f = lambda d: self.sigma * min(d, self.eps) ** self.power
        return (float(np.clip(f(lo_d), self.s_min, self.s_max)),
                float(np.clip(f(hi_d), self.s_min, self.s_max)))

    def min_value(self) -> float:
        """Smallest order the (clamped) field attains on the unit cube."""
        if self.kind is Kind.CONSTANT:
            return float(np.clip(self.value, self.s_min, self.s_max))
        if self.kind is Kind.STEP:
            return float(np.clip(min(v for _, v in self.cells), self.s_min, self.s_max))
        # anchors lie in the closed cube, so the distance vanishes somewhere
        return float(np.clip(0.0, self.s_min, self.s_max))

    @cached_property
    def mean(self) -> float:
        """Average of the clamped order over the unit cube."""
        if self.kind is Kind.CONSTANT:
            return self.min_value()
        if self.kind is Kind.STEP:
            return float(sum(box.volume * np.clip(v, self.s_min, self.s_max)
                             for box, v in self.cells))
        breaks = np.linspace(0.0, 1.0, 129)
        x, w = composite_nodes(breaks, 6)
        if self.dim == 1:
            return float(np.dot(w, self(x)))
        grids = np.meshgrid(*([x] * self.dim), indexing="ij")
        pts = np.stack(grids, axis=-1)
        wts = np.ones_like(grids[0])
        for g in np.meshgrid(*([w] * self.dim), indexing="ij"):
            wts = wts * g
        return float((self(pts) * wts).sum())

    def to_dict(self) -> dict:
        base = {"kind": self.kind.value, "s_min": self.s_min, "s_max": self.s_max}
        if self.kind is Kind.CONSTANT:
            base["value"] = self.value
        elif self.kind is Kind.STEP:
            base["cells"] = [{"box": [[a, b] for a, b in zip(box.lo, box.hi)], "value": v}
                             for box, v in self.cells]
        else:
            base.update(sigma=self.sigma, eps=self.eps,
                        anchors=[list(a) for a in self.anchors], power=self.power)
        return base

    @classmethod
    def from_dict(cls, d: dict) -> "OrderField":
        d = dict(d)
        kind = d.pop("kind")
        bounds = {k: float(d.pop(k)) for k in ("s_min", "s_max") if k in d}
        if kind == "constant":
            return cls.constant(d.pop("value"), **bounds)
        if kind == "step":
            return cls.step([(c["box"], c["value"]) for c in d.pop("cells")], **bounds)
        if kind == "distance":
            return cls.distance(d.pop("sigma"), d.pop("eps"), d.pop("anchors"),
                                power=d.pop("power", 1.0), **bounds)
        raise ValueError(f"unknown order kind {kind!r}")


class GsVariant(enum.Enum):
    """Choice of G_s. ``UNIT`` (G = 1) is a diagnostic override used in tests."""

    MEAN_CONSTANT = "mean_constant"
    POINTWISE = "pointwise"
    UNIT = "unit"


@dataclass(frozen=True)
class WeightSpec:
    """Weight ``w(x, y) = G_s(x) y^(1 - 2 s(x))`` together with the exponent p."""

    order: OrderField
    g: GsVariant = GsVariant.POINTWISE
    p: float = 2.0

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("p must be >= 2")

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    def s(self, x):
        return self.order(x)

    def delta(self, x):
        return 1.0 - 2.0 * np.asarray(self.order(x))

    def G_of_s(self, s):
        """G as a function of the local order (constant variants ignore ``s``)."""
        s = np.asarray(s, dtype=float)
        if self.g is GsVariant.POINTWISE:
            out = np.asarray(g_of_order(s), dtype=float)
        elif self.g is GsVariant.MEAN_CONSTANT:
            out = np.full(s.shape, g_of_order(self.order.mean))
        else:
            out = np.ones(s.shape)
        return out if out.ndim else float(out)

    def G(self, x):
        return self.G_of_s(self.order(x))

    def weight(self, x, y):
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0):
            raise ValueError("weight requires y > 0")
        s = np.asarray(self.order(x))
        return self.G_of_s(s) * y ** (1.0 - 2.0 * s)

    def trace_weight_of_s(self, s):
        s = np.asarray(s, dtype=float)
        return self.G_of_s(s) * (self.p - 2.0 + 2.0 * s) ** self.p

    def trace_weight(self, x):
        return self.trace_weight_of_s(self.order(x))

    def G_range(self, s_lo: float, s_hi: float) -> tuple[float, float]:
        """Bounds of G for orders in ``[s_lo, s_hi]`` (the pointwise G is decreasing in s)."""
        a, b = self.G_of_s(s_lo), self.G_of_s(s_hi)
        return float(min(a, b)), float(max(a, b))


def eval_order(f: OrderField, x) -> float:
    """Order at a single point ``x``."""
    if f.kind is Kind.CONSTANT:
        return f.min_value()
    pt = np.atleast_1d(np.asarray(x, dtype=float))
    if pt.shape != (f.dim,):
        raise ValueError(f"expected a point of dimension {f.dim}, got shape {pt.shape}")
    return float(f(pt))


def eval_G(g: GsVariant, f: OrderField, x) -> float:
    return WeightSpec(f, g).G_of_s(eval_order(f, x))


def eval_weight(spec: WeightSpec, x, y: float) -> float:
    if y <= 0:
        raise ValueError("weight requires y > 0")
    s = eval_order(spec.order, x)
    return float(spec.G_of_s(s) * y ** (1.0 - 2.0 * s))


def eval_trace_weight(spec: WeightSpec, x) -> float:
    return float(spec.trace_weight_of_s(eval_order(spec.order, x)))


@dataclass(frozen=True)
class H5Result:
    status: Status
    value: float

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def check_H5(spec: WeightSpec, z: float, axis: int = 0, point=None,
             rtol: float = 1e-6) -> H5Result:
    """Integrability of ``(G_s(x)|x_i - z|^(1-2s(x)))^(1-p')`` over ``x_i`` in (0, 1).

    For N > 1 the remaining coordinates are taken from ``point``. Divergence
    detection is a heuristic on the dyadic refinement levels.
    """
    if not (0.0 < z < 1.0):
        raise ValueError("z must lie in (0, 1)")
    dim = spec.order.dim or 1
    base = np.full(dim, 0.5) if point is None else np.asarray(point, dtype=float).copy()
    expo = 1.0 - spec.p_conj

    def integrand(t):
        t = np.asarray(t, dtype=float)
        pts = np.repeat(base[None, :], t.size, axis=0)
        pts[:, axis] = t.ravel()
        s = np.asarray(spec.order(pts if dim > 1 else pts[:, 0])).reshape(t.shape)
        with np.errstate(divide="ignore"):  # t - z rounds to 0 at the deepest levels
            return (spec.G_of_s(s) * np.abs(t - z) ** (1.0 - 2.0 * s)) ** expo

    parts: list[GradedIntegral] = [
        graded_integral(integrand, 0.0, z, toward="b", rtol=rtol),
        graded_integral(integrand, z, 1.0, toward="a", rtol=rtol),
    ]
    if any(p.status is Status.DIVERGENT for p in parts):
        return H5Result(Status.DIVERGENT, np.inf)
    status = Status.CONVERGED if all(p.converged for p in parts) else Status.UNRESOLVED
    return H5Result(status, float(sum(p.value for p in parts)))
