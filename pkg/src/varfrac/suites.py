"""Seeded randomized suites for the trace, improved-trace and Hardy inequalities.

Every sample draws from ``numpy.random.default_rng([seed, suite_id, k])`` so a
sample is reproducible on its own, independent of how many ran before it.
Each suite returns rows ``{"suite", "id", "lhs", "rhs", "margin", "holds", ...}``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .assembly import ExtensionSystem, assemble
from .functionals import (GridFunction1D, SeminormConfig, SeminormQuadrature,
                          gagliardo_integral, hardy_classical_check, hardy_weighted_check,
                          improved_trace_check, phi_weights, trace_inequality_check)
from .mesh import build_mesh
from .order_field import GsVariant, OrderField, WeightSpec
from .solver import harmonic_extension

__all__ = ["SUITE_IDS", "default_fields", "random_extension", "trace_suite", "improved_trace_suite",
           "hardy_weighted_suite", "hardy_classical_suite", "seminorm_reduction_suite", "run_suite"]

SUITE_IDS = {"trace": 1, "improved_trace": 2, "hardy_weighted": 3, "hardy_classical": 4,
             "seminorm_reduction": 5}


def _rng(seed: int, suite: str, k: int) -> np.random.Generator:
    return np.random.default_rng([seed, SUITE_IDS[suite], k])


def _map(fn, n: int, workers: int) -> list:
    """``[fn(k) for k in range(n)]``, optionally on a thread pool (order preserved)."""
    if workers <= 1:
        return [fn(k) for k in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


def default_fields() -> list[tuple[str, OrderField]]:
    """Order fields cycled through by the extension-based suites."""
    return [
        ("const_0.25", OrderField.constant(0.25)),
        ("const_0.5", OrderField.constant(0.5)),
        ("const_0.75", OrderField.constant(0.75)),
        ("step_0.3_0.7", OrderField.step([([(0.0, 0.5)], 0.3), ([(0.5, 1.0)], 0.7)])),
        ("step_3cell", OrderField.step([([(0.0, 0.25)], 0.6), ([(0.25, 0.75)], 0.2),
                                        ([(0.75, 1.0)], 0.85)])),
    ]


def random_extension(sys: ExtensionSystem, rng: np.random.Generator, kind: str | None = None,
                     tol: float = 1e-10) -> tuple[str, np.ndarray]:
    """A random discrete function on the free nodes.

    Kinds: ``harmonic`` (discrete extension of random smooth base data, the
    least-energy function with that trace), ``separable`` (random base data
    times a random profile in y vanishing at the top) and ``noise``.
    """
    kind = kind or rng.choice(["harmonic", "harmonic", "separable", "noise"])
    mesh = sys.mesh
    xs = mesh.layer_coords()[mesh.base]
    K = int(rng.integers(1, 9))
    coef = rng.standard_normal((K,) * mesh.N) / (1.0 + np.arange(K)) ** rng.uniform(0.5, 2.0)
    k = np.arange(1, K + 1)
    if mesh.N == 1:
        base = np.sin(np.pi * np.outer(xs[:, 0], k)) @ coef
    else:
        s1 = np.sin(np.pi * np.outer(xs[:, 0], k))
        s2 = np.sin(np.pi * np.outer(xs[:, 1], k))
        base = np.einsum("ia,ab,ib->i", s1, coef, s2)
    base = base + 0.05 * rng.standard_normal(base.size) * np.abs(base).max()
    if kind == "harmonic":
        return kind, harmonic_extension(sys, base, tol=tol)
    if kind == "separable":
        y = mesh.y_nodes / mesh.tau
        rate = rng.uniform(0.5, 8.0)
        prof = np.exp(-rate * y) * (1.0 - y) ** rng.uniform(0.5, 2.0)
        layer = np.zeros(mesh.layer_size)
        layer[mesh.base] = base
        full = np.outer(prof, layer).ravel()
        return kind, full[sys.free]
    return "noise", rng.standard_normal(sys.n_free)


@dataclass(frozen=True)
class SuiteMesh:
    """Mesh used by the extension-based suites (grading is irrelevant for them)."""

    N: int = 1
    n_cells: int = 32
    tau: float = 1.0
    gamma: float = 2.0
    n_y_cells: int | None = None


def _systems(mesh_cfg: SuiteMesh, g: GsVariant, p: float):
    n_y = mesh_cfg.n_y_cells or mesh_cfg.n_cells
    mesh = build_mesh(mesh_cfg.N, mesh_cfg.n_cells + 1, n_y + 1,
                      mesh_cfg.tau, mesh_cfg.gamma)
    out = []
    for name, field in default_fields():
        if field.dim not in (None, mesh_cfg.N):
            continue
        out.append((name, assemble(mesh, WeightSpec(field, g, p))))
    return out


def _row(suite, k, res, **extra):
    return {"suite": suite, "id": k, "lhs": res.lhs, "rhs": res.rhs, "margin": res.margin,
            "holds": bool(res.holds), **extra}


def trace_suite(n_samples: int = 200, seed: int = 0, sigma: float = 0.5, p: float = 2.0,
                mesh: SuiteMesh = SuiteMesh(), g: GsVariant = GsVariant.POINTWISE,
                workers: int = 1) -> list[dict]:
    systems = _systems(mesh, g, p)

    def sample(k):
        rng = _rng(seed, "trace", k)
        name, sys = systems[k % len(systems)]
        kind, u = random_extension(sys, rng)
        res = trace_inequality_check(sys, u, sigma=sigma, p=p)
        return _row("trace", k, res, field=name, kind=kind, C=res.extra["C"])

    return _map(sample, n_samples, workers)


def improved_trace_suite(n_samples: int = 100, seed: int = 0, sigma: float = 0.5, p: float = 2.0,
                         mesh: SuiteMesh = SuiteMesh(), g: GsVariant = GsVariant.POINTWISE,
                         seminorm: SeminormConfig | None = None, workers: int = 1) -> list[dict]:
    if mesh.N != 1:
        raise ValueError("the improved trace suite runs on Q_1 only")
    systems = _systems(mesh, g, p)
    cfg = seminorm or SeminormConfig(p=p, sigma=sigma)
    tables = [SeminormQuadrature(sys.spec, mesh.n_cells, cfg) for _, sys in systems]

    def sample(k):
        rng = _rng(seed, "improved_trace", k)
        j = k % len(systems)
        name, sys = systems[j]
        kind, u = random_extension(sys, rng)
        res = improved_trace_check(sys, u, sigma=sigma, cfg=cfg, quad=tables[j])
        return _row("improved_trace", k, res, field=name, kind=kind, C=res.extra["C"],
                    A1=res.extra["A1"], remainder=res.extra["remainder"])

    return _map(sample, n_samples, workers)


def _poly(rng, deg):
    """Random polynomial vanishing at 0, with its derivative."""
    c = rng.standard_normal(deg)
    powers = np.arange(1, deg + 1)

    def f(t):
        t = np.asarray(t, dtype=float)
        return sum(ci * t ** pi for ci, pi in zip(c, powers))

    def df(t):
        t = np.asarray(t, dtype=float)
        return sum(ci * pi * t ** (pi - 1) for ci, pi in zip(c, powers))

    return f, df


def hardy_weighted_suite(n_samples: int = 200, seed: int = 0, workers: int = 1) -> list[dict]:
    """Random ``rho(t) = t^alpha (1 + beta sin^2(omega t))`` and polynomial f on (0, 1)."""

    def sample(k):
        rng = _rng(seed, "hardy_weighted", k)
        p = float(rng.uniform(2.0, 4.0))
        alpha = float(rng.uniform(-0.8, min(p - 1.2, 2.5)))
        beta = float(rng.uniform(0.0, 2.0))
        omega = float(rng.uniform(0.5, 6.0))
        f, df = _poly(rng, int(rng.integers(1, 5)))

        def rho(t, alpha=alpha, beta=beta, omega=omega):
            t = np.asarray(t, dtype=float)
            return t ** alpha * (1.0 + beta * np.sin(omega * t) ** 2)

        res = hardy_weighted_check(rho, f, p, 0.0, 1.0, df=df, rtol=1e-10)
        return _row("hardy_weighted", k, res, p=p, alpha=alpha, beta=beta, omega=omega)

    return _map(sample, n_samples, workers)


def hardy_classical_suite(n_samples: int = 200, seed: int = 0, workers: int = 1) -> list[dict]:
    """Random ``f(t) = P(t) (1 - t/T)_+^m`` with ``P(0) != 0`` allowed, eps > p - 1."""

    def sample(k):
        rng = _rng(seed, "hardy_classical", k)
        p = float(rng.uniform(2.0, 4.0))
        eps = float(p - 1.0 + rng.uniform(0.05, 3.0))
        T = float(rng.uniform(0.5, 2.0))
        m = int(rng.integers(1, 4))
        c = rng.standard_normal(int(rng.integers(1, 4)))

        def f(t, c=c, T=T, m=m):
            t = np.asarray(t, dtype=float)
            P = np.polyval(c, t)
            return P * np.clip(1.0 - t / T, 0.0, None) ** m

        def df(t, c=c, T=T, m=m):
            t = np.asarray(t, dtype=float)
            P = np.polyval(c, t)
            dP = np.polyval(np.polyder(c), t) if c.size > 1 else np.zeros_like(t)
            q = np.clip(1.0 - t / T, 0.0, None)
            return dP * q ** m - P * m * q ** (m - 1) / T

        res = hardy_classical_check(f, p, eps, support=T, df=df, rtol=1e-10)
        return _row("hardy_classical", k, res, p=p, eps=eps, support=T)

    return _map(sample, n_samples, workers)


def seminorm_reduction_suite(n_points: int = 1000, seed: int = 0, n_cells: int = 64) -> list[dict]:
    """Constant order: ``phi = psi`` pointwise and ``A_1`` against the lag-variable oracle.

    Rows carry ``lhs`` = seminorm, ``rhs`` = oracle and ``holds`` = relative
    agreement within 1 %; the pointwise check is summarized in one row.
    """
    rng = _rng(seed, "seminorm_reduction", 0)
    rows = []
    worst = 0.0
    for j in range(n_points):
        s = float(rng.uniform(0.05, 0.95))
        p = float(rng.uniform(2.0, 4.0))
        t, tau = rng.uniform(0.0, 1.0, 2)
        if t == tau:
            continue
        spec = WeightSpec(OrderField.constant(s), GsVariant.POINTWISE, p)
        w = phi_weights(spec, 0, None, float(t), float(tau))
        worst = max(worst, abs(w.phi - w.psi) / abs(w.psi))
    rows.append({"suite": "seminorm_reduction", "id": "phi_equals_psi", "lhs": worst, "rhs": 1e-10,
                 "margin": 1e-10 - worst, "holds": worst <= 1e-10})
    tests = [("sin", lambda x: np.sqrt(2.0) * np.sin(np.pi * x)),
             ("poly", lambda x: x * (1.0 - x)),
             ("exp", lambda x: np.exp(x))]
    for s in (0.25, 0.5, 0.75):
        spec = WeightSpec(OrderField.constant(s), GsVariant.UNIT, 2.0)
        d = 1.0 - 2.0 * s
        C = (1.0 + d * (1.0 - 2.0)) ** 2
        quad = SeminormQuadrature(spec, n_cells, SeminormConfig(p=2.0))
        for name, f in tests:
            v = GridFunction1D.sample(f, n_cells)
            res = quad.evaluate(v)
            ref = C * gagliardo_integral(v, 2.0, 2.0 - d)
            rel = abs(res.value - ref) / abs(ref)
            rows.append({"suite": "seminorm_reduction", "id": f"{name}_s{s}", "lhs": res.value,
                         "rhs": ref, "margin": 0.01 - rel, "holds": rel <= 0.01,
                         "remainder": res.remainder})
    return rows


def run_suite(name: str, n_samples: int | None = None, seed: int = 0, sigma: float = 0.5,
              p: float = 2.0, g: GsVariant = GsVariant.POINTWISE,
              seminorm: SeminormConfig | None = None, mesh: SuiteMesh = SuiteMesh(),
              workers: int = 1) -> list[dict]:
    """Run one suite by name (or ``"all"``); ``n_samples=None`` uses each suite's default.

    ``"all"`` skips the improved trace suite when ``mesh.N != 1``.
    """
    if name == "trace":
        return trace_suite(n_samples or 200, seed, sigma, p, mesh, g, workers)
    if name == "improved_trace":
        return improved_trace_suite(n_samples or 100, seed, sigma, p, mesh, g, seminorm, workers)
    if name == "hardy_weighted":
        return hardy_weighted_suite(n_samples or 200, seed, workers)
    if name == "hardy_classical":
        return hardy_classical_suite(n_samples or 200, seed, workers)
    if name == "seminorm_reduction":
        return seminorm_reduction_suite(n_samples or 1000, seed)
    if name == "all":
        rows = []
        for sub in SUITE_IDS:
            if sub == "improved_trace" and mesh.N != 1:
                continue
            rows += run_suite(sub, n_samples, seed, sigma, p, g, seminorm, mesh, workers)
        return rows
    raise ValueError(f"unknown suite {name!r}")
