"""Quadrature, finite differences and a Nelder-Mead minimizer.

Every other module leans on these kernels, either as the main engine or as
an independent cross-check.  Integrands passed to :func:`integrate` are
called with a 1-D numpy array of nodes and must return an array of the same
shape.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError

# Gauss-Kronrod 7/15 pair (QUADPACK qk15). Kronrod nodes on [0, 1], the
# Gauss nodes are every other entry starting at index 1.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full symmetric node set on [-1, 1] and matching weights
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[7] = _WG[3]
_GW[[9, 11, 13]] = _WG[2::-1]

PANEL_SIZE = 15


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class OptimizerResult:
    point: np.ndarray
    value: float
    iterations: int
    converged: bool


def _gk15(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = np.asarray(f(mid + half * _NODES), dtype=float)
    if fx.shape != _NODES.shape:
        fx = np.broadcast_to(fx, _NODES.shape)
    kron = half * np.dot(_KW, fx)
    gauss = half * np.dot(_GW, fx)
    if not np.isfinite(kron):
        raise ConvergenceError(f"non-finite integrand on [{a}, {b}]")
    return kron, abs(kron - gauss)


def integrate(f, a, b, tol=1e-10, *, atol=None, max_panels=10_000,
              initial_panels=1):
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[a, b]``.

    The panel with the largest error estimate is bisected until the summed
    estimate drops below ``max(atol, tol * |value|)``; ``atol`` defaults to
    ``tol``.  Endpoints are never evaluated, so integrable endpoint
    singularities are allowed.
    """
    if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
        raise DomainError(f"integrate needs finite a < b, got [{a}, {b}]")
    if atol is None:
        atol = tol
    edges = np.linspace(a, b, initial_panels + 1)
    heap = []
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = _gk15(f, lo, hi)
        heapq.heappush(heap, (-e, lo, hi, v))
        total += v
        err += e
    panels = initial_panels
    while err > max(atol, tol * abs(total)):
        if panels >= max_panels:
            raise ConvergenceError(
                f"quadrature did not converge within {max_panels} panels "
                f"(estimate {total!r}, error {err:.3g})", estimate=total)
        neg_e, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # interval exhausted at machine precision; accept what we have
            heapq.heappush(heap, (0.0, lo, hi, v))
            err += neg_e
            continue
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        total += v1 + v2 - v
        err += e1 + e2 + neg_e
        panels += 1
    # re-sum to shed the drift of the running update
    total = float(sum(item[3] for item in heap))
    err = float(sum(-item[0] for item in heap))
    return QuadratureResult(total, max(err, 0.0), PANEL_SIZE * (2 * panels - initial_panels))


def integrate_semi_infinite(f, a, tol=1e-10, *, scale=1.0, **kwargs):
    """Integrate ``f`` over ``[a, inf)`` via ``x = a + scale * t / (1 - t)``.

    ``scale`` should sit near where the integrand lives; the default suits
    integrands of unit width.
    """
    if not np.isfinite(a):
        raise DomainError("lower limit must be finite")
    if not scale > 0:
        raise DomainError("scale must be positive")

    def g(t):
        one_minus = 1.0 - t
        x = a + scale * t / one_minus
        return f(x) * (scale / (one_minus * one_minus))

    kwargs.setdefault("initial_panels", 4)
    return integrate(g, 0.0, 1.0, tol, **kwargs)


def central_diff(f, x, h=1e-5):
    if not h > 0:
        raise DomainError("step must be positive")
    return (f(x + h) - f(x - h)) / (2.0 * h)


def minimize(f, x0, scale=0.5, max_iter=5000, tol=1e-10, ftol=None, stall_iter=None):
    """Nelder-Mead downhill simplex.

    Converged once both the simplex diameter (max distance to the best
    vertex) is below ``tol`` and the spread of vertex values is below
    ``ftol`` (default ``tol``).  On budget
    exhaustion the best vertex is still returned with ``converged=False``.
    With ``stall_iter`` set, the search also gives up (unconverged) once the
    best value has improved by less than ``ftol`` over that many iterations,
    which happens when the simplex slides along a flat ridge.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if ftol is None:
        ftol = tol
    dim = x0.size
    simplex = np.vstack([x0] + [x0 + scale * e for e in np.eye(dim)])
    values = np.array([_safe(f, x) for x in simplex])
    if not np.isfinite(values[0]):
        raise DomainError("objective is not finite at the starting point")

    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    it = 0
    converged = False
    mark_value, mark_it = np.min(values), 0
    while it < max_iter:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        diameter = np.max(np.abs(simplex[1:] - simplex[0]))
        spread = values[-1] - values[0]
        if diameter <= tol and spread <= ftol:
            converged = True
            break
        if stall_iter is not None:
            if values[0] < mark_value - ftol:
                mark_value, mark_it = values[0], it
            elif it - mark_it >= stall_iter:
                break
        it += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + alpha * (centroid - worst)
        fr = _safe(f, xr)
        if fr < values[0]:
            xe = centroid + gamma * (xr - centroid)
            fe = _safe(f, xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-1]:
            xc = centroid + rho * (xr - centroid)
            fc = _safe(f, xc)
            if fc <= fr:
                simplex[-1], values[-1] = xc, fc
                continue
        else:
            xc = centroid + rho * (worst - centroid)
            fc = _safe(f, xc)
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
                continue
        best = simplex[0]
        simplex[1:] = best + sigma * (simplex[1:] - best)
        values[1:] = [_safe(f, x) for x in simplex[1:]]

    i = int(np.argmin(values))
    return OptimizerResult(simplex[i].copy(), float(values[i]), it, converged)


def _safe(f, x):
    try:
        v = float(f(x))
    except (ArithmeticError, ValueError):
        return np.inf
    return v if np.isfinite(v) else np.inf
