"""Least-squares fitting of the envelope CDF to empirical points.

The search runs in unconstrained coordinates ``k = exp(a)``, ``u = exp(b)``,
``p = 1 / (1 + exp(-c))`` with multistart Nelder-Mead.  Because the model
depends on ``(u, p)`` only through ``u (1 + p)``, the extended fit has a flat
valley along which ``u`` and ``p`` trade off at constant SSE; the reported
pair is wherever the best start settled.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConvergenceError, DataError, DomainError
from .model import ExtKuParams, cdf_envelope
from .numerics import minimize

MONOTONE_TOL = 1e-6
MIN_POINTS = 5
TIE_TOL = 1e-12
START_BOX = ((math.log(0.01), math.log(50.0)), (math.log(0.1), math.log(10.0)), (-4.0, 4.0))
# the Marcum series grows with u k; cap the search far outside any fading regime
_MAX_A, _MAX_B = math.log(1e5), math.log(1e3)
# c of the warm start carried over from the nested fit
_WARM_C = 4.0
MODEL_KINDS = ("ext_ku", "ku")


@dataclass(frozen=True, eq=False)
class EmpiricalCdfData:
    """Empirical CDF points, stored sorted by ``rho``."""

    rho: np.ndarray
    f: np.ndarray
    source_label: str = ""
    lines: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float).ravel()
        f = np.asarray(self.f, dtype=float).ravel()
        lines = self.lines if self.lines is not None else tuple(range(1, rho.size + 1))
        if rho.size != f.size or len(lines) != rho.size:
            raise DataError("rho and f must have the same length")
        if rho.size < MIN_POINTS:
            raise DataError(f"need at least {MIN_POINTS} points, got {rho.size}")
        for r, v, ln in zip(rho, f, lines):
            if not (math.isfinite(r) and r > 0):
                raise DataError(f"rho must be positive and finite, got {r}", line=ln)
            if not (0.0 <= v <= 1.0):
                raise DataError(f"cdf value {v} outside [0, 1]", line=ln)
        order = np.argsort(rho, kind="stable")
        rho, f = rho[order], f[order]
        lines = tuple(lines[i] for i in order)
        drops = np.nonzero(np.diff(f) < -MONOTONE_TOL)[0]
        if drops.size:
            i = drops[0] + 1
            raise DataError(f"cdf decreases from {f[i - 1]} to {f[i]} at rho={rho[i]}",
                            line=lines[i])
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "lines", lines)

    @classmethod
    def from_points(cls, points, source_label=""):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(pts[:, 0], pts[:, 1], source_label)

    @property
    def points(self):
        return list(zip(self.rho.tolist(), self.f.tolist()))

    @property
    def n_points(self) -> int:
        return int(self.rho.size)


def load_cdf_csv(path) -> EmpiricalCdfData:
    """Read a ``rho,cdf`` CSV; ``#`` lines and blank lines are skipped.

    Raises :class:`DataError` carrying the 1-based line number of the
    offending row; a missing file raises the usual ``OSError``.
    """
    rho, f, lines = [], [], []
    header_seen = False
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            row = next(csv.reader([text]))
            if not header_seen:
                if [c.strip() for c in row] != ["rho", "cdf"]:
                    raise DataError(f"expected header 'rho,cdf', got {text!r}", line=lineno)
                header_seen = True
                continue
            if len(row) != 2:
                raise DataError(f"expected 2 fields, got {len(row)}", line=lineno)
            try:
                r, v = float(row[0]), float(row[1])
            except ValueError:
                raise DataError(f"cannot parse {text!r} as numbers", line=lineno) from None
            rho.append(r)
            f.append(v)
            lines.append(lineno)
    if not header_seen:
        raise DataError("empty file: no 'rho,cdf' header")
    return EmpiricalCdfData(np.array(rho), np.array(f), str(path), tuple(lines))


def sse(params: ExtKuParams, data: EmpiricalCdfData) -> float:
    resid = cdf_envelope(params, data.rho) - data.f
    return float(resid @ resid)


def r_squared(sse_value: float, data: EmpiricalCdfData) -> float:
    """``1 - SSE / SST``; 0 when the data are constant and not matched exactly."""
    dev = data.f - data.f.mean()
    sst = float(dev @ dev)
    if sst == 0.0:
        return 1.0 if sse_value == 0.0 else 0.0
    return 1.0 - sse_value / sst


@dataclass(frozen=True)
class FitResult:
    model_kind: str
    params: ExtKuParams
    sse: float
    r2: float
    n_points: int
    starts_used: int
    best_start_index: int
    converged: bool

    @property
    def m(self) -> float:
        """Identifiable shape ``u (1 + p) / 2``."""
        return self.params.m


def _to_params(theta, kind):
    a, b = theta[0], theta[1]
    if a > _MAX_A or b > _MAX_B:
        raise DomainError("search left the supported region")
    p = 1.0 if kind == "ku" else float(expit(theta[2]))
    return ExtKuParams(math.exp(a), math.exp(b), p)


def draw_starts(n_starts: int, seed: int) -> np.ndarray:
    """Uniform start points over the search box, one row per start."""
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in START_BOX])
    hi = np.array([b[1] for b in START_BOX])
    return lo + (hi - lo) * rng.random((n_starts, 3))


_NM = dict(max_iter=4000, tol=1e-9, ftol=1e-16, stall_iter=400)


def _local_fit(objective, x0):
    res = minimize(objective, x0, scale=0.5, **_NM)
    # restart at the optimum to shake off a collapsed simplex
    res2 = minimize(objective, res.point, scale=0.05, **_NM)
    return res2 if res2.value <= res.value else res


def fit(data: EmpiricalCdfData, model_kind: str = "ext_ku", n_starts: int = 16,
        seed: int = 0) -> FitResult:
    """Best of ``n_starts`` local least-squares fits.

    For ``ext_ku`` the best ``ku`` solution is appended as one extra start
    (index ``n_starts``) at the same ``u (1 + p)``, so the extended fit can
    never lose to the nested one.
    """
    if model_kind not in MODEL_KINDS:
        raise DomainError(f"model_kind must be one of {MODEL_KINDS}")
    if n_starts < 1:
        raise DomainError("n_starts must be >= 1")
    return _fit(data, model_kind, n_starts, seed)


def _fit(data, model_kind, n_starts, seed, nested=None):
    dim = 2 if model_kind == "ku" else 3
    starts = [s[:dim] for s in draw_starts(n_starts, seed)]
    if model_kind == "ext_ku":
        if nested is None:
            nested = _fit(data, "ku", n_starts, seed)
        p_warm = float(expit(_WARM_C))
        starts.append(np.array([math.log(nested.params.k),
                                math.log(2.0 * nested.params.u / (1.0 + p_warm)), _WARM_C]))

    def objective(theta):
        return sse(_to_params(theta, model_kind), data)

    outcomes, failures = [], []
    for i, x0 in enumerate(starts):
        try:
            res = _local_fit(objective, x0)
        except (DomainError, ArithmeticError) as exc:
            failures.append(f"start {i} at {np.round(x0, 4).tolist()}: {exc}")
            continue
        if not math.isfinite(res.value):
            failures.append(f"start {i} at {np.round(x0, 4).tolist()}: non-finite SSE")
            continue
        outcomes.append((i, res))
    if not outcomes:
        raise ConvergenceError("all fit starts failed:\n" + "\n".join(failures))

    best_value = min(r.value for _, r in outcomes)
    idx, res = next((i, r) for i, r in outcomes if r.value - best_value < TIE_TOL)
    params = _to_params(res.point, model_kind)
    value = sse(params, data)
    return FitResult(model_kind, params, value, r_squared(value, data), data.n_points,
                     len(starts), idx, bool(res.converged))


@dataclass(frozen=True)
class Comparison:
    ext_ku: FitResult
    ku: FitResult
    delta_sse: float
    delta_r2: float
    rho_grid: np.ndarray = field(repr=False)
    cdf_ext_ku: np.ndarray = field(repr=False)
    cdf_ku: np.ndarray = field(repr=False)

    @property
    def nested_dominance(self) -> bool:
        return self.ext_ku.sse <= self.ku.sse + TIE_TOL


def curve_grid(data: EmpiricalCdfData, points: int = 200) -> np.ndarray:
    return np.linspace(data.rho[0], data.rho[-1], points)


def compare(data: EmpiricalCdfData, n_starts: int = 16, seed: int = 0) -> Comparison:
    """Fit both models; ``delta_sse = sse_ku - sse_ext_ku``, ``delta_r2 = r2_ext_ku - r2_ku``."""
    ku = fit(data, "ku", n_starts, seed)
    ext = _fit(data, "ext_ku", n_starts, seed, nested=ku)
    grid = curve_grid(data)
    return Comparison(ext, ku, ku.sse - ext.sse, ext.r2 - ku.r2, grid,
                      cdf_envelope(ext.params, grid), cdf_envelope(ku.params, grid))
