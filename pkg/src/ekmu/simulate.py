"""Monte Carlo envelope samples drawn from the physical cluster model.

Each sample ``i`` reads its Gaussians from its own block of a Philox
counter stream (key = seed, counter = i * blocks_per_sample), so a sample
set is bitwise identical however the work is chunked or threaded.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import ExtKuParams

_INT_TOL = 1e-9
_CHUNK = 1 << 16
_TWO_PI = 2.0 * math.pi
_U53 = 2.0 ** -53


@dataclass(frozen=True)
class ClusterConfig:
    """Integer cluster layout of the envelope model.

    ``dominant`` holds the line-of-sight means ``(w_1..w_n1, q_1..q_n2)``;
    when omitted the total amplitude ``d`` is split equally.
    """

    n_inphase: int
    n_quadrature: int
    k: float
    sigma2: float
    d: float
    dominant: tuple | None = None

    def __post_init__(self):
        if self.n_inphase < 1 or self.n_quadrature < 0:
            raise DomainError("need n_inphase >= 1 and n_quadrature >= 0")
        if self.n_quadrature > self.n_inphase:
            raise DomainError("n_quadrature may not exceed n_inphase (p <= 1)")
        if self.k < 0 or self.d < 0 or not self.sigma2 > 0:
            raise DomainError("need k >= 0, d >= 0, sigma2 > 0")
        total = self.n_branches
        if not math.isclose(self.sigma2, 1.0 / (total * (1.0 + self.k)), rel_tol=1e-12):
            raise DomainError("sigma2 must equal 1 / ((n1 + n2)(1 + k))")
        if not math.isclose(self.d * self.d, self.k / (1.0 + self.k), rel_tol=1e-12, abs_tol=1e-15):
            raise DomainError("d^2 must equal k / (1 + k)")
        if self.dominant is not None:
            dom = np.asarray(self.dominant, dtype=float)
            if dom.shape != (total,):
                raise DomainError(f"dominant needs {total} entries")
            if not math.isclose(float(dom @ dom), self.d * self.d, rel_tol=1e-9, abs_tol=1e-15):
                raise DomainError("dominant means must have squared sum d^2")

    @classmethod
    def from_counts(cls, n_inphase, n_quadrature, k, dominant=None):
        total = n_inphase + n_quadrature
        return cls(n_inphase, n_quadrature, float(k), 1.0 / (total * (1.0 + k)),
                   math.sqrt(k / (1.0 + k)), None if dominant is None else tuple(dominant))

    @property
    def n_branches(self) -> int:
        return self.n_inphase + self.n_quadrature

    @property
    def p(self) -> float:
        return self.n_quadrature / self.n_inphase

    def means(self) -> np.ndarray:
        if self.dominant is not None:
            return np.asarray(self.dominant, dtype=float)
        return np.full(self.n_branches, self.d / math.sqrt(self.n_branches))

    def with_dominant(self, dominant):
        return ClusterConfig(self.n_inphase, self.n_quadrature, self.k, self.sigma2,
                             self.d, tuple(float(v) for v in dominant))


@dataclass(frozen=True, eq=False)
class SampleSet:
    values: np.ndarray
    seed: int
    count: int

    def __post_init__(self):
        if self.values.ndim != 1 or self.values.size != self.count:
            raise DomainError("count must match the number of values")


def config_from_params(params: ExtKuParams) -> ClusterConfig:
    """Integer configuration ``(u, u p)`` for a parameter triple."""
    n1 = round(params.u)
    n2 = round(params.u * params.p)
    if abs(params.u - n1) > _INT_TOL or n1 < 1:
        raise DomainError(
            f"Monte Carlo needs integer u, got {params.u}; "
            f"use the nearest integer configuration (u={max(n1, 1)})")
    if abs(params.u * params.p - n2) > _INT_TOL:
        raise DomainError(
            f"Monte Carlo needs integer u*p, got {params.u * params.p}; "
            f"use the nearest integer configuration (u*p={n2}, p={n2 / n1:g})")
    return ClusterConfig.from_counts(n1, n2, params.k)


def _blocks_per_sample(n_branches):
    # one Philox block = 4 words = 4 normals through paired Box-Muller
    return -(-n_branches // 4)


def _draw_chunk(config, seed, start, stop):
    g = config.n_branches
    bps = _blocks_per_sample(g)
    count = stop - start
    gen = np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, seed >> 64],
                           counter=start * bps)
    raw = gen.random_raw(count * bps * 4).reshape(count, bps * 2, 2)
    u1 = ((raw[..., 0] >> np.uint64(11)).astype(float) + 1.0) * _U53
    u2 = (raw[..., 1] >> np.uint64(11)).astype(float) * _U53
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = _TWO_PI * u2
    normals = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=-1)
    normals = normals.reshape(count, bps * 4)[:, :g]
    shifted = math.sqrt(config.sigma2) * normals + config.means()
    return np.sqrt(np.einsum("ij,ij->i", shifted, shifted))


def sample_envelope(config: ClusterConfig, n: int, seed: int = 0, workers: int = 1) -> SampleSet:
    """Draw ``n`` normalized envelopes ``sqrt(sum (X_i + w_i)^2 + sum (Y_i + q_i)^2)``."""
    if n < 1:
        raise DomainError("need at least one sample")
    if seed < 0 or seed >= 1 << 128:
        raise DomainError("seed must be a non-negative integer below 2**128")
    bounds = [(s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _draw_chunk(config, seed, *b), bounds))
    else:
        parts = [_draw_chunk(config, seed, *b) for b in bounds]
    values = np.sort(np.concatenate(parts))
    return SampleSet(values, int(seed), int(n))


def empirical_cdf(samples: SampleSet, rho):
    """Right-continuous empirical CDF: fraction of samples ``<= rho``."""
    if samples.count == 0:
        raise DomainError("empty sample set")
    idx = np.searchsorted(samples.values, rho, side="right")
    return idx / samples.count if np.ndim(rho) else float(idx) / samples.count


def ks_distance(samples: SampleSet, cdf) -> float:
    """Kolmogorov-Smirnov distance between the samples and ``cdf``.

    ``cdf`` is called once with the whole sorted sample array.
    """
    n = samples.count
    f = np.asarray(cdf(samples.values), dtype=float)
    f = np.broadcast_to(f, samples.values.shape)
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(i / n - f)), np.max(np.abs((i - 1) / n - f))))


def dkw_threshold(n: int, alpha: float = 1e-3) -> float:
    """Dvoretzky-Kiefer-Wolfowitz bound on the KS distance at level ``alpha``."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))
