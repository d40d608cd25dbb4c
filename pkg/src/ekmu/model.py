"""The extended k-u envelope distribution.

The envelope is ``R^2 = sum_{i<=u} (X_i + w_i)^2 + sum_{i<=u p} (Y_i + q_i)^2``
with zero-mean Gaussians of variance ``sigma^2``; everything here is for the
normalized envelope ``P = R / sqrt(E[R^2])``.  Note that ``u`` and ``p``
only ever enter through the total Gaussian count ``u (1 + p)``, so the
family is indexed by ``k`` and ``m = u (1 + p) / 2``.

Densities are assembled in log space and exponentiated last: the Bessel
argument ``sqrt(k (1+k)) u (1+p) rho`` passes 700 well inside the support
for strong line-of-sight channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import specfun
from .errors import DomainError

# below this k the direct prefactor is a 0 * inf form; the Nakagami-m limit
# is used instead
K_MIN = 1e-8


@dataclass(frozen=True)
class ExtKuParams:
    """Model triple: power ratio ``k``, cluster number ``u``, imbalance ``p``."""

    k: float
    u: float
    p: float

    def __post_init__(self):
        for name in ("k", "u", "p"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.k < 0:
            raise DomainError(f"k must be >= 0, got {self.k}")
        if not self.u > 0:
            raise DomainError(f"u must be > 0, got {self.u}")
        if not 0 <= self.p <= 1:
            raise DomainError(f"p must lie in [0, 1], got {self.p}")

    @property
    def n_gauss(self) -> float:
        """Total Gaussian count ``u (1 + p)``."""
        return self.u * (1.0 + self.p)

    @property
    def m(self) -> float:
        """``u (1 + p) / 2``: Marcum-Q order and Nakagami-equivalent shape."""
        return 0.5 * self.n_gauss

    @property
    def nu(self) -> float:
        """Order of the Bessel function in the density, ``m - 1``."""
        return self.m - 1.0


@dataclass(frozen=True)
class SnrContext:
    """Mean SNR, linear scale."""

    mean_snr: float

    def __post_init__(self):
        if not (self.mean_snr > 0 and math.isfinite(self.mean_snr)):
            raise DomainError(f"mean SNR must be positive and finite, got {self.mean_snr}")


class NormalizationConstants(NamedTuple):
    log_prefactor: float
    exp_rate: float
    power_exponent: float
    bessel_coeff: float


def normalization_constants(params: ExtKuParams) -> NormalizationConstants:
    n, k = params.n_gauss, params.k
    if k < K_MIN:
        # Nakagami-m: 2 m^m rho^(2m-1) exp(-m rho^2) / Gamma(m)
        m = params.m
        return NormalizationConstants(
            math.log(2.0) + m * math.log(m) - math.lgamma(m), m, 2.0 * m - 1.0, 0.0)
    log_pref = (math.log(n) + 0.25 * (n + 2.0) * math.log1p(k)
                - 0.25 * (n - 2.0) * math.log(k) - 0.5 * n * k)
    return NormalizationConstants(
        log_pref, 0.5 * (1.0 + k) * n, 0.5 * n, math.sqrt(k * (1.0 + k)) * n)


def _as_array(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError(f"{name} contains NaN")
    if np.any(arr < 0):
        raise DomainError(f"{name} must be non-negative")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def _log_origin_coeff(params, c):
    """``L0`` with ``log f_P(rho) ~ L0 + (2m - 1) log(rho)`` as rho -> 0."""
    if c.bessel_coeff == 0.0:
        return c.log_prefactor
    nu = params.nu
    return c.log_prefactor + nu * math.log(0.5 * c.bessel_coeff) - math.lgamma(nu + 1.0)


def log_pdf_envelope(params: ExtKuParams, rho):
    """Natural log of the normalized-envelope density."""
    rho = _as_array(rho, "rho")
    c = normalization_constants(params)
    flat = np.atleast_1d(rho)
    out = np.empty_like(flat)
    pos = flat > 0
    r = flat[pos]
    with np.errstate(divide="ignore"):
        if c.bessel_coeff == 0.0:
            out[pos] = c.log_prefactor + c.power_exponent * np.log(r) - c.exp_rate * r * r
        else:
            x = c.bessel_coeff * r
            out[pos] = (c.log_prefactor + c.power_exponent * np.log(r)
                        - c.exp_rate * r * r + x
                        + np.log(specfun.bessel_i_scaled(params.nu, x)))
    if np.any(~pos):
        out[~pos] = _log_at_origin(_log_origin_coeff(params, c), 2.0 * params.m - 1.0)
    return _out(out.reshape(rho.shape), rho)


def _log_at_origin(l0, power):
    if math.isclose(power, 0.0, abs_tol=1e-15):
        return l0
    return -math.inf if power > 0 else math.inf


def pdf_envelope(params: ExtKuParams, rho):
    """Density of the normalized envelope ``P = R / r_hat``."""
    with np.errstate(over="ignore"):
        return _out(np.exp(log_pdf_envelope(params, rho)), rho)


def cdf_envelope(params: ExtKuParams, rho):
    """``F_P(rho) = 1 - Q_m(sqrt(2 m k), sqrt(2 m (1 + k)) rho)``.

    The complement of the Marcum function is summed directly so small
    probabilities keep their relative accuracy.
    """
    rho = _as_array(rho, "rho")
    n, k = params.n_gauss, params.k
    b = math.sqrt(n * (1.0 + k)) * rho
    val = specfun.marcum_q_complement(params.m, math.sqrt(n * k), b)
    return _out(np.asarray(val), rho)


def sf_envelope(params: ExtKuParams, rho):
    """Survival function ``1 - F_P(rho) = Q_m(sqrt(2 m k), sqrt(2 m (1 + k)) rho)``.

    Keeps relative accuracy in the upper tail, where ``cdf_envelope`` has
    rounded to 1.
    """
    rho = _as_array(rho, "rho")
    n, k = params.n_gauss, params.k
    b = math.sqrt(n * (1.0 + k)) * rho
    return _out(np.asarray(specfun.marcum_q(params.m, math.sqrt(n * k), b)), rho)


def moment(params: ExtKuParams, j: float) -> float:
    """``E[P^j]`` for real order ``j > -u (1 + p)``.

    The ``exp(-m k)`` prefactor is folded into the confluent function so the
    result stays finite when ``m k`` is in the hundreds.
    """
    n, k, m = params.n_gauss, params.k, params.m
    if not j > -n:
        raise DomainError(f"moment order must exceed -u(1+p) = {-n}")
    z = m * k
    a = m + 0.5 * j
    log_val = (math.lgamma(a) - math.lgamma(m) - 0.5 * j * math.log(m * (1.0 + k))
               + specfun.log_kummer_1f1(a, m, z) - z)
    return math.exp(log_val)


def _check_snr(ctx):
    if not isinstance(ctx, SnrContext):
        raise DomainError("expected an SnrContext")
    return ctx.mean_snr


def snr_pdf(params: ExtKuParams, ctx: SnrContext, gamma):
    """Density of the instantaneous SNR ``gamma_bar * P^2``."""
    gbar = _check_snr(ctx)
    g = _as_array(gamma, "gamma")
    flat = np.atleast_1d(g)
    out = np.empty_like(flat)
    pos = flat > 0
    rho = np.sqrt(flat[pos] / gbar)
    with np.errstate(over="ignore"):
        out[pos] = np.exp(np.atleast_1d(log_pdf_envelope(params, rho))
                          - math.log(2.0) - 0.5 * np.log(flat[pos] * gbar))
        if np.any(~pos):
            c = normalization_constants(params)
            # f_P(rho) / (2 gbar rho) behaves like rho^(2m - 2)
            l0 = _log_origin_coeff(params, c) - math.log(2.0 * gbar)
            out[~pos] = np.exp(_log_at_origin(l0, 2.0 * params.m - 2.0))
    return _out(out.reshape(g.shape), g)


def snr_cdf(params: ExtKuParams, ctx: SnrContext, psi):
    """``P(gamma < psi)``; the same code path as :func:`cdf_envelope`."""
    gbar = _check_snr(ctx)
    psi = _as_array(psi, "psi")
    return cdf_envelope(params, np.sqrt(psi / gbar) if np.ndim(psi) else math.sqrt(float(psi) / gbar))


def mgf(params: ExtKuParams, ctx: SnrContext, t):
    """``E[exp(-t gamma)]`` for ``t >= 0``."""
    gbar = _check_snr(ctx)
    t = _as_array(t, "t")
    n, k = params.n_gauss, params.k
    s = 2.0 * gbar * t
    a_ber = n * (1.0 + k)
    val = np.exp(-n * k * gbar * t / (a_ber + s) - params.m * np.log1p(s / a_ber))
    return _out(val, t)
