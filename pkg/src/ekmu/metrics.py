"""Link-level metrics on top of the fading model.

Symbol note: the ABER auxiliaries are ``A_ber = u(1+p)(1+k)``,
``G = 2 gbar g``, ``C = u(1+p)/2`` and ``D = 2 u k gbar g (1+p)``; the
effective-rate aggregate ``theta T B_c / ln 2`` is called ``a_qos``.  All SNR
values are linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import model, specfun
from .errors import ConvergenceError, DiscrepancyError, DomainError
from .model import ExtKuParams, SnrContext
from .numerics import integrate, integrate_semi_infinite

ABER_REL_TOL = 1e-6


@dataclass(frozen=True)
class ModulationScheme:
    """Coherent binary scheme, identified by its detection constant ``g``."""

    g: float
    name: str = ""

    def __post_init__(self):
        if not self.g > 0:
            raise DomainError("detection constant g must be positive")


BPSK = ModulationScheme(1.0, "BPSK")
BFSK = ModulationScheme(0.5, "BFSK")
MC_BPSK = ModulationScheme(0.715, "MC-BPSK")
SCHEMES = {"bpsk": BPSK, "bfsk": BFSK, "mc-bpsk": MC_BPSK}


@dataclass(frozen=True)
class QosParams:
    a_qos: float

    def __post_init__(self):
        if not (self.a_qos > 0 and math.isfinite(self.a_qos)):
            raise DomainError("a_qos must be positive and finite")


@dataclass(frozen=True)
class AberReport:
    value: float
    method: str
    series_admissible: bool


@dataclass(frozen=True)
class RateReport:
    value: float
    method: str
    terms: int
    fallback: bool


def amount_of_fading(params: ExtKuParams) -> float:
    k = params.k
    return 2.0 * (1.0 + 2.0 * k) / (params.n_gauss * (1.0 + k) ** 2)


def outage(params: ExtKuParams, ctx: SnrContext, psi):
    """Probability that the SNR falls below ``psi``."""
    return model.snr_cdf(params, ctx, psi)


def aber_constants(params: ExtKuParams, ctx: SnrContext, scheme: ModulationScheme):
    """``(A_ber, G, C, D)`` for the series form."""
    n, k = params.n_gauss, params.k
    g, gbar = scheme.g, ctx.mean_snr
    return n * (1.0 + k), 2.0 * gbar * g, 0.5 * n, 2.0 * params.u * k * gbar * g * (1.0 + params.p)


def aber_quadrature(params: ExtKuParams, ctx: SnrContext, scheme: ModulationScheme,
                    tol: float = 1e-12) -> AberReport:
    """``(1/pi) * int_0^{pi/2} M(g / sin^2 theta) dtheta`` by adaptive quadrature."""
    a_ber, g_cap, _, _ = aber_constants(params, ctx, scheme)

    def integrand(theta):
        s2 = np.sin(theta) ** 2
        out = np.zeros_like(theta)
        pos = s2 > 0
        out[pos] = model.mgf(params, ctx, scheme.g / s2[pos])
        return out

    res = integrate(integrand, 0.0, 0.5 * math.pi, tol, atol=0.0)
    value = min(max(res.value / math.pi, 0.0), 0.5)
    return AberReport(value, "quadrature", a_ber / g_cap < 1.0)


def aber_series(params: ExtKuParams, ctx: SnrContext, scheme: ModulationScheme,
                verify: bool = False) -> AberReport:
    """ABER from the Horn Psi1 closed form, valid for ``A_ber / G < 1``.

    Outside that region the quadrature value is returned with
    ``series_admissible=False``.  With ``verify=True`` the series is checked
    against quadrature and a :class:`DiscrepancyError` raised on mismatch.
    """
    a_ber, g_cap, c, d = aber_constants(params, ctx, scheme)
    ratio = a_ber / g_cap
    if not ratio < 1.0:
        rep = aber_quadrature(params, ctx, scheme)
        return AberReport(rep.value, "quadrature", False)
    # row parameters (b, c) pair with x = -A/G, column parameter d with
    # y = -D / (2G) = -u k (1+p) / 2
    psi = specfun.horn_psi1(c, c + 0.5, c + 1.0, c, -ratio, -d / (2.0 * g_cap))
    value = ratio ** c * specfun.beta(0.5, c + 0.5) / (2.0 * math.pi) * psi
    if verify:
        ref = aber_quadrature(params, ctx, scheme).value
        if abs(value - ref) > ABER_REL_TOL * abs(ref):
            raise DiscrepancyError(
                f"Psi1 series ABER {value:.12g} disagrees with quadrature "
                f"{ref:.12g} (rel {abs(value - ref) / ref:.2e})")
    return AberReport(min(max(value, 0.0), 0.5), "series", True)


def aber(params: ExtKuParams, ctx: SnrContext, scheme: ModulationScheme = BPSK,
         method: str = "auto") -> AberReport:
    if method == "quadrature":
        return aber_quadrature(params, ctx, scheme)
    if method in ("series", "auto"):
        return aber_series(params, ctx, scheme)
    raise DomainError(f"unknown ABER method {method!r}")


# -- effective rate ----------------------------------------------------------


def effective_rate_constants(params: ExtKuParams, ctx: SnrContext):
    """``(E, F, H)`` of the Tricomi-U series."""
    n, k, gbar = params.n_gauss, params.k, ctx.mean_snr
    h = (k + 1.0) * n / (2.0 * gbar)
    e = k * (1.0 + k) * n * n / (4.0 * gbar)
    return e, 0.5 * n, h


def log_tricomi_terms(params: ExtKuParams, ctx: SnrContext, qos: QosParams,
                      rel_tol: float = 1e-14, max_terms: int = 10_000):
    """Logs of ``a_m = E^m / m! * U(m + F; m + 1 - A + F; H)`` up to truncation."""
    e, f, h = effective_rate_constants(params, ctx)
    a = qos.a_qos
    mode = 0.5 * params.n_gauss * params.k
    logs = []
    streak = 0
    for m in range(max_terms):
        log_em = 0.0 if m == 0 else (m * math.log(e) if e > 0 else -math.inf)
        if log_em == -math.inf:
            break
        la = log_em - math.lgamma(m + 1.0) + specfun.log_tricomi_u(m + f, m + f + 1.0 - a, h)
        logs.append(la)
        partial = logsumexp(logs)
        if la < math.log(rel_tol) + partial and m > mode:
            streak += 1
            if streak >= 3:
                break
        else:
            streak = 0
    else:
        raise ConvergenceError("effective-rate series did not converge",
                               estimate=float(logsumexp(logs)))
    return np.array(logs)


def _rate_from_log_mean(log_mean, a_qos):
    # R = -(1/A) log2 E[(1 + gamma)^-A]
    return -log_mean / (a_qos * math.log(2.0))


def effective_rate_series(params: ExtKuParams, ctx: SnrContext, qos: QosParams):
    """Series route; returns ``(rate, n_terms)``."""
    _, f, h = effective_rate_constants(params, ctx)
    logs = log_tricomi_terms(params, ctx, qos)
    log_mean = -0.5 * params.n_gauss * params.k + f * math.log(h) + float(logsumexp(logs))
    return _rate_from_log_mean(log_mean, qos.a_qos), len(logs)


def effective_rate_quadrature(params: ExtKuParams, ctx: SnrContext, qos: QosParams,
                              tol: float = 1e-12) -> float:
    """Direct quadrature of ``E[(1 + gamma)^-A]``."""
    a = qos.a_qos

    def integrand(g):
        with np.errstate(divide="ignore"):
            return np.exp(-a * np.log1p(g)) * model.snr_pdf(params, ctx, g)

    scale = min(ctx.mean_snr, max(params.m, 1.0) / a)
    res = integrate_semi_infinite(integrand, 0.0, tol, atol=0.0, scale=scale)
    return _rate_from_log_mean(math.log(res.value), a)


def effective_rate_report(params: ExtKuParams, ctx: SnrContext, qos: QosParams,
                          method: str = "auto") -> RateReport:
    if method == "quadrature":
        return RateReport(effective_rate_quadrature(params, ctx, qos), "quadrature", 0, False)
    if method not in ("auto", "series"):
        raise DomainError(f"unknown effective-rate method {method!r}")
    try:
        value, terms = effective_rate_series(params, ctx, qos)
    except (ConvergenceError, DomainError, OverflowError):
        if method == "series":
            raise
        return RateReport(effective_rate_quadrature(params, ctx, qos), "quadrature", 0, True)
    return RateReport(value, "series", terms, False)


def effective_rate(params: ExtKuParams, ctx: SnrContext, qos: QosParams,
                   method: str = "auto") -> float:
    """Effective rate in bit/s/Hz under the QoS aggregate ``a_qos``."""
    return effective_rate_report(params, ctx, qos, method).value
