"""Checks of the as-printed closed forms against corrected ones and quadrature.

Two closed forms circulate with misprints.  Each check below evaluates the
printed variant, the corrected variant and an independent quadrature, and
names the factor responsible when the printed variant disagrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import logsumexp

from . import metrics, specfun
from .errors import EkmuError
from .model import ExtKuParams, SnrContext

REL_TOL = 1e-6


@dataclass(frozen=True)
class FormCheck:
    name: str
    factor: str
    printed: float
    corrected: float
    reference: float

    @property
    def printed_rel_error(self) -> float:
        return _rel(self.printed, self.reference)

    @property
    def corrected_rel_error(self) -> float:
        return _rel(self.corrected, self.reference)

    @property
    def printed_ok(self) -> bool:
        return self.printed_rel_error <= REL_TOL

    @property
    def corrected_ok(self) -> bool:
        return self.corrected_rel_error <= REL_TOL


def _rel(x, ref):
    if not math.isfinite(x):
        return math.inf
    return abs(x - ref) / abs(ref) if ref else abs(x)


def _guard(fn):
    try:
        return float(fn())
    except (EkmuError, ArithmeticError, ValueError):
        return math.nan


def _aber_psi1(params, ctx, scheme, swap_cd, printed_y):
    a_ber, g_cap, c, d = metrics.aber_constants(params, ctx, scheme)
    ratio = a_ber / g_cap
    y = -2.0 * d * a_ber ** 2 / g_cap if printed_y else -d / (2.0 * g_cap)
    cc, dd = (c, c + 1.0) if swap_cd else (c + 1.0, c)
    psi = specfun.horn_psi1(c, c + 0.5, cc, dd, -ratio, y)
    return ratio ** c * specfun.beta(0.5, c + 0.5) / (2.0 * math.pi) * psi


def aber_checks(params: ExtKuParams, ctx: SnrContext, scheme=metrics.BPSK):
    """One check per misprinted factor of the Psi1 ABER form.

    Each printed variant reverts exactly one factor, so a failing check
    pins that factor.  Empty when the series is outside ``A_ber / G < 1``.
    """
    a_ber, g_cap, _, _ = metrics.aber_constants(params, ctx, scheme)
    if not a_ber / g_cap < 1.0:
        return []
    ref = metrics.aber_quadrature(params, ctx, scheme).value
    good = _guard(lambda: _aber_psi1(params, ctx, scheme, False, False))
    return [
        FormCheck("aber_psi1", "Psi1 lower parameters (c, d) as printed: (C, C+1) instead of (C+1, C)",
                  _guard(lambda: _aber_psi1(params, ctx, scheme, True, False)), good, ref),
        FormCheck("aber_psi1", "Psi1 y-argument as printed: -2 D A_ber^2 / G instead of -D / (2 G)",
                  _guard(lambda: _aber_psi1(params, ctx, scheme, False, True)), good, ref),
    ]


def _printed_rate(params, ctx, qos):
    n, k, gbar, a = params.n_gauss, params.k, ctx.mean_snr, qos.a_qos
    log_sum = float(logsumexp(metrics.log_tricomi_terms(params, ctx, qos))) / math.log(2.0)
    return (n / (-2.0 * a) * math.log2(2.0 * math.sqrt(gbar) / (n * (1.0 + k)))
            - (log_sum - math.log2(gbar * math.exp(0.5 * n * k))) / a)


def effective_rate_checks(params: ExtKuParams, ctx: SnrContext, qos: metrics.QosParams):
    ref = metrics.effective_rate_quadrature(params, ctx, qos)
    good = _guard(lambda: metrics.effective_rate_series(params, ctx, qos)[0])
    printed = _guard(lambda: _printed_rate(params, ctx, qos))
    return [FormCheck(
        "effective_rate", "prefactor as printed: u(1+p)/(-2A) log2(2 sqrt(gbar)/(u(1+k)(1+p))) "
        "+ log2(gbar) instead of -(1/A)(u(1+p)/2 log2 H - u k (1+p)/2 log2 e)",
        printed, good, ref)]


def discrepant_factors(checks):
    """Factors whose printed variant fails against the reference."""
    return [c.factor for c in checks if not c.printed_ok]
