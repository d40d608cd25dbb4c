import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sq

from ekmu import metrics
from ekmu.errors import DiscrepancyError, DomainError
from ekmu.model import ExtKuParams, SnrContext, snr_pdf


def test_amount_of_fading_examples():
    assert abs(metrics.amount_of_fading(ExtKuParams(0, 1, 1)) - 1) < 1e-15
    assert abs(metrics.amount_of_fading(ExtKuParams(1, 2, 1)) - 0.375) < 1e-15
    assert abs(metrics.amount_of_fading(ExtKuParams(1, 2, 0)) - 0.75) < 1e-15


def test_outage_examples():
    p = ExtKuParams(1e-12, 1, 1)
    assert abs(metrics.outage(p, SnrContext(1), 0.1) - (1 - math.exp(-0.1))) < 1e-12
    assert metrics.outage(p, SnrContext(1), 0.0) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 10), st.floats(0.3, 4), st.floats(0, 1), st.floats(0.5, 50),
       st.floats(0.01, 20), st.floats(0.01, 5))
def test_outage_increasing(k, u, p, g, psi, dpsi):
    from ekmu.model import sf_envelope
    params, ctx = ExtKuParams(k, u, p), SnrContext(g)
    lo, hi = metrics.outage(params, ctx, psi), metrics.outage(params, ctx, psi + dpsi)
    assert hi >= lo
    # strictness is visible in whichever tail keeps relative precision
    s_lo = sf_envelope(params, math.sqrt(psi / g))
    s_hi = sf_envelope(params, math.sqrt((psi + dpsi) / g))
    assert hi > lo or s_hi < s_lo or s_lo == 0.0


def test_rayleigh_bpsk():
    ref = 0.5 * (1 - math.sqrt(10 / 11))
    p, ctx = ExtKuParams(0, 1, 1), SnrContext(10)
    assert abs(metrics.aber_quadrature(p, ctx, metrics.BPSK).value - 0.0232687) < 1e-6
    rep = metrics.aber_series(p, ctx, metrics.BPSK)
    assert rep.method == "series" and rep.series_admissible
    assert abs(rep.value - ref) < 1e-12


def test_no_information_limit():
    # P_b -> 1/2 - sqrt(g gbar / pi) E[P]; at gbar = 1e-9 the gap is ~2e-5
    from ekmu.model import moment
    params = ExtKuParams(2, 1.5, 0.3)
    rep = metrics.aber_quadrature(params, SnrContext(1e-9), metrics.BPSK)
    assert abs(rep.value - 0.49998348225362998) < 1e-12
    assert abs(rep.value - (0.5 - math.sqrt(1e-9 / math.pi) * moment(params, 1))) < 1e-10
    assert abs(metrics.aber_quadrature(params, SnrContext(1e-14), metrics.BPSK).value - 0.5) < 1e-6


def test_aber_fixtures():
    # 40-digit quadrature of the MGF form
    q = metrics.aber_quadrature(ExtKuParams(3, 4, 0.5), SnrContext(10), metrics.BPSK)
    assert abs(q.value / 3.8347378741804398e-4 - 1) < 1e-10
    s = metrics.aber_series(ExtKuParams(0.5, 1, 0.5), SnrContext(20), metrics.BPSK)
    assert s.method == "series"
    assert abs(s.value / 0.021755585113471381 - 1) < 1e-10


def test_aber_inadmissible_falls_back():
    rep = metrics.aber_series(ExtKuParams(3, 4, 1), SnrContext(1), metrics.BPSK)
    assert not rep.series_admissible and rep.method == "quadrature"
    assert rep.value == metrics.aber_quadrature(ExtKuParams(3, 4, 1), SnrContext(1), metrics.BPSK).value


def test_aber_verify_mode():
    rep = metrics.aber_series(ExtKuParams(1, 1.5, 0.5), SnrContext(50), metrics.BFSK, verify=True)
    assert rep.method == "series"


def test_discrepancy_error_is_arithmetic():
    assert issubclass(DiscrepancyError, ArithmeticError)


@pytest.mark.parametrize("scheme", [metrics.BPSK, metrics.BFSK, metrics.MC_BPSK])
def test_aber_series_vs_quadrature_sweep(scheme):
    for k, u, p in [(0.5, 1, 0.5), (2, 1.5, 0.25), (6, 3, 1), (0, 0.6, 0)]:
        params = ExtKuParams(k, u, p)
        for g in [5, 20, 100, 1000]:
            ctx = SnrContext(g)
            s = metrics.aber_series(params, ctx, scheme)
            if s.series_admissible:
                q = metrics.aber_quadrature(params, ctx, scheme)
                assert abs(s.value / q.value - 1) < 1e-6


def test_aber_decreasing_in_snr_and_p():
    for k, u in [(3, 4), (1, 1), (0.2, 0.7)]:
        by_p = []
        for p in (0, 0.25, 0.5, 0.75, 1):
            params = ExtKuParams(k, u, p)
            vals = [metrics.aber(params, SnrContext(10 ** (db / 10))).value for db in range(0, 21, 2)]
            assert np.all(np.diff(vals) < 0)
            by_p.append(metrics.aber(params, SnrContext(10.0)).value)
        assert np.all(np.diff(by_p) <= 0)


def test_aber_unknown_method():
    with pytest.raises(DomainError):
        metrics.aber(ExtKuParams(1, 1, 1), SnrContext(1), method="magic")
    with pytest.raises(DomainError):
        metrics.ModulationScheme(0.0)
    with pytest.raises(DomainError):
        metrics.QosParams(-1)


def test_effective_rate_fixture():
    # defining integral at 40 digits
    r = metrics.effective_rate(ExtKuParams(1, 1, 1), SnrContext(10), metrics.QosParams(1))
    assert abs(r - 2.4589353386555633) < 1e-10


def test_effective_rate_rayleigh_closed_form():
    # Rayleigh, A = 1: E[1/(1+g)] = e^(1/gbar) E1(1/gbar) / gbar
    from scipy.special import exp1
    g = 4.0
    ref = -math.log2(math.exp(1 / g) * exp1(1 / g) / g)
    rep = metrics.effective_rate_report(ExtKuParams(0, 1, 1), SnrContext(g), metrics.QosParams(1))
    assert rep.method == "series" and rep.terms == 1
    assert abs(rep.value - ref) < 1e-11


def test_effective_rate_large_a():
    p, ctx, qos = ExtKuParams(2, 1.5, 0.5), SnrContext(10), metrics.QosParams(1e3)
    r = metrics.effective_rate(p, ctx, qos)
    q = metrics.effective_rate_quadrature(p, ctx, qos)
    assert 0 <= r <= q + 1e-6
    assert abs(r / q - 1) < 1e-5


def test_effective_rate_independent_oracle():
    # defining integral at 40 digits
    p, ctx, qos = ExtKuParams(4, 2.5, 0.2), SnrContext(30), metrics.QosParams(2.5)
    assert abs(metrics.effective_rate(p, ctx, qos) - 3.992344508645643) < 1e-11


def test_effective_rate_vs_scipy_quad():
    p, ctx, a = ExtKuParams(0.8, 1.2, 0.6), SnrContext(8), 1.5
    def f(x):
        return (1 + x) ** -a * snr_pdf(p, ctx, x)
    ref = sq.quad(f, 0, 8, epsrel=1e-12, limit=300)[0] + sq.quad(f, 8, np.inf, epsrel=1e-12, limit=300)[0]
    assert abs(metrics.effective_rate(p, ctx, metrics.QosParams(a)) + math.log2(ref) / a) < 1e-8


def test_effective_rate_falls_back_when_series_fails(monkeypatch):
    from ekmu.errors import ConvergenceError

    def broken(*args, **kwargs):
        raise ConvergenceError("forced")
    monkeypatch.setattr(metrics, "log_tricomi_terms", broken)
    rep = metrics.effective_rate_report(ExtKuParams(1, 1, 1), SnrContext(10), metrics.QosParams(1))
    assert rep.fallback and rep.method == "quadrature"
    assert abs(rep.value - 2.4589353386555633) < 1e-9
    with pytest.raises(ConvergenceError):
        metrics.effective_rate_report(ExtKuParams(1, 1, 1), SnrContext(10), metrics.QosParams(1), "series")


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 15), st.floats(0.3, 4), st.floats(0, 1), st.floats(0.1, 300), st.floats(0.05, 20))
def test_effective_rate_jensen_bound(k, u, p, g, a):
    r = metrics.effective_rate(ExtKuParams(k, u, p), SnrContext(g), metrics.QosParams(a))
    assert 0 <= r <= math.log2(1 + g) + 1e-12
