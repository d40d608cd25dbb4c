"""Special functions behind the closed forms of the fading model.

Scalar functions return Python floats.  :func:`marcum_q`,
:func:`marcum_q_complement` and :func:`bessel_i_scaled` also accept numpy
arrays for the last argument, since the distribution functions evaluate
them on whole grids at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import ConvergenceError, DomainError
from .numerics import integrate_semi_infinite

# rescaling threshold for series whose terms can exceed the float range
_BIG = 1e200
_LOG_BIG = math.log(_BIG)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for the hypergeometric-type series.

    A series stops once three consecutive terms are below
    ``rel_tol * |partial sum|`` (after the terms have started to decay).
    """

    rel_tol: float = 1e-14
    max_terms: int = 10**6

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if self.max_terms < 1:
            raise DomainError("max_terms must be at least 1")


DEFAULT_SERIES = SeriesControl()


def _is_nonpositive_int(x):
    return x <= 0 and float(x).is_integer()


def _scalar_out(x):
    return float(x) if np.ndim(x) == 0 else x


def ln_gamma(x):
    """Natural log of the gamma function for ``x > 0``."""
    if np.any(np.asarray(x) <= 0):
        raise DomainError(f"ln_gamma needs x > 0, got {x}")
    if np.ndim(x) == 0:
        return math.lgamma(float(x))
    return _sp.gammaln(x)


def regularized_gamma_q(s, x):
    """Upper regularized incomplete gamma Q(s, x) = Gamma(s, x) / Gamma(s)."""
    if not s > 0 or np.any(np.asarray(x) < 0):
        raise DomainError(f"regularized_gamma_q needs s > 0, x >= 0 (s={s})")
    return _scalar_out(_sp.gammaincc(s, x))


def regularized_gamma_p(s, x):
    """Lower regularized incomplete gamma P(s, x) = 1 - Q(s, x)."""
    if not s > 0 or np.any(np.asarray(x) < 0):
        raise DomainError(f"regularized_gamma_p needs s > 0, x >= 0 (s={s})")
    return _scalar_out(_sp.gammainc(s, x))


def pochhammer(x, n):
    """Rising factorial (x)_n by iterated product."""
    if n < 0 or int(n) != n:
        raise DomainError("pochhammer needs a non-negative integer n")
    out = 1.0
    for i in range(int(n)):
        out *= x + i
    return out


def beta(x, y):
    if not (x > 0 and y > 0):
        raise DomainError(f"beta needs x, y > 0, got ({x}, {y})")
    return math.exp(ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y))


def bessel_i_scaled(nu, x):
    """``exp(-x) * I_nu(x)`` for real order ``nu > -1`` and ``x >= 0``."""
    if not nu > -1:
        raise DomainError(f"bessel order must exceed -1, got {nu}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("bessel_i_scaled needs x >= 0")
    return _scalar_out(_sp.ive(nu, x))


# -- Marcum Q ---------------------------------------------------------------

_MARCUM_CHUNK = 1 << 16


def _poisson_log_weights(lam, n_terms):
    n = np.arange(n_terms, dtype=float)
    if lam == 0.0:
        w = np.full(n_terms, -np.inf)
        w[0] = 0.0
        return w
    return -lam + n * math.log(lam) - _sp.gammaln(n + 1.0)


def _incgamma_ladder(order, xs, n_terms, upper):
    """Rows ``Q(order + n, xs)`` (or ``P``) for ``n < n_terms``.

    Uses ``Q(s+1, x) = Q(s, x) + x^s e^-x / Gamma(s+1)`` upward for Q and the
    same identity downward for P, so every step adds a positive quantity.
    """
    rows = np.empty((n_terms, xs.size))
    with np.errstate(divide="ignore"):
        log_x = np.log(xs)
    orders = order + np.arange(n_terms, dtype=float)
    lg = _sp.gammaln(orders + 1.0)
    with np.errstate(invalid="ignore"):
        if upper:
            rows[0] = _sp.gammaincc(order, xs)
            for n in range(1, n_terms):
                s = orders[n - 1]
                rows[n] = rows[n - 1] + np.exp(s * log_x - xs - lg[n - 1])
        else:
            rows[-1] = _sp.gammainc(orders[-1], xs)
            for n in range(n_terms - 2, -1, -1):
                rows[n] = rows[n + 1] + np.exp(orders[n] * log_x - xs - lg[n])
    return np.clip(rows, 0.0, 1.0)


def _marcum_series(order, a, b, upper, ctl):
    if not order > 0:
        raise DomainError(f"Marcum Q order must be positive, got {order}")
    if a < 0:
        raise DomainError("Marcum Q needs a >= 0")
    b = np.asarray(b, dtype=float)
    if np.any(b < 0):
        raise DomainError("Marcum Q needs b >= 0")
    lam = 0.5 * a * a
    x = 0.5 * b.ravel() * b.ravel()

    n_terms = int(min(ctl.max_terms, math.ceil(lam + 12.0 * math.sqrt(lam) + 40)))
    while True:
        weights = np.exp(_poisson_log_weights(lam, n_terms))
        out = np.empty_like(x)
        tails_ok = True
        for start in range(0, x.size, _MARCUM_CHUNK):
            xs = x[start:start + _MARCUM_CHUNK]
            terms = weights[:, None] * _incgamma_ladder(order, xs, n_terms, upper)
            total = terms.sum(axis=0)
            out[start:start + _MARCUM_CHUNK] = total
            if np.any(terms[-3:] > ctl.rel_tol * total[None, :]):
                tails_ok = False
        # the terms only decay once past the Poisson mode
        if tails_ok and n_terms - 3 > lam:
            break
        if n_terms >= ctl.max_terms:
            raise ConvergenceError("Marcum Q series did not converge",
                                   estimate=_scalar_out(out.reshape(b.shape)))
        n_terms = min(ctl.max_terms, 2 * n_terms)
    # Q_M(a, 0) = 1 exactly; the truncated Poisson weights miss it by ulps
    out[x == 0.0] = 1.0 if upper else 0.0
    out = np.clip(out, 0.0, 1.0).reshape(b.shape)
    return _scalar_out(out)


def marcum_q(order, a, b, ctl=DEFAULT_SERIES):
    """Generalized Marcum Q function of real order ``order > 0``.

    Summed as the Poisson mixture ``sum_n w_n Q(order + n, b^2/2)`` with
    ``w_n = exp(-a^2/2) (a^2/2)^n / n!``.
    """
    return _marcum_series(order, a, b, True, ctl)


def marcum_q_complement(order, a, b, ctl=DEFAULT_SERIES):
    """``1 - Q_order(a, b)`` summed directly, without the cancellation."""
    return _marcum_series(order, a, b, False, ctl)


# -- confluent and Gauss hypergeometric series ------------------------------


def _log_hyp_series(ratio, ctl, name):
    """Sum ``1 + t1 + t2 + ...`` with ``t_{N+1} = t_N * ratio(N)``.

    Returns ``(log|S|, sign(S))``.  Partial sums are rescaled whenever they
    grow past 1e200 so arguments of several thousand do not overflow.
    """
    total = 1.0
    term = 1.0
    log_scale = 0.0
    streak = 0
    for n in range(ctl.max_terms):
        r = ratio(n)
        if r == 0.0:
            break
        term *= r
        total += term
        if abs(total) > _BIG:
            total /= _BIG
            term /= _BIG
            log_scale += _LOG_BIG
        if abs(term) < ctl.rel_tol * abs(total) and abs(ratio(n + 1)) < 1.0:
            streak += 1
            if streak >= 3:
                break
        else:
            streak = 0
    else:
        raise ConvergenceError(f"{name} series did not converge in "
                               f"{ctl.max_terms} terms")
    if total == 0.0:
        return -math.inf, 0.0
    return log_scale + math.log(abs(total)), math.copysign(1.0, total)


def _log_kummer_direct(a, b, z, ctl):
    return _log_hyp_series(lambda n: (a + n) / (b + n) * z / (n + 1), ctl,
                           "1F1")


def _log_kummer(a, b, z, ctl):
    """``(log|1F1|, sign)`` choosing the form whose series has no
    sign-alternation coming from a negative argument."""
    if _is_nonpositive_int(b):
        raise DomainError("1F1 is undefined for non-positive integer b")
    if z == 0.0 or a == 0.0:
        return 0.0, 1.0
    if z < 0 and not _is_nonpositive_int(a):
        log_s, sign = _log_kummer_direct(b - a, b, -z, ctl)
        return log_s + z, sign
    return _log_kummer_direct(a, b, z, ctl)


def kummer_1f1(a, b, z, ctl=DEFAULT_SERIES):
    """Kummer confluent hypergeometric function 1F1(a; b; z).

    For ``z < 0`` and ``a > b`` the function has real zeros and the series
    cancels; accuracy there is absolute, relative to the sum of |terms|.
    """
    if a == b:
        return math.exp(z)
    log_s, sign = _log_kummer(a, b, z, ctl)
    return sign * math.exp(log_s)


def kummer_1f1_scaled(a, b, z, ctl=DEFAULT_SERIES):
    """``exp(-z) * 1F1(a; b; z)``, finite where 1F1 alone overflows."""
    if a == b:
        return 1.0
    log_s, sign = _log_kummer(a, b, z, ctl)
    return sign * math.exp(log_s - z)


def log_kummer_1f1(a, b, z, ctl=DEFAULT_SERIES):
    """Natural log of 1F1(a; b; z); the function must be positive."""
    if a == b:
        return float(z)
    log_s, sign = _log_kummer(a, b, z, ctl)
    if sign <= 0:
        raise DomainError("1F1 is not positive here; log undefined")
    return log_s


def gauss_2f1(a, b, c, z, ctl=DEFAULT_SERIES):
    """Gauss hypergeometric 2F1(a, b; c; z) for ``|z| < 1``.

    Negative arguments go through the Pfaff transformation, which maps
    ``(-1, 0)`` into ``(0, 1/2)``.
    """
    if not abs(z) < 1:
        raise DomainError("2F1 series needs |z| < 1; use quadrature instead")
    if _is_nonpositive_int(c):
        raise DomainError("2F1 is undefined for non-positive integer c")
    if z == 0.0:
        return 1.0
    if z < 0 and not (_is_nonpositive_int(a) or _is_nonpositive_int(b)):
        w = z / (z - 1.0)
        log_s, sign = _log_hyp_series(
            lambda n: (a + n) * (c - b + n) / ((c + n) * (n + 1)) * w, ctl, "2F1")
        return sign * math.exp(log_s - a * math.log1p(-z))
    log_s, sign = _log_hyp_series(
        lambda n: (a + n) * (b + n) / ((c + n) * (n + 1)) * z, ctl, "2F1")
    return sign * math.exp(log_s)


# -- Tricomi U ---------------------------------------------------------------


def log_tricomi_u(a, b, z, tol=1e-12):
    """Natural log of U(a; b; z) from its Laplace-type integral.

    The integrand ``t^(a-1) (1+t)^(b-a-1) exp(-z t)`` is divided by its
    peak value before integrating, so the quadrature works on an O(1)
    quantity whatever the magnitude of U.
    """
    if not (a > 0 and z > 0):
        raise DomainError(f"tricomi_u needs a > 0 and z > 0, got a={a}, z={z}")
    p1 = a - 1.0
    p2 = b - a - 1.0

    def log_g(t):
        return p1 * np.log(t) + p2 * np.log1p(t) - z * t

    # stationary points solve z t^2 - (b - 2 - z) t - (a - 1) = 0
    lin = b - 2.0 - z
    disc = lin * lin + 4.0 * z * p1
    root = (lin + math.sqrt(disc)) / (2.0 * z) if disc >= 0 else -1.0
    if root > 0:
        log_peak = float(log_g(root))
        if p1 < 0:
            log_peak = max(log_peak, 0.0)
        width = root
    else:
        # monotone decreasing from t = 0
        log_peak = 0.0
        width = 1.0 / (z + max(-p2, 0.0))

    def integrand(t):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            v = np.exp(log_g(t) - log_peak)
        return np.where(t > 0, v, 0.0)

    res = integrate_semi_infinite(integrand, 0.0, tol, atol=0.0, scale=width)
    if not res.value > 0:
        raise ConvergenceError("Tricomi U quadrature returned a non-positive "
                               "value", estimate=res.value)
    return log_peak + math.log(res.value) - math.lgamma(a)


def tricomi_u(a, b, z, tol=1e-12):
    """Tricomi confluent hypergeometric U(a; b; z) for ``a > 0, z > 0``."""
    return math.exp(log_tricomi_u(a, b, z, tol))


# -- Horn Psi1 ---------------------------------------------------------------


def horn_psi1(a, b, c, d, x, y, ctl=DEFAULT_SERIES):
    """Horn's confluent double series

        Psi1(a, b; c, d; x, y) = sum_{k,l} (a)_{k+l} (b)_k / ((c)_k (d)_l)
                                        x^k / k!  y^l / l!

    for ``|x| < 1``.  The inner sum over ``l`` collapses to
    ``(a)_k 1F1(a + k; d; y)``, so the double series is summed row by row.
    Row values come from the contiguous recurrence in the first parameter of
    1F1, seeded with two direct evaluations; summing the raw double series
    for large negative ``y`` loses most significant digits.
    """
    if not abs(x) < 1:
        raise DomainError("Psi1 needs |x| < 1")
    if _is_nonpositive_int(c) or _is_nonpositive_int(d):
        raise DomainError("Psi1 is undefined for non-positive integer c or d")
    if x == 0.0:
        return kummer_1f1(a, d, y, ctl)
    if y == 0.0:
        return gauss_2f1(a, b, c, x, ctl)

    if _is_nonpositive_int(a):
        return _horn_psi1_terminating(a, b, c, d, x, y)

    m_cur = kummer_1f1(a, d, y, ctl)
    m_next = kummer_1f1(a + 1.0, d, y, ctl)
    total = 0.0
    coeff = 1.0
    streak = 0
    for k in range(ctl.max_terms):
        row = coeff * m_cur
        total += row
        ratio = (a + k) * (b + k) / ((c + k) * (k + 1)) * x
        if ratio == 0.0:
            return total
        if abs(row) < ctl.rel_tol * abs(total) and abs(ratio) < 1.0:
            streak += 1
            if streak >= 3:
                return total
        else:
            streak = 0
        coeff *= ratio
        a1 = a + k + 1.0
        # (d-a) M(a-1) + (2a-d+y) M(a) - a M(a+1) = 0, stepped forward in a
        m_cur, m_next = m_next, ((2.0 * a1 - d + y) * m_next + (d - a1) * m_cur) / a1
    raise ConvergenceError("Psi1 series did not converge", estimate=total)


def _horn_psi1_terminating(a, b, c, d, x, y):
    n = int(-a)
    total = 0.0
    for k in range(n + 1):
        for l in range(n + 1 - k):
            total += (pochhammer(a, k + l) * pochhammer(b, k)
                      / (pochhammer(c, k) * pochhammer(d, l))
                      * x**k / math.factorial(k) * y**l / math.factorial(l))
    return total
