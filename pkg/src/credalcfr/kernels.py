"""Special-function primitives: Beta and chi-square CDFs/quantiles, normal quantile.

Everything here is pure Python on floats so the estimators do not depend on an
external statistics package.  Quantiles are found by bracketed root finding
(bisection steps guarding Newton steps) on the corresponding CDF.
"""

from __future__ import annotations

import math

from .exceptions import DomainError

__all__ = [
    "beta_cdf",
    "beta_pdf",
    "beta_quantile",
    "gamma_p",
    "chi_square_cdf",
    "chi_square_quantile",
    "normal_cdf",
    "normal_quantile",
]

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


def _check_shape(name: str, value: float) -> None:
    if not (value > 0.0) or math.isinf(value):
        raise DomainError(f"{name} must be a finite positive number, got {value!r}")


def _check_open_prob(p: float) -> None:
    if not (0.0 < p < 1.0):
        raise DomainError(f"probability argument must lie in (0, 1), got {p!r}")


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


_STIRLING = (1.0 / 12, -1.0 / 360, 1.0 / 1260, -1.0 / 1680, 1.0 / 1188, -691.0 / 360360, 1.0 / 156)


def _stirling_correction(x: float) -> float:
    # lgamma(x) - [(x - 0.5) ln x - x + 0.5 ln(2 pi)], valid for x >= 10
    inv = 1.0 / x
    inv2 = inv * inv
    total = 0.0
    power = inv
    for coef in _STIRLING:
        total += coef * power
        power *= inv2
    return total


def _log_beta_front(a: float, b: float, x: float) -> float:
    """``log(x**a (1-x)**b / B(a, b))`` without lgamma cancellation for large shapes."""
    if min(a, b) < 10.0:
        return a * math.log(x) + b * math.log1p(-x) - _log_beta(a, b)
    total = a + b
    # log(x / (a/total)) and log((1-x) / (b/total)), through log1p near the mean
    dx = x * total - a
    la = math.log1p(dx / a) if abs(dx) < 0.5 * a else math.log(x) + math.log(total / a)
    lb = math.log1p(-dx / b) if abs(dx) < 0.5 * b else math.log1p(-x) + math.log(total / b)
    value = a * la + b * lb
    value += 0.5 * math.log(a * b / total) - 0.5 * math.log(2.0 * math.pi)
    value -= _stirling_correction(a) + _stirling_correction(b) - _stirling_correction(total)
    return value


def beta_cdf(alpha: float, beta: float, x: float) -> float:
    """Regularized incomplete beta function ``I_x(alpha, beta)``.

    Raises :class:`DomainError` for non-positive shapes or ``x`` outside [0, 1].
    """
    _check_shape("alpha", alpha)
    _check_shape("beta", beta)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x must lie in [0, 1], got {x!r}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = _log_beta_front(alpha, beta, x)
    # the fraction converges fastest below the mode-like point (a+1)/(a+b+2)
    if x < (alpha + 1.0) / (alpha + beta + 2.0):
        value = math.exp(log_front) * _beta_continued_fraction(alpha, beta, x) / alpha
    else:
        value = 1.0 - math.exp(log_front) * _beta_continued_fraction(beta, alpha, 1.0 - x) / beta
    return min(1.0, max(0.0, value))


def beta_pdf(alpha: float, beta: float, x: float) -> float:
    _check_shape("alpha", alpha)
    _check_shape("beta", beta)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x must lie in [0, 1], got {x!r}")
    if x == 0.0:
        return math.inf if alpha < 1.0 else (beta if alpha == 1.0 else 0.0)
    if x == 1.0:
        return math.inf if beta < 1.0 else (alpha if beta == 1.0 else 0.0)
    return math.exp(_log_beta_front(alpha, beta, x)) / (x * (1.0 - x))


def _invert_cdf(cdf, pdf, p: float, lo: float, hi: float, x0: float, xtol: float) -> float:
    """Safeguarded Newton on ``cdf(x) - p`` inside the bracket ``[lo, hi]``.

    ``xtol`` is relative to ``|x|`` so quantiles deep in a tail keep full precision.
    """
    x = min(max(x0, lo), hi)
    for _ in range(2000):
        f = cdf(x) - p
        if f == 0.0:
            return x
        if f > 0.0:
            hi = x
        else:
            lo = x
        dens = pdf(x)
        step_ok = False
        if dens > 0.0 and math.isfinite(dens):
            x_new = x - f / dens
            if lo < x_new < hi:
                step_ok = True
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        scale = max(abs(x_new), _TINY)
        if abs(x_new - x) <= xtol * scale or hi - lo <= xtol * scale:
            return x_new
        x = x_new
    return x


def beta_quantile(alpha: float, beta: float, p: float) -> float:
    """Inverse of :func:`beta_cdf` in its last argument.

    ``p`` must lie in (0, 1); the limit values 0 and 1 map to the ends of the support.
    """
    _check_shape("alpha", alpha)
    _check_shape("beta", beta)
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    _check_open_prob(p)
    # closed forms where one shape is 1
    if alpha == 1.0:
        return -math.expm1(math.log1p(-p) / beta)
    if beta == 1.0:
        return math.exp(math.log(p) / alpha)
    # start from the mean, or from the leading term of the tail expansion
    # I_x(a, b) ~ x^a / (a B(a, b)) when p is far out in either tail
    x0 = alpha / (alpha + beta)
    log_b = _log_beta(alpha, beta)
    if p < 1e-3:
        x0 = min(x0, math.exp((math.log(p) + math.log(alpha) + log_b) / alpha))
    elif p > 1.0 - 1e-3:
        x0 = max(x0, -math.expm1((math.log1p(-p) + math.log(beta) + log_b) / beta))
    return _invert_cdf(
        lambda x: beta_cdf(alpha, beta, x),
        lambda x: beta_pdf(alpha, beta, x),
        p,
        0.0,
        1.0,
        x0,
        1e-15,
    )


def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma function ``P(a, x)``."""
    _check_shape("a", a)
    if x < 0.0 or math.isnan(x):
        raise DomainError(f"x must be non-negative, got {x!r}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    log_front = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        ap = a
        term = total = 1.0 / a
        for _ in range(_MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _EPS:
                return min(1.0, total * math.exp(log_front))
        raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")
    # Lentz continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return max(0.0, 1.0 - math.exp(log_front) * h)
    raise ArithmeticError(f"incomplete gamma fraction did not converge (a={a}, x={x})")


def chi_square_cdf(dof: float, x: float) -> float:
    _check_shape("dof", dof)
    if x <= 0.0:
        return 0.0
    return gamma_p(0.5 * dof, 0.5 * x)


def _chi_square_pdf(dof: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    k = 0.5 * dof
    return math.exp((k - 1.0) * math.log(x) - 0.5 * x - k * math.log(2.0) - math.lgamma(k))


def chi_square_quantile(dof: float, p: float) -> float:
    """Inverse chi-square CDF with ``dof`` degrees of freedom.

    ``p == 0`` returns the infimum of the support (0).
    """
    _check_shape("dof", dof)
    if p == 0.0:
        return 0.0
    _check_open_prob(p)
    if dof == 2.0:
        return -2.0 * math.log1p(-p)
    hi = max(1.0, dof)
    while chi_square_cdf(dof, hi) < p:
        hi *= 2.0
    # Wilson-Hilferty start
    z = normal_quantile(p)
    h = 2.0 / (9.0 * dof)
    x0 = dof * max(1e-3, 1.0 - h + z * math.sqrt(h)) ** 3
    if p < 1e-3:
        # lower tail: P(k, x/2) ~ (x/2)^k / Gamma(k + 1)
        k = 0.5 * dof
        x0 = min(x0, 2.0 * math.exp((math.log(p) + math.lgamma(k + 1.0)) / k))
    return _invert_cdf(
        lambda x: chi_square_cdf(dof, x),
        lambda x: _chi_square_pdf(dof, x),
        p,
        0.0,
        hi,
        x0,
        1e-15,
    )


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# Acklam's rational approximation, refined below by Halley steps
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)


def _acklam(p: float) -> float:
    if p < 0.02425:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    if p > 1.0 - 0.02425:
        return -_acklam(1.0 - p)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
        ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    )


def normal_quantile(p: float) -> float:
    """Standard normal inverse CDF, antisymmetric about ``p = 0.5``."""
    _check_open_prob(p)
    if p > 0.5:
        return -normal_quantile(1.0 - p)
    if p == 0.5:
        return 0.0
    x = _acklam(p)
    for _ in range(2):
        e = normal_cdf(x) - p
        u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
        x = x - u / (1.0 + 0.5 * x * u)
    return x
