"""Two-sample t-tests with a self-contained Student-t distribution.

The t CDF goes through the regularised incomplete beta function, evaluated
with Lentz's continued fraction (after the symmetry swap that keeps the
fraction convergent).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

_FPMIN = 1e-300
_EPS = 3e-16
_MAX_ITER = 500


def _betacf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float) -> float:
    """Regularised incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    return betainc(df / 2.0, 0.5, df / (df + t * t))


def t_cdf(t: float, df: float) -> float:
    tail = 0.5 * t_sf_two_sided(t, df)
    return 1.0 - tail if t >= 0 else tail


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: float
    significant: bool
    flags: tuple[str, ...] = ()


def _mean_var(xs: Sequence[float]) -> tuple[float, float]:
    n = len(xs)
    m = math.fsum(xs) / n
    return m, math.fsum((x - m) ** 2 for x in xs) / (n - 1)


def _check(a: Sequence[float], b: Sequence[float]) -> None:
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs at least two observations")
    if not all(math.isfinite(x) for x in (*a, *b)):
        raise ValueError("samples must be finite")


def _result(diff: float, se2: float, df: float, alpha: float) -> TTestResult:
    if se2 == 0.0:
        if diff == 0.0:
            return TTestResult(0.0, 1.0, df, False, ("zero variance, identical means; p set to 1",))
        t = math.copysign(math.inf, diff)
        return TTestResult(t, 0.0, df, True, ("zero variance, different means",))
    t = diff / math.sqrt(se2)
    p = t_sf_two_sided(t, df)
    return TTestResult(t, p, df, p < alpha)


def welch_t_test(a: Sequence[float], b: Sequence[float], alpha: float = 0.05) -> TTestResult:
    """Two-sided unequal-variance t-test with Welch-Satterthwaite degrees of freedom."""
    _check(a, b)
    ma, va = _mean_var(a)
    mb, vb = _mean_var(b)
    qa, qb = va / len(a), vb / len(b)
    se2 = qa + qb
    if se2 == 0.0:
        df = float(len(a) + len(b) - 2)
    else:
        df = se2 ** 2 / (qa ** 2 / (len(a) - 1) + qb ** 2 / (len(b) - 1))
    return _result(ma - mb, se2, df, alpha)


def student_t_test(a: Sequence[float], b: Sequence[float], alpha: float = 0.05) -> TTestResult:
    """Two-sided pooled-variance t-test."""
    _check(a, b)
    na, nb = len(a), len(b)
    ma, va = _mean_var(a)
    mb, vb = _mean_var(b)
    df = na + nb - 2
    pooled = ((na - 1) * va + (nb - 1) * vb) / df
    return _result(ma - mb, pooled * (1 / na + 1 / nb), float(df), alpha)


def t_test(a: Sequence[float], b: Sequence[float], equal_var: bool = False,
           alpha: float = 0.05) -> TTestResult:
    return student_t_test(a, b, alpha) if equal_var else welch_t_test(a, b, alpha)


def mean_std(xs: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for a single value)."""
    if not xs:
        raise ValueError("empty sample")
    m = math.fsum(xs) / len(xs)
    if len(xs) < 2:
        return m, 0.0
    return m, math.sqrt(_mean_var(xs)[1])
