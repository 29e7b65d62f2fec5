"""Time kernels T(t) of the first-order emission probability.

T is the time-integral factor of E|T_fi|^2. For white noise it has the
closed form

    T = 1/(ac) [ (e^{-igt}-1)/(ig) + (e^{iat}-1)/(ia) + (e^{ict}-1)/(ic) - t ]

with g = b + d and a + c + g = 0. For a correlation f(t - s) the kernel is
assembled from four double integrals I(alpha, beta) over the square
[0, t]^2, each reduced to one quadrature over the lag x = u - v.

All functions accept any consistent unit system; in practice they are called
with reduced (O(1)) frequencies and times.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .correlations import (
    TemporalCorrelation,
    White,
    correlation_time,
    f_eval,
    f_tilde,
    support_cutoff,
    Tabulated,
)
from .quadrature import DEFAULT_TOL, osc_quad

SERIES_THRESHOLD = 1e-4
# below this max(|a|, |c|, |g|) t the white bracket is summed as one series
SMALL_PHASE = 0.5


class DegenerateCoefficientError(ValueError):
    """a = 0 or c = 0: the kernel's 1/(ac) prefactor diverges."""


class ConstraintError(ValueError):
    """Frequencies violate a + b + c + d = 0."""


class PrecisionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FrequencyCoefficients:
    """Angular frequencies a, b, c, d (s^-1); g = b + d is derived."""

    a: float
    b: float
    c: float
    d: float

    @property
    def g(self) -> float:
        return self.b + self.d

    @classmethod
    def free(cls, a: float, b: float = 0.0) -> FrequencyCoefficients:
        """Free-particle coefficients: c = -a, d = -b, hence g = 0."""
        return cls(a, b, -a, -b)

    @classmethod
    def from_acg(cls, a: float, c: float, g: float, b: float = 0.0) -> FrequencyCoefficients:
        return cls(a, b, c, g - b)

    def residual(self) -> float:
        return self.a + self.b + self.c + self.d

    def check(self) -> None:
        scale = max(abs(self.a), abs(self.b), abs(self.c), abs(self.d), 1e-300)
        if abs(self.residual()) > 1e-12 * scale:
            raise ConstraintError(
                f"a + b + c + d = {self.residual():.3g} violates the sum rule")


@dataclass(frozen=True)
class KernelValue:
    value: complex
    method: str
    error: float | None = None

    @property
    def real(self) -> float:
        return float(np.real(self.value))


def _require_time(t: float) -> None:
    if not t >= 0:
        raise ValueError(f"t must be >= 0, got {t!r}")


def _require_nondegenerate(a: float, c: float | None = None) -> None:
    if a == 0 or (c is not None and c == 0):
        raise DegenerateCoefficientError("a and c must be nonzero")


def expi_ratio(x):
    """(e^{ix} - 1) / (ix), finite at x = 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_THRESHOLD
    xs = np.where(small, 1.0, x)
    direct = np.sin(xs) / xs + 1j * 2 * np.sin(xs / 2) ** 2 / xs
    x2 = x * x
    series = (1 - x2 / 6 + x2 * x2 / 120) + 1j * x * (0.5 - x2 / 24)
    out = np.where(small, series, direct)
    return out if out.ndim else complex(out)


_SIN_TAIL = [(-1) ** (n + 1) / math.factorial(2 * n + 1) for n in range(1, 11)]


def x_minus_sin(x):
    """x - sin(x) without cancellation for |x| < 1."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    series = np.zeros_like(x)
    for coef in reversed(_SIN_TAIL):
        series = series * x2 + coef
    series = series * x2 * x
    out = np.where(np.abs(x) < 1.0, series, x - np.sin(x))
    return out if out.ndim else float(out)


def _white_bracket_series(a: float, c: float, g: float, t: float) -> complex:
    # sum_n (it)^n/(n+1)! [a^n + c^n - (-g)^n]; the n = 0, 1 terms cancel exactly
    # by a + c + g = 0, which removes the O(1) cancellation of the direct form
    total = 0j
    pa, pc, pg = a * a, c * c, g * g
    it_n = (1j * t) ** 2
    fact = 6.0
    x = max(abs(a), abs(c), abs(g)) * t
    for n in range(2, 40):
        total += it_n / fact * (pa + pc - (-1) ** n * pg)
        # every later term is bounded by 3 x^m / (m+1)! / t^2 with m > n
        if 3 * x ** (n + 1) / (fact * (n + 2)) <= 1e-17 * abs(total) * t * t:
            break
        pa, pc, pg = pa * a, pc * c, pg * g
        it_n *= 1j * t
        fact *= n + 2
    return total


def white_T(coeffs: FrequencyCoefficients, t: float) -> KernelValue:
    """Closed-form white-noise kernel."""
    _require_time(t)
    coeffs.check()
    a, c, g = coeffs.a, coeffs.c, coeffs.g
    _require_nondegenerate(a, c)
    if max(abs(a), abs(c), abs(g)) * t < SMALL_PHASE:
        return KernelValue(t * _white_bracket_series(a, c, g, t) / (a * c), "closed_form")
    # (e^{i theta t} - 1)/(i theta) = t * expi_ratio(theta t); the g-term has
    # theta = -g and an overall sign flip from its i g denominator
    bracket = -expi_ratio(-g * t) + expi_ratio(a * t) + expi_ratio(c * t) - 1.0
    return KernelValue(t * bracket / (a * c), "closed_form")


def white_T_free(a: float, t):
    """Free-particle white kernel 2 (at - sin at) / a^3 (real, vectorised in t)."""
    _require_nondegenerate(a)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    value = 2.0 * x_minus_sin(a * t_arr) / a**3
    if np.ndim(value) == 0:
        return KernelValue(float(value), "closed_form")
    return value


def white_T_oracle(coeffs: FrequencyCoefficients, t: float,
                   tol: float = 1e-10) -> KernelValue:
    """Quadrature of int_0^t dt2 e^{i g t2} A(t2) C(t2).

    A and C are the inner t1 and t3 integrals of e^{iat1} and e^{ict3} over
    [t2, t], done analytically; only the t2 integral is numeric.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    _require_time(t)
    coeffs.check()
    a, c, g = coeffs.a, coeffs.c, coeffs.g
    if t == 0:
        return KernelValue(0j, "quadrature", 0.0)

    def integrand(s):
        w = t - s
        inner_a = w * np.exp(1j * a * s) * expi_ratio(a * w)
        inner_c = w * np.exp(1j * c * s) * expi_ratio(c * w)
        return np.exp(1j * g * s) * inner_a * inner_c

    fastest = max(abs(a), abs(c), abs(g))
    value, err = osc_quad(integrand, 0.0, t, freq=fastest, tol=tol)
    return KernelValue(complex(value), "quadrature", err)


# --- coloured noise -----------------------------------------------------------


def _lag_points(corr: TemporalCorrelation, upper: float):
    if isinstance(corr, Tabulated):
        return [p for p in corr.t[1:] if p < upper][:200]
    tau = correlation_time(corr)
    return [p for p in (tau, 4 * tau, 16 * tau) if 0 < p < upper]


def _lag_integral(s: float, delta: float, t: float, corr: TemporalCorrelation,
                  tol: float) -> tuple[float, float]:
    """J = int_0^t f(x) (t-x)/2 sinc(s(t-x)/2) cos(delta x/2) dx.

    Equals int_0^t f(x) sin(s(t-x)/2)/s cos(delta x/2) dx and stays finite as
    s -> 0. White noise uses the half-weight rule int_0^t delta(x) h(x) dx
    = h(0)/2.
    """
    if isinstance(corr, White):
        return 0.5 * (t / 2) * float(np.sinc(s * t / (2 * np.pi))), 0.0
    upper = min(t, support_cutoff(corr))

    def integrand(x):
        w = t - x
        return float(f_eval(corr, x)) * (w / 2) * np.sinc(s * w / (2 * np.pi)) * math.cos(delta * x / 2)

    freq = 0.5 * max(abs(s), abs(delta))
    value, err = osc_quad(integrand, 0.0, upper, freq=freq,
                          points=_lag_points(corr, upper), tol=tol, complex_func=False)
    return float(value), err


def double_integral_I(alpha: float, beta: float, t: float, corr: TemporalCorrelation,
                      tol: float = DEFAULT_TOL) -> KernelValue:
    """int_0^t int_0^t e^{i alpha u} e^{i beta v} f(u - v) du dv.

    Reduced to 4 e^{i(alpha+beta)t/2} J(alpha+beta, alpha-beta), one
    quadrature over the lag.
    """
    _require_time(t)
    s = alpha + beta
    j, err = _lag_integral(s, alpha - beta, t, corr, tol / 4)
    method = "closed_form" if isinstance(corr, White) else "quadrature"
    return KernelValue(4 * np.exp(0.5j * s * t) * j, method, 4 * err)


def colored_T(coeffs: FrequencyCoefficients, t: float, corr: TemporalCorrelation,
              tol: float = DEFAULT_TOL) -> KernelValue:
    """Kernel for correlation f(t - s).

    T = -1/(ac) [ e^{i(a+c)t} I(b, d) - e^{iat} I(b, c+d)
                  - e^{ict} I(a+b, d) + I(a+b, c+d) ].
    """
    if isinstance(corr, White):
        return white_T(coeffs, t)
    _require_time(t)
    coeffs.check()
    a, b, c, d = coeffs.a, coeffs.b, coeffs.c, coeffs.d
    _require_nondegenerate(a, c)
    terms = [
        (np.exp(1j * (a + c) * t), double_integral_I(b, d, t, corr, tol / 4)),
        (-np.exp(1j * a * t), double_integral_I(b, c + d, t, corr, tol / 4)),
        (-np.exp(1j * c * t), double_integral_I(a + b, d, t, corr, tol / 4)),
        (1.0, double_integral_I(a + b, c + d, t, corr, tol / 4)),
    ]
    value = sum(phase * term.value for phase, term in terms) * (-1.0 / (a * c))
    err = sum(term.error for _, term in terms) / abs(a * c)
    return KernelValue(complex(value), "quadrature", err)


def colored_T_free(a: float, b: float, t: float, corr: TemporalCorrelation,
                   tol: float = DEFAULT_TOL) -> KernelValue:
    """Free-particle kernel (c = -a, d = -b), real.

    T = 2/a^2 { int f(x)(t-x)[cos(bx) + cos((a+b)x)] dx
                - (4/a) cos(at/2) int f(x) sin(a(t-x)/2) cos((a+2b)x/2) dx }.
    """
    _require_time(t)
    _require_nondegenerate(a)
    # both lag integrals through J: (t-x) cos(wx) = 2 J(0, 2w) and
    # sin(a(t-x)/2)/a = (t-x)/2 sinc
    j_b, e1 = _lag_integral(0.0, 2 * b, t, corr, tol / 8)
    j_ab, e2 = _lag_integral(0.0, 2 * (a + b), t, corr, tol / 8)
    j_osc, e3 = _lag_integral(a, a + 2 * b, t, corr, tol / 8)
    value = 2.0 / a**2 * (2 * j_b + 2 * j_ab - 4 * math.cos(a * t / 2) * j_osc)
    method = "closed_form" if isinstance(corr, White) else "quadrature"
    err = 2.0 / a**2 * (2 * e1 + 2 * e2 + 4 * e3)
    return KernelValue(value, method, err)


def rate_asymptote(a: float, b: float, corr: TemporalCorrelation) -> float:
    """Large-t limit of dT/dt: [f~(b) + f~(a + b)] / a^2."""
    _require_nondegenerate(a)
    return float((f_tilde(corr, b) + f_tilde(corr, a + b)) / a**2)


def dT_dt_numeric(coeffs: FrequencyCoefficients, t: float, corr: TemporalCorrelation,
                  dt: float, tol: float = 1e-11) -> KernelValue:
    """Central difference [T(t+dt) - T(t-dt)] / (2 dt).

    Falls back to a forward difference (method tag says so) when t - dt <= 0.
    ``tol`` is relative to the kernel scale max(1, t/|ac|).
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    _require_time(t)
    fastest = max(abs(coeffs.a), abs(coeffs.b), abs(coeffs.c), abs(coeffs.d))
    if dt * fastest > 0.1:
        warnings.warn(f"dt = {dt:g} is not small against the fastest period "
                      f"2pi/{fastest:g}", PrecisionWarning, stacklevel=2)
    tol_abs = tol * max(1.0, t / abs(coeffs.a * coeffs.c)) if coeffs.a * coeffs.c else tol
    kernel = white_T if isinstance(corr, White) else (
        lambda cf, tt: colored_T(cf, tt, corr, tol_abs))
    if t - dt <= 0:
        hi = kernel(coeffs, t + dt).value
        lo = kernel(coeffs, t).value
        return KernelValue((hi - lo) / dt, "forward_difference")
    hi = kernel(coeffs, t + dt).value
    lo = kernel(coeffs, t - dt).value
    return KernelValue((hi - lo) / (2 * dt), "central_difference")


def window_average_rate(coeffs: FrequencyCoefficients, corr: TemporalCorrelation,
                        t_start: float, n_periods: int = 10, samples_per_period: int = 16,
                        dt: float | None = None) -> float:
    """Mean of the numeric dT/dt over ``n_periods`` of the slowest retained oscillation.

    The slowest oscillation in the free kernel's derivative is at frequency a;
    the trapezoid mean over whole periods cancels it.
    """
    slowest = min(abs(x) for x in (coeffs.a, coeffs.c) if x)
    period = 2 * math.pi / slowest
    fastest = max(abs(coeffs.a), abs(coeffs.b), abs(coeffs.c), abs(coeffs.d))
    if dt is None:
        # central-difference bias (fastest dt)^2 / 6 ~ 2e-5
        dt = 1e-2 / fastest
    n = n_periods * samples_per_period
    ts = t_start + period * n_periods * np.arange(n) / n
    # periodic samples: the plain mean is the trapezoid rule on whole periods
    vals = [dT_dt_numeric(coeffs, float(ti), corr, dt).real for ti in ts]
    return float(np.mean(vals))
