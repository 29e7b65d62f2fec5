"""Panelled adaptive quadrature for smooth-times-oscillatory integrands."""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate

DEFAULT_TOL = 1e-9


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (error estimate {error_estimate:.3g})")
        self.error_estimate = error_estimate


def panel_edges(lo: float, hi: float, freq: float = 0.0, points=()) -> np.ndarray:
    """Breakpoints on [lo, hi]: a quarter period of ``freq`` apart, plus ``points``."""
    span = hi - lo
    n = 1
    if freq:
        quarter = 0.5 * math.pi / abs(freq)
        n = max(1, math.ceil(span / quarter))
    edges = np.linspace(lo, hi, n + 1)
    extra = [p for p in points if lo < p < hi]
    if extra:
        edges = np.unique(np.concatenate([edges, extra]))
    return edges


def osc_quad(func, lo: float, hi: float, freq: float = 0.0, points=(),
             tol: float = DEFAULT_TOL, complex_func: bool = True,
             rtol: float = 0.0) -> tuple[complex, float]:
    """Integrate ``func`` over [lo, hi] panel by panel.

    Returns ``(value, error_estimate)``. The absolute tolerance is shared
    evenly among panels; a panel whose error exceeds both its share and
    ``rtol`` times its own magnitude raises :class:`QuadratureError`.
    """
    if hi <= lo:
        return 0.0, 0.0
    edges = panel_edges(lo, hi, freq, points)
    share = tol / (len(edges) - 1)
    total = 0.0
    err_total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            res = integrate.quad(func, a, b, epsabs=share, epsrel=max(rtol, 1e-13), limit=200,
                                 complex_func=complex_func)
        val, err = res[0], res[1]
        # complex integrands report err as real_err + 1j * imag_err
        err = float(np.hypot(np.real(err), np.imag(err)))
        if not (err <= 10 * max(share, rtol * abs(val))):
            raise QuadratureError(f"panel [{a:.6g}, {b:.6g}] did not converge", err)
        total += val
        err_total += err
    return total, err_total
