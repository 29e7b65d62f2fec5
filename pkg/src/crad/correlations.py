"""Temporal and spatial noise correlators and their Fourier transforms.

Temporal correlations f(t) are even and normalised to unit integral over the
real line, so that the spectral weight f~(w) = 2 int_0^inf f(t) cos(wt) dt
satisfies f~(0) = 1 and the white limit f -> delta is exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy import integrate, special

from .quadrature import QuadratureError


@dataclass(frozen=True)
class White:
    tag = "white"


@dataclass(frozen=True)
class Exponential:
    tau: float
    tag = "exp"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau!r}")


@dataclass(frozen=True)
class GaussianTime:
    tau: float
    tag = "gauss"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau!r}")


@dataclass(frozen=True, eq=False)
class Tabulated:
    """One-sided table of an even correlation: samples at 0 = t_0 < t_1 < ...

    Linear interpolation in |t|, zero beyond the last sample.
    """

    t: np.ndarray
    f: np.ndarray
    tag = "table"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if t.ndim != 1 or t.shape != f.shape or t.size < 2:
            raise ValueError("tabulated correlation needs two equal-length 1-D arrays (>= 2 rows)")
        if t[0] != 0.0:
            raise ValueError("tabulated correlation must start at t = 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("tabulated times must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "f", f)
        norm = 2.0 * np.trapezoid(f, t)
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"tabulated correlation integrates to {norm:.9g}, expected 1")


TemporalCorrelation = Union[White, Exponential, GaussianTime, Tabulated]


class PointwiseEvaluationError(ValueError):
    """White noise is a distribution and has no pointwise value."""


def f_eval(corr: TemporalCorrelation, t):
    """Correlation density f(t) in s^-1."""
    t = np.abs(np.asarray(t, dtype=float))
    if isinstance(corr, White):
        raise PointwiseEvaluationError("white-noise correlation has no pointwise value")
    if isinstance(corr, Exponential):
        return np.exp(-t / corr.tau) / (2.0 * corr.tau)
    if isinstance(corr, GaussianTime):
        return np.exp(-0.5 * (t / corr.tau) ** 2) / (math.sqrt(2.0 * math.pi) * corr.tau)
    if isinstance(corr, Tabulated):
        return np.interp(t, corr.t, corr.f, right=0.0)
    raise TypeError(f"unknown correlation {corr!r}")


def f_tilde(corr: TemporalCorrelation, omega):
    """Spectral weight f~(omega), dimensionless, with f~(0) = 1."""
    w = np.asarray(omega, dtype=float)
    if isinstance(corr, White):
        return np.ones_like(w)
    if isinstance(corr, Exponential):
        return 1.0 / (1.0 + (w * corr.tau) ** 2)
    if isinstance(corr, GaussianTime):
        return np.exp(-0.5 * (w * corr.tau) ** 2)
    if isinstance(corr, Tabulated):
        return _piecewise_linear_cosine_transform(corr.t, corr.f, w)
    raise TypeError(f"unknown correlation {corr!r}")


def _piecewise_linear_cosine_transform(t, f, w):
    # Exact transform of the interpolant, segment by segment about the midpoint,
    # written with sinc and j1 so that w -> 0 has no cancellation.
    w = np.asarray(w, dtype=float)
    h = np.diff(t)
    tm = 0.5 * (t[1:] + t[:-1])
    fm = 0.5 * (f[1:] + f[:-1])
    slope = np.diff(f) / h
    ww = w[..., None]
    x = ww * h / 2
    even = fm * h * np.sinc(x / np.pi) * np.cos(ww * tm)
    odd = 2 * slope * (h / 2) ** 2 * special.spherical_jn(1, x) * np.sin(ww * tm)
    return 2.0 * np.sum(even - odd, axis=-1)


def support_cutoff(corr: TemporalCorrelation) -> float:
    """Lag beyond which f is negligible (below ~1e-17 of its peak) or zero."""
    if isinstance(corr, White):
        return 0.0
    if isinstance(corr, Exponential):
        return 40.0 * corr.tau
    if isinstance(corr, GaussianTime):
        return 9.0 * corr.tau
    if isinstance(corr, Tabulated):
        return float(corr.t[-1])
    raise TypeError(f"unknown correlation {corr!r}")


def correlation_time(corr: TemporalCorrelation) -> float:
    if isinstance(corr, (Exponential, GaussianTime)):
        return corr.tau
    if isinstance(corr, Tabulated):
        # second-moment width of the table
        return float(math.sqrt(2 * np.trapezoid(corr.f * corr.t**2, corr.t)))
    return 0.0


def f_tilde_numeric(corr: TemporalCorrelation, omega: float, t_max: float,
                    tol: float = 1e-10) -> float:
    """Cosine transform 2 int_0^t_max f(t) cos(omega t) dt by adaptive quadrature.

    Independent of the closed forms in :func:`f_tilde`; used to check them.
    """
    if isinstance(corr, White):
        raise PointwiseEvaluationError("white noise has no integrable density")
    tau = correlation_time(corr)
    # resolve the peak at t = 0 and the decay scale before the tail
    points = [p for p in (tau, 4 * tau, 16 * tau) if 0 < p < t_max]
    if isinstance(corr, Tabulated):
        points = [p for p in corr.t[1:-1] if p < t_max][:400]
    limit = max(200, 4 * len(points) + 50)
    with np.errstate(all="ignore"):
        val, err, info = integrate.quad(
            lambda s: float(f_eval(corr, s)) * math.cos(omega * s), 0.0, t_max,
            points=points or None, epsabs=tol / 2, epsrel=1e-12, limit=limit,
            full_output=True,
        )[:3]
    if err > tol / 2:
        raise QuadratureError("cosine transform did not converge", 2 * err)
    return 2.0 * val


def load_tabulated_csv(path: str | Path) -> Tabulated:
    """Read a two-column (t, f) CSV with a header row."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    if len(header) != 2:
        raise ValueError(f"{path}: expected a two-column header, got {header!r}")
    ts, fs = [], []
    for lineno, row in enumerate(body, start=2):
        if len(row) != 2:
            raise ValueError(f"{path}:{lineno}: ragged row {row!r}")
        try:
            ts.append(float(row[0]))
            fs.append(float(row[1]))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric row {row!r}") from None
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError(f"{path}: rows not sorted by strictly increasing t")
    return Tabulated(np.array(ts), np.array(fs))


def parse_corr(spec: str) -> TemporalCorrelation:
    """Parse ``white``, ``exp:TAU``, ``gauss:TAU`` or ``file:PATH``."""
    kind, _, arg = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "white" and not arg:
        return White()
    if kind == "exp":
        return Exponential(float(arg))
    if kind == "gauss":
        return GaussianTime(float(arg))
    if kind == "file":
        return load_tabulated_csv(arg)
    raise ValueError(f"unrecognised correlation spec {spec!r}")


def corr_tag(corr: TemporalCorrelation) -> str:
    if isinstance(corr, (Exponential, GaussianTime)):
        return f"{corr.tag}:{corr.tau!r}"
    if isinstance(corr, Tabulated):
        return f"table:{corr.t.size}"
    return corr.tag


# --- spatial ------------------------------------------------------------------


@dataclass(frozen=True)
class SpatialCorrelation:
    r_C: float

    def __post_init__(self):
        if not self.r_C > 0:
            raise ValueError(f"r_C must be > 0, got {self.r_C!r}")


def F_spatial_1d(x, corr: SpatialCorrelation):
    r = corr.r_C
    x = np.asarray(x, dtype=float)
    return np.exp(-x * x / (4 * r * r)) / (math.sqrt(4 * math.pi) * r)


def F_spatial(dx, corr: SpatialCorrelation):
    """Gaussian spatial correlator; the last axis of ``dx`` holds components."""
    dx = np.asarray(dx, dtype=float)
    if dx.ndim == 0:
        dx = dx[None]
    dim = dx.shape[-1]
    r = corr.r_C
    r2 = np.sum(dx * dx, axis=-1)
    return np.exp(-r2 / (4 * r * r)) / (math.sqrt(4 * math.pi) * r) ** dim


def F_tilde_spatial(k, corr: SpatialCorrelation):
    """Fourier transform exp(-|k|^2 r_C^2); scalar k is a magnitude."""
    k = np.asarray(k, dtype=float)
    k2 = k * k if k.ndim == 0 else np.sum(k * k, axis=-1)
    return np.exp(-k2 * corr.r_C**2)


def confined_correlator(x, y, corr: SpatialCorrelation, ell: float):
    """F(x - y) times the confinement factor exp(-|x + y|^2 / ell^2)."""
    if not ell > 0:
        raise ValueError(f"ell must be > 0, got {ell!r}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = x + y
    s2 = np.sum(s * s, axis=-1) if s.ndim else s * s
    return F_spatial(x - y, corr) * np.exp(-s2 / ell**2)
