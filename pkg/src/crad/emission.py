"""Free-particle emission kinematics and spectral rates dGamma/dp.

Throughout, p is the photon wavenumber magnitude (m^-1) with omega_p = p c,
and the photon travels along +z. dGamma/dp therefore carries units of
s^-1 m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .correlations import TemporalCorrelation, White, corr_tag, f_tilde
from .params import PhysicalParams, collapse_rate_lambda, require_valid
from .quadrature import QuadratureError, osc_quad

WHITE, PLANEWAVE, GOLDEN = "white", "planewave", "golden"
MODES = (WHITE, PLANEWAVE, GOLDEN)

# below this beta*D the 1/(D - z)^2 ~ 1/D^2 step is not trustworthy
BETA_D_RELIABLE = 10.0

Z_AXIS = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class Kinematics:
    p: float
    q: tuple[float, float, float] = (0.0, 0.0, 0.0)
    box_L: float = 1.0

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"p must be > 0, got {self.p!r}")
        if not self.box_L > 0:
            raise ValueError(f"box_L must be > 0, got {self.box_L!r}")

    @property
    def p_vec(self) -> np.ndarray:
        return self.p * Z_AXIS


@dataclass(frozen=True)
class RateResult:
    value: float
    method: str
    beta_D: float
    flags: tuple[str, ...] = field(default=())

    @property
    def reliable(self) -> bool:
        return self.beta_D >= BETA_D_RELIABLE


def coeff_a(kin: Kinematics, params: PhysicalParams, delta_approx: bool = False) -> float:
    """a = pc - hbar p^2/2m - hbar q.p/m; with ``delta_approx`` q is set to -p."""
    hb, m = params.hbar, params.mass_m
    recoil = hb * kin.p**2 / (2 * m)
    if delta_approx:
        return kin.p * params.c + recoil
    qp = float(np.dot(kin.q, kin.p_vec))
    return kin.p * params.c - recoil - hb * qp / m


def capital_lambda(kin: Kinematics, params: PhysicalParams) -> float:
    """Lambda = gamma hbar e^2 / (eps0 c m0^2 p L^6)."""
    require_valid(params)
    return (params.gamma * params.hbar * params.charge_e**2
            / (params.effective_eps0 * params.c * params.mass_m0**2 * kin.p * kin.box_L**6))


def beta_and_D(p: float, params: PhysicalParams) -> tuple[float, float]:
    """beta = m r_C / (hbar p) (s) and D = pc + hbar p^2 / 2m (s^-1)."""
    beta = params.mass_m * params.r_C / (params.hbar * p)
    D = p * params.c + params.hbar * p**2 / (2 * params.mass_m)
    return beta, D


@dataclass(frozen=True)
class QzIntegral:
    numeric: float
    approx: float
    beta: float
    D: float
    error: float

    @property
    def beta_D(self) -> float:
        return self.beta * self.D

    @property
    def reliable(self) -> bool:
        return self.beta_D >= BETA_D_RELIABLE


def qz_integral_reduced(beta: float, D: float, t: float, tol: float = 1e-10) -> QzIntegral:
    """int dz exp(-z^2 beta^2) (1 - cos[(D - z)t]) / (D - z)^2, numeric and approximate.

    The numeric branch keeps the cosine and resolves the removable pole at
    z = D; the approximation is sqrt(pi) / (beta D^2).
    """
    if not t > 0:
        raise ValueError("t must be > 0")
    zmax = 10.0 / beta

    def integrand(z):
        y = D - z
        # (1 - cos(yt)) / y^2 = (t^2 / 2) sinc^2(yt / 2)
        return math.exp(-(z * beta) ** 2) * 0.5 * t * t * np.sinc(y * t / (2 * math.pi)) ** 2

    approx = math.sqrt(math.pi) / (beta * D * D)
    points = [p for p in (-1 / beta, 0.0, 1 / beta, D) if -zmax < p < zmax]
    # cos[(D - z) t] oscillates at rate t in z
    value, err = osc_quad(integrand, -zmax, zmax, freq=t,
                          points=points, tol=tol * approx, complex_func=False, rtol=tol)
    # the pole region sits under a Gaussian tail of exp(-(beta D)^2) if D > zmax;
    # nothing is lost by not integrating there
    return QzIntegral(float(value), approx, beta, D, err)


def qz_integral(p: float, t: float, params: PhysicalParams, tol: float = 1e-10) -> QzIntegral:
    """The q_z integral in the variable z = hbar p (q_z + p) / m."""
    beta, D = beta_and_D(p, params)
    return qz_integral_reduced(beta, D, t, tol)


def polarization_basis(direction) -> np.ndarray:
    """Two real unit vectors orthogonal to ``direction`` and to each other."""
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    helper = Z_AXIS if abs(n[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return np.stack([e1, e2])


def polarization_sum(q, direction=Z_AXIS) -> float:
    """sum over the two linear polarisations of (eps . q)^2."""
    return float(np.sum((polarization_basis(direction) @ np.asarray(q, dtype=float)) ** 2))


def rate_white(p: float, params: PhysicalParams) -> RateResult:
    """dGamma/dp = lambda hbar e^2 / (2 pi^2 eps0 c^3 m0^2 r_C^2 p)."""
    if not p > 0:
        raise ValueError(f"p must be > 0, got {p!r}")
    lam = collapse_rate_lambda(params)
    value = (lam * params.hbar * params.charge_e**2
             / (2 * math.pi**2 * params.effective_eps0 * params.c**3
                * params.mass_m0**2 * params.r_C**2 * p))
    beta, D = beta_and_D(p, params)
    return RateResult(value, "analytic", beta * D)


def _transverse_moment(r_C: float) -> float:
    # int dqx dqy (qx^2 + qy^2) exp(-(qx^2 + qy^2) r_C^2), by quadrature in u = q r_C
    opts = dict(epsabs=0.0, epsrel=1e-13, points=[-1.0, 0.0, 1.0], limit=200)
    second = integrate.quad(lambda u: u * u * math.exp(-u * u), -12.0, 12.0, **opts)[0]
    zeroth = integrate.quad(lambda u: math.exp(-u * u), -12.0, 12.0, **opts)[0]
    return 2 * second * zeroth / r_C**4


def rate_white_pipeline(p: float, params: PhysicalParams, t: float | None = None,
                        box_L: float = 1.0, tol: float = 1e-10) -> RateResult:
    """dGamma/dp assembled step by step instead of from the closed form.

    (L/2pi)^6 Lambda -> transverse q integrals of the polarisation sum ->
    numeric q_z integral -> isotropic angular factor 4 pi p^2. ``t`` defaults
    to 30 beta, where the oscillating part of the q_z integral is gone.
    """
    kin = Kinematics(p=p, box_L=box_L)
    lam_l6 = capital_lambda(kin, params) * (box_L / (2 * math.pi)) ** 6
    beta, D = beta_and_D(p, params)
    if t is None:
        t = 30.0 * beta
    qz = qz_integral(p, t, params, tol)
    # d/dt (at - sin at)/a^3 = (1 - cos at)/a^2, whose q_z integral is m/(hbar p) * numeric
    qz_part = params.mass_m / (params.hbar * p) * qz.numeric
    d3 = lam_l6 * _transverse_moment(params.r_C) * qz_part
    # photon directions are all equivalent: dGamma/dp = 4 pi p^2 dGamma/d^3p
    value = 4 * math.pi * p**2 * d3
    flags = () if qz.reliable else ("beta_D_below_10",)
    return RateResult(value, "pipeline", beta * D, flags)


def rate_colored_planewave(p: float, params: PhysicalParams,
                           corr: TemporalCorrelation) -> RateResult:
    """(1/2)[f~(0) + f~(pc)] times the white rate, plane-wave final state.

    The f~(0) piece does not depend on p and is flagged as the plane-wave
    artefact.
    """
    white = rate_white(p, params)
    bracket = 0.5 * (float(f_tilde(corr, 0.0)) + float(f_tilde(corr, p * params.c)))
    return RateResult(bracket * white.value, "analytic", white.beta_D,
                      ("zero_frequency_term",))


def rate_golden_rule(p: float, params: PhysicalParams,
                     corr: TemporalCorrelation) -> RateResult:
    """(1/2) f~(pc) times the white rate: only the resonant term survives."""
    white = rate_white(p, params)
    return RateResult(0.5 * float(f_tilde(corr, p * params.c)) * white.value, "analytic",
                      white.beta_D)


RATE_FUNCS = {
    WHITE: lambda p, params, corr: rate_white(p, params),
    PLANEWAVE: rate_colored_planewave,
    GOLDEN: rate_golden_rule,
}


def spectrum_sweep(p_min: float, p_max: float, n_points: int, params: PhysicalParams,
                   corr: TemporalCorrelation = White(), mode: str = WHITE) -> list[dict]:
    """Rates on a log-spaced p grid, ascending in p."""
    if not (0 < p_min < p_max):
        raise ValueError(f"need 0 < p_min < p_max, got {p_min!r}, {p_max!r}")
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if mode not in RATE_FUNCS:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    rows = []
    for p in np.geomspace(p_min, p_max, n_points):
        res = RATE_FUNCS[mode](float(p), params, corr)
        rows.append({
            "p": float(p),
            "rate": res.value,
            "mode": mode,
            "corr_tag": corr_tag(corr),
            "f_tilde_pc": float(f_tilde(corr, p * params.c)),
            "beta_D_flag": "ok" if res.reliable else "unreliable",
        })
    return rows


__all__ = [
    "Kinematics", "RateResult", "QzIntegral", "QuadratureError", "coeff_a", "capital_lambda",
    "beta_and_D", "qz_integral", "qz_integral_reduced", "polarization_basis",
    "polarization_sum", "rate_white", "rate_white_pipeline", "rate_colored_planewave",
    "rate_golden_rule", "spectrum_sweep", "MODES",
]
