"""Physical constants, collapse parameters and the reduced-unit scheme."""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import NamedTuple

SI = "SI"
CGS = "CGS"

PARAM_KEYS = ("gamma", "r_C", "mass_m", "mass_m0", "charge_e", "eps0", "c", "hbar", "unit_system")

# CODATA 2018 values
HBAR_SI = 1.054571817e-34
C_SI = 299792458.0
E_SI = 1.602176634e-19
EPS0_SI = 8.8541878128e-12
M_ELECTRON = 9.1093837015e-31
M_NUCLEON = 1.67262192369e-27
KEV = 1.602176634e-16

# gamma giving the GRW rate lambda = 1e-16 s^-1 at r_C = 1e-7 m
GAMMA_GRW = 1e-16 * 8 * math.pi**1.5 * (1e-7) ** 3


class ParameterError(ValueError):
    """Raised when a parameter set violates its domain constraints."""


class UnitError(ValueError):
    """Raised for a quantity whose dimension the reduced scheme cannot express."""


@dataclass(frozen=True)
class PhysicalParams:
    gamma: float = GAMMA_GRW
    r_C: float = 1e-7
    mass_m: float = M_ELECTRON
    mass_m0: float = M_NUCLEON
    charge_e: float = E_SI
    eps0: float = EPS0_SI
    c: float = C_SI
    hbar: float = HBAR_SI
    unit_system: str = SI

    @property
    def effective_eps0(self) -> float:
        """Permittivity entering the rate formulas; 1/4pi in Gaussian CGS."""
        if self.unit_system == CGS:
            return 1.0 / (4.0 * math.pi)
        return self.eps0

    @classmethod
    def csl_electron(cls, lam: float = 1e-16, r_C: float = 1e-7) -> PhysicalParams:
        """SI electron parameters with the GRW collapse rate ``lam`` (s^-1)."""
        return cls(gamma=lam * 8 * math.pi**1.5 * r_C**3, r_C=r_C)

    @classmethod
    def reduced(cls, gamma: float = 1.0, r_C: float = 1.0) -> PhysicalParams:
        """Unit-free parameter set (hbar = m = m0 = c = e = eps0 = 1)."""
        return cls(gamma=gamma, r_C=r_C, mass_m=1.0, mass_m0=1.0, charge_e=1.0,
                   eps0=1.0, c=1.0, hbar=1.0, unit_system=SI)


def validate_params(params: PhysicalParams) -> list[str]:
    """Return one message per violated constraint; an empty list means valid.

    ``gamma`` may be zero (collapse switched off); every other magnitude must
    be strictly positive and finite.
    """
    problems = []
    for name in PARAM_KEYS[:-1]:
        value = getattr(params, name)
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            problems.append(f"{name}: must be a finite number, got {value!r}")
        elif name == "gamma":
            if value < 0:
                problems.append(f"gamma: must be >= 0, got {value!r}")
        elif value <= 0:
            if name == "eps0" and params.unit_system == CGS:
                continue
            problems.append(f"{name}: must be > 0, got {value!r}")
    if params.unit_system not in (SI, CGS):
        problems.append(f"unit_system: must be SI or CGS, got {params.unit_system!r}")
    return problems


def require_valid(params: PhysicalParams) -> None:
    problems = validate_params(params)
    if problems:
        raise ParameterError("; ".join(problems))


def collapse_rate_lambda(params: PhysicalParams) -> float:
    """GRW collapse rate gamma / (8 pi^{3/2} r_C^3) in s^-1."""
    require_valid(params)
    return params.gamma / (8.0 * math.pi**1.5 * params.r_C**3)


def si_to_cgs(params: PhysicalParams) -> PhysicalParams:
    """Convert an SI parameter set to Gaussian CGS.

    The charge is rescaled so that e_cgs^2 = e_si^2 / (4 pi eps0) in erg cm,
    which is what makes the eps0 -> 1/4pi replacement exact.
    """
    require_valid(params)
    if params.unit_system != SI:
        raise ParameterError("si_to_cgs expects an SI parameter set")
    e2_cgs = params.charge_e**2 / (4 * math.pi * params.eps0) * 1e9
    return PhysicalParams(
        gamma=params.gamma * 1e6,
        r_C=params.r_C * 1e2,
        mass_m=params.mass_m * 1e3,
        mass_m0=params.mass_m0 * 1e3,
        charge_e=math.sqrt(e2_cgs),
        eps0=1.0 / (4 * math.pi),
        c=params.c * 1e2,
        hbar=params.hbar * 1e7,
        unit_system=CGS,
    )


def load_params(path: str | Path, section: str = "params") -> PhysicalParams:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    with open(path) as fh:
        parser.read_file(fh)
    if section not in parser:
        raise ParameterError(f"missing [{section}] section in {path}")
    return params_from_mapping(dict(parser[section]))


def params_from_mapping(mapping: dict[str, str]) -> PhysicalParams:
    unknown = sorted(set(mapping) - set(PARAM_KEYS))
    if unknown:
        raise ParameterError(f"unknown parameter key(s): {', '.join(unknown)}")
    kwargs: dict = {}
    for key, raw in mapping.items():
        if key == "unit_system":
            kwargs[key] = str(raw).strip().upper()
        else:
            try:
                kwargs[key] = float(raw)
            except ValueError:
                raise ParameterError(f"{key}: not a number: {raw!r}") from None
    params = replace(PhysicalParams(), **kwargs)
    require_valid(params)
    return params


# --- reduced units -----------------------------------------------------------


class Quantity(NamedTuple):
    """A value with integer exponents of length and time (and mass, unsupported)."""

    value: float
    length: int = 0
    time: int = 0
    mass: int = 0


@dataclass(frozen=True)
class ReducedScales:
    time_scale: float
    length_scale: float
    rate_scale: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (math.isfinite(v) and v > 0):
                raise UnitError(f"{f.name} must be positive and finite, got {v!r}")

    @classmethod
    def from_frequency(cls, a: float, c: float = C_SI) -> ReducedScales:
        """Scales with rate ~ |a|, time ~ 1/|a| and length ~ c/|a|."""
        a = abs(a)
        return cls(time_scale=1.0 / a, length_scale=c / a, rate_scale=a)

    def factor(self, length: int, time: int, mass: int = 0) -> float:
        if mass:
            raise UnitError("reduced scheme has no mass scale")
        scale = self.length_scale**length
        if time > 0:
            scale *= self.time_scale**time
        elif time < 0:
            scale *= self.rate_scale ** (-time)
        return scale


def to_reduced(q: Quantity, scales: ReducedScales) -> float:
    return q.value / scales.factor(q.length, q.time, q.mass)


def from_reduced(x: float, scales: ReducedScales, length: int = 0, time: int = 0,
                 mass: int = 0) -> Quantity:
    return Quantity(x * scales.factor(length, time, mass), length, time, mass)
