"""Wave-packet final states with a spatially confined noise.

A final electron state  sum_D h(D) e^{i(q+D)x}/sqrt(L^3)  together with the
confinement factor exp(-|x+y|^2/ell^2) in the noise correlator replaces the
plane-wave double Kronecker delta by the kernel

    K(j, k) = h*(k - Q) h(j - Q) Y(k - j),

where Q is the grid index of q + p and Y is the box-averaged y-integral. The
diagonal of K carries the g = 0 ("factor of 2") term; its total weight is
(sqrt(pi) ell / 2L)^d, which vanishes in the continuum limit.

Wavevectors live on the reciprocal grid (2 pi / L) * n and are handled as
integer index vectors n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence, Union

import numpy as np
from scipy.linalg import toeplitz

# infinite-limit extension of the y-integral needs ell <= L/5 (tail < e^-25)
MAX_ELL_OVER_L = 0.2
DENSE_LIMIT = 4096


class OffGridError(ValueError):
    """A wavevector is not an integer multiple of 2 pi / L."""


@dataclass(frozen=True)
class CutoffGeometry:
    box_L: float
    ell: float = math.inf

    def __post_init__(self):
        if not self.box_L > 0:
            raise ValueError(f"box_L must be > 0, got {self.box_L!r}")
        if not self.ell > 0:
            raise ValueError(f"ell must be > 0 or inf, got {self.ell!r}")
        if math.isfinite(self.ell) and self.ell > MAX_ELL_OVER_L * self.box_L:
            raise ValueError(
                f"ell = {self.ell:g} > L/5 = {self.box_L / 5:g}: the infinite-limit "
                "y-integral is not accurate there")

    @property
    def confined(self) -> bool:
        return math.isfinite(self.ell)

    @property
    def dk(self) -> float:
        return 2 * math.pi / self.box_L

    def in_physical_regime(self, r_C: float, width: float, margin: float = 10.0) -> bool:
        """r_C << ell << L and ell >> 1/width, each by ``margin``."""
        if not self.confined:
            return False
        return (margin * r_C <= self.ell <= self.box_L / margin
                and self.ell * width >= margin)


def y_factor_1d(n, geom: CutoffGeometry) -> np.ndarray:
    """Per-axis (1/2L) int_{-L}^{L} dy exp(i kappa y / 2) exp(-y^2/ell^2), kappa = dk n."""
    n = np.asarray(n)
    if not geom.confined:
        # sin(kappa L/2)/(kappa L/2) at kappa = 2 pi n / L is exactly delta_{n,0}
        return (n == 0).astype(float)
    kappa = geom.dk * n
    return (math.sqrt(math.pi) * geom.ell / (2 * geom.box_L)) * np.exp(-(kappa * geom.ell) ** 2 / 16)


def y_factor_index(n, geom: CutoffGeometry):
    """Product of per-axis factors; the last axis of ``n`` holds components."""
    n = np.asarray(n)
    return np.prod(y_factor_1d(n, geom), axis=-1)


def grid_index(kappa, box_L: float, atol: float = 1e-9) -> np.ndarray:
    scaled = np.asarray(kappa, dtype=float) * box_L / (2 * math.pi)
    idx = np.rint(scaled)
    if np.any(np.abs(scaled - idx) > atol * np.maximum(1.0, np.abs(idx))):
        raise OffGridError(f"wavevector {kappa!r} is not on the 2pi/L grid")
    return idx.astype(np.int64)


def y_integral_factor(kappa, geom: CutoffGeometry) -> complex:
    """The y-integral factor at a reciprocal-grid wavevector ``kappa`` (m^-1)."""
    n = grid_index(kappa, geom.box_L)
    return complex(y_factor_index(n, geom))


# --- packets ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WavePacket:
    """Amplitudes h on integer offsets, stored densely or as per-axis factors.

    ``center`` is the grid index of q + p; ``width`` is the momentum-space
    width (m^-1) when the packet has one.
    """

    box_L: float
    center: tuple[int, ...]
    factors: tuple[np.ndarray, ...] | None = None
    dense: np.ndarray | None = None
    width: float = math.nan

    def __post_init__(self):
        if (self.factors is None) == (self.dense is None):
            raise ValueError("give exactly one of factors or dense")
        shape = self.shape
        if any(s % 2 == 0 for s in shape):
            raise ValueError("amplitude arrays must have odd length (centred offsets)")
        if len(self.center) != len(shape):
            raise ValueError("center dimension does not match the amplitudes")
        if abs(self.norm2 - 1.0) > 1e-12:
            raise ValueError(f"packet not normalised: sum |h|^2 = {self.norm2!r}")

    @property
    def shape(self) -> tuple[int, ...]:
        if self.factors is not None:
            return tuple(len(f) for f in self.factors)
        return self.dense.shape

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def radius(self) -> tuple[int, ...]:
        return tuple(s // 2 for s in self.shape)

    @property
    def separable(self) -> bool:
        return self.factors is not None

    @property
    def grid_spacing(self) -> float:
        return 2 * math.pi / self.box_L

    @property
    def center_q(self) -> np.ndarray:
        return self.grid_spacing * np.asarray(self.center, dtype=float)

    @cached_property
    def norm2(self) -> float:
        if self.factors is not None:
            return float(np.prod([np.sum(np.abs(f) ** 2) for f in self.factors]))
        return float(np.sum(np.abs(self.dense) ** 2))

    @cached_property
    def amplitudes(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        size = math.prod(self.shape)
        if size > DENSE_LIMIT**2:
            raise MemoryError(f"dense packet would hold {size} amplitudes")
        out = self.factors[0]
        for f in self.factors[1:]:
            out = np.multiply.outer(out, f)
        return out

    def offsets(self) -> np.ndarray:
        """Integer offsets of every stored amplitude, shape (n, dim), C order."""
        grids = np.meshgrid(*[np.arange(-r, r + 1) for r in self.radius], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def h(self, offset) -> np.ndarray:
        """h at integer offset(s) (last axis = components); zero off support."""
        off = np.asarray(offset, dtype=np.int64)
        rad = np.asarray(self.radius)
        inside = np.all(np.abs(off) <= rad, axis=-1)
        idx = np.where(inside[..., None], off + rad, 0)
        if self.factors is not None:
            vals = np.ones(idx.shape[:-1], dtype=complex)
            for axis, f in enumerate(self.factors):
                vals = vals * f[idx[..., axis]]
        else:
            vals = self.dense[tuple(np.moveaxis(idx, -1, 0))]
        return np.where(inside, vals, 0.0)


def _normalise(a: np.ndarray) -> np.ndarray:
    return a / math.sqrt(float(np.sum(np.abs(a) ** 2)))


def gaussian_packet(box_L: float, width: float, dim: int = 3, truncate: float = 5.0,
                    center: Sequence[int] | None = None, radius: int | None = None) -> WavePacket:
    """Isotropic Gaussian |h|^2 of momentum width ``width``, cut at ``truncate`` widths.

    ``radius`` overrides the cut with an explicit support radius in grid points.
    """
    if not (box_L > 0 and width > 0):
        raise ValueError("box_L and width must be > 0")
    dk = 2 * math.pi / box_L
    if radius is None:
        radius = int(math.floor(truncate * width / dk))
    if radius < 0:
        raise ValueError("radius must be >= 0")
    n = np.arange(-radius, radius + 1)
    amp = _normalise(np.exp(-((n * dk) ** 2) / (4 * width**2)).astype(complex))
    # per-axis renormalisation makes the product exactly unit-norm
    return WavePacket(box_L, tuple(center or (0,) * dim), factors=(amp,) * dim, width=width)


def plane_wave_packet(box_L: float, dim: int = 3,
                      center: Sequence[int] | None = None) -> WavePacket:
    """h = delta_{D,0}."""
    one = np.ones(1, dtype=complex)
    return WavePacket(box_L, tuple(center or (0,) * dim), factors=(one,) * dim)


def random_packet(box_L: float, radius: int, dim: int, rng: np.random.Generator,
                  center: Sequence[int] | None = None) -> WavePacket:
    shape = (2 * radius + 1,) * dim
    amp = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return WavePacket(box_L, tuple(center or (0,) * dim), dense=_normalise(amp))


# --- kernel and sums ----------------------------------------------------------


def K_kernel(j, k, packet: WavePacket, geom: CutoffGeometry) -> np.ndarray:
    """K(j, k) = h*(k - Q) h(j - Q) Y(k - j) for integer grid vectors j, k."""
    j = np.asarray(j, dtype=np.int64)
    k = np.asarray(k, dtype=np.int64)
    Q = np.asarray(packet.center, dtype=np.int64)
    hj = packet.h(j - Q)
    amp = np.conj(packet.h(k - Q)) * hj
    # keep K(k, k) exactly real
    amp = np.where(np.all(j == k, axis=-1), np.abs(hj) ** 2 + 0j, amp)
    val = amp * y_factor_index(k - j, geom)
    return val if np.ndim(val) else complex(val)


def diagonal_sum(packet: WavePacket, geom: CutoffGeometry) -> float:
    """sum_k K(k, k) = (sqrt(pi) ell / 2L)^d sum |h|^2, for finite ell."""
    if not geom.confined:
        raise ValueError("diagonal_sum needs a finite ell; use diagonal_sum_unconfined")
    y0 = math.sqrt(math.pi) * geom.ell / (2 * geom.box_L)
    return y0**packet.dim * packet.norm2


def diagonal_sum_unconfined(packet: WavePacket) -> float:
    """ell = inf: Y(0) = 1, so the diagonal carries the full norm."""
    return packet.norm2


def diagonal_sum_grid(packet: WavePacket, geom: CutoffGeometry) -> float:
    """Explicit sum of K(k, k) over the packet support (independent check)."""
    Q = np.asarray(packet.center)
    if packet.separable:
        total = 1.0
        for f in packet.factors:
            total *= float(np.sum(np.abs(f) ** 2 * y_factor_1d(np.zeros(len(f), int), geom)))
        return total
    ks = packet.offsets() + Q
    return float(np.sum(np.real(K_kernel(ks, ks, packet, geom))))


@dataclass(frozen=True)
class SeparableTheta:
    """Per-axis weights: Theta(j, k) = prod_a axes[a](j_a, k_a), vectorised."""

    axes: tuple[Callable[[np.ndarray, np.ndarray], np.ndarray], ...]


Theta = Union[complex, float, Mapping, Callable, SeparableTheta]


def _axis_sum(f: np.ndarray, geom: CutoffGeometry, theta_axis=None, q_axis: int = 0) -> complex:
    # sum_{n, n'} w(j, k) conj(h[k]) h[j] Y(k - j) on one axis, j = Q + n', k = Q + n
    r = len(f) // 2
    n = np.arange(-r, r + 1)
    ymat = toeplitz(y_factor_1d(n - n[0], geom))  # ymat[k, j] = Y(n_k - n_j)
    kern = np.conj(f)[:, None] * f[None, :] * ymat
    if theta_axis is not None:
        kk, jj = np.meshgrid(n + q_axis, n + q_axis, indexing="ij")
        kern = kern * theta_axis(jj, kk)
    return complex(np.sum(kern))


def transition_prob_wavepacket(theta: Theta, packet: WavePacket,
                               geom: CutoffGeometry) -> complex:
    """sum over (j, k) of Theta(j, k) K(j, k), evaluated exactly on the grid.

    ``theta`` may be a constant, a mapping {(j, k): weight} with tuple grid
    vectors, a vectorised callable theta(j, k) on integer arrays (last axis =
    components), or a :class:`SeparableTheta`.
    """
    Q = np.asarray(packet.center, dtype=np.int64)
    if isinstance(theta, Mapping):
        total = 0j
        for (j, k), w in theta.items():
            total += w * K_kernel(np.asarray(j), np.asarray(k), packet, geom)
        return complex(total)

    if packet.separable and (np.isscalar(theta) or isinstance(theta, SeparableTheta)):
        total = 1.0 + 0j
        for axis, f in enumerate(packet.factors):
            th = theta.axes[axis] if isinstance(theta, SeparableTheta) else None
            total *= _axis_sum(f, geom, th, int(Q[axis]))
        return complex(total * (1.0 if isinstance(theta, SeparableTheta) else theta))

    offs = packet.offsets()
    if len(offs) > DENSE_LIMIT:
        raise MemoryError(f"dense double sum over {len(offs)} support points; "
                          "use a separable packet and weight")
    h = packet.amplitudes.ravel()
    diff = offs[None, :, :] - offs[:, None, :]  # [jj, kk] -> k - j
    kmat = h[:, None] * np.conj(h)[None, :] * y_factor_index(diff, geom)
    if isinstance(theta, SeparableTheta):
        weights = np.ones_like(kmat)
        for axis, fn in enumerate(theta.axes):
            weights = weights * fn((offs[:, None, axis] + Q[axis]), (offs[None, :, axis] + Q[axis]))
    elif callable(theta):
        weights = theta(offs[:, None, :] + Q, offs[None, :, :] + Q)
    else:
        weights = theta
    return complex(np.sum(weights * kmat))


def extra_term_weight(packet: WavePacket, geom: CutoffGeometry) -> float:
    """Weight of the g = 0 diagonal relative to the full (leading) sum."""
    leading = transition_prob_wavepacket(1.0, packet, geom).real
    diag = diagonal_sum(packet, geom) if geom.confined else diagonal_sum_unconfined(packet)
    return diag / leading


@dataclass
class ContinuumReport:
    rows: list[dict] = field(default_factory=list)
    monotone: bool = True

    @property
    def ok(self) -> bool:
        return self.monotone


def continuum_limit_check(width: float, ell: float, L_sequence: Sequence[float],
                          dim: int = 3) -> ContinuumReport:
    """Diagonal weight and leading sum along increasing box sizes.

    ``deviation`` is the relative weight of the extra diagonal term: the
    amount by which the plane-wave-style sum with the g = 0 term included
    exceeds the Golden-Rule sum. It must fall monotonically with L.
    """
    Ls = list(L_sequence)
    if any(b <= a for a, b in zip(Ls, Ls[1:])):
        raise ValueError("L_sequence must be increasing")
    report = ContinuumReport()
    for L in Ls:
        geom = CutoffGeometry(L, ell)
        packet = gaussian_packet(L, width, dim=dim)
        diag = diagonal_sum(packet, geom)
        leading = transition_prob_wavepacket(1.0, packet, geom).real
        report.rows.append({"L": L, "ell": ell, "diagonal_sum": diag,
                            "leading": leading, "deviation": diag / leading})
    for prev, cur in zip(report.rows, report.rows[1:]):
        if not (cur["diagonal_sum"] < prev["diagonal_sum"] and cur["deviation"] < prev["deviation"]):
            report.monotone = False
    return report


def cutoff_independence(width: float, L: float, ells: Sequence[float], dim: int = 3) -> list[float]:
    """Leading transition sums at fixed L for each cutoff length."""
    packet = gaussian_packet(L, width, dim=dim)
    return [transition_prob_wavepacket(1.0, packet, CutoffGeometry(L, e)).real for e in ells]


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
