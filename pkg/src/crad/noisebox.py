"""Box-discretised Gaussian noise field, white in time.

Modes N~(j, t_n), j in {-jmax..jmax}^dim, have

    E[N~(j, t_n) N~(j', t_m)] = L^dim F~(2 pi j / L) delta_{j,-j'} delta_{nm} / dt,

and the real field is N(x, t_n) = L^-dim sum_j exp(i 2 pi j.x / L) N~(j, t_n),
so that E[N(x) N(y)] dt = F_L(x - y), the truncated Fourier sum of the
Gaussian spatial correlator.

Each realization draws from its own stream seeded by (seed, index), so the
output does not depend on how realizations are spread over workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, partial
from typing import Sequence

import numpy as np

from .correlations import F_spatial, F_tilde_spatial, SpatialCorrelation
from .parallel import chunked, ordered_map

# k_max r_C at which the Gaussian spectrum has fallen to e^-25
RESOLVED_KR = 5.0


@dataclass(frozen=True)
class BoxSpec:
    L: float
    jmax: int
    dt: float = 1.0
    dim: int = 1
    r_C: float = 1.0

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"L must be > 0, got {self.L!r}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt!r}")
        if int(self.jmax) != self.jmax or self.jmax < 1:
            raise ValueError(f"jmax must be an integer >= 1, got {self.jmax!r}")
        if self.dim not in (1, 3):
            raise ValueError(f"dim must be 1 or 3, got {self.dim!r}")
        if not self.r_C > 0:
            raise ValueError(f"r_C must be > 0, got {self.r_C!r}")

    @classmethod
    def resolved(cls, L: float, r_C: float, dt: float = 1.0, dim: int = 1,
                 kr: float = RESOLVED_KR) -> "BoxSpec":
        """Smallest jmax with (2 pi / L) jmax r_C >= kr."""
        return cls(L, max(1, math.ceil(kr * L / (2 * math.pi * r_C))), dt, dim, r_C)

    @property
    def dk(self) -> float:
        return 2 * math.pi / self.L

    @property
    def spectrum_resolved(self) -> bool:
        return self.dk * self.jmax * self.r_C >= RESOLVED_KR

    @property
    def side(self) -> int:
        return 2 * self.jmax + 1

    @property
    def n_modes(self) -> int:
        return self.side**self.dim

    @property
    def spatial(self) -> SpatialCorrelation:
        return SpatialCorrelation(self.r_C)

    @cached_property
    def mode_indices(self) -> np.ndarray:
        """All j vectors, shape (n_modes, dim), C order. Row n_modes-1-i holds -j_i."""
        axis = np.arange(-self.jmax, self.jmax + 1)
        grids = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)


def mode_variance(j, box: BoxSpec) -> np.ndarray:
    """L^dim F~(2 pi j / L) / dt; the last axis of ``j`` holds components."""
    j = np.asarray(j)
    single = j.ndim == 0 or (j.ndim == 1 and box.dim > 1)
    if box.dim == 1 and (j.ndim == 0 or j.shape[-1] != 1):
        j = j[..., None]
    if j.shape[-1] != box.dim:
        raise ValueError(f"mode index has {j.shape[-1]} components, box has dim {box.dim}")
    if np.any(np.abs(j) > box.jmax):
        raise ValueError(f"mode index {j.tolist()} outside |j| <= {box.jmax}")
    var = box.L**box.dim * F_tilde_spatial(box.dk * j, box.spatial) / box.dt
    return float(var) if single else var


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    """Mode amplitudes of one realization, shape (n_steps, n_modes)."""

    modes: np.ndarray
    seed: int
    index: int = 0

    def mode(self, j, box: BoxSpec) -> np.ndarray:
        """Time series of N~(j) for one integer vector j."""
        j = np.atleast_1d(np.asarray(j, dtype=np.int64)) + box.jmax
        flat = int(np.ravel_multi_index(tuple(j), (box.side,) * box.dim))
        return self.modes[:, flat]


def _positive_half(box: BoxSpec) -> np.ndarray:
    # representatives of {j, -j}: first nonzero component positive
    idx = box.mode_indices
    first = np.argmax(idx != 0, axis=1)
    lead = idx[np.arange(len(idx)), first]
    return np.flatnonzero(lead > 0)


def _draw(box: BoxSpec, n_steps: int, seed: int, index: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))
    var = mode_variance(box.mode_indices, box)
    pos = _positive_half(box)
    neg = box.n_modes - 1 - pos
    zero = box.n_modes // 2
    modes = np.empty((n_steps, box.n_modes), dtype=complex)
    z = rng.standard_normal((n_steps, len(pos), 2))
    half = np.sqrt(var[pos] / 2)
    modes[:, pos] = half * (z[..., 0] + 1j * z[..., 1])
    modes[:, neg] = np.conj(modes[:, pos])
    modes[:, zero] = math.sqrt(var[zero]) * rng.standard_normal(n_steps)
    return modes


def sample_noise(box: BoxSpec, n_steps: int, seed: int, index: int = 0) -> NoiseRealization:
    """One realization of ``n_steps`` independent time slices."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    return NoiseRealization(_draw(box, n_steps, seed, index), int(seed), int(index))


def _draw_chunk(indices, box, n_steps, seed):
    return np.stack([_draw(box, n_steps, seed, i) for i in indices])


def sample_ensemble(box: BoxSpec, n_realizations: int, seed: int, n_steps: int = 1,
                    jobs: int = 1) -> np.ndarray:
    """Stacked modes of realizations 0..n-1, shape (n_realizations, n_steps, n_modes)."""
    if n_realizations < 1:
        raise ValueError("n_realizations must be >= 1")
    pieces = chunked(range(n_realizations), jobs * 4 if jobs > 1 else 1)
    parts = ordered_map(partial(_draw_chunk, box=box, n_steps=n_steps, seed=seed), pieces, jobs)
    return np.concatenate(parts)


def _as_modes(realizations) -> np.ndarray:
    if isinstance(realizations, np.ndarray):
        return realizations
    return np.stack([r.modes for r in realizations])


def check_reality(modes: np.ndarray, box: BoxSpec) -> bool:
    """Exact N~(-j) = conj(N~(j)) with real self-conjugate mode."""
    flipped = modes[..., ::-1]
    return bool(np.array_equal(flipped, np.conj(modes)))


def synthesize(modes: np.ndarray, box: BoxSpec, x) -> np.ndarray:
    """Real field N(x) at points ``x`` (shape (n_points, dim) or (n_points,) for dim 1)."""
    x = np.asarray(x, dtype=float).reshape(-1, box.dim)
    phase = np.exp(1j * box.dk * (x @ box.mode_indices.T))  # (n_points, n_modes)
    field = modes @ phase.T / box.L**box.dim
    return field.real


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float

    def zscore(self, reference: float) -> float:
        return abs(self.value - reference) / self.stderr if self.stderr > 0 else math.inf


def jackknife(samples: np.ndarray, n_blocks: int = 100) -> Estimate:
    """Mean with a delete-one-block jackknife standard error."""
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    if n < 2:
        raise ValueError("jackknife needs at least two samples")
    n_blocks = min(n_blocks, n)
    blocks = np.array_split(samples, n_blocks)
    sums = np.array([b.sum() for b in blocks])
    counts = np.array([len(b) for b in blocks])
    total, count = math.fsum(sums), n
    loo = (total - sums) / (count - counts)
    mean = total / count
    var = (n_blocks - 1) / n_blocks * np.sum((loo - loo.mean()) ** 2)
    return Estimate(mean, math.sqrt(var))


def estimate_F_L(realizations, box: BoxSpec, x_minus_y, n_blocks: int = 100) -> Estimate:
    """Monte Carlo E[N(x) N(0)] dt over realizations and time steps."""
    modes = _as_modes(realizations)
    if modes.shape[0] < 2:
        raise ValueError("need at least two realizations")
    dx = np.zeros(box.dim) + np.asarray(x_minus_y, dtype=float)
    field = synthesize(modes, box, np.stack([dx, np.zeros(box.dim)]))  # (n_real, n_steps, 2)
    per_real = np.mean(field[..., 0] * field[..., 1], axis=1) * box.dt
    return jackknife(per_real, n_blocks)


def pair_moment(realizations, box: BoxSpec, j1, j2) -> tuple[Estimate, Estimate]:
    """Real and imaginary parts of E[N~(j1) N~(j2)], normalised by the mode std."""
    modes = _as_modes(realizations)
    flat = [int(np.ravel_multi_index(tuple(np.atleast_1d(j) + box.jmax), (box.side,) * box.dim))
            for j in (j1, j2)]
    scale = math.sqrt(mode_variance(j1, box) * mode_variance(j2, box))
    prod = (modes[:, :, flat[0]] * modes[:, :, flat[1]]).reshape(-1) / scale
    return jackknife(prod.real), jackknife(prod.imag)


def _axis_sum(box: BoxSpec, dx) -> np.ndarray:
    dx = np.asarray(dx, dtype=float)
    j = np.arange(-box.jmax, box.jmax + 1)
    k = box.dk * j
    weight = np.exp(-(k * box.r_C) ** 2)
    return np.cos(np.multiply.outer(dx, k)) @ weight / box.L


def F_L_analytic(box: BoxSpec, x_minus_y) -> np.ndarray:
    """Truncated mode sum L^-dim sum_j cos(2 pi j.dx / L) F~(2 pi j / L).

    In 3D the Gaussian spectrum factorises into a product of 1D sums.
    """
    dx = np.asarray(x_minus_y, dtype=float)
    if box.dim == 1:
        return _axis_sum(box, dx)
    if dx.shape[-1] != 3:
        raise ValueError("dim = 3 needs displacement vectors")
    return _axis_sum(box, dx[..., 0]) * _axis_sum(box, dx[..., 1]) * _axis_sum(box, dx[..., 2])


def F_L_dense(box: BoxSpec, x_minus_y) -> np.ndarray:
    """Direct complex sum over every mode; reference for the factorised form."""
    dx = np.asarray(x_minus_y, dtype=float).reshape(-1, box.dim)
    j = box.mode_indices
    spec = F_tilde_spatial(box.dk * j, box.spatial)
    return (np.exp(1j * box.dk * dx @ j.T) @ spec) / box.L**box.dim


def F_L_error(box: BoxSpec, dx) -> np.ndarray:
    """|F_L - F| at 1D displacements, without cancellation.

    Poisson summation gives F_L(x) - F(x) = sum_{m != 0} F(x + mL) - tail(x),
    where tail(x) is the part of the mode sum beyond jmax; both pieces are
    summed directly so that deviations far below F(0) eps stay resolvable.
    """
    if box.dim != 1:
        raise ValueError("F_L_error is one-dimensional")
    dx = np.atleast_1d(np.asarray(dx, dtype=float))
    spatial = box.spatial
    m_max = 2 + math.ceil(12 * box.r_C / box.L)
    images = np.zeros_like(dx)
    for m in range(m_max, 0, -1):
        images += F_spatial(dx[:, None] + m * box.L, spatial)
        images += F_spatial(dx[:, None] - m * box.L, spatial)
    # 30 / r_C past the cutoff the spectrum is below e^-900: zero in doubles
    j = np.arange(box.jmax + 1, box.jmax + 2 + math.ceil(30 / (box.dk * box.r_C)))
    k = box.dk * j
    tail = 2 * np.cos(np.multiply.outer(dx, k)) @ np.exp(-(k * box.r_C) ** 2) / box.L
    return np.abs(images - tail)


def image_resolving_jmax(L: float, r_C: float) -> int:
    """jmax whose truncation tail lies far below the first periodic image F(L/2)."""
    kr = max(RESOLVED_KR, L / (4 * r_C) + 4)
    return math.ceil(kr * L / (2 * math.pi * r_C))


@dataclass
class ConvergenceReport:
    rows: list[dict] = field(default_factory=list)
    monotone: bool = True
    mc_consistent: bool = True

    @property
    def ok(self) -> bool:
        return self.monotone and self.mc_consistent


def convergence_study(L_sequence: Sequence[float], r_C: float = 1.0, dt: float = 1.0,
                      n_realizations: int = 2000, seed: int = 0, n_dx: int = 201,
                      mc_points: Sequence[float] = (0.0, 1.0, 2.0, 4.0),
                      jobs: int = 1, z_limit: float = 3.0) -> ConvergenceReport:
    """Analytic max |F_L - F| over [0, L/2] and a Monte Carlo check per box size (dim 1).

    ``mc_points`` are displacements in units of r_C. The analytic column uses a
    jmax fine enough that the periodic images dominate the error; the Monte
    Carlo column uses the spectrum-resolved box.
    """
    Ls = [float(v) for v in L_sequence]
    if any(b <= a for a, b in zip(Ls, Ls[1:])):
        raise ValueError("L_sequence must be increasing")
    report = ConvergenceReport()
    for L in Ls:
        fine = BoxSpec(L, image_resolving_jmax(L, r_C), dt, 1, r_C)
        xs = np.linspace(0.0, L / 2, n_dx)
        analytic_dev = float(np.max(F_L_error(fine, xs)))
        box = BoxSpec.resolved(L, r_C, dt, 1)
        modes = sample_ensemble(box, n_realizations, seed, jobs=jobs)
        worst_z, worst_dev, worst_se = 0.0, 0.0, 0.0
        for x in mc_points:
            est = estimate_F_L(modes, box, x * r_C)
            ref = float(F_L_analytic(box, x * r_C))
            z = est.zscore(ref)
            if z >= worst_z:
                worst_z, worst_dev, worst_se = z, abs(est.value - ref), est.stderr
        report.rows.append({"L": L, "jmax": box.jmax, "analytic_dev": analytic_dev,
                            "mc_dev": worst_dev, "stderr": worst_se, "mc_z": worst_z})
        if worst_z > z_limit:
            report.mc_consistent = False
    for prev, cur in zip(report.rows, report.rows[1:]):
        if not cur["analytic_dev"] < prev["analytic_dev"]:
            report.monotone = False
    return report
