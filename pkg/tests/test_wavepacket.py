import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from crad.wavepacket import (
    CutoffGeometry,
    OffGridError,
    SeparableTheta,
    WavePacket,
    K_kernel,
    continuum_limit_check,
    cutoff_independence,
    diagonal_sum,
    diagonal_sum_grid,
    diagonal_sum_unconfined,
    extra_term_weight,
    gaussian_packet,
    loglog_slope,
    plane_wave_packet,
    random_packet,
    transition_prob_wavepacket,
    y_factor_1d,
    y_factor_index,
    y_integral_factor,
)


def dk(L):
    return 2 * math.pi / L


def test_y_factor_unconfined_is_kronecker():
    geom = CutoffGeometry(10.0)
    assert y_integral_factor(np.array([dk(10.0), 0.0, 0.0]), geom) == 0
    assert y_integral_factor(np.zeros(3), geom) == 1
    # the box integral sin(kappa L / 2)/(kappa L / 2) at kappa = 2 pi n / L
    for n in range(1, 6):
        assert abs(math.sin(math.pi * n) / (math.pi * n)) < 1e-15


def test_y_factor_confined_origin():
    L, ell = 100.0, 7.0
    geom = CutoffGeometry(L, ell)
    assert y_integral_factor(np.zeros(3), geom).real == pytest.approx((math.sqrt(math.pi) * ell / (2 * L)) ** 3)


@pytest.mark.parametrize("n", [0, 1, 3, 8])
def test_y_factor_against_box_quadrature(n):
    L, ell = 50.0, 6.0
    kappa = dk(L) * n
    re = integrate.quad(lambda y: math.cos(kappa * y / 2) * math.exp(-(y / ell) ** 2), -L, L,
                        limit=400, epsabs=1e-15)[0]
    assert y_factor_1d(n, CutoffGeometry(L, ell)) == pytest.approx(re / (2 * L), abs=1e-14)


@given(st.lists(st.integers(-30, 30), min_size=3, max_size=3))
def test_y_factor_even_and_real(n):
    geom = CutoffGeometry(80.0, 9.0)
    plus = y_factor_index(np.array(n), geom)
    minus = y_factor_index(-np.array(n), geom)
    assert plus == minus and np.isreal(plus)


def test_off_grid_and_bad_geometry():
    geom = CutoffGeometry(10.0, 1.0)
    with pytest.raises(OffGridError):
        y_integral_factor(np.array([0.3, 0.0, 0.0]), geom)
    with pytest.raises(ValueError, match="L/5"):
        CutoffGeometry(10.0, 3.0)
    with pytest.raises(ValueError):
        CutoffGeometry(-1.0)
    with pytest.raises(ValueError):
        CutoffGeometry(1.0, 0.0)


def test_physical_regime_flag():
    geom = CutoffGeometry(1000.0, 20.0)
    assert geom.in_physical_regime(r_C=1.0, width=1.0)
    assert not geom.in_physical_regime(r_C=5.0, width=1.0)
    assert not CutoffGeometry(1000.0).in_physical_regime(1.0, 1.0)


def test_packet_normalisation_enforced():
    with pytest.raises(ValueError, match="normalised"):
        WavePacket(10.0, (0, 0, 0), dense=np.ones((3, 3, 3), complex))
    pk = gaussian_packet(200.0, 1.0)
    assert pk.norm2 == pytest.approx(1.0, abs=1e-12)
    assert pk.grid_spacing == pytest.approx(dk(200.0))


def test_plane_wave_forces_diagonal():
    L = 40.0
    Q = (2, -1, 0)
    pk = plane_wave_packet(L, center=Q)
    geom = CutoffGeometry(L, 5.0)
    assert K_kernel(Q, Q, pk, geom) != 0
    assert K_kernel(Q, (3, -1, 0), pk, geom) == 0
    assert K_kernel((3, -1, 0), (3, -1, 0), pk, geom) == 0


def test_unconfined_forces_diagonal():
    rng = np.random.default_rng(0)
    pk = random_packet(30.0, 2, 3, rng)
    geom = CutoffGeometry(30.0)
    offs = pk.offsets()
    j, k = offs[:, None, :], offs[None, :, :]
    K = K_kernel(j, k, pk, geom)
    assert np.count_nonzero(K - np.diag(np.diag(K))) == 0


def test_both_together_give_double_kronecker():
    pk = plane_wave_packet(30.0, center=(1, 1, 1))
    geom = CutoffGeometry(30.0)
    assert transition_prob_wavepacket({((1, 1, 1), (1, 1, 1)): 1.0}, pk, geom) == 1.0
    assert transition_prob_wavepacket(1.0, pk, geom) == 1.0


def test_kernel_hermitian_and_diagonal_nonnegative():
    rng = np.random.default_rng(4)
    pk = random_packet(40.0, 2, 3, rng, center=(3, 0, -2))
    geom = CutoffGeometry(40.0, 6.0)
    offs = pk.offsets() + np.array(pk.center)
    j, k = offs[:, None, :], offs[None, :, :]
    K = K_kernel(j, k, pk, geom)
    assert np.allclose(K, np.conj(K.T), atol=1e-16)
    diag = np.diag(K)
    assert np.all(np.abs(diag.imag) == 0) and np.all(diag.real >= 0)


def test_kernel_zero_outside_support():
    pk = gaussian_packet(50.0, 1.0)
    far = (pk.radius[0] + 1, 0, 0)
    assert K_kernel(far, (0, 0, 0), pk, CutoffGeometry(50.0, 5.0)) == 0


def test_diagonal_sum_example_and_grid_oracle():
    L = 400.0
    geom = CutoffGeometry(L, 0.1 * L)
    pk = gaussian_packet(L, 0.05)
    assert diagonal_sum(pk, geom) == pytest.approx((math.sqrt(math.pi) * 0.05) ** 3, rel=1e-12)
    assert diagonal_sum(pk, geom) == pytest.approx(6.963e-4, rel=1e-3)
    rng = np.random.default_rng(9)
    rp = random_packet(L, 2, 3, rng)
    assert diagonal_sum_grid(rp, geom) == pytest.approx(diagonal_sum(rp, geom), rel=1e-13)
    assert diagonal_sum_grid(pk, geom) == pytest.approx(diagonal_sum(pk, geom), rel=1e-13)


def test_diagonal_sum_cubic_law():
    L = 1000.0
    pk = gaussian_packet(L, 0.1)
    base = diagonal_sum(pk, CutoffGeometry(L, 10.0))
    assert diagonal_sum(pk, CutoffGeometry(L, 20.0)) == pytest.approx(8 * base, rel=1e-14)
    ratios = np.geomspace(0.01, 0.1, 7)
    sums = [diagonal_sum_grid(pk, CutoffGeometry(L, r * L)) for r in ratios]
    assert abs(loglog_slope(ratios, sums) - 3.0) < 1e-10


def test_diagonal_sum_linear_law_in_one_dimension():
    L = 500.0
    pk = gaussian_packet(L, 0.2, dim=1)
    ratios = np.geomspace(0.01, 0.1, 5)
    sums = [diagonal_sum(pk, CutoffGeometry(L, r * L)) for r in ratios]
    assert abs(loglog_slope(ratios, sums) - 1.0) < 1e-10


def test_diagonal_sum_unconfined_branch():
    pk = gaussian_packet(100.0, 0.5)
    with pytest.raises(ValueError):
        diagonal_sum(pk, CutoffGeometry(100.0))
    assert diagonal_sum_unconfined(pk) == pytest.approx(1.0, abs=1e-12)


def test_transition_prob_unconfined_is_norm():
    pk = gaussian_packet(150.0, 1.0)
    assert transition_prob_wavepacket(1.0, pk, CutoffGeometry(150.0)).real == pytest.approx(1.0, abs=1e-12)


def test_transition_prob_recovers_leading_term():
    w = 1.0
    ell = 20 / w
    L = 50 * ell
    pk = gaussian_packet(L, w)
    val = transition_prob_wavepacket(1.0, pk, CutoffGeometry(L, ell))
    assert abs(val.imag) < 1e-12
    assert val.real == pytest.approx(1.0, abs=0.05)
    # per-axis Gaussian overlap 1/sqrt(1 + 2/(ell w)^2)
    assert val.real == pytest.approx((1 + 2 / (ell * w) ** 2) ** -1.5, rel=1e-5)


def test_center_pick_out():
    L, ell = 60.0, 8.0
    Q = (1, 2, 3)
    pk = gaussian_packet(L, 0.5, center=Q)
    geom = CutoffGeometry(L, ell)
    val = transition_prob_wavepacket({(Q, Q): 1.0}, pk, geom)
    h0 = pk.h(np.zeros(3, int))
    assert val == pytest.approx(abs(h0) ** 2 * (math.sqrt(math.pi) * ell / (2 * L)) ** 3, rel=1e-13)


def test_theta_forms_agree():
    L, ell = 60.0, 8.0
    pk = gaussian_packet(L, 0.15, center=(2, 0, -1))
    geom = CutoffGeometry(L, ell)
    axes = tuple((lambda j, k, s=s: np.cos(0.1 * s * (j - k)) + 0.2j * (j == k)) for s in (1, 2, 3))
    sep = transition_prob_wavepacket(SeparableTheta(axes), pk, geom)

    def dense(j, k):
        out = np.ones(np.broadcast_shapes(j.shape, k.shape)[:-1], complex)
        for a, fn in enumerate(axes):
            out = out * fn(j[..., a], k[..., a])
        return out

    dense_pk = WavePacket(L, pk.center, dense=pk.amplitudes)
    assert transition_prob_wavepacket(dense, dense_pk, geom) == pytest.approx(sep, rel=1e-12)
    assert transition_prob_wavepacket(SeparableTheta(axes), dense_pk, geom) == pytest.approx(sep, rel=1e-12)
    # scalar, dense and mapping forms on a small random packet
    rng = np.random.default_rng(3)
    rp = random_packet(L, 1, 3, rng)
    offs = [tuple(o) for o in rp.offsets()]
    mapping = {(j, k): 1.0 for j in offs for k in offs}
    ones = lambda j, k: np.ones(np.broadcast_shapes(j.shape, k.shape)[:-1])
    ref = transition_prob_wavepacket(1.0, rp, geom)
    assert transition_prob_wavepacket(mapping, rp, geom) == pytest.approx(ref, rel=1e-12)
    assert transition_prob_wavepacket(ones, rp, geom) == pytest.approx(ref, rel=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(0, 2), st.floats(0.5, 10.0))
def test_transition_prob_bounded(seed, radius, ell):
    L = 60.0
    pk = random_packet(L, radius, 3, np.random.default_rng(seed))
    for geom in (CutoffGeometry(L, ell), CutoffGeometry(L)):
        val = transition_prob_wavepacket(1.0, pk, geom)
        assert -1e-15 <= val.real <= 1 + 1e-12
        assert abs(val.imag) < 1e-12


def test_continuum_limit_check():
    rep = continuum_limit_check(1.0, 20.0, [200.0, 400.0, 800.0])
    assert rep.ok
    sums = [r["diagonal_sum"] for r in rep.rows]
    assert sums[0] / sums[1] == pytest.approx(8.0, rel=1e-12)
    assert sums[1] / sums[2] == pytest.approx(8.0, rel=1e-12)
    devs = [r["deviation"] for r in rep.rows]
    assert devs[0] > devs[1] > devs[2]
    with pytest.raises(ValueError):
        continuum_limit_check(1.0, 20.0, [400.0, 200.0])


def test_cutoff_independence():
    vals = cutoff_independence(1.0, 2000.0, [20.0, 40.0])
    assert abs(vals[1] - vals[0]) / vals[0] < 0.01


def test_extra_term_weight_small_at_ell_over_L_005():
    L = 400.0
    assert extra_term_weight(gaussian_packet(L, 1.0), CutoffGeometry(L, 0.05 * L)) < 1e-3
