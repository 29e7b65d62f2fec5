import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from crad.correlations import Exponential, GaussianTime, White, f_tilde
from crad.emission import (
    BETA_D_RELIABLE,
    Kinematics,
    beta_and_D,
    capital_lambda,
    coeff_a,
    polarization_basis,
    polarization_sum,
    qz_integral,
    qz_integral_reduced,
    rate_colored_planewave,
    rate_golden_rule,
    rate_white,
    rate_white_pipeline,
    spectrum_sweep,
)
from crad.params import C_SI, HBAR_SI, KEV, PhysicalParams

SI = PhysicalParams()
P_1KEV = KEV / (HBAR_SI * C_SI)  # wavenumber of a 1 keV photon
CORRS = [White(), Exponential(1e-18), GaussianTime(3e-19)]


def test_coeff_a_examples():
    p = 3e9
    recoil = SI.hbar * p**2 / (2 * SI.mass_m)
    kin = Kinematics(p)
    assert coeff_a(kin, SI) == pytest.approx(p * SI.c - recoil, rel=1e-15)
    assert coeff_a(Kinematics(p, q=(0.0, 0.0, -p)), SI) == pytest.approx(p * SI.c + recoil, rel=1e-15)
    assert coeff_a(kin, SI, delta_approx=True) == pytest.approx(p * SI.c + recoil, rel=1e-15)
    assert coeff_a(Kinematics(2 * p), SI) == pytest.approx(2 * p * SI.c - 4 * recoil, rel=1e-15)


def test_capital_lambda_scaling():
    base = capital_lambda(Kinematics(1e9, box_L=1.0), SI)
    assert capital_lambda(Kinematics(1e9, box_L=2.0), SI) == pytest.approx(base / 64, rel=1e-14)
    assert capital_lambda(Kinematics(2e9, box_L=1.0), SI) == pytest.approx(base / 2, rel=1e-14)


def test_kinematics_validation():
    with pytest.raises(ValueError):
        Kinematics(0.0)
    with pytest.raises(ValueError):
        Kinematics(1.0, box_L=-1.0)


def test_qz_integral_reduced_point():
    res = qz_integral_reduced(1.0, 100.0, 30.0)
    assert res.approx == pytest.approx(math.sqrt(math.pi) / 100**2)
    assert res.approx == pytest.approx(1.7725e-4, rel=1e-4)
    assert res.numeric == pytest.approx(res.approx, rel=0.01)
    assert res.reliable


def test_qz_integral_time_doubling():
    r1 = qz_integral_reduced(1.0, 100.0, 30.0)
    r2 = qz_integral_reduced(1.0, 100.0, 60.0)
    assert r1.approx == r2.approx
    assert r2.numeric == pytest.approx(r1.numeric, rel=1e-8)


def test_qz_integral_flags_small_beta_D():
    res = qz_integral_reduced(1.0, 2.0, 30.0)
    assert res.beta_D < BETA_D_RELIABLE and not res.reliable


def test_physical_regime_diagnostics():
    # keV photons and a free electron: beta ~ 1e-13 s, D ~ 1e18-1e19 s^-1
    for kev in (1.0, 10.0):
        beta, D = beta_and_D(kev * P_1KEV, SI)
        assert 1e-14 < beta < 1e-12
        assert 1e18 < D < 1e20
    beta, D = beta_and_D(P_1KEV, SI)
    assert beta == pytest.approx(1.7e-13, rel=0.01)
    res = qz_integral(P_1KEV, 30 * beta, SI)
    assert res.numeric == pytest.approx(res.approx, rel=1e-6)


def test_rate_white_inverse_p():
    rng = np.random.default_rng(1)
    for p in 10 ** rng.uniform(8, 11, 10):
        assert rate_white(p, SI).value / rate_white(2 * p, SI).value == pytest.approx(2.0, rel=1e-14)


def test_white_rate_is_twice_golden_rule():
    for p in (1e9, P_1KEV, 1e11):
        assert rate_white(p, SI).value == pytest.approx(2 * rate_golden_rule(p, SI, White()).value, rel=1e-15)


def test_pipeline_reduced_regime():
    params = PhysicalParams.reduced(gamma=1.0, r_C=1e6)
    p = 1e-3
    res = rate_white_pipeline(p, params)
    assert res.beta_D == pytest.approx(1e6, rel=1e-3)
    assert res.value == pytest.approx(rate_white(p, params).value, rel=0.02)


@pytest.mark.parametrize("kev", [1.0, 10.0])
def test_pipeline_physical_regime_recoil(kev):
    # the closed form takes D = pc; the pipeline keeps hbar p^2 / 2m in D
    p = kev * P_1KEV
    beta, D = beta_and_D(p, SI)
    ratio = rate_white_pipeline(p, SI).value / rate_white(p, SI).value
    assert ratio == pytest.approx((p * SI.c / D) ** 2, rel=1e-8)


def test_pipeline_flags_unreliable_regime():
    params = PhysicalParams.reduced(gamma=1.0, r_C=2.0)
    res = rate_white_pipeline(1.0, params)
    assert res.beta_D < BETA_D_RELIABLE
    assert "beta_D_below_10" in res.flags and not res.reliable


def test_planewave_examples():
    p = P_1KEV
    white = rate_white(p, SI).value
    assert rate_colored_planewave(p, SI, White()).value == pytest.approx(white, rel=1e-15)
    # p c tau >> 1: only the momentum-independent half survives
    slow = Exponential(1e-12)
    assert rate_colored_planewave(p, SI, slow).value == pytest.approx(0.5 * white, rel=1e-6)
    assert "zero_frequency_term" in rate_colored_planewave(p, SI, slow).flags


def test_golden_rule_examples():
    p = P_1KEV
    white = rate_white(p, SI).value
    tau = 1 / (p * SI.c)
    assert rate_golden_rule(p, SI, Exponential(tau)).value == pytest.approx(0.25 * white, rel=1e-12)


@given(st.floats(1e7, 1e12), st.sampled_from(CORRS))
def test_bracket_bounds_and_ordering(p, corr):
    white = rate_white(p, SI).value
    pw = rate_colored_planewave(p, SI, corr).value
    gr = rate_golden_rule(p, SI, corr).value
    assert 0.5 * white * (1 - 1e-15) <= pw <= white * (1 + 1e-15)
    assert gr <= pw
    assert pw >= 0.5 * float(f_tilde(corr, p * SI.c)) * white * (1 - 1e-15)
    assert pw - gr == pytest.approx(0.5 * white, rel=1e-12)


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
def test_polarization_sum_is_transverse(q):
    q = np.array(q)
    assert polarization_sum(q) == pytest.approx(q[0] ** 2 + q[1] ** 2, rel=1e-12, abs=1e-9)


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 0.1))
def test_polarization_basis_orthonormal(direction):
    n = np.asarray(direction) / np.linalg.norm(direction)
    basis = polarization_basis(n)
    assert np.allclose(basis @ basis.T, np.eye(2), atol=1e-12)
    assert np.allclose(basis @ n, 0.0, atol=1e-12)


def test_spectrum_sweep_laws():
    white = spectrum_sweep(1e8, 1e11, 12, SI, mode="white")
    ps = [r["p"] for r in white]
    assert ps == sorted(ps)
    slope = np.polyfit(np.log(ps), np.log([r["rate"] for r in white]), 1)[0]
    assert abs(slope + 1) < 1e-12
    golden = spectrum_sweep(1e8, 1e11, 12, SI, White(), mode="golden")
    assert [g["rate"] for g in golden] == pytest.approx([w["rate"] / 2 for w in white], rel=1e-15)
    corr = Exponential(1e-18)
    pw = spectrum_sweep(1e8, 1e11, 12, SI, corr, mode="planewave")
    gr = spectrum_sweep(1e8, 1e11, 12, SI, corr, mode="golden")
    diffs = [(a["rate"] - b["rate"]) / w["rate"] for a, b, w in zip(pw, gr, white)]
    assert np.allclose(diffs, 0.5, rtol=1e-12)
    assert set(pw[0]) == {"p", "rate", "mode", "corr_tag", "f_tilde_pc", "beta_D_flag"}


def test_spectrum_sweep_rejects_bad_ranges():
    with pytest.raises(ValueError):
        spectrum_sweep(1e9, 1e8, 5, SI)
    with pytest.raises(ValueError):
        spectrum_sweep(0.0, 1e8, 5, SI)
    with pytest.raises(ValueError):
        spectrum_sweep(1e8, 1e9, 1, SI)
    with pytest.raises(ValueError):
        spectrum_sweep(1e8, 1e9, 4, SI, mode="dipole")
