"""End-to-end acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line (with the measured figure and the
runtime) that is printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from crad import cli
from crad.correlations import Exponential
from crad.emission import rate_white, rate_white_pipeline
from crad.harness import reproduce_factor_of_two
from crad.kernels import (
    FrequencyCoefficients,
    colored_T,
    rate_asymptote,
    white_T,
    white_T_free,
    white_T_oracle,
    window_average_rate,
)
from crad.noisebox import (
    BoxSpec,
    F_L_analytic,
    convergence_study,
    estimate_F_L,
    jackknife,
    mode_variance,
    pair_moment,
    sample_ensemble,
)
from crad.params import PhysicalParams
from crad.wavepacket import (
    CutoffGeometry,
    cutoff_independence,
    diagonal_sum,
    gaussian_packet,
    loglog_slope,
    transition_prob_wavepacket,
)


def record(log, number, passed, detail, elapsed):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}  [{elapsed:.2f} s]"
    log.append(line)
    print(line)
    return passed


def test_criterion_1_kernel_oracle_equivalence(acceptance_log):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        a, b, c = rng.uniform(0.2, 3, 3) * rng.choice([-1, 1], 3)
        coeffs = FrequencyCoefficients(a, b, c, -(a + b + c))
        t = rng.uniform(0.1, 10) / abs(a)
        fast = white_T(coeffs, t).value
        slow = white_T_oracle(coeffs, t, 1e-10).value
        worst = max(worst, abs(fast - slow) / (1 + abs(fast)))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-7 and elapsed < 10
    assert record(acceptance_log, 1, ok, f"max |dT|/(1+|T|) = {worst:.2e} (< 1e-7)", elapsed)


def test_criterion_2_free_particle_identity(acceptance_log):
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    worst_formula = worst_limit = 0.0
    for _ in range(20):
        a = rng.uniform(0.2, 3) * rng.choice([-1, 1])
        t = rng.uniform(0.1, 10) / abs(a)
        free = white_T_free(a, t).value
        closed = 2 * (a * t - math.sin(a * t)) / a**3
        worst_formula = max(worst_formula, abs(free - closed) / abs(closed))
        for g in (1e-9, -1e-9):
            near = white_T(FrequencyCoefficients.from_acg(a, -a - g, g), t).value
            worst_limit = max(worst_limit, abs(near - free) / abs(free))
    elapsed = time.perf_counter() - start
    ok = worst_formula < 1e-6 and worst_limit < 1e-6
    detail = f"closed form {worst_formula:.1e}, g->0 limit {worst_limit:.1e} (< 1e-6 rel)"
    assert record(acceptance_log, 2, ok, detail, elapsed)


def test_criterion_3_factor_of_two(acceptance_log):
    start = time.perf_counter()
    rep = reproduce_factor_of_two()
    elapsed = time.perf_counter() - start
    ok = abs(rep.ratio - 2.0) <= 0.02 and elapsed < 5
    assert record(acceptance_log, 3, ok, f"ratio = {rep.ratio:.6f} (2.00 +- 0.02)", elapsed)


def test_criterion_4_colored_asymptote(acceptance_log):
    rng = np.random.default_rng(404)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(10):
        a = rng.uniform(0.5, 2.0)
        b = rng.uniform(-1.0, 1.0)
        tau = rng.uniform(0.05, 1.0) / a
        corr = Exponential(tau)
        coeffs = FrequencyCoefficients.free(a, b)
        numeric = window_average_rate(coeffs, corr, t_start=60 / a)
        target = rate_asymptote(a, b, corr)
        worst = max(worst, abs(numeric - target) / abs(target))
    elapsed = time.perf_counter() - start
    assert record(acceptance_log, 4, worst < 0.02, f"max rel dev = {worst:.2e} (< 2%)", elapsed)


def test_criterion_5_white_limit_of_colored(acceptance_log):
    coeffs = FrequencyCoefficients(1.2, 0.5, -0.9, -0.8)
    t = 4.0
    start = time.perf_counter()
    white = white_T(coeffs, t).value
    errs = [abs(colored_T(coeffs, t, Exponential(k / abs(coeffs.a))).value - white)
            for k in (0.1, 0.01, 0.001)]
    elapsed = time.perf_counter() - start
    final = errs[-1] / abs(white)
    ok = errs[0] > errs[1] > errs[2] and final < 1e-3
    detail = "errors " + ", ".join(f"{e:.2e}" for e in errs) + f"; final rel {final:.1e} (< 1e-3)"
    assert record(acceptance_log, 5, ok, detail, elapsed)


def test_criterion_6_rate_pipeline(acceptance_log):
    params = PhysicalParams.reduced(gamma=1.0, r_C=1e6)
    p = 1e-3
    start = time.perf_counter()
    res = rate_white_pipeline(p, params)
    analytic = rate_white(p, params).value
    elapsed = time.perf_counter() - start
    dev = abs(res.value - analytic) / analytic
    ok = dev < 0.02 and elapsed < 60 and 0.5e6 < res.beta_D < 2e6
    detail = f"beta*D = {res.beta_D:.3g}, rel dev = {dev:.2e} (< 2%)"
    assert record(acceptance_log, 6, ok, detail, elapsed)


def test_criterion_7_suppression_law(acceptance_log):
    start = time.perf_counter()
    L = 1000.0
    packet = gaussian_packet(L, 0.1)
    ratios = np.geomspace(0.01, 0.1, 7)
    slope = loglog_slope(ratios, [diagonal_sum(packet, CutoffGeometry(L, r * L)) for r in ratios])

    width = 1.0
    ell = 20 / width
    L_big = 50 * ell
    theta = transition_prob_wavepacket(1.0, gaussian_packet(L_big, width),
                                       CutoffGeometry(L_big, ell)).real
    recovery = abs(theta - 1.0)

    vals = cutoff_independence(width, 2000.0, [20.0, 40.0])
    change = abs(vals[1] - vals[0]) / vals[0]
    elapsed = time.perf_counter() - start
    ok = abs(slope - 3.0) < 1e-6 and recovery < 0.05 and change < 0.01
    detail = (f"slope = {slope:.9f}, Theta recovery off by {recovery:.2%}, "
              f"ell variation {change:.2%}")
    assert record(acceptance_log, 7, ok, detail, elapsed)


def test_criterion_8_noise_box_statistics(acceptance_log):
    start = time.perf_counter()
    box = BoxSpec.resolved(20.0, 1.0, dt=0.5)
    ens = sample_ensemble(box, 10_000, seed=8)
    flat = ens.reshape(-1, box.n_modes)

    worst_mean = 0.0
    for j in range(box.jmax + 1):
        col = flat[:, j + box.jmax] / math.sqrt(mode_variance(j, box))
        for part in (col.real, col.imag) if j else (col.real,):
            est = jackknife(part)
            worst_mean = max(worst_mean, abs(est.value) / est.stderr)

    worst_cross = 0.0
    for j1, j2 in ((1, 1), (1, 2), (0, 3), (2, -3), (4, 4), (0, 1), (3, 5)):
        for est in pair_moment(ens, box, j1, j2):
            worst_cross = max(worst_cross, abs(est.value) / est.stderr)

    worst_z = max(estimate_F_L(ens, box, x).zscore(float(F_L_analytic(box, x)))
                  for x in (0.0, 0.5, 1.0, 2.0, 4.0))

    rep = convergence_study([20.0, 40.0, 80.0], n_realizations=2000, seed=8)
    devs = [r["analytic_dev"] for r in rep.rows]
    elapsed = time.perf_counter() - start

    ok = (worst_mean < 5 and worst_cross < 5 and worst_z < 3
          and devs[0] > devs[1] > devs[2] and elapsed < 120)
    detail = (f"max |mean|/se = {worst_mean:.2f}, max |cross|/se = {worst_cross:.2f}, "
              f"max F_L z = {worst_z:.2f}, |F_L - F| = "
              + ", ".join(f"{d:.1e}" for d in devs))
    assert record(acceptance_log, 8, ok, detail, elapsed)


@pytest.mark.parametrize("task_body", [
    "name = noisebox\nL = 20\nrc = 1\nnreal = 500\nseed = 99\nconvergence = 20,40\n",
    "name = sweep\na = 1\nb = 0.3\nc = -0.5\nd = -0.8\nt_range = 0:6:7\ncorr = exp:0.2\n",
])
def test_criterion_9_determinism(tmp_path, monkeypatch, acceptance_log, task_body):
    monkeypatch.delenv("CRAD_JOBS", raising=False)
    start = time.perf_counter()
    blobs = []
    for i, jobs in enumerate(("1", "1", "2")):
        out = tmp_path / f"run{i}.csv"
        cfg = tmp_path / f"run{i}.ini"
        cfg.write_text(f"[task]\n{task_body}\n[output]\npath = {out}\n")
        assert cli.main(["--config", str(cfg), "--jobs", jobs]) == 0
        blobs.append(out.read_bytes() + (tmp_path / f"run{i}.csv.meta.json").read_bytes())
    elapsed = time.perf_counter() - start
    ok = blobs[0] == blobs[1] == blobs[2]
    task = task_body.split("\n")[0].split("= ")[1]
    detail = f"{task}: two runs at jobs=1 and one at jobs=2 byte-identical"
    assert record(acceptance_log, 9, ok, detail, elapsed)
