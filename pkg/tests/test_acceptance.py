"""One test per acceptance criterion; each prints a PASS/FAIL line in the summary."""
import os
import time

import mpmath
import numpy as np
import pytest

from lidskii.abel import (eval_abel_polynomial, group_schedule, default_schedule_parameters,
                          group_vectors, grouped_partial_sums, regularized_coefficients)
from lidskii.cli import main
from lidskii.contours import (build_contour, integrate_resolvent_functional,
                              residue_at_pole, verify_resolvent_bound)
from lidskii.evolution import (INITIAL_SCHEDULE, CauchyProblem, gamma_tail_identity,
                               solve_cauchy, verify_solution)
from lidskii.exponents import (beta_profile, convergence_exponent, generate_model_sequence,
                               circle_resolvent_bound)
from lidskii.families import (diagonal_family, random_blocks, random_sectorial,
                              random_structured, sectorial_structured)
from lidskii.jordan import raw_coefficients, spectral_decomposition
from lidskii.operators import estimate_sector


def test_01_residue_identity(record):
    start = time.perf_counter()
    worst = 0.0
    for seed in range(10):
        n = 4 + seed % 5
        op = random_structured(n, 100 + seed, max_chain=3)
        r = np.random.default_rng(seed)
        f = r.normal(size=n) + 1j * r.normal(size=n)
        d = spectral_decomposition(op)
        rc = regularized_coefficients(d, raw_coefficients(d, f), 0.5, 1.5)
        for g, v in zip(d.finite_groups, group_vectors(d, rc)):
            res = residue_at_pole(op, f, 0.5, 1.5, g)
            worst = max(worst, np.linalg.norm(res + v) / np.linalg.norm(v))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 10
    record(1, "residue identity", ok, f"max rel err {worst:.2e} (<= 1e-8), {elapsed:.2f}s (< 10s)")
    assert ok


def test_02_contour_identity(record):
    worst = 0.0
    cases = 0
    for seed in range(3):
        ops = [random_sectorial(8, 0.3, seed),
               sectorial_structured(random_blocks(8, np.random.default_rng(seed), 3, 0.2,
                                                  (0.2, 1.0)), seed, 0.05)]
        for op in ops:
            sec = estimate_sector(op)
            f = np.random.default_rng(50 + seed).normal(size=8)
            d = spectral_decomposition(op)
            c = raw_coefficients(d, f)
            for alpha in (1.5, 2.0):
                assert sec.semi_angle < np.pi / (2 * alpha)
                tau, K = default_schedule_parameters(d, alpha)
                sched = group_schedule(d, tau, K)
                for t in (0.1, 1.0):
                    contour = build_contour("gamma_B", op, sec, t, alpha)
                    q = integrate_resolvent_functional(op, f, t, alpha, contour)
                    gs = grouped_partial_sums(d, regularized_coefficients(d, c, t, alpha), sched)
                    worst = max(worst, np.linalg.norm(q.value - gs.total) / np.linalg.norm(gs.total))
                    cases += 1
    ok = worst <= 1e-6
    record(2, "contour integral = grouped sums", ok, f"max rel err {worst:.2e} over {cases} cases (<= 1e-6)")
    assert ok


def test_03_small_time_limit(record):
    ts = np.array(INITIAL_SCHEDULE)
    worst_last = 0.0
    monotone = True
    for seed in range(5):
        op = diagonal_family(6, seed)
        f = np.random.default_rng(seed).normal(size=6)
        f /= np.linalg.norm(f)
        contour = build_contour("gamma_B", op, estimate_sector(op), ts, 2.0)
        vals = integrate_resolvent_functional(op, f, ts, 2.0, contour).value
        dist = np.linalg.norm(vals - f[None, :], axis=1)
        monotone &= bool(np.all(np.diff(dist) < 0))
        worst_last = max(worst_last, dist[-1])
    ok = monotone and worst_last <= 1e-3
    record(3, "S_t f -> f as t -> 0", ok,
           f"monotone={monotone}, ||S_t f - f|| at 1e-6 = {worst_last:.2e} (<= 1e-3)")
    assert ok


def test_04_abel_polynomials(record):
    rng = np.random.default_rng(4)
    mpmath.mp.dps = 30
    worst = 0.0
    for _ in range(20):
        m = int(rng.integers(0, 6))
        a = float(rng.uniform(1.1, 3.0))
        z = complex(rng.uniform(0.4, 2.0) * np.exp(1j * rng.uniform(-0.6, 0.6)))
        t = float(rng.uniform(0.05, 2.0))
        zz = mpmath.mpc(z.real, z.imag)
        fd = complex(mpmath.diff(lambda w: mpmath.exp(-t * w ** (-a)), zz, m)
                     * mpmath.exp(t * zz ** (-a)) / mpmath.factorial(m))
        worst = max(worst, abs(eval_abel_polynomial(m, a, z, t) - fd) / abs(fd))
    op = sectorial_structured([(1.0, 3), (0.5, 2), (0.3, 1)], seed=4, eta=0.2)
    d = spectral_decomposition(op)
    c = raw_coefficients(d, np.ones(6))
    slopes = [np.max(np.abs(regularized_coefficients(d, c, t, 2.0).values - c)) / t
              for t in (1e-2, 1e-3, 1e-4)]
    spread = max(slopes) / min(slopes)
    ok = worst <= 1e-6 and spread <= 2
    record(4, "Abel polynomials and c_n(t) -> c_n", ok,
           f"max rel err {worst:.2e} (<= 1e-6), slope spread {spread:.3f} (<= 2)")
    assert ok


def test_05_ray_resolvent_bound(record):
    worst = -np.inf
    probes = 0
    for seed in range(20):
        op = random_sectorial(6, 0.2 + 0.05 * seed, seed)
        sec = estimate_sector(op)
        for phi in (0.5 * (sec.semi_angle + np.pi / 2), 0.5 * (sec.semi_angle + np.pi)):
            for sgn in (1, -1):
                rep = verify_resolvent_bound(op, "ray", {"angle": sgn * phi, "sector": sec},
                                             probes=256)
                worst = max(worst, rep.max_violation)
                probes += rep.probes
    ok = worst <= 1e-12
    record(5, "ray resolvent bound", ok, f"max violation {worst:.2e} over {probes} probes (slack 1e-12)")
    assert ok


def test_06_circle_resolvent_bound(record):
    results = []
    for seed in range(5):
        op = random_structured(5, 200 + seed, max_chain=2, eta=0.1)
        top = float(np.max(1 / np.abs(op.eigenvalues())))
        for R in (1.5 * top, 3 * top, 6 * top):
            results.append(circle_resolvent_bound(op, R, 0.5, 1.0).satisfied)
    ok = all(results)
    record(6, "circle resolvent bound", ok, f"{sum(results)}/{len(results)} rings satisfied")
    assert ok


def test_07_convergence_exponent(record):
    errs, genus_ok = [], True
    for rho in (0.5, 1.0, 2.0):
        rep = convergence_exponent(generate_model_sequence("power", terms=10 ** 6, rho=rho))
        errs.append(abs(rep.rho_hat - rho))
        oracle = next(p for p in range(10) if (p + 1) / rho > 1)
        genus_ok &= rep.genus == oracle
    ok = max(errs) <= 0.05 and genus_ok
    record(7, "convergence exponent", ok, f"max |rho_hat - rho| {max(errs):.2e} (<= 0.05), genus match={genus_ok}")
    assert ok


@pytest.mark.xfail(strict=True, reason="beta(r) ln r grows on the E1 model with p = rho1 = 1; "
                                       "see the decisions ledger")
def test_08_e1_trend(record):
    e1 = generate_model_sequence("E1", terms=20000, rho=1.0)
    prof = beta_profile(e1, 1, 1.0, [1e2, 1e3, 1e4, 1e5, 1e6])
    bl = prof.beta_ln_r
    ok = bool(np.all(np.diff(bl) < 0)) and bl[-1] < bl[0] / 3
    record(8, "E1 beta(r) ln r trend", ok,
           "beta(r) ln r = " + ", ".join(f"{v:.3f}" for v in bl) + " (needs strict decrease, last < first/3)")
    assert ok


def test_09_gamma_tail(record):
    rng = np.random.default_rng(9)
    probes = [(1.0, 2.0), (4.0, 2.0), (1 + 1j, 2.0), (1.0, 1.5), (2.5, 3.0)]
    for _ in range(30):
        a = float(rng.uniform(1.1, 3.0))
        probes.append((rng.uniform(0.2, 8.0) * np.exp(1j * rng.uniform(-1, 1) * np.pi / (2 * a)), a))
    worst = max(gamma_tail_identity(lam, a).rel_err for lam, a in probes)
    ok = worst <= 1e-8
    record(9, "Gamma-tail identity", ok, f"max rel err {worst:.2e} over {len(probes)} probes (<= 1e-8)")
    assert ok


def test_10_cauchy_problem(record):
    grid = np.linspace(0.1, 1.5, 8)
    notes = []
    ok = True
    cases = {
        "diagonal": (diagonal_family(4, 10), ("contour", "series", "eigen")),
        "jordan": (sectorial_structured([(1.5, 3)], seed=10, eta=0.2), ("contour", "series")),
    }
    for label, (W, backends) in cases.items():
        h = np.random.default_rng(10).normal(size=W.dimension)
        h /= np.linalg.norm(h)
        prob = CauchyProblem(W, h, 2.0)
        trajs = {b: solve_cauchy(prob, grid, b) for b in backends}
        ref = trajs[backends[-1]].values
        agree = max(np.max(np.abs(tr.values - ref)) for tr in trajs.values())
        rep = verify_solution(prob, trajs["contour"])
        res = rep.checks["residual"].value
        init = rep.checks["initial"]
        contr = rep.checks["contraction"]
        case_ok = (agree <= 1e-6 and res <= 1e-4 and init.passed
                   and contr.passed and not contr.skipped)
        ok &= case_ok
        notes.append(f"{label}: residual {res:.1e}, agreement {agree:.1e}, "
                     f"u(1e-6) dist {init.value:.1e}, nonincreasing={contr.passed}")
    record(10, "fractional Cauchy problem", ok, "; ".join(notes))
    assert ok


def test_11_determinism(record, tmp_path):
    texts = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        status = main(["full-verify", "--seed", "11", "--out", str(out)])
        assert status == 0
        texts.append((out / "manifest.json").read_bytes())
    ok = texts[0] == texts[1]
    record(11, "full-verify determinism", ok, f"manifests identical={ok} ({len(texts[0])} bytes)")
    assert ok
