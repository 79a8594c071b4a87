"""Acceptance suite: one test (and one printed PASS/FAIL line) per criterion.

Run with ``pytest -v -s tests/test_acceptance.py`` to see the lines inline.
"""
import hashlib
import json
import time

import numpy as np
import pytest
from click.testing import CliRunner

from stopcontest import (ContestSpec, no_regret_cdf, future_regret_cdf,
                         all_regret_cdf, closed_form_law, power_law_cdf,
                         solve_past_regret, two_player_r,
                         two_player_phi_residual, certify, best_response_gap,
                         deviation_family, PathConfig, run_contest,
                         simulate_paths, ks_distance, azema_yor_rule,
                         perkins_rule)
from stopcontest.cli import main as cli_main


def _report(tag, ok, detail=""):
    print(f"\nCRITERION {tag}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, f"criterion {tag}: {detail}"


@pytest.fixture(scope="module")
def r_sweep():
    """Support endpoints r(K) for n = 3, timed for the runtime budget."""
    t0 = time.perf_counter()
    out = {}
    for K in (1e-3, 0.25, 0.5, 1.0, 2.0, 4.0, 100.0):
        out[K] = solve_past_regret(ContestSpec(n=3, x0=1.0, K=K, mode="past")).r
    return out, time.perf_counter() - t0


def test_criterion_01_closed_forms():
    t0 = time.perf_counter()
    worst = 0.0
    for n, x0 in ((2, 1.0), (3, 1.0), (5, 2.0)):
        F = no_regret_cdf(ContestSpec(n=n, x0=x0))
        x = np.linspace(0.0, 1.5 * n * x0, 1000)
        ref = np.minimum((np.maximum(x, 0.0) / (n * x0)) ** (1.0 / (n - 1)), 1.0)
        worst = max(worst, float(np.max(np.abs(np.asarray(F.cdf(x)) - ref))),
                    abs(F.mean() - x0))
    elapsed = time.perf_counter() - t0
    _report("01", worst <= 1e-10 and elapsed < 1.0,
            f"(max error {worst:.2e}, {elapsed:.2f}s)")


def test_criterion_02_future_equivalence():
    t0 = time.perf_counter()
    F = future_regret_cdf(ContestSpec(n=2, x0=1.0, K=1.0, mode="future"))
    G = power_law_cdf(3, 1.0)  # N = n + K(n-1) = 3
    x = np.linspace(0.0, 4.0, 2000)
    err = float(np.max(np.abs(np.asarray(F.cdf(x)) - np.asarray(G.cdf(x)))))
    elapsed = time.perf_counter() - t0
    _report("02", err <= 1e-12 and elapsed < 1.0,
            f"(max error {err:.2e}, {elapsed:.2f}s)")


def test_criterion_03_all_regret_reduction():
    t0 = time.perf_counter()
    worst = 0.0
    for n in (2, 3):
        base = no_regret_cdf(ContestSpec(n=n, x0=1.0))
        x = np.linspace(0.0, 1.5 * n, 1000)
        for K in (0.5, 3.0, 10.0):
            F = all_regret_cdf(ContestSpec(n=n, x0=1.0, K=K, mode="all"))
            worst = max(worst, float(np.max(np.abs(
                np.asarray(F.cdf(x)) - np.asarray(base.cdf(x))))))
    elapsed = time.perf_counter() - t0
    _report("03", worst == 0.0 and elapsed < 1.0,
            f"(max difference {worst:.2e}, {elapsed:.2f}s)")


def test_criterion_04_two_player_oracle():
    worst_r, worst_res, worst_time = 0.0, 0.0, 0.0
    for K in (0.5, 1.0, 2.0):
        t0 = time.perf_counter()
        sol = solve_past_regret(ContestSpec(n=2, x0=1.0, K=K, mode="past"))
        worst_time = max(worst_time, time.perf_counter() - t0)
        worst_r = max(worst_r, abs(sol.r / two_player_r(K) - 1.0))
        res = two_player_phi_residual(K)
        ys = np.linspace(1.0 + 0.01 * (sol.r - 1.0),
                         sol.r - 0.01 * (sol.r - 1.0), 50)
        pb = ys - np.asarray(sol.phi(ys))
        worst_res = max(worst_res,
                        max(abs(res(float(y), float(p))) for y, p in zip(ys, pb)))
    _report("04", worst_r < 1e-5 and worst_res < 1e-6 and worst_time < 30.0,
            f"(r error {worst_r:.2e}, phi residual {worst_res:.2e}, "
            f"{worst_time:.2f}s per K)")


def test_criterion_05_system_residuals(past3):
    t0 = time.perf_counter()
    sol = past3
    n, K, x0, r = sol.n, sol.K, sol.x0, sol.r
    span = r - x0
    ys = np.linspace(x0 + 0.01 * span, r - 0.01 * span, 200)

    def d1(f, y, h):
        return (np.asarray(f(y + h)) - np.asarray(f(y - h))) / (2.0 * h)

    psi, phi, theta = map(np.asarray, (sol.psi(ys), sol.phi(ys), sol.theta(ys)))
    psip = d1(sol.psi, ys, 1e-4)
    phip = d1(sol.phi, ys, 1e-4)
    thetap = d1(sol.theta, ys, 1e-4)
    # psi'' blows up like 1/sqrt(y - x0) at the left end, so a second
    # difference of psi cannot reach 1e-5 there; differencing the first
    # derivative tolerates a much smaller step (noise eps/h, not eps/h^2)
    psipp = d1(sol.psi_prime, ys, 4e-6)
    res1 = float(np.max(np.abs(phip * psip - (1.0 + K) * thetap)))
    res2 = float(np.max(np.abs(K * psip - (ys - phi) * psipp)))
    p = 1.0 / (n - 1)
    res3 = float(np.max(np.abs(
        (ys - phi) * p * thetap - ((psi ** p - 1.0) * theta ** (1.0 - p) - theta))))

    # theta two-path identity against the analytic derivatives
    ident = float(np.max(np.abs(
        theta - (psi - (K / (K + 1.0))
                 * np.asarray(sol.psi_prime(ys)) ** 2
                 / np.asarray(sol.psi_second(ys))))))

    hb = 1e-5
    bnd = max(
        abs(float(sol.psi(r)) - 1.0),
        abs((float(sol.psi(r)) - float(sol.psi(r - hb))) / hb - (K + 1.0) / r),
        abs((float(sol.psi(r)) - 2.0 * float(sol.psi(r - 1e-3))
             + float(sol.psi(r - 2e-3))) / 1e-6 - K * (K + 1.0) / r**2),
        abs(float(sol.phi(x0)) - x0),
        abs(float(sol.phi(r))),
        abs(float(sol.theta(r))),
    )
    elapsed = time.perf_counter() - t0
    ok = (max(res1, res2, res3) < 1e-5 and ident < 1e-6 and bnd < 1e-4
          and elapsed < 60.0)
    _report("05", ok,
            f"(residuals {res1:.2e}/{res2:.2e}/{res3:.2e}, identity {ident:.2e}, "
            f"boundary {bnd:.2e}, {elapsed:.1f}s)")


def test_criterion_06a_r_decreasing(r_sweep):
    rs, _ = r_sweep
    vals = [rs[K] for K in (0.25, 0.5, 1.0, 2.0, 4.0)]
    ok = all(a > b for a, b in zip(vals[:-1], vals[1:]))
    _report("06a", ok, "(r(K) = " + ", ".join(f"{v:.4f}" for v in vals) + ")")


def test_criterion_06b_r_small_k(r_sweep):
    rs, _ = r_sweep
    err = abs(rs[1e-3] - 3.0) / 3.0
    _report("06b", err < 0.01, f"(r(1e-3) = {rs[1e-3]:.6f}, off by {err:.2%})")


def test_criterion_06c_r_large_k(r_sweep):
    rs, _ = r_sweep
    err = abs(rs[100.0] - 1.0)
    _report("06c", err < 0.05, f"(r(100) = {rs[100.0]:.6f}, off by {err:.2%})")


def test_criterion_06d_density_jump(past3, r_sweep):
    _, sweep_elapsed = r_sweep
    t0 = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(key=np.uint64(2026)))
    draws = past3.equilibrium_cdf().sample(400_000, rng)
    w = 0.01
    nl = int(np.sum((draws >= past3.x0 - w) & (draws < past3.x0)))
    nr = int(np.sum((draws >= past3.x0) & (draws < past3.x0 + w)))
    dens_l, dens_r = nl / (draws.size * w), nr / (draws.size * w)
    noise = np.hypot(np.sqrt(nl), np.sqrt(nr)) / (draws.size * w)
    z = (dens_r - dens_l) / noise
    elapsed = time.perf_counter() - t0 + sweep_elapsed
    _report("06d", z > 10.0 and elapsed < 300.0,
            f"(left {dens_l:.3f}, right {dens_r:.3f}, jump = {z:.0f}x noise, "
            f"criterion-6 total {elapsed:.1f}s)")


def test_criterion_07_feasibility(past2, past3):
    worst_mean = 0.0
    for n, x0 in ((2, 1.0), (3, 1.0), (5, 2.0)):
        worst_mean = max(worst_mean, abs(
            no_regret_cdf(ContestSpec(n=n, x0=x0)).mean() - x0))
    worst_mean = max(worst_mean, abs(future_regret_cdf(
        ContestSpec(n=2, x0=1.0, K=1.0, mode="future")).mean() - 1.0))
    for K in (0.5, 3.0, 10.0):
        worst_mean = max(worst_mean, abs(all_regret_cdf(
            ContestSpec(n=3, x0=1.0, K=K, mode="all")).mean() - 1.0))
    worst_doob = 0.0
    for sol in (past2, past3):
        worst_mean = max(worst_mean, abs(sol.mean() - sol.x0))
        zs = np.linspace(sol.x0 + 1e-9, sol.r - 1e-9, 50)
        worst_doob = max(worst_doob,
                         max(abs(sol.doob_residual(float(z))) for z in zs))
    _report("07", worst_mean < 1e-6 and worst_doob < 1e-6,
            f"(mean error {worst_mean:.2e}, Doob residual {worst_doob:.2e})")


def test_criterion_08_certificates(past2, past3):
    t0 = time.perf_counter()
    certs = []
    for n in (2, 3):
        spec = ContestSpec(n=n, x0=1.0)
        certs.append(certify(spec, closed_form_law(spec)))
    spec = ContestSpec(n=2, x0=1.0, K=1.0, mode="future")
    certs.append(certify(spec, closed_form_law(spec)))
    certs.append(certify(past2.spec, past2.joint_law()))
    certs.append(certify(past3.spec, past3.joint_law()))
    all_pass = all(c.passed and c.max_violation <= 1e-8
                   and c.active_set_residual <= 1e-6 for c in certs)
    control = certify(past2.spec, past2.joint_law(), r_scale=1.01)
    elapsed = time.perf_counter() - t0
    _report("08", all_pass and not control.passed and elapsed < 120.0,
            f"(worst violation {max(c.max_violation for c in certs):.2e}, "
            f"control violation {control.max_violation:.2e}, {elapsed:.1f}s)")


def test_criterion_09_best_response(past2, past3):
    worst_gap, worst_val = -np.inf, 0.0
    cases = [
        (ContestSpec(n=2, x0=1.0), None, 0.5),
        (ContestSpec(n=3, x0=1.0), None, 1.0 / 3.0),
        (ContestSpec(n=2, x0=1.0, K=1.0, mode="future"), None, 1.0 / 3.0),
        (past2.spec, past2, past2.z_star),
        (past3.spec, past3, past3.z_star),
    ]
    for spec, sol, target in cases:
        law = sol.joint_law() if sol is not None else closed_form_law(spec)
        gap, value, _ = best_response_gap(spec, law, deviation_family(spec))
        worst_gap = max(worst_gap, gap)
        worst_val = max(worst_val, abs(value - target))
    _report("09", worst_gap <= 1e-8 and worst_val <= 1e-8,
            f"(max gap {worst_gap:.2e}, value error {worst_val:.2e})")


def test_criterion_10_monte_carlo(past2):
    t0 = time.perf_counter()
    spec = ContestSpec(n=2, x0=1.0)
    law = closed_form_law(spec)
    rule = azema_yor_rule(law.marginal)
    rep = run_contest(spec, [rule, rule], 100_000,
                      PathConfig(dt=1e-4, seed=0, bridge=True))
    win_ok = all(abs(w - 0.5) <= 3.0 * se
                 for w, se in zip(rep.win_prob, rep.win_se))

    s = simulate_paths(perkins_rule(past2), PathConfig(dt=1e-5, seed=1),
                       1.0, 100_000)
    ks = ks_distance(s.x_tau, past2.equilibrium_cdf())
    joint = past2.joint_law()
    off = float(np.mean(~joint.on_support(s.x_tau, s.m_past, 0.01 * past2.r)))
    elapsed = time.perf_counter() - t0
    ok = win_ok and ks < 0.01 and off < 0.01 and elapsed < 600.0
    _report("10", ok,
            f"(win prob {rep.win_prob[0]:.4f}+-{rep.win_se[0]:.4f}, "
            f"KS {ks:.4f}, off-support {off:.4f}, {elapsed:.0f}s)")


def test_criterion_11_determinism(tmp_path):
    runner = CliRunner()
    digests = []
    for sub in ("a", "b"):
        d = tmp_path / sub
        for args in (
            ["solve", "--mode", "past", "--n", "2", "--k", "1", "--grid", "64"],
            ["solve", "--mode", "none", "--n", "3", "--grid", "64"],
            ["verify", "--mode", "none", "--n", "2"],
            ["simulate", "--mode", "none", "--n", "2", "--paths", "500",
             "--dt", "1e-2", "--seed", "3"],
        ):
            res = runner.invoke(cli_main, args + ["--out", str(d)],
                                catch_exceptions=False)
            assert res.exit_code == 0
        blobs = {}
        for p in sorted(d.iterdir()):
            if p.suffix in (".csv", ".json") and "manifest" not in p.name:
                blobs[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
        digests.append(blobs)
    same = digests[0] == digests[1] and len(digests[0]) >= 6
    _report("11", same, f"({len(digests[0])} files byte-identical)")
