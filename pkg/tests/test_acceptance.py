"""Acceptance criteria 1-10, each at its stated tolerance and time budget.

Every test prints one ``PASS``/``FAIL`` line (also collected into the pytest
terminal summary).  Run directly with ``python3 tests/test_acceptance.py``.
"""
import time

import mpmath
import numpy as np
import pytest

from cli_cases import FAST_RUNS, data_rows
from conftest import ACCEPTANCE_LINES
from lyapstrip.barrier import verify_decoupling
from lyapstrip.cli import main
from lyapstrip.errors import NearSingularError
from lyapstrip.lattice import DisorderSpec, Interval, StripModel, sample_potential
from lyapstrip.msa import (MsaParams, bootstrap_step, chain_bound, classify_intervals,
                           minimal_feasible_log_A, schedule)
from lyapstrip.resolvent import decay_profile
from lyapstrip.schur import (PartitionedOperator, gaussian_symmetric, restricted_inverse,
                             schur_reduce, wegner_probe)
from lyapstrip.transfer import (fit_width_trend, lyapunov_spectrum, smallest_positive_exponent,
                                symplectic_defect, transfer_matrix)

STEPS = 10 ** 6


def record(number, title, ok, detail, elapsed, budget=None):
    ok = ok and (budget is None or elapsed < budget)
    limit = f" (budget {budget:g}s)" if budget else ""
    line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}; {elapsed:.2f}s{limit}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def disordered_spectrum(W):
    return lyapunov_spectrum(StripModel(W, 1.0, DisorderSpec.uniform(-0.5, 0.5)), 0.0, STEPS,
                             seed=W)


def free_w2_spectrum():
    return lyapunov_spectrum(StripModel(2, 0.0), 5.0, STEPS)


def invariants_hold(r):
    pair, pair_err = r.pairing_defect()
    s, s_err = r.sum_defect()
    # the free product is deterministic: batch errors vanish, keep a rounding floor
    return bool(np.all(pair <= 3 * pair_err + 1e-9) and s <= 3 * s_err + 1e-9)


def test_01_schur_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    done = 0
    while done < 100:
        n = int(rng.integers(2, 41))
        m = int(rng.integers(1, min(8, n - 1) + 1))
        om1 = tuple(sorted(rng.choice(n, m, replace=False).tolist()))
        p = PartitionedOperator(gaussian_symmetric(n, int(rng.integers(2 ** 31))), om1)
        dv = rng.uniform(-1, 1, m)
        try:
            got = schur_reduce(p, dv)
        except NearSingularError:
            continue
        ref = restricted_inverse(p, dv)
        worst = max(worst, np.linalg.norm(got - ref, 2) / np.linalg.norm(ref, 2))
        done += 1
    ok = record(1, "Schur identity", worst <= 1e-10, f"max rel err {worst:.2e} over 100",
                time.perf_counter() - t0, 5)
    assert ok


def test_02_wegner_scaling():
    t0 = time.perf_counter()
    p = PartitionedOperator(gaussian_symmetric(20, seed=1), (0, 5, 10, 15))
    est = wegner_probe(p, DisorderSpec.uniform(0, 1), [10, 30, 100, 300, 1000], 20000, seed=0,
                       threads=4)
    ok = record(2, "Wegner scaling", -1.2 <= est.slope <= -0.8,
                f"tail slope {est.slope:.3f} (target [-1.2, -0.8])", time.perf_counter() - t0, 60)
    assert ok


def test_03_decoupling_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for W in range(1, 9):
        for n in (8, 32, 64):
            for k in range(10):
                v = rng.uniform(-0.5, 0.5, n)
                E = float(rng.uniform(-1, 1))
                chk = verify_decoupling(StripModel(W), v, E, Interval.of_size(n), probe_seed=k)
                worst = max(worst, chk.residual)
    ok = record(3, "Decoupling identity", worst <= 1e-10, f"max residual {worst:.2e} over 240",
                time.perf_counter() - t0, 30)
    assert ok


def test_04_transfer_invariants():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst_s = worst_d = 0.0
    for _ in range(1000):
        W = int(rng.integers(1, 9))
        model = StripModel(W, float(rng.uniform(0, 3)))
        T = transfer_matrix(model, rng.uniform(-0.5, 0.5, W), float(rng.uniform(-4, 4)))
        worst_s = max(worst_s, symplectic_defect(T))
        worst_d = max(worst_d, abs(np.linalg.det(T) - 1.0))
    runs = [free_w2_spectrum()] + [disordered_spectrum(W) for W in (1, 2, 3, 4)]
    runs_ok = all(invariants_hold(r) for r in runs)
    ok = record(4, "Transfer invariants", worst_s <= 1e-10 and worst_d <= 1e-10 and runs_ok,
                f"symplectic {worst_s:.1e}, det {worst_d:.1e}, pairing/sum ok on "
                f"{sum(map(invariants_hold, runs))}/{len(runs)} runs of 1e6 steps",
                time.perf_counter() - t0)
    assert ok


def test_05_free_model_oracle():
    t0 = time.perf_counter()
    r = free_w2_spectrum()
    exact = np.arccosh([3.5, 1.5])
    lyap_ok = bool(np.all(np.abs(r.exponents[:2] - exact) <= 3 * r.stderr[:2] + 1e-9))
    prof = decay_profile(StripModel(1, 0.0), 5.0, Interval.of_size(100), 1, 0)
    rel = abs(prof.fitted_rate / np.arccosh(1.5) - 1)
    ok = record(5, "Free-model oracle", lyap_ok and rel <= 0.02,
                f"gamma {r.exponents[0]:.6f}, {r.exponents[1]:.6f} vs {exact[0]:.6f}, "
                f"{exact[1]:.6f}; Green rate rel err {rel:.2e}", time.perf_counter() - t0, 60)
    assert ok


def test_06_cross_oracle():
    t0 = time.perf_counter()
    parts, ok = [], True
    for W in (1, 2):
        prof = decay_profile(StripModel(W), 0.0, Interval.of_size(300), 20, 1, threads=4)
        gamma = disordered_spectrum(W).exponents[W - 1]
        rel = abs(prof.fitted_rate / gamma - 1)
        ok &= rel <= 0.20
        parts.append(f"W={W} rate {prof.fitted_rate:.4f} vs gamma {gamma:.4f} ({100 * rel:.1f}%)")
    ok = record(6, "Cross-oracle decay vs Lyapunov", ok, "; ".join(parts),
                time.perf_counter() - t0, 300)
    assert ok


def test_07_chain_inequality():
    t0 = time.perf_counter()
    model = StripModel(2, 1.0, DisorderSpec.uniform(-6, 6))
    M, n = 8, 5
    checked = violations = t = 0
    while checked < 100:
        pot = sample_potential(model, Interval(0, n * M), t)
        t += 1
        rep = classify_intervals(model, pot, 0.0, M)
        if rep.R == 0:
            continue
        direct, bound = chain_bound(model, pot, 0.0, rep)
        violations += not direct <= bound
        checked += 1
    ok = record(7, "Chain inequality", violations == 0,
                f"{violations} violations in {checked} realizations ({t} sampled)",
                time.perf_counter() - t0, 60)
    assert ok


def test_08_bootstrap_and_schedule():
    t0 = time.perf_counter()
    sched_ok = True
    for W in (2, 4, 8):
        sch = schedule(W, log_A=minimal_feasible_log_A(W), stages=10)
        log_N0 = sch[0].log_N
        sched_ok &= all(m > 0 for m in sch.delta_margin())
        sched_ok &= all(st.log_eps == -st.log_N and st.log_N == log_N0 * 2 ** st.s
                        for st in sch.states[1:])
    mpmath.mp.dps = 40
    worst = 0.0
    for M, delta, eps, r, n in [(10 ** 4, 0.1, 0.01, 10, 10 ** 3), (10 ** 5, 0.3, 0.001, 20, 5000),
                                (4 * 10 ** 3, 0.5, 0.05, 4, 300), (10 ** 6, 0.05, 1e-4, 100, 10 ** 5)]:
        N, eps1, delta1 = bootstrap_step(MsaParams(M, delta, eps, r, n), 2)
        ref_e = mpmath.power(2, -mpmath.sqrt(n)) + mpmath.exp(-mpmath.mpf(delta) * M / (2 * r))
        ref_d = (1 - mpmath.sqrt(mpmath.mpf(eps))) * (1 - mpmath.mpf(1) / r) * mpmath.mpf(delta)
        worst = max(worst, float(abs(eps1 - ref_e) / ref_e), float(abs(delta1 - ref_d) / ref_d))
        sched_ok &= N == n * M
    ok = record(8, "Bootstrap arithmetic and schedule", sched_ok and worst <= 1e-14,
                f"schedule identities {'hold' if sched_ok else 'fail'}, "
                f"bootstrap max rel err {worst:.1e}", time.perf_counter() - t0, 1)
    assert ok


def test_09_positivity_and_trend():
    t0 = time.perf_counter()
    widths = (1, 2, 3, 4)
    table, ok = [], True
    for W in widths:
        r = disordered_spectrum(W)
        g, s = smallest_positive_exponent(r)
        ok &= g - 3 * s > 0
        table.append((W, g, s))
    print("W,gamma_W,stderr")
    for row in table:
        print(f"{row[0]},{row[1]:.6g},{row[2]:.2g}")
    fits = fit_width_trend(widths[1:], [g for _, g, _ in table[1:]])
    for f in fits:
        print(f"fit {f.form}: slope {f.slope:.4g}, intercept {f.intercept:.4g}, rss {f.rss:.3g}")
    ok = record(9, "Positivity at desk scale", ok,
                ", ".join(f"gamma_{W}={g:.4f}+-{s:.1e}" for W, g, s in table),
                time.perf_counter() - t0, 600)
    assert ok


def test_10_determinism(tmp_path):
    t0 = time.perf_counter()
    bad = []
    for name, args in sorted(FAST_RUNS.items()):
        bodies = []
        for i, threads in enumerate(("1", "1", "8", "8")):
            target = tmp_path / f"{name}-{i}.csv"
            code = main([name, *args, "--seed", "11", "--threads", threads, "--out", str(target)])
            bodies.append(data_rows(target.read_text()) if code == 0 else None)
        if bodies[0] is None or any(b != bodies[0] for b in bodies):
            bad.append(name)
    ok = record(10, "Determinism", not bad,
                f"{len(FAST_RUNS) - len(bad)}/{len(FAST_RUNS)} subcommands byte-identical "
                f"at --threads 1 and 8" + (f"; differ: {bad}" if bad else ""),
                time.perf_counter() - t0)
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
