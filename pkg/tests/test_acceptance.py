"""Acceptance criteria, one test each.

Every test prints a single ``[PASS]``/``[FAIL]`` line with the measured
quantities and the wall-clock time, then asserts.  Run directly with
``python tests/test_acceptance.py`` for just the summary lines.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from ergokit import construction, entropy, pressure, tracing
from ergokit.entropy import EpsScale
from ergokit.measures import (
    EmpiricalMeasure,
    MarkovMeasure,
    MeasureMetricConfig,
    empirical_tables_batch,
    katok_entropy_estimate,
    markov_entropy,
    mixture,
    weak_metric,
    weak_metric_batch,
    z_membership,
)
from ergokit.pressure import BernoulliFamily, PotentialSpec
from ergokit.shift import FullShift, ProductSpace, example_hereditary, example_union, golden_mean
from ergokit.tracing import GapFunction, OrbitTask, compose_tempered_gap, product_tracer, sample_word, verify_trace
from oracles import binary_entropy

S1 = EpsScale(1)
LN_PHI = math.log((1 + math.sqrt(5)) / 2)
LN1E = math.log(1 + math.e)


@pytest.fixture
def report(capsys):
    """``report(label, ok, seconds, limit, **values)`` prints one summary line."""

    def emit(label, ok, seconds, limit, **values):
        in_time = seconds < limit
        passed = bool(ok) and in_time
        detail = ", ".join(f"{k}={v}" for k, v in values.items())
        with capsys.disabled():
            print(f"\n[{'PASS' if passed else 'FAIL'}] {label}: {detail} ({seconds:.2f}s / limit {limit}s)")
        return passed

    return emit


def test_c01_entropy_oracles(report):
    t0 = time.perf_counter()
    full = entropy.entropy_estimate(FullShift(2), 12, S1)
    # the count identity is exact; the log rate is ln 2 up to one rounding
    exact = full.counts == [2**n for n in range(1, 13)]
    exact &= all(abs(math.log(c) / n - math.log(2)) < 1e-15 for n, c in enumerate(full.counts, start=1))
    g = entropy.entropy_estimate(golden_mean(), 12, S1)
    slope_err, ref_err = abs(g.slope - LN_PHI), abs(g.reference - LN_PHI)
    ok = exact and slope_err < 0.02 and ref_err < 1e-10
    dt = time.perf_counter() - t0
    assert report("1 entropy oracles", ok, dt, 5, full_exact=exact, slope_err=f"{slope_err:.2e}", ref_err=f"{ref_err:.1e}")


def test_c02_separated_equals_language(report):
    t0 = time.perf_counter()
    cases, bad = 0, []
    for name, sp in (("full", FullShift(2)), ("golden", golden_mean()), ("hereditary", example_hereditary())):
        for m in range(1, 13):
            for n in range(1, 13 - m + 1):
                rep = entropy.separated_count(sp, n, EpsScale(m), "brute-force")
                cases += 1
                if rep.count != sp.count_language(n + m - 1) or not rep.certified:
                    bad.append((name, n, m))
    dt = time.perf_counter() - t0
    assert report("2 separated = language", not bad, dt, 60, cases=cases, mismatches=bad[:3])


def test_c03_q_bound(report):
    t0 = time.perf_counter()
    worst, holds = math.inf, True
    for n in range(1, 25):
        for k in range(1, 10):
            b = entropy.q_count_and_bound(n, k / 20)
            holds &= b.rate <= b.bound
            worst = min(worst, b.gap)
    dt = time.perf_counter() - t0
    assert report("3 Q(n, delta) bound", holds and worst > 0, dt, 1, min_gap=f"{worst:.4g}")


def test_c04_tracing(report):
    t0 = time.perf_counter()
    full, g = FullShift(2), golden_mean()
    m_full = tracing.estimate_gap(full, S1, "gluing", tasks=tracing.exhaustive_pair_tasks(full, S1, 6), max_M=4).M
    m_gold = tracing.estimate_gap(g, S1, "gluing", tasks=tracing.exhaustive_pair_tasks(g, S1, 6), max_M=4).M

    # hereditary shift, all-zeros tracer: smallest M with L(M + N) N < delta2 M
    her = example_hereditary()
    m, delta1, delta2 = 2, 0.1, 0.5
    N = m + 1
    L = lambda n: math.floor(1 + math.log(n))
    M = next(k for k in range(1, 1000) if L(k + N) * N < delta2 * k)
    rng = np.random.default_rng(96)
    passed = 0
    for _ in range(100):
        K = int(rng.integers(2, 7))
        pts = [sample_word(her, M + m - 1, rng) for _ in range(K)]
        task = OrbitTask(pts, [M] * K, starts=[k * M for k in range(K)], delta1=delta1, delta2=delta2)
        z = (0,) * ((K - 1) * M + M + m - 1)
        passed += verify_trace(her, z, task, EpsScale(m)).ok

    u = example_union()
    est = tracing.estimate_gap(u, S1, "gluing", tasks=tracing.exhaustive_pair_tasks(u, S1, 2), max_M=4)
    witness = est.witnesses[-1]["task"]["points"] if est.M is None else None
    ok = m_full == 1 and m_gold == 2 and passed == 100 and witness is not None
    dt = time.perf_counter() - t0
    assert report(
        "4 tracing", ok, dt, 120,
        gluing_full=m_full, gluing_golden=m_gold, hereditary_M=M, zeros_traced=f"{passed}/100", union_witness=witness,
    )


def test_c05_product_composition(report):
    t0 = time.perf_counter()
    tables = [
        (lambda n: math.ceil(math.sqrt(n)), lambda n: math.ceil(math.log(n + 1))),
        (lambda n: 1 + n // 8, lambda n: 1),
        (lambda n: math.floor(1 + math.log(n)), lambda n: math.floor(1 + math.log(n))),
        (lambda n: 2, lambda n: 1 + math.isqrt(n)),
    ]
    pointwise = True
    for fx, fy in tables:
        L_X, L_Y = GapFunction.from_callable(fx, 128), GapFunction.from_callable(fy, 128)
        comp = compose_tempered_gap(L_X, L_Y).function
        pointwise &= all(comp(n) == L_X(L_Y(n)) + L_Y(n) + L_X(n) - 1 for n in range(1, comp.horizon + 1))

    sp = ProductSpace(FullShift(2), golden_mean())
    d1, d2, d1p, d2p = 0.5, 0.3, 0.2, 0.2
    assert (1 + d1p) ** 2 < 1 + d1
    rng = np.random.default_rng(32)
    verified = 0
    for i in range(50):
        n = 11 + i % 6
        K = int(rng.integers(2, 5))
        nx = math.floor(1.2 * n)
        pts = [sp.encode(sample_word(sp.left, nx, rng), sample_word(sp.right, nx, rng)) for _ in range(K)]
        tr = product_tracer(sp, pts, n, S1, d1, d2, d1p, d2p, lambda k: 2)
        task = OrbitTask(pts, [n] * K, starts=tr.starts, delta1=d1, delta2=d2)
        verified += verify_trace(sp, tr.z, task, S1).ok
    dt = time.perf_counter() - t0
    assert report("5 product gaps", pointwise and verified == 50, dt, 60, pointwise=pointwise, verified=f"{verified}/50")


def test_c06_measures(report):
    t0 = time.perf_counter()
    cfg = MeasureMetricConfig()
    errs = [
        abs(markov_entropy(MarkovMeasure.bernoulli(p)) - binary_entropy(p)) for p in (0.5, 0.11, 0.3)
    ] + [abs(markov_entropy(MarkovMeasure.parry(golden_mean())) - LN_PHI)]
    closed = max(errs) <= 1e-10

    katok = {}
    for p in (0.5, 0.11):
        for d in (0.1, 0.2):
            katok[(p, d)] = abs(katok_entropy_estimate(MarkovMeasure.bernoulli(p), 14, S1, d) - binary_entropy(p))
    katok_ok = max(katok.values()) < 0.08

    rng = np.random.default_rng(6)
    convex = True
    for _ in range(100):
        P = rng.dirichlet([1, 1], size=(4, 2))
        t = float(rng.uniform())
        mus = [MarkovMeasure(Pi) for Pi in P]
        lhs = weak_metric(mixture([(t, mus[0]), (1 - t, mus[1])], cfg.depth),
                          mixture([(t, mus[2]), (1 - t, mus[3])], cfg.depth), cfg)
        rhs = t * weak_metric(mus[0], mus[2], cfg) + (1 - t) * weak_metric(mus[1], mus[3], cfg)
        convex &= lhs <= rhs + 1e-12

    mu = MarkovMeasure.bernoulli(0.5)
    finite_bound, members = True, 0
    for seed in range(5):
        x = tuple(int(a) for a in np.random.default_rng(seed).integers(0, 2, 1200))
        N = 50
        H = len(x) - N - cfg.depth + 1
        win = np.lib.stride_tricks.sliding_window_view(np.array(x), N + cfg.depth - 1)[: H + 1]
        delta = float(weak_metric_batch(empirical_tables_batch(win, N, cfg.depth, 2), mu, cfg).max())
        if not z_membership(x, N, delta, mu, H, cfg):
            finite_bound = False
            continue
        members += 1
        finite_bound &= all(
            weak_metric(EmpiricalMeasure(x, n, cfg.depth, 2), mu, cfg) < delta + N * cfg.diameter / n
            for n in range(1, H + 1)
        )
    ok = closed and katok_ok and convex and finite_bound
    dt = time.perf_counter() - t0
    assert report(
        "6 measures", ok, dt, 60,
        closed_form_err=f"{max(errs):.1e}", katok_max_err=f"{max(katok.values()):.4f}",
        convexity_100=convex, finite_bound_members=members,
    )


@pytest.fixture(scope="module")
def desk():
    t0 = time.perf_counter()
    rep = construction.run_construction(FullShift(2), MarkovMeasure.bernoulli(0.5), 0.3, 0.15, 0.4, 3, M=10)
    return rep, time.perf_counter() - t0


def test_c07a_parameter_ledger(report, desk):
    rep, dt = desk
    p = rep.params
    margins = {c.name: f"{c.margin:+.4g}" for c in p.ledger}
    assert report("7a parameter ledger", p.satisfied, dt, 600, violations=p.violations, margins=margins)


def test_c07b_gamma_size(report, desk):
    rep, dt = desk
    g = rep.lam.gamma
    lo, hi = math.exp(3), math.exp(10 * (0.3 + rep.params.beta))
    ok = len(g.words) == 21 and lo <= len(g.words) < hi
    assert report("7b |Gamma_M|", ok, dt, 600, size=len(g.words), interval=f"[{lo:.3f}, {hi:.3f})")


def test_c07c_count_bounds(report, desk):
    rep, dt = desk
    detail = {b.name: f"{b.lhs} vs {b.rhs}" for b in rep.bounds}
    assert report("7c count bounds", all(b.holds for b in rep.bounds), dt, 600, **detail)


def test_c07d_entropy_window(report, desk):
    rep, dt = desk
    w = rep.window
    ok = w.low_edge < w.lower and w.upper < w.high_edge and w.inside
    assert report(
        "7d entropy window", ok, dt, 600,
        lower=f"{w.lower:.5f}", upper=f"{w.upper:.5f}", edges=f"({w.low_edge:.4f}, {w.high_edge:.4f})",
        slack=f"{w.slack:.4f}",
    )


def test_c07e_measures_within_3eta(report, desk):
    rep, dt = desk
    three_eta = 3 * rep.params.eta
    ok = rep.max_measure_distance < three_eta
    assert report("7e empirical measures", ok, dt, 600, max_distance=f"{rep.max_measure_distance:.4f}", three_eta=three_eta)


def test_c07f_proper_subshift(report, desk):
    rep, dt = desk
    ok = rep.factor_length == 12 and rep.factor_count < rep.full_count == 4096
    assert report("7f Lambda count at 12", ok, dt, 600, factors=rep.factor_count, full=rep.full_count)


def test_c08_pressure(report):
    t0 = time.perf_counter()
    full = FullShift(2)
    phi = PotentialSpec.indicator((1,))
    rep = pressure.pressure_estimate(full, phi, 14, EpsScale(1))
    identity = max(abs(v - LN1E) for v in rep.series)
    eq = abs(pressure.measure_pressure(MarkovMeasure.bernoulli(math.e / (1 + math.e)), phi) - LN1E)
    rng = np.random.default_rng(8)
    variational = all(
        pressure.measure_pressure(MarkovMeasure(rng.dirichlet([1, 1], size=2)), phi) <= rep.value + 0.05
        for _ in range(20)
    )
    ok = identity < 1e-12 and eq < 1e-10 and variational
    dt = time.perf_counter() - t0
    assert report(
        "8 pressure", ok, dt, 30, identity_err=f"{identity:.1e}", equilibrium_err=f"{eq:.1e}", variational_20=variational
    )


def test_c09_spectra(report):
    t0 = time.perf_counter()
    phi = PotentialSpec.indicator((1,))
    h_err = max(
        abs(markov_entropy(pressure.spectrum_solve(BernoulliFamily(0.0, 0.5), "entropy", float(h)).measure) - h)
        for h in np.linspace(0, math.log(2), 20, endpoint=False)
    )
    a_err = max(
        abs(pressure.lyapunov(pressure.spectrum_solve(BernoulliFamily(0.0, 1.0), "exponent", float(a), phi).measure, phi) - a)
        for a in np.linspace(0, 1, 21)
    )
    gibbs = BernoulliFamily(0.0, math.e / (1 + math.e))
    p_err = max(
        abs(pressure.measure_pressure(pressure.spectrum_solve(gibbs, "pressure", float(al), phi).measure, phi) - al)
        for al in np.linspace(0, LN1E, 21)[1:]
    )
    inf_val, t_inf = pressure.pressure_infimum(BernoulliFamily(0.0, 1.0), phi)
    gap = inf_val - pressure.chi_min(FullShift(2), phi)
    ok = h_err <= 1e-10 and a_err <= 1e-10 and p_err <= 1e-10 and 0 <= gap <= 1e-3
    dt = time.perf_counter() - t0
    assert report(
        "9 spectra", ok, dt, 10,
        entropy_err=f"{h_err:.1e}", exponent_err=f"{a_err:.1e}", pressure_err=f"{p_err:.1e}",
        p_inf_gap=f"{gap:.2e}", at_t=f"{t_inf:.1e}",
    )


def test_c10_determinism(report, tmp_path):
    t0 = time.perf_counter()
    outs, codes = [], []
    for k in range(2):
        f = tmp_path / f"verify{k}.json"
        res = subprocess.run(
            [sys.executable, "-m", "ergokit.cli", "verify", "--suite", "all", "--out", str(f)],
            capture_output=True, text=True, check=False,
        )
        codes.append(res.returncode)
        outs.append(f.read_bytes() if f.exists() else b"")
    ok = codes == [0, 0] and outs[0] == outs[1] and len(outs[0]) > 0
    dt = time.perf_counter() - t0
    assert report("10 determinism", ok, dt, math.inf, exit_codes=codes, identical=outs[0] == outs[1], bytes=len(outs[0]))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
