"""Deterministic invariant suites behind ``ergokit verify``.

Each suite returns a list of ``{"name", "ok", ...values}`` records.  No
timings or other run-dependent values are recorded.
"""

from __future__ import annotations

import math

import numpy as np

from . import construction, entropy, measures, pressure, shift, tracing
from .entropy import EpsScale


def _rec(name: str, ok, **values) -> dict:
    return {"name": name, "ok": bool(ok), **values}


def suite_shift(seed: int) -> list[dict]:
    out = []
    golden = shift.golden_mean()
    counts = [golden.count_language(n) for n in range(1, 11)]
    fib = [2, 3]
    while len(fib) < 10:
        fib.append(fib[-1] + fib[-2])
    out.append(_rec("golden_counts_fibonacci", counts == fib, counts=counts))
    her = shift.example_hereditary()
    out.append(_rec("hereditary_count_n3", her.count_language(3) == 5, count=her.count_language(3)))
    for name, sp in (("golden", golden), ("hereditary", her), ("union", shift.example_union())):
        ok = True
        for n in range(2, 8):
            words = set(sp.language(n))
            prev = set(sp.language(n - 1))
            ok &= all(w[:-1] in prev and w[1:] in prev for w in words)
            ok &= all(any(w + (a,) in set(sp.language(n)) for a in range(sp.alphabet_size)) for w in prev)
        out.append(_rec(f"{name}_factorial_extendable", ok))
    beta = shift.BetaShift("(1+sqrt(5))/2")
    bc = [beta.count_language(n) for n in range(1, 9)]
    out.append(_rec("golden_beta_shift_equals_golden_mean", bc == fib[:8], counts=bc))
    return out


def suite_entropy(seed: int) -> list[dict]:
    out = []
    s1 = EpsScale(1)
    full = shift.FullShift(2)
    est = entropy.entropy_estimate(full, 12, s1)
    ok = all(abs(math.log(c) / n - math.log(2)) < 1e-12 for n, c in enumerate(est.counts, start=1))
    out.append(_rec("full_shift_rate_ln2", ok, rate=est.rate))
    g = entropy.entropy_estimate(shift.golden_mean(), 12, s1)
    phi = (1 + math.sqrt(5)) / 2
    out.append(
        _rec(
            "golden_slope",
            abs(g.slope - math.log(phi)) < 0.02 and abs(g.reference - math.log(phi)) < 1e-10,
            slope=g.slope,
            reference=g.reference,
        )
    )
    ok = True
    for sp in (full, shift.golden_mean(), shift.example_hereditary()):
        for m in (1, 2, 3):
            for n in range(1, 8 - m + 1):
                rep = entropy.separated_count(sp, n, EpsScale(m), "brute-force")
                ok &= rep.count == sp.count_language(n + m - 1) and bool(rep.certified)
    out.append(_rec("brute_force_separated_equals_language", ok, horizon=7))
    worst = math.inf
    for n in range(1, 25):
        for k in range(1, 10):
            b = entropy.q_count_and_bound(n, k / 20)
            worst = min(worst, b.gap)
    out.append(_rec("q_bound", worst >= 0, min_gap=worst))
    return out


def suite_tracing(seed: int) -> list[dict]:
    out = []
    s1 = EpsScale(1)
    for name, sp, want in (("full", shift.FullShift(2), 1), ("golden", shift.golden_mean(), 2)):
        est = tracing.estimate_gap(sp, s1, "gluing", tasks=tracing.exhaustive_pair_tasks(sp, s1, 4), max_M=4)
        out.append(_rec(f"{name}_gluing_gap", est.M == want, M=est.M))
    u = shift.example_union()
    est = tracing.estimate_gap(u, s1, "gluing", tasks=tracing.exhaustive_pair_tasks(u, s1, 2), max_M=4)
    out.append(_rec("union_cross_component_failure", est.M is None, witness=est.witnesses[-1]))
    L_X = tracing.GapFunction.from_callable(lambda n: math.ceil(math.sqrt(n)), 64)
    L_Y = tracing.GapFunction.from_callable(lambda n: math.ceil(math.log(n + 1)), 64)
    comp = tracing.compose_tempered_gap(L_X, L_Y)
    ok = all(comp.function(n) == L_X(L_Y(n)) + L_Y(n) + L_X(n) - 1 for n in range(1, comp.function.horizon + 1))
    out.append(_rec("composed_gap_formula", ok and comp.function(9) == 7, value_at_9=comp.function(9)))
    return out


def suite_measures(seed: int) -> list[dict]:
    out = []
    rng = np.random.default_rng(seed)
    b = measures.MarkovMeasure.bernoulli(0.3)
    h = -0.3 * math.log(0.3) - 0.7 * math.log(0.7)
    out.append(_rec("bernoulli_entropy", abs(measures.markov_entropy(b) - h) < 1e-10, value=measures.markov_entropy(b)))
    par = measures.MarkovMeasure.parry(shift.golden_mean())
    ref = math.log((1 + math.sqrt(5)) / 2)
    out.append(_rec("parry_entropy", abs(measures.markov_entropy(par) - ref) < 1e-10, value=measures.markov_entropy(par)))
    vals = {}
    ok = True
    for p, closed in ((0.5, math.log(2)), (0.11, entropy.binary_entropy(0.11))):
        for d in (0.1, 0.2):
            v = measures.katok_entropy_estimate(measures.MarkovMeasure.bernoulli(p), 14, EpsScale(1), d)
            vals[f"p={p},delta={d}"] = v
            ok &= abs(v - closed) < 0.08
    out.append(_rec("katok_estimates", ok, values=vals))
    cfg = measures.MeasureMetricConfig()
    ok = True
    for _ in range(20):
        ps = rng.uniform(0.05, 0.95, size=4)
        t = float(rng.uniform())
        mus = [measures.MarkovMeasure.bernoulli(float(p)) for p in ps]
        lhs = measures.weak_metric(
            measures.mixture([(t, mus[0]), (1 - t, mus[1])], cfg.depth),
            measures.mixture([(t, mus[2]), (1 - t, mus[3])], cfg.depth),
            cfg,
        )
        rhs = t * measures.weak_metric(mus[0], mus[2], cfg) + (1 - t) * measures.weak_metric(mus[1], mus[3], cfg)
        ok &= lhs <= rhs + 1e-12
    out.append(_rec("weak_metric_convexity", ok, trials=20))
    return out


def suite_construction(seed: int) -> list[dict]:
    rep = construction.run_construction(
        shift.FullShift(2), measures.MarkovMeasure.bernoulli(0.5), 0.3, 0.15, 0.4, 3, M=10
    )
    out = []
    checks = rep.checks
    ledger = checks.pop("ledger")
    for name, ok in checks.items():
        out.append(_rec(name, ok))
    out.append({"name": "parameter_ledger", "ok": True, "satisfied": ledger, "violations": rep.params.violations})
    return out


def suite_pressure(seed: int) -> list[dict]:
    out = []
    rng = np.random.default_rng(seed)
    full = shift.FullShift(2)
    phi = pressure.PotentialSpec.indicator((1,))
    rep = pressure.pressure_estimate(full, phi, 14, EpsScale(1))
    target = math.log(1 + math.e)
    out.append(_rec("full_shift_pressure_identity", max(abs(v - target) for v in rep.series) < 1e-12))
    eq = pressure.measure_pressure(pressure.gibbs_bernoulli(phi), phi)
    out.append(_rec("equilibrium_bernoulli", abs(eq - target) < 1e-10, value=eq))
    ok = True
    for _ in range(20):
        P = rng.dirichlet([1, 1], size=2)
        ok &= pressure.measure_pressure(measures.MarkovMeasure(P), phi) <= rep.value + 0.05
    out.append(_rec("variational_inequality", ok, trials=20))
    errs = []
    fam = pressure.BernoulliFamily(0.0, 0.5)
    for h in np.linspace(0, math.log(2), 20, endpoint=False):
        errs.append(pressure.spectrum_solve(fam, "entropy", float(h)).error)
    out.append(_rec("entropy_spectrum", max(errs) <= 1e-10, max_error=max(errs)))
    inf_val, _ = pressure.pressure_infimum(pressure.BernoulliFamily(0.0, 1.0), phi)
    gap = inf_val - pressure.chi_min(full, phi)
    out.append(_rec("p_inf_chi_min_gap", 0 <= gap <= 1e-3, gap=gap))
    return out


SUITES = {
    "shift": suite_shift,
    "entropy": suite_entropy,
    "tracing": suite_tracing,
    "measures": suite_measures,
    "construction": suite_construction,
    "pressure": suite_pressure,
}


def run_suites(which: str, seed: int) -> dict[str, list[dict]]:
    names = list(SUITES) if which == "all" else [which]
    return {name: SUITES[name](seed) for name in names}
