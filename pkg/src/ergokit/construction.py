"""Finite-depth construction of a traced invariant set with prescribed entropy.

Pipeline: ``derive_params`` fixes every scale and records each constraint
with its margin, ``build_gamma`` picks a separated word set of size
``ceil(e^{M h0})``, ``lambda_language`` enumerates the traced words and
their shift-factors, and the two checks compare exact counts with the
counting bounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .entropy import (
    EpsScale,
    binary_entropy,
    entropy_estimate,
    exact,
    hamming_separated_set,
    q_count,
)
from .measures import (
    EmpiricalMeasure,
    MarkovMeasure,
    MeasureMetricConfig,
    empirical_tables_batch,
    markov_entropy,
    var_eps,
    weak_metric,
    weak_metric_batch,
)
from .shift import SFT, BetaShift, BudgetExceeded, FullShift, ShiftSpace, Word, format_word
from .tracing import OrbitTask, verify_trace

Y_BUDGET = 2_000_000


class InfeasibleConstruction(ValueError):
    def __init__(self, constraint: "Constraint"):
        super().__init__(f"constraint {constraint.name!r} violated: {constraint.lhs!r} vs {constraint.rhs!r}")
        self.constraint = constraint


class GammaError(ValueError):
    pass


@dataclass
class Constraint:
    name: str
    relation: str
    lhs: float
    rhs: float
    holds: bool
    note: str = ""

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "relation": self.relation,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "holds": self.holds,
            "margin": self.margin,
        }
        if self.note:
            d["note"] = self.note
        return d


def _lt(name, lhs, rhs, note="") -> Constraint:
    return Constraint(name, "<", float(lhs), float(rhs), bool(lhs < rhs), note)


def _le(name, lhs, rhs, note="") -> Constraint:
    return Constraint(name, "<=", float(lhs), float(rhs), bool(lhs <= rhs), note)


def topological_entropy(space: ShiftSpace, n_max: int = 14) -> float:
    if isinstance(space, FullShift):
        return math.log(space.alphabet_size)
    if isinstance(space, SFT):
        return math.log(space.spectral_radius())
    if isinstance(space, BetaShift):
        return space.entropy()
    return entropy_estimate(space, n_max, EpsScale(1)).slope


def entropy_root(beta: float) -> float:
    """The ``delta`` in ``(0, 1/2)`` with ``H(delta) = beta``."""
    if beta >= math.log(2):
        return 0.5
    return brentq(lambda d: binary_entropy(d) - beta, 1e-300, 0.5, xtol=1e-15)


@dataclass
class ConstructionParams:
    mu: MarkovMeasure
    eta0: float
    beta0: float
    h0: float
    h_mu: float
    h_top: float
    eta: float
    beta: float
    T: int
    m: int
    delta0: float
    delta1: float
    delta2: float
    M: int
    M1: int
    M1_eff: int
    gamma_m: int
    D_star: float
    var_eps: float
    ln_r_eps: float
    depth: int = 6
    h_star: float = 0.0
    ledger: list[Constraint] = field(default_factory=list)

    @property
    def scale(self) -> EpsScale:
        return EpsScale(self.m)

    @property
    def metric(self) -> MeasureMetricConfig:
        return MeasureMetricConfig(self.depth, self.mu.alphabet_size)

    @property
    def satisfied(self) -> bool:
        return all(c.holds for c in self.ledger)

    @property
    def violations(self) -> list[str]:
        return [c.name for c in self.ledger if not c.holds]

    @property
    def mismatch_budget(self) -> Fraction:
        return exact(self.delta2) * self.M

    def to_dict(self) -> dict:
        keys = (
            "eta0 beta0 h0 h_mu h_top eta beta T m delta0 delta1 delta2 M M1 M1_eff "
            "gamma_m D_star var_eps ln_r_eps depth h_star"
        ).split()
        d = {k: getattr(self, k) for k in keys}
        d["eps"] = 2.0**-self.m
        d["gamma0"] = 2.0**-self.gamma_m
        d["mu"] = self.mu.to_dict()
        d["ledger"] = [c.to_dict() for c in self.ledger]
        d["satisfied"] = self.satisfied
        d["violations"] = self.violations
        return d


def derive_params(
    mu: MarkovMeasure,
    eta0: float,
    beta0: float,
    h0: float,
    space: ShiftSpace,
    M: int | None = None,
    strict: bool = False,
    delta0: float = 0.1,
    m: int = 1,
    gamma_m: int | None = None,
    depth: int = 6,
    M_max: int = 64,
    N0: int = 0,
    table_n: int = 12,
) -> ConstructionParams:
    """Fix every scale of the construction and record each constraint.

    With ``strict`` the first violated constraint raises
    :class:`InfeasibleConstruction`.  Otherwise the pipeline proceeds with
    ``M1_eff = max(1, M1)`` and the ledger carries the violations.
    """
    h_mu = markov_entropy(mu)
    h_top = topological_entropy(space)
    if not 0 < h0 < h_mu:
        raise ValueError(f"need 0 < h0 < h_mu = {h_mu!r}; got h0 = {h0!r}")
    if h_mu > h_top + 1e-9:
        raise ValueError("measure entropy exceeds topological entropy; measure not carried by the space")
    if not mu.is_ergodic():
        raise ValueError("target measure must be ergodic")
    cfg = MeasureMetricConfig(depth, mu.alphabet_size)
    eta = eta0 / 4
    beta = min(beta0, h_mu - h0, h0) / 7
    D_star = cfg.diameter
    T = math.ceil(2 * D_star / eta) + 1
    delta1 = min(1 / (2 * T + 1), beta / (2 * (h_top + beta)))
    ln_r = math.log(space.count_language(m))
    parts = [delta0 / 2, 1 / T, entropy_root(beta)]
    if ln_r > 0:
        parts.append(beta / ln_r)
    delta2 = 0.9 * min(parts)
    v = var_eps(space, m, cfg)
    g_m = m if gamma_m is None else gamma_m
    eps, gamma0 = 2.0**-m, 2.0**-g_m

    def mm_ok(M_):
        return math.floor(delta1 * M_) >= 1 and math.log(delta1 * M_) / M_ < beta

    if M is None:
        M = next((k for k in range(1, M_max + 1) if mm_ok(k)), None)
        if M is None:
            M = M_max
    M1 = math.floor(delta1 * M)
    ledger = [
        _lt("T > 2D*/eta", 2 * D_star / eta, T),
        _lt("delta1 < 1/(2T)", delta1, 1 / (2 * T)),
        _lt("var(eps) < eta/4", v, eta / 4),
        _lt(
            "eps < gamma0/3",
            eps,
            gamma0 / 3,
            "separation in Gamma is read at the same scale as eps (ultrametric)" if g_m == m else "",
        ),
        _lt("delta1 (h(f) + beta) < beta", delta1 * (h_top + beta), beta),
        _lt("delta2 < delta0/2", delta2, delta0 / 2),
        _lt("delta2 < 1/T", delta2, 1 / T),
    ]
    if ln_r > 0:
        ledger.append(_lt("delta2 < beta / ln r(eps)", delta2, beta / ln_r))
    ledger.append(_lt("H(delta2) < beta", binary_entropy(delta2), beta))
    worst = max(
        math.log(space.count_language(n + m - 1)) / n - (h_top + beta) for n in range(N0 + 1, table_n + 1)
    )
    ledger.append(_le("max_n ln r(n,eps)/n - (h(f)+beta) <= 0", worst, 0.0, f"n in ({N0}, {table_n}]"))
    lhs = math.log(delta1 * M) / M
    ledger.append(_lt("ln(delta1 M)/M < beta", lhs, beta))
    ledger.append(_le("M1 >= 1", 1, M1))
    params = ConstructionParams(
        mu, eta0, beta0, h0, h_mu, h_top, eta, beta, T, m, delta0, delta1, delta2,
        M, M1, max(1, M1), g_m, D_star, v, ln_r, depth, 0.0, ledger,
    )
    if strict:
        for c in ledger:
            if not c.holds:
                raise InfeasibleConstruction(c)
    return params


# ---------------------------------------------------------------------------
# Gamma


def periodic_empirical(x: Word, depth: int, alphabet_size: int) -> EmpiricalMeasure:
    M = len(x)
    reps = -(-(M + depth - 1) // M)
    return EmpiricalMeasure(tuple(x) * reps, M, depth, alphabet_size)


@dataclass
class Gamma:
    words: list[Word]
    M: int
    target: int
    upper: float
    filtered: bool

    def to_dict(self) -> dict:
        return {
            "words": [format_word(w) for w in self.words],
            "M": self.M,
            "size": len(self.words),
            "target": self.target,
            "upper": self.upper,
            "filtered": self.filtered,
        }


def build_gamma(
    space: ShiftSpace,
    params: ConstructionParams,
    h0: float | None = None,
    empirical_filter: bool = True,
) -> Gamma:
    h0 = params.h0 if h0 is None else h0
    M = params.M
    target = math.ceil(math.exp(M * h0))
    upper = math.exp(M * (h0 + params.beta))
    if not target < upper:
        raise GammaError(f"|Gamma| = {target} is not below e^(M(h0+beta)) = {upper!r}")
    accept = None
    if empirical_filter:
        cfg = params.metric

        def accept(w):
            return weak_metric(periodic_empirical(w, cfg.depth, cfg.alphabet_size), params.mu, cfg) < params.eta

    try:
        hs = hamming_separated_set(space, M, params.delta0, params.scale, target=target, accept=accept)
    except Exception as exc:
        raise GammaError(f"separated set too small at M={M}: {exc}") from exc
    return Gamma(hs.words, M, target, upper, empirical_filter)


# ---------------------------------------------------------------------------
# Lambda


def hamming_ball(x: Word, radius: int, alphabet_size: int) -> list[Word]:
    """Words differing from ``x`` in at most ``radius`` positions."""
    out = []
    M = len(x)
    for r in range(radius + 1):
        for pos in itertools.combinations(range(M), r):
            for syms in itertools.product(range(alphabet_size - 1), repeat=r):
                w = list(x)
                for p, s in zip(pos, syms):
                    w[p] = s if s < x[p] else s + 1
                out.append(tuple(w))
    return out


def gap_patterns(M1: int, n: int):
    return itertools.product(range(M1), repeat=n)


def block_starts(M: int, xi: Sequence[int]) -> list[int]:
    """``t_k = sum_{j<k} (M + xi(j))`` for ``k = 1..n+1``."""
    return list(itertools.accumulate((M + g for g in xi), initial=0))


@dataclass
class LambdaApprox:
    gamma: Gamma
    depth: int
    M: int
    M1: int
    m: int
    mismatch_radius: int
    y_words: dict[Word, tuple[tuple[int, ...], tuple[int, ...]]]
    length: int
    words: set[Word]

    @property
    def offsets(self) -> int:
        return self.M + self.M1

    def factors(self, k: int) -> set[Word]:
        """Distinct length-``k`` factors of the Lambda-words."""
        if k > self.length:
            raise ValueError(f"Lambda-words have length {self.length}")
        out = set()
        for w in self.words:
            for i in range(self.length - k + 1):
                out.add(w[i : i + k])
        return out

    def shift_invariant(self) -> bool:
        tails = self.factors(self.length - 1)
        return all(w[1:] in tails for w in self.words)

    def to_dict(self, include_words: bool = False) -> dict:
        d = {
            "gamma": self.gamma.to_dict(),
            "depth": self.depth,
            "M": self.M,
            "M1": self.M1,
            "m": self.m,
            "mismatch_radius": self.mismatch_radius,
            "y_count": len(self.y_words),
            "lambda_length": self.length,
            "lambda_count": len(self.words),
        }
        if include_words:
            d["lambda_words"] = sorted(format_word(w) for w in self.words)
        return d


def lambda_language(
    space: ShiftSpace,
    params: ConstructionParams,
    gamma: Gamma,
    depth: int,
    budget: int = Y_BUDGET,
) -> LambdaApprox:
    if params.m != 1:
        raise ValueError("the construction runs at m = 1")
    M, M1 = params.M, params.M1_eff
    a = space.alphabet_size
    need = params.mismatch_budget
    radius = math.ceil(need) - 1 if need > 0 else -1
    if radius < 0:
        raise ValueError("mismatch budget must be positive")
    balls = [hamming_ball(x, min(radius, M), a) for x in gamma.words]
    allowed_blocks = [[w for w in ball if space.is_allowed(w)] for ball in balls]
    n = depth
    est = (sum(len(b) for b in allowed_blocks) ** n) * (M1**n) * (a ** ((M1 - 1) * n))
    if est > budget:
        raise BudgetExceeded(f"Y-language estimate {est} exceeds budget {budget}")
    y_words: dict[Word, tuple[tuple[int, ...], tuple[int, ...]]] = {}
    for xi in gap_patterns(M1, n):
        gaps_fill = [space.language(g) if g else [()] for g in xi]
        for C in itertools.product(range(len(gamma.words)), repeat=n):
            for blocks in itertools.product(*(allowed_blocks[c] for c in C)):
                for fills in itertools.product(*gaps_fill):
                    w = tuple(s for blk, fl in zip(blocks, fills) for s in blk + fl)
                    if w not in y_words and space.is_allowed(w):
                        y_words[w] = (C, xi)
    # longest length at which every offset 0..M+M1-1 fits; a single block keeps symbols only
    ell = max(1, n * M - M - M1 + 1)
    words = {y[o : o + ell] for y in y_words for o in range(M + M1) if o + ell <= len(y)}
    return LambdaApprox(gamma, n, M, M1, params.m, radius, y_words, ell, words)


def trace_task(lam: LambdaApprox, params: ConstructionParams, C, xi) -> OrbitTask:
    starts = block_starts(lam.M, xi)[:-1]
    pts = [lam.gamma.words[c] for c in C]
    return OrbitTask(pts, [lam.M] * len(pts), starts=starts, delta1=params.delta1, delta2=params.delta2)


def verify_y_words(space: ShiftSpace, lam: LambdaApprox, params: ConstructionParams) -> tuple[int, int]:
    """Trace every Y-word against its generator; returns ``(passed, total)``.

    When ``M1`` was relaxed past ``delta1 M`` the spacing tolerance is widened
    to just above ``M1/M`` so the relaxation is not reported twice.
    """
    delta1 = params.delta1
    if Fraction(lam.M1, lam.M) >= exact(delta1):
        delta1 = float(Fraction(lam.M1, lam.M) + Fraction(1, 10**9))
    ok = 0
    for w, (C, xi) in lam.y_words.items():
        task = trace_task(lam, params, C, xi)
        task.delta1 = delta1
        ok += verify_trace(space, w, task, params.scale).ok
    return ok, len(lam.y_words)


# ---------------------------------------------------------------------------
# counting checks


@dataclass
class BoundCheck:
    name: str
    lhs: float
    rhs: float
    holds: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "holds": self.holds, **self.detail}


def block_factor(params: ConstructionParams, space: ShiftSpace) -> float:
    """``e^{M(h0+beta)} M1 Q(M, delta2) r(eps)^{delta2 M} r(M1, eps)``."""
    M, M1 = params.M, params.M1_eff
    Q = q_count(M, params.delta2)
    r_eps = math.exp(params.ln_r_eps)
    r_M1 = space.count_language(M1 + params.m - 1)
    return math.exp(M * (params.h0 + params.beta)) * M1 * Q * r_eps ** (params.delta2 * M) * r_M1


def upper_bound(params: ConstructionParams, space: ShiftSpace, n: int) -> float:
    return (params.M + params.M1_eff) * block_factor(params, space) ** (n + 2)


def count_bounds_check(lam: LambdaApprox, params: ConstructionParams, space: ShiftSpace) -> list[BoundCheck]:
    M, M1, n = lam.M, lam.M1, lam.depth
    checks = []
    n_sep = lam.length // M
    # at m = 1, (k, eps)-separated subsets of Lambda-words are sets of distinct k-prefixes
    sep_eps = len({w[: n_sep * M] for w in lam.words})
    sep_2eps = 1
    bound = upper_bound(params, space, n_sep)
    checks.append(BoundCheck("upper (n'M, 2eps)-separated", sep_2eps, bound, sep_2eps <= bound, {"n_prime": n_sep}))
    checks.append(BoundCheck("upper (n'M, eps)-separated", sep_eps, bound, sep_eps <= bound, {"n_prime": n_sep}))
    best_xi = max(gap_patterns(M1, n), key=lambda xi: len(_block_representatives(lam, xi)))
    lower = len(lam.gamma.words) ** n / M1 ** (n - 1)
    reps = _block_representatives(lam, best_xi)
    horizon = min(len(next(iter(reps.values()))), math.floor(n * M * (1 + params.delta1)))
    prefixes = {w[:horizon] for w in reps.values()}
    separated = len(prefixes) == len(reps)
    checks.append(
        BoundCheck(
            "lower distinct Gamma-block words",
            lower,
            len(reps),
            len(reps) >= lower and separated,
            {"xi": list(best_xi), "pairwise_separated": separated, "horizon": horizon},
        )
    )
    return checks


def _block_representatives(lam: LambdaApprox, xi) -> dict[tuple[int, ...], Word]:
    """One Y-word per Gamma-block sequence ``C`` under gap pattern ``xi``."""
    reps: dict[tuple[int, ...], Word] = {}
    for w, (C, x) in lam.y_words.items():
        if x == tuple(xi) and C not in reps:
            reps[C] = w
    return reps


def separation_check(lam: LambdaApprox, params: ConstructionParams) -> tuple[int, int]:
    """Y-words sharing ``xi`` with different blocks at index ``k`` differ inside block ``k``.

    The required count is ``> delta0 M - 2 (radius)``; returns ``(minimum seen, required)``.
    Blocks vary independently, so the minimum over word pairs equals the minimum
    over distinct block contents grouped by ``(xi, k, Gamma index)``.
    """
    M = lam.M
    need = math.floor(params.delta0 * M) + 1 - 2 * lam.mismatch_radius
    contents: dict[tuple, set] = {}
    for w, (C, xi) in lam.y_words.items():
        t = block_starts(M, xi)
        for k in range(lam.depth):
            contents.setdefault((xi, k, C[k]), set()).add(tuple(w[t[k] : t[k] + M]))
    groups: dict[tuple, list] = {}
    for (xi, k, _c), blocks in contents.items():
        groups.setdefault((xi, k), []).append(np.array(sorted(blocks)))
    worst = M
    for arrays in groups.values():
        for b1, b2 in itertools.combinations(arrays, 2):
            d = (b1[:, None, :] != b2[None, :, :]).sum(axis=2)
            worst = min(worst, int(d.min()))
    return worst, max(need, 1)


@dataclass
class EntropyWindow:
    lower: float
    upper: float
    low_edge: float
    high_edge: float
    slack: float
    inside: bool
    lambda_rate: float

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def entropy_window(lam: LambdaApprox, params: ConstructionParams, space: ShiftSpace) -> EntropyWindow:
    n, M, M1 = lam.depth, lam.M, lam.M1
    lower_count = len(lam.gamma.words) ** n / M1 ** (n - 1)
    lower = math.log(lower_count) / (n * M * (1 + params.delta1))
    log_block = math.log(block_factor(params, space))
    upper = (math.log(M + M1) + (n + 2) * log_block) / (n * M)
    slack = math.log(M + M1) / (n * M) + 2 * log_block / (n * M)
    lo = params.h0 - params.beta0 - slack
    hi = params.h0 + params.beta0 + slack
    rate = math.log(len(lam.words)) / lam.length
    return EntropyWindow(lower, upper, lo, hi, slack, lo < lower and upper < hi, rate)


def lambda_measure_distances(lam: LambdaApprox, params: ConstructionParams) -> np.ndarray:
    """``D(E(w, len(w) - depth + 1), mu)`` for every Lambda-word ``w``."""
    cfg = params.metric
    N = lam.length - cfg.depth + 1
    if N < 1:
        raise ValueError("Lambda-words too short for the metric depth")
    words = np.array(sorted(lam.words), dtype=np.int64)
    tables = empirical_tables_batch(words, N, cfg.depth, cfg.alphabet_size)
    return weak_metric_batch(tables, params.mu, cfg)


@dataclass
class ConstructionReport:
    params: ConstructionParams
    lam: LambdaApprox
    bounds: list[BoundCheck]
    window: EntropyWindow
    max_measure_distance: float
    factor_count: int
    full_count: int
    factor_length: int
    traced: tuple[int, int]
    shift_invariant: bool

    @property
    def checks(self) -> dict[str, bool]:
        return {
            "ledger": self.params.satisfied,
            "gamma_size": self.lam.gamma.target <= len(self.lam.gamma.words) < self.lam.gamma.upper,
            "count_bounds": all(b.holds for b in self.bounds),
            "entropy_window": self.window.inside,
            "measures_within_3eta": self.max_measure_distance < 3 * self.params.eta,
            "proper_subshift": self.factor_count < self.full_count,
            "traced": self.traced[0] == self.traced[1],
            "shift_invariant": self.shift_invariant,
        }

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "lambda": self.lam.to_dict(),
            "bounds": [b.to_dict() for b in self.bounds],
            "entropy_window": self.window.to_dict(),
            "max_measure_distance": self.max_measure_distance,
            "three_eta": 3 * self.params.eta,
            "factor_length": self.factor_length,
            "factor_count": self.factor_count,
            "full_count": self.full_count,
            "traced": list(self.traced),
            "shift_invariant": self.shift_invariant,
            "checks": self.checks,
        }


def run_construction(
    space: ShiftSpace,
    mu: MarkovMeasure,
    h0: float,
    beta0: float,
    eta0: float,
    depth: int,
    M: int | None = 10,
    factor_length: int = 12,
    **kw,
) -> ConstructionReport:
    params = derive_params(mu, eta0, beta0, h0, space, M=M, **kw)
    gamma = build_gamma(space, params)
    lam = lambda_language(space, params, gamma, depth)
    bounds = count_bounds_check(lam, params, space)
    window = entropy_window(lam, params, space)
    dist = float(lambda_measure_distances(lam, params).max())
    k = min(factor_length, lam.length)
    fac = len(lam.factors(k))
    return ConstructionReport(
        params, lam, bounds, window, dist, fac, space.count_language(k), k,
        verify_y_words(space, lam, params), lam.shift_invariant(),
    )
