"""Locally constant potentials: Lyapunov exponents, pressure, spectrum solvers."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import logsumexp

from .entropy import EpsScale
from .measures import CylinderMeasure, MarkovMeasure, MeasureMetricConfig, markov_entropy, word_index
from .shift import FullShift, ShiftSpace, Word, format_word, parse_word

SOLVE_TOL = 1e-10


@dataclass
class PotentialSpec:
    """``phi`` on words of length ``r``; ``phi_n(x) = sum_{k<n} phi(x[k:k+r])``.

    ``errors[n-1]`` (optional) bounds ``|Phi_n - phi_n|`` for an
    asymptotically additive family approximated by ``phi``.
    """

    r: int
    table: dict[Word, float]
    alphabet_size: int = 2
    errors: list[float] | None = None

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("range must be at least 1")
        for w in self.table:
            if len(w) != self.r or any(not 0 <= s < self.alphabet_size for s in w):
                raise ValueError(f"bad potential key {format_word(w)!r}")
        if self.errors is not None and any(e < 0 for e in self.errors):
            raise ValueError("error bounds must be nonnegative")

    @classmethod
    def indicator(cls, word: Sequence[int], alphabet_size: int = 2, c: float = 1.0) -> "PotentialSpec":
        word = tuple(word)
        r = len(word)
        table = {w: (c if w == word else 0.0) for w in itertools.product(range(alphabet_size), repeat=r)}
        return cls(r, table, alphabet_size)

    @classmethod
    def constant(cls, c: float, alphabet_size: int = 2) -> "PotentialSpec":
        return cls(1, {(a,): float(c) for a in range(alphabet_size)}, alphabet_size)

    @classmethod
    def from_dict(cls, doc: dict) -> "PotentialSpec":
        unknown = set(doc) - {"range", "table", "alphabet_size", "errors"}
        if unknown:
            raise ValueError(f"unknown potential key(s) {sorted(unknown)}")
        table = {parse_word(k): float(v) for k, v in doc["table"].items()}
        a = int(doc.get("alphabet_size", 2))
        r = int(doc.get("range", len(next(iter(table)))))
        return cls(r, table, a, doc.get("errors"))

    def to_dict(self) -> dict:
        d = {
            "range": self.r,
            "alphabet_size": self.alphabet_size,
            "table": {format_word(w): v for w, v in sorted(self.table.items())},
        }
        if self.errors is not None:
            d["errors"] = list(self.errors)
        return d

    @property
    def sup_norm(self) -> float:
        return max(abs(v) for v in self.table.values())

    def vector(self, space: ShiftSpace | None = None) -> np.ndarray:
        """Values indexed by the base-``a`` code of each ``r``-word."""
        a, r = self.alphabet_size, self.r
        vec = np.zeros(a**r)
        if space is not None:
            for w in space.language(r):
                if w not in self.table:
                    raise ValueError(f"potential undefined on allowed word {format_word(w)!r}")
        for w, v in self.table.items():
            vec[word_index(w, a)] = v
        return vec

    def birkhoff(self, words: np.ndarray, n: int) -> np.ndarray:
        """``phi_n`` on each row (rows need ``n + r - 1`` symbols)."""
        words = np.atleast_2d(words)
        if words.shape[1] < n + self.r - 1:
            raise ValueError(f"need words of length {n + self.r - 1}")
        vec = self.vector()
        code = np.zeros((words.shape[0], n), dtype=np.int64)
        for i in range(self.r):
            code = code * self.alphabet_size + words[:, i : i + n]
        return vec[code].sum(axis=1)

    def error(self, n: int) -> float:
        if self.errors is None:
            return 0.0
        if n > len(self.errors):
            raise ValueError(f"error bounds tabulated up to n={len(self.errors)}")
        return float(self.errors[n - 1])


def lyapunov(mu: CylinderMeasure, phi: PotentialSpec) -> float:
    """``sum_w mu[w] phi(w)`` over ``r``-words; exact for additive ``phi``."""
    if mu.alphabet_size != phi.alphabet_size:
        raise ValueError("alphabet mismatch")
    weights = mu.cylinder_weights(phi.r)
    vec = phi.vector()
    defined = np.zeros(len(weights), dtype=bool)
    defined[[word_index(w, phi.alphabet_size) for w in phi.table]] = True
    if np.any((weights > 0) & ~defined):
        raise ValueError("measure charges words outside the potential table")
    return float(np.dot(weights, vec))


def measure_pressure(mu: MarkovMeasure, phi: PotentialSpec) -> float:
    return markov_entropy(mu) + lyapunov(mu, phi)


def lyapunov_lipschitz(phi: PotentialSpec, cfg: MeasureMetricConfig) -> float:
    """Constant ``K`` with ``|chi(mu) - chi(nu)| <= K D(mu, nu)`` at depth ``>= r``."""
    if cfg.depth < phi.r:
        raise ValueError("metric depth must reach the potential range")
    return phi.sup_norm / cfg.level_weight(phi.r)


@dataclass
class PressureReport:
    n_max: int
    m: int
    series: list[float]
    lower: list[float]
    upper: list[float]
    reference: float | None = None
    measure_side: float | None = None

    @property
    def value(self) -> float:
        return self.series[-1]

    def to_dict(self) -> dict:
        d = {
            "n_max": self.n_max,
            "m": self.m,
            "series": self.series,
            "lower": self.lower,
            "upper": self.upper,
            "reference": self.reference,
        }
        if self.measure_side is not None:
            d["measure_side"] = self.measure_side
        return d

    def to_csv(self) -> str:
        rows = ["n,pressure,lower,upper"]
        for n, (v, lo, hi) in enumerate(zip(self.series, self.lower, self.upper), start=1):
            rows.append(f"{n},{v!r},{lo!r},{hi!r}")
        return "\n".join(rows) + "\n"


def pressure_sum(space: ShiftSpace, phi: PotentialSpec, n: int, scale: EpsScale) -> float:
    """``ln sum e^{phi_n(w)}`` over allowed ``(n + m - 1)``-words."""
    if scale.m < phi.r:
        raise ValueError(f"m = {scale.m} < r = {phi.r}: phi_n is not constant on the cylinders")
    words = space.language_array(scale.window(n))
    return float(logsumexp(phi.birkhoff(words, n)))


def pressure_estimate(
    space: ShiftSpace, phi: PotentialSpec, n: int, scale: EpsScale, mu: MarkovMeasure | None = None
) -> PressureReport:
    if space.alphabet_size != phi.alphabet_size:
        raise ValueError("alphabet mismatch")
    phi.vector(space)
    series, lower, upper = [], [], []
    for k in range(1, n + 1):
        v = pressure_sum(space, phi, k, scale) / k
        e = phi.error(k) / k
        series.append(v)
        lower.append(v - e)
        upper.append(v + e)
    ref = None
    if isinstance(space, FullShift) and phi.r == 1:
        ref = float(logsumexp(phi.vector()))
    side = measure_pressure(mu, phi) if mu is not None else None
    return PressureReport(n, scale.m, series, lower, upper, ref, side)


# ---------------------------------------------------------------------------
# extremal exponents


def _block_graph(space: ShiftSpace, phi: PotentialSpec):
    words = space.language(phi.r)
    index = {w: i for i, w in enumerate(words)}
    edges = []
    for w in space.language(phi.r + 1):
        edges.append((index[w[:-1]], index[w[1:]]))
    weights = np.array([phi.table[w] for w in words])
    return len(words), edges, weights


def _karp(nv: int, edges, weights, sign: float) -> float:
    """Minimum mean cycle of ``sign * weights`` (vertex-weighted) via Karp."""
    w = sign * weights
    best = math.inf
    inf = math.inf
    for src in range(nv):
        D = np.full((nv + 1, nv), inf)
        D[0, src] = 0.0
        for k in range(1, nv + 1):
            for u, v in edges:
                if D[k - 1, u] < inf:
                    cand = D[k - 1, u] + w[u]
                    if cand < D[k, v]:
                        D[k, v] = cand
        for v in range(nv):
            if D[nv, v] == inf:
                continue
            worst = max((D[nv, v] - D[k, v]) / (nv - k) for k in range(nv) if D[k, v] < inf)
            best = min(best, worst)
    return sign * best


def chi_min(space: ShiftSpace, phi: PotentialSpec) -> float:
    """Least mean of ``phi`` along a periodic orbit of the ``r``-block graph."""
    nv, edges, weights = _block_graph(space, phi)
    return _karp(nv, edges, weights, 1.0)


def chi_max(space: ShiftSpace, phi: PotentialSpec) -> float:
    nv, edges, weights = _block_graph(space, phi)
    return _karp(nv, edges, weights, -1.0)


# ---------------------------------------------------------------------------
# one-parameter families and solvers


@dataclass(frozen=True)
class BernoulliFamily:
    """``t -> Bernoulli(t)`` (``t`` is the probability of symbol 1) on ``[lo, hi]``."""

    lo: float = 0.0
    hi: float = 0.5

    def __call__(self, t: float) -> MarkovMeasure:
        return MarkovMeasure.bernoulli(t)

    def to_dict(self) -> dict:
        return {"family": "bernoulli", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class MarkovSegment:
    """``t -> (1 - t) P0 + t P1`` on ``[0, 1]``."""

    P0: tuple
    P1: tuple
    lo: float = 0.0
    hi: float = 1.0

    def __call__(self, t: float) -> MarkovMeasure:
        P = (1 - t) * np.asarray(self.P0, float) + t * np.asarray(self.P1, float)
        return MarkovMeasure(P)

    def to_dict(self) -> dict:
        return {"family": "markov-segment", "P0": [list(r) for r in self.P0], "P1": [list(r) for r in self.P1]}


class TargetOutOfRange(ValueError):
    def __init__(self, target: float, attained: tuple[float, float]):
        super().__init__(f"target {target!r} outside attained range [{attained[0]!r}, {attained[1]!r}]")
        self.target = target
        self.attained = attained


def objective(kind: str, phi: PotentialSpec | None) -> Callable[[MarkovMeasure], float]:
    if kind == "entropy":
        return markov_entropy
    if phi is None:
        raise ValueError(f"target {kind!r} needs a potential")
    if kind == "exponent":
        return lambda mu: lyapunov(mu, phi)
    if kind == "pressure":
        return lambda mu: measure_pressure(mu, phi)
    raise ValueError(f"unknown target kind {kind!r}")


@dataclass
class SpectrumResult:
    kind: str
    target: float
    t: float
    achieved: float
    attained: tuple[float, float]
    measure: MarkovMeasure = field(repr=False)

    @property
    def error(self) -> float:
        return abs(self.achieved - self.target)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "target": self.target,
            "t": self.t,
            "achieved": self.achieved,
            "error": self.error,
            "attained": list(self.attained),
            "measure": self.measure.to_dict(),
        }


def spectrum_solve(
    family, kind: str, target: float, phi: PotentialSpec | None = None, grid: int = 64
) -> SpectrumResult:
    """Member of ``family`` whose entropy / exponent / pressure equals ``target``."""
    f = objective(kind, phi)

    def g(t):
        return f(family(t)) - target

    ts = np.linspace(family.lo, family.hi, grid + 1)
    vals = np.array([g(t) for t in ts])
    attained = (float(vals.min() + target), float(vals.max() + target))
    if not attained[0] - SOLVE_TOL <= target <= attained[1] + SOLVE_TOL:
        raise TargetOutOfRange(target, attained)
    hit = np.nonzero(np.abs(vals) <= SOLVE_TOL / 2)[0]
    if len(hit):
        t = float(ts[hit[0]])
    else:
        k = next(i for i in range(grid) if vals[i] * vals[i + 1] < 0)
        t = brentq(g, ts[k], ts[k + 1], xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    mu = family(t)
    achieved = f(mu)
    if abs(achieved - target) > SOLVE_TOL:
        raise ArithmeticError(f"solver reached {achieved!r}, target {target!r}")
    return SpectrumResult(kind, float(target), float(t), float(achieved), attained, mu)


def pressure_infimum(family, phi: PotentialSpec, boundary: float = 1e-9, grid: int = 400) -> tuple[float, float]:
    """``inf_t P_phi(family(t))`` over the open parameter interval.

    The grid clusters log-uniformly toward both ends so near-boundary values
    are seen even when the infimum is only approached.
    """
    lo, hi = family.lo, family.hi
    width = hi - lo
    near = np.logspace(math.log10(boundary), -1, grid // 2) * width
    ts = np.unique(np.concatenate([lo + near, hi - near, np.linspace(lo, hi, grid)[1:-1]]))
    vals = [measure_pressure(family(t), phi) for t in ts]
    i = int(np.argmin(vals))
    return float(vals[i]), float(ts[i])


def gibbs_bernoulli(phi: PotentialSpec) -> MarkovMeasure:
    """Equilibrium Bernoulli measure for a range-1 potential on a full shift."""
    if phi.r != 1:
        raise ValueError("closed form only for range 1")
    v = phi.vector()
    p = np.exp(v - logsumexp(v))
    return MarkovMeasure.bernoulli(p)


def maximize_bernoulli_pressure(phi: PotentialSpec) -> tuple[float, float]:
    """Numerical maximizer of ``P_phi(Bernoulli(p))`` over ``p`` in ``[0, 1]`` (binary alphabet)."""
    res = minimize_scalar(
        lambda p: -measure_pressure(MarkovMeasure.bernoulli(p), phi),
        bounds=(0.0, 1.0),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x), float(-res.fun)
