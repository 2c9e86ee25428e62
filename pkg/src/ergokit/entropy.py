"""Separated and spanning sets, entropy estimates, Hamming-separated sets.

Metric convention: ``d(x, y) = 2**-min{k : x_k != y_k}`` with ``k`` counted
from 0, and ``eps = 2**-m``.  Under this ultrametric two points are
``(n, eps)``-separated iff they differ among their first ``n + m - 1``
symbols, and an ``(n, eps)``-Bowen ball is an ``(n + m - 1)``-cylinder.  So

    s(n, eps) = r(n, eps) = |L_{n+m-1}|.

The ``brute-force`` routines below never use that identity: they evaluate
``d_n`` from its definition on candidate points and certify maximality
through a partition of the candidates into mutually close classes.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .shift import SFT, BudgetExceeded, ShiftSpace, Word


@dataclass(frozen=True)
class EpsScale:
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("scale m must be a positive integer")

    @property
    def eps(self) -> float:
        return 2.0 ** -self.m

    def window(self, n: int) -> int:
        """Number of coordinates that decide ``(n, eps)``-separation."""
        return n + self.m - 1


def exact(x) -> Fraction:
    """Exact rational reading of a user-supplied threshold (``0.1`` -> 1/10)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


# ---------------------------------------------------------------------------
# d_n from the definition


def dn_distance(points: np.ndarray, ref: np.ndarray, n: int) -> np.ndarray:
    """``d_n(p, ref)`` for every row ``p`` of ``points``.

    Rows are finite prefixes of points, all of the same horizon ``H``; when
    two rows agree up to the horizon the distance of the ``k``-th shifts is
    replaced by its upper bound ``2**-(H - k)``.
    """
    points = np.atleast_2d(points)
    H = points.shape[1]
    if n > H:
        raise ValueError("horizon shorter than n")
    idx = np.arange(H)
    pos = np.where(points != ref[None, :], idx[None, :], H)
    # first mismatch at or after k, for every k
    first = np.minimum.accumulate(pos[:, ::-1], axis=1)[:, ::-1]
    expo = first[:, :n] - idx[None, :n]
    return np.max(np.exp2(-expo.astype(float)), axis=1)


def dn_table(horizon: int, n: int) -> np.ndarray:
    """``d_n`` as a function of the mismatch bitmask of two horizon-``H`` prefixes.

    Bit ``i`` of the mask is set iff the points differ at coordinate ``i``.
    Built from the definition, ``max_k d(f^k x, f^k y)``, with the same
    end-of-horizon upper bound as :func:`dn_distance`.
    """
    if n > horizon:
        raise ValueError("horizon shorter than n")
    v = np.arange(2**horizon, dtype=np.int64)
    out = np.zeros(len(v))
    for k in range(n):
        w = v >> k
        low = w & -w
        first = np.where(w > 0, np.log2(np.maximum(low, 1)).astype(np.int64), horizon - k)
        out = np.maximum(out, np.exp2(-first.astype(float)))
    return out


def _candidates(space: ShiftSpace, horizon: int) -> np.ndarray:
    arr = space.language_array(horizon)
    return (arr << np.arange(horizon)[None, :]).sum(axis=1)


def _greedy_separated(codes: np.ndarray, table: np.ndarray, eps: float) -> list[int]:
    chosen = np.empty(len(codes), dtype=np.int64)
    size = 0
    for i, c in enumerate(codes):
        if size == 0 or np.all(table[codes[chosen[:size]] ^ c] > eps):
            chosen[size] = i
            size += 1
    return [int(i) for i in chosen[:size]]


def _close_classes(codes: np.ndarray, reps: Sequence[int], table: np.ndarray, eps: float) -> list[list[int]]:
    """Assign each candidate to the first representative within ``eps``."""
    rep_codes = codes[list(reps)]
    classes: list[list[int]] = [[] for _ in reps]
    for i, c in enumerate(codes):
        close = np.flatnonzero(table[rep_codes ^ c] <= eps)
        if len(close) == 0:
            raise AssertionError("greedy separated set is not maximal")
        classes[int(close[0])].append(i)
    return classes


def _classes_are_cliques(codes: np.ndarray, classes, table: np.ndarray, eps: float) -> bool:
    for cls in classes:
        sub = codes[cls]
        if np.any(table[sub[:, None] ^ sub[None, :]] > eps):
            return False
    return True


@dataclass
class SeparationReport:
    n: int
    m: int
    count: int
    method: str
    certified: bool = True
    series: list[tuple[int, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["series"] = [list(p) for p in self.series]
        return d


BRUTE_FORCE_LIMIT = 14


def _check_brute(space: ShiftSpace, n: int, scale: EpsScale) -> int:
    horizon = scale.window(n) + 1
    if scale.window(n) > BRUTE_FORCE_LIMIT or space.alphabet_size > 2:
        raise BudgetExceeded("brute-force separation limited to n+m-1 <= 14 over two symbols")
    return horizon


def separated_count(space: ShiftSpace, n: int, scale: EpsScale, method: str = "cylinder") -> SeparationReport:
    """Maximal cardinality of an ``(n, eps)``-separated set."""
    if n < 1:
        raise ValueError("n must be positive")
    if method == "cylinder":
        count = space.count_language(scale.window(n))
        series = [(k, space.count_language(scale.window(k))) for k in range(1, n + 1)]
        return SeparationReport(n, scale.m, count, "cylinder-shortcut", True, series)
    if method != "brute-force":
        raise ValueError(f"unknown method {method!r}")
    horizon = _check_brute(space, n, scale)
    codes = _candidates(space, horizon)
    table = dn_table(horizon, n)
    sep = _greedy_separated(codes, table, scale.eps)
    classes = _close_classes(codes, sep, table, scale.eps)
    # every separated set meets each mutually-close class at most once
    certified = _classes_are_cliques(codes, classes, table, scale.eps)
    return SeparationReport(n, scale.m, len(sep), "brute-force", certified)


def spanning_count(space: ShiftSpace, n: int, scale: EpsScale, method: str = "cylinder") -> int:
    """Minimal cardinality of an ``(n, eps)``-spanning set.

    The brute-force route builds a greedy cover and checks it against the
    greedy separated set: in an ultrametric each ball holds at most one point
    of a separated set, so equal sizes certify minimality.
    """
    if method == "cylinder":
        return space.count_language(scale.window(n))
    horizon = _check_brute(space, n, scale)
    codes = _candidates(space, horizon)
    table = dn_table(horizon, n)
    uncovered = np.ones(len(codes), dtype=bool)
    centres = 0
    while uncovered.any():
        i = int(np.argmax(uncovered))
        centres += 1
        uncovered &= ~(table[codes ^ codes[i]] <= scale.eps)
    lower = len(_greedy_separated(codes, table, scale.eps))
    if lower != centres:
        raise AssertionError(f"cover {centres} not certified minimal (separated {lower})")
    return centres


# ---------------------------------------------------------------------------
# entropy


@dataclass
class EntropyEstimate:
    n_max: int
    m: int
    counts: list[int]
    rate: float  # ln(count) / n at n_max
    slope: float
    reference: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_csv(self) -> str:
        return series_csv(self.counts)


def series_csv(counts: Sequence[int]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "count", "ln_count_over_n"])
    for n, c in enumerate(counts, start=1):
        w.writerow([n, c, repr(math.log(c) / n)])
    return buf.getvalue()


def fit_slope(ns: Sequence[int], values: Sequence[float]) -> float:
    if len(ns) < 2:
        return float(values[-1] / ns[-1]) if ns else float("nan")
    return float(np.polyfit(np.asarray(ns, float), np.asarray(values, float), 1)[0])


def entropy_estimate(space: ShiftSpace, n_max: int, scale: EpsScale) -> EntropyEstimate:
    counts = [space.count_language(scale.window(n)) for n in range(1, n_max + 1)]
    logs = [math.log(c) for c in counts]
    lo = max(1, n_max // 2)
    ns = list(range(lo, n_max + 1))
    slope = fit_slope(ns, logs[lo - 1 :])
    ref = None
    if isinstance(space, SFT):
        rho = space.spectral_radius()
        ref = math.log(rho) if rho > 0 else float("-inf")
    return EntropyEstimate(n_max, scale.m, counts, logs[-1] / n_max, slope, ref)


# ---------------------------------------------------------------------------
# Q(n, delta)


def binary_entropy(delta: float) -> float:
    if delta <= 0 or delta >= 1:
        return 0.0
    return -delta * math.log(delta) - (1 - delta) * math.log(1 - delta)


@dataclass
class QBound:
    n: int
    delta: float
    Q: int
    rate: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.rate <= self.bound

    @property
    def gap(self) -> float:
        return self.bound - self.rate

    def to_dict(self) -> dict:
        return {**asdict(self), "holds": self.holds, "gap": self.gap}


def q_count(n: int, delta) -> int:
    """Number of subsets ``A`` of ``{0..n-1}`` with ``|A| > (1 - delta) n``."""
    d = exact(delta)
    if not (0 < d < Fraction(1, 2)):
        raise ValueError("delta must lie in (0, 1/2)")
    if n < 1:
        raise ValueError("n must be positive")
    threshold = (1 - d) * n
    return sum(math.comb(n, j) for j in range(n + 1) if j > threshold)


def q_count_and_bound(n: int, delta: float) -> QBound:
    Q = q_count(n, delta)
    return QBound(n, float(delta), Q, math.log(Q) / n, binary_entropy(float(delta)))


# ---------------------------------------------------------------------------
# Hamming-type separation


def mismatch_windows(words: np.ndarray, ref: np.ndarray, M: int, m: int) -> np.ndarray:
    """``|{k < M : d(f^k x, f^k ref) > 2**-m}|`` for each row ``x``."""
    diff = np.atleast_2d(words)[:, : M + m - 1] != ref[None, : M + m - 1]
    if m == 1:
        return diff[:, :M].sum(axis=1)
    c = np.concatenate([np.zeros((diff.shape[0], 1), int), np.cumsum(diff, axis=1)], axis=1)
    win = c[:, m : M + m] - c[:, :M]
    return (win > 0).sum(axis=1)


@dataclass
class HammingSet:
    words: list[Word]
    M: int
    delta0: float
    m: int
    target: int | None
    reached: bool
    exact_maximum: int | None = None


class TargetUnreachable(RuntimeError):
    def __init__(self, achieved: int, target: int):
        super().__init__(f"separated set reached {achieved} of the required {target}")
        self.achieved = achieved
        self.target = target


def hamming_separated_set(
    space: ShiftSpace,
    M: int,
    delta0: float,
    scale: EpsScale,
    target: int | None = None,
    accept: Callable[[Word], bool] | None = None,
    exact_mode: bool = False,
    strict: bool = True,
) -> HammingSet:
    """Greedy lexicographic ``(M, delta0, 2**-m)``-separated set of words.

    Candidates are the allowed words of length ``M + m - 1``, optionally
    filtered by ``accept``.  Two words are separated when they disagree on
    more than ``delta0 * M`` of the ``M`` windows.  The greedy pass stops at
    ``target``; ``exact_mode`` also reports the true maximum (small ``M``).
    """
    m = scale.m
    cands = space.language_array(M + m - 1)
    if accept is not None:
        keep = [i for i, w in enumerate(space.language(M + m - 1)) if accept(w)]
        cands = cands[keep]
    need = exact(delta0) * M
    chosen: list[int] = []
    for i in range(len(cands)):
        if target is not None and len(chosen) >= target:
            break
        if chosen:
            mism = mismatch_windows(cands[chosen], cands[i], M, m)
            if not all(Fraction(int(c)) > need for c in mism):
                continue
        chosen.append(i)
    words = [tuple(int(a) for a in cands[i]) for i in chosen]
    reached = target is None or len(words) >= target
    exact_max = None
    if exact_mode:
        exact_max = _exact_maximum(cands, M, m, need)
    if not reached and strict:
        raise TargetUnreachable(len(words), target)
    return HammingSet(words, M, float(delta0), m, target, reached, exact_max)


def _exact_maximum(cands: np.ndarray, M: int, m: int, need: Fraction) -> int:
    import networkx as nx

    if M > 10:
        raise BudgetExceeded("exact mode limited to M <= 10")
    g = nx.Graph()
    g.add_nodes_from(range(len(cands)))
    for i in range(len(cands)):
        mism = mismatch_windows(cands[i + 1 :], cands[i], M, m)
        for j, c in enumerate(mism, start=i + 1):
            if Fraction(int(c)) > need:
                g.add_edge(i, j)
    _, weight = nx.max_weight_clique(g, weight=None)
    return int(weight)
