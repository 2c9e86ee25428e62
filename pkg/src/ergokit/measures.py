"""Markov and empirical measures, the cylinder metric D, Katok entropy, Z_{N,delta}.

Every measure here exposes ``cylinder_weights(k)``: the masses of all
length-``k`` cylinders as an array of size ``a**k`` indexed by the base-``a``
value of the word (so array order is lexicographic order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .entropy import EpsScale
from .shift import SFT, BudgetExceeded, FullShift, ShiftSpace

DEFAULT_DEPTH = 6
KATOK_BUDGET = 2**22


def word_index(w: Sequence[int], a: int) -> int:
    idx = 0
    for s in w:
        idx = idx * a + int(s)
    return idx


class CylinderMeasure:
    """A measure known through its cylinder tables up to some depth."""

    def __init__(self, alphabet_size: int, tables: dict[int, np.ndarray]):
        self.alphabet_size = int(alphabet_size)
        self._tables = {k: np.asarray(v, dtype=float) for k, v in tables.items()}

    @property
    def depth(self) -> int:
        return max(self._tables, default=0)

    def cylinder_weights(self, k: int) -> np.ndarray:
        if k not in self._tables:
            raise ValueError(f"cylinder table of depth {k} not available (depth {self.depth})")
        return self._tables[k]

    def weight(self, w: Sequence[int]) -> float:
        return float(self.cylinder_weights(len(w))[word_index(w, self.alphabet_size)])

    def to_dict(self, depth: int | None = None) -> dict:
        depth = self.depth if depth is None else depth
        return {
            "alphabet": self.alphabet_size,
            "tables": {str(k): self.cylinder_weights(k).tolist() for k in range(1, depth + 1)},
        }


class MarkovMeasure(CylinderMeasure):
    """Stationary first-order Markov measure ``(P, pi)``."""

    def __init__(self, P, pi=None, check: bool = True):
        P = np.asarray(P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError("transition matrix must be square")
        super().__init__(P.shape[0], {})
        self.P = P
        self.pi = stationary_vector(P) if pi is None else np.asarray(pi, dtype=float)
        if check:
            if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1) > 1e-12):
                raise ValueError("rows of P must be probability vectors")
            if abs(self.pi.sum() - 1) > 1e-12 or np.any(self.pi < -1e-15):
                raise ValueError("pi must be a probability vector")
            if np.max(np.abs(self.pi @ P - self.pi)) > 1e-10:
                raise ValueError("pi is not stationary for P")
        self._tables[1] = self.pi.copy()

    @classmethod
    def bernoulli(cls, probs) -> "MarkovMeasure":
        if np.isscalar(probs):
            probs = [1 - float(probs), float(probs)]
        probs = np.asarray(probs, dtype=float)
        return cls(np.tile(probs, (len(probs), 1)), probs.copy())

    @classmethod
    def parry(cls, space: SFT | FullShift) -> "MarkovMeasure":
        """Maximal-entropy Markov measure of a one-step SFT."""
        if isinstance(space, FullShift):
            return cls.bernoulli(np.full(space.alphabet_size, 1 / space.alphabet_size))
        if space.state_length != 1 or len(space.states) != space.alphabet_size:
            raise ValueError("Parry measure implemented for one-step SFTs using every symbol")
        A = np.array(space.adjacency, dtype=float)
        vals, right = np.linalg.eig(A)
        i = int(np.argmax(vals.real))
        lam = vals[i].real
        r = np.abs(right[:, i].real)
        vals_l, left = np.linalg.eig(A.T)
        l = np.abs(left[:, int(np.argmax(vals_l.real))].real)
        P = A * r[None, :] / (lam * r[:, None])
        P = P / P.sum(axis=1, keepdims=True)
        pi = l * r / np.dot(l, r)
        return cls(P, pi)

    def cylinder_weights(self, k: int) -> np.ndarray:
        if k < 1:
            raise ValueError("depth must be positive")
        if k not in self._tables:
            if self.alphabet_size**k > KATOK_BUDGET:
                raise BudgetExceeded(f"{self.alphabet_size}**{k} cylinders exceed the budget")
            prev = self.cylinder_weights(k - 1)
            a = self.alphabet_size
            last = np.arange(len(prev)) % a
            self._tables[k] = (prev[:, None] * self.P[last, :]).ravel()
        return self._tables[k]

    def is_ergodic(self) -> bool:
        """Irreducibility of the transition graph restricted to the support of pi."""
        support = np.flatnonzero(self.pi > 0)
        if len(support) == 0:
            return False
        sub = (self.P[np.ix_(support, support)] > 0).astype(int)
        reach = np.eye(len(support), dtype=int) | sub
        for _ in range(len(support)):
            reach = ((reach @ reach) > 0).astype(int)
        return bool(reach.all())

    def sample(self, n: int, seed: int) -> tuple[int, ...]:
        rng = np.random.default_rng(seed)
        a = self.alphabet_size
        x = [int(rng.choice(a, p=self.pi))]
        for _ in range(n - 1):
            x.append(int(rng.choice(a, p=self.P[x[-1]])))
        return tuple(x)

    def to_dict(self, depth: int | None = None) -> dict:
        d = {"type": "markov", "matrix": self.P.tolist(), "pi": self.pi.tolist()}
        if depth:
            d["tables"] = super().to_dict(depth)["tables"]
        return d


def stationary_vector(P: np.ndarray) -> np.ndarray:
    a = P.shape[0]
    A = np.vstack([P.T - np.eye(a), np.ones(a)])
    b = np.zeros(a + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0, None)
    return pi / pi.sum()


def measure_from_dict(doc: dict) -> MarkovMeasure:
    kind = doc.get("type")
    allowed = {"bernoulli": {"probs"}, "markov": {"matrix", "pi"}, "parry": {"space"}}
    if kind not in allowed:
        raise ValueError(f"unknown measure type {kind!r}")
    unknown = set(doc) - allowed[kind] - {"type"}
    if unknown:
        raise ValueError(f"unknown measure key(s) {sorted(unknown)}")
    if kind == "bernoulli":
        return MarkovMeasure.bernoulli(doc["probs"])
    if kind == "markov":
        return MarkovMeasure(doc["matrix"], doc.get("pi"))
    from .shift import build_space

    return MarkovMeasure.parry(build_space(doc["space"]))


def mixture(parts: Sequence[tuple[float, CylinderMeasure]], depth: int) -> CylinderMeasure:
    a = parts[0][1].alphabet_size
    tables = {
        k: sum(w * mu.cylinder_weights(k) for w, mu in parts) for k in range(1, depth + 1)
    }
    return CylinderMeasure(a, tables)


def point_mass(x: Sequence[int], alphabet_size: int, depth: int) -> CylinderMeasure:
    """Dirac mass at a point, through the first ``depth`` symbols of ``x``."""
    tables = {}
    for k in range(1, depth + 1):
        t = np.zeros(alphabet_size**k)
        t[word_index(x[:k], alphabet_size)] = 1.0
        tables[k] = t
    return CylinderMeasure(alphabet_size, tables)


# ---------------------------------------------------------------------------


def markov_entropy(mu: MarkovMeasure) -> float:
    P = mu.P
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log(P), 0.0)
    return float(-np.dot(mu.pi, terms.sum(axis=1))) + 0.0  # no negative zero


class EmpiricalMeasure(CylinderMeasure):
    """``E(x, n)`` read through cylinders of length up to ``depth``."""

    def __init__(self, x: Sequence[int], n: int, depth: int, alphabet_size: int):
        if n < 1:
            raise ValueError("n must be positive")
        if len(x) < n + depth - 1:
            raise ValueError(f"word of length {len(x)} too short for n={n}, depth={depth}")
        arr = np.asarray(x[: n + depth - 1], dtype=np.int64)
        tables = {}
        code = np.zeros(n, dtype=np.int64)
        for k in range(1, depth + 1):
            code = code * alphabet_size + arr[k - 1 : k - 1 + n]
            tables[k] = np.bincount(code, minlength=alphabet_size**k) / n
        super().__init__(alphabet_size, tables)
        self.n = n


def empirical_measure(x: Sequence[int], n: int, depth: int, alphabet_size: int = 2) -> EmpiricalMeasure:
    return EmpiricalMeasure(x, n, depth, alphabet_size)


def empirical_tables_batch(words: np.ndarray, n: int, depth: int, a: int) -> list[np.ndarray]:
    """Empirical cylinder tables of many words at once, one ``(rows, a**k)`` array per level."""
    words = np.atleast_2d(words)
    rows = words.shape[0]
    code = np.zeros((rows, n), dtype=np.int64)
    out = []
    for k in range(1, depth + 1):
        code = code * a + words[:, k - 1 : k - 1 + n]
        size = a**k
        flat = (code + (np.arange(rows)[:, None] * size)).ravel()
        out.append(np.bincount(flat, minlength=rows * size).reshape(rows, size) / n)
    return out


@dataclass(frozen=True)
class MeasureMetricConfig:
    depth: int = DEFAULT_DEPTH
    alphabet_size: int = 2

    def level_weight(self, k: int) -> float:
        return 2.0**-k / self.alphabet_size**k

    @property
    def diameter(self) -> float:
        """Largest achievable D: two point masses on disjoint cylinders at every level."""
        return sum(2 * self.level_weight(k) for k in range(1, self.depth + 1))


def weak_metric(mu: CylinderMeasure, nu: CylinderMeasure, cfg: MeasureMetricConfig) -> float:
    if mu.alphabet_size != nu.alphabet_size or mu.alphabet_size != cfg.alphabet_size:
        raise ValueError("alphabet mismatch")
    total = 0.0
    for k in range(1, cfg.depth + 1):
        total += cfg.level_weight(k) * float(np.abs(mu.cylinder_weights(k) - nu.cylinder_weights(k)).sum())
    return total


def weak_metric_batch(tables: list[np.ndarray], mu: CylinderMeasure, cfg: MeasureMetricConfig) -> np.ndarray:
    total = np.zeros(tables[0].shape[0])
    for k in range(1, cfg.depth + 1):
        total += cfg.level_weight(k) * np.abs(tables[k - 1] - mu.cylinder_weights(k)[None, :]).sum(axis=1)
    return total


def katok_entropy_estimate(mu: CylinderMeasure, n: int, scale: EpsScale, delta: float) -> float:
    """``ln r_mu(n, eps, delta) / n`` with Bowen balls read as ``(n+m-1)``-cylinders."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    masses = np.sort(mu.cylinder_weights(scale.window(n)))[::-1]
    cum = np.cumsum(masses)
    count = int(np.searchsorted(cum, 1 - delta, side="right")) + 1
    return math.log(min(count, len(masses))) / n


def z_membership(
    x: Sequence[int],
    N: int,
    delta: float,
    mu_ref: CylinderMeasure,
    horizon: int,
    cfg: MeasureMetricConfig,
    space: ShiftSpace | None = None,
) -> bool:
    """``D(E(f^k x, N), mu_ref) <= delta`` for every ``0 <= k <= horizon``."""
    need = horizon + N + cfg.depth - 1
    if len(x) < need:
        raise ValueError(f"word of length {len(x)} too short; need {need}")
    if space is not None and not space.is_allowed(x):
        raise ValueError("word is not in the language of the space")
    arr = np.asarray(x, dtype=np.int64)
    windows = np.lib.stride_tricks.sliding_window_view(arr, N + cfg.depth - 1)[: horizon + 1]
    tables = empirical_tables_batch(windows, N, cfg.depth, cfg.alphabet_size)
    return bool(np.all(weak_metric_batch(tables, mu_ref, cfg) <= delta))


def var_eps(space: ShiftSpace, m: int, cfg: MeasureMetricConfig) -> float:
    """``max D(E(x,1), E(y,1))`` over points agreeing on their first ``m`` symbols.

    ``E(x, 1)`` is the Dirac mass at ``x``; only the first ``depth`` symbols
    of each point matter, so the maximum runs over pairs of allowed words.
    """
    K = cfg.depth
    if m >= K:
        return 0.0
    words = space.language_array(K)
    best = 0.0
    for i in range(len(words)):
        same = np.all(words[:, :m] == words[i, :m], axis=1)
        others = words[same]
        d = np.zeros(len(others))
        for k in range(m + 1, K + 1):
            differ = np.any(others[:, :k] != words[i, :k], axis=1)
            d += cfg.level_weight(k) * 2 * differ
        best = max(best, float(d.max()))
    return best
