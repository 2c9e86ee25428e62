"""Orbit tracing: verification, tracer search, gap estimation, gap composition.

Two tracing notions are supported.

``gap`` mode: segments of lengths ``m_k`` start at
``s_k = sum_{i<k} (m_i + t_i - 1)`` and every coordinate must be traced
within ``eps`` (``d <= eps``).

``approx`` mode: every segment has length ``n``, start times are
``(n, delta1)``-spaced (``t_1 = 0``, ``n <= t_{k+1} - t_k < n (1 + delta1)``)
and each block may have fewer than ``delta2 * n`` positions where
``d > eps``.

At scale ``m`` (``eps = 2**-m``), ``d(f^i z, f^j x) <= eps`` iff
``z[i:i+m] == x[j:j+m]``, so points are carried as words with ``m - 1``
symbols of margin after each segment.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .entropy import EpsScale, exact
from .shift import BudgetExceeded, ProductSpace, ShiftSpace, Word, format_word, parse_word

NODE_BUDGET = 2_000_000


@dataclass
class OrbitTask:
    points: list[Word]
    lengths: list[int]
    gaps: list[int] | None = None
    starts: list[int] | None = None
    delta1: float | None = None
    delta2: float | None = None

    def __post_init__(self):
        self.points = [tuple(p) for p in self.points]
        self.lengths = [int(v) for v in self.lengths]
        if len(self.points) != len(self.lengths) or not self.points:
            raise ValueError("need one length per point and at least one point")
        if any(v < 1 for v in self.lengths):
            raise ValueError("segment lengths must be positive")
        if self.mode == "approx":
            if len(set(self.lengths)) != 1:
                raise ValueError("approximate tracing uses a common segment length n")
            if not (self.delta1 > 0 and self.delta2 > 0):
                raise ValueError("delta1 and delta2 must be positive")
        elif self.gaps is not None and any(t < 1 for t in self.gaps):
            raise ValueError("gaps must be at least 1")

    @property
    def mode(self) -> str:
        return "approx" if self.delta1 is not None or self.delta2 is not None else "gap"

    @property
    def n(self) -> int:
        return self.lengths[0]

    def check_margin(self, m: int) -> None:
        for k, (x, ell) in enumerate(zip(self.points, self.lengths)):
            if len(x) < ell + m - 1:
                raise ValueError(f"point {k} has length {len(x)}; need {ell + m - 1} at scale m={m}")

    @classmethod
    def from_dict(cls, doc: dict) -> "OrbitTask":
        allowed = {"points", "lengths", "gaps", "starts", "n", "delta1", "delta2"}
        unknown = set(doc) - allowed
        if unknown:
            raise ValueError(f"unknown task key(s) {sorted(unknown)}")
        points = [parse_word(p) for p in doc["points"]]
        if "lengths" in doc:
            lengths = doc["lengths"]
        elif "n" in doc:
            lengths = [doc["n"]] * len(points)
        else:
            lengths = [len(p) for p in points]
        return cls(points, lengths, doc.get("gaps"), doc.get("starts"), doc.get("delta1"), doc.get("delta2"))

    def to_dict(self) -> dict:
        d: dict = {"points": [format_word(p) for p in self.points], "lengths": self.lengths}
        for key in ("gaps", "starts", "delta1", "delta2"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        return d


def start_times(lengths: Sequence[int], gaps: Sequence[int]) -> list[int]:
    """``s_1 = 0`` and ``s_k = sum_{i<k} (m_i + t_i - 1)``."""
    if len(gaps) < len(lengths) - 1:
        raise ValueError("need a gap between every pair of consecutive segments")
    s = [0]
    for m_i, t_i in zip(lengths[:-1], gaps):
        s.append(s[-1] + m_i + t_i - 1)
    return s


def is_spaced(starts: Sequence[int], n: int, delta1) -> bool:
    if not starts or starts[0] != 0:
        return False
    upper = n * (1 + exact(delta1))
    return all(n <= b - a < upper for a, b in zip(starts, starts[1:]))


def spacing_choices(n: int, delta1) -> range:
    """Integer spacings ``d`` with ``n <= d < n (1 + delta1)``."""
    upper = n * (1 + exact(delta1))
    top = math.ceil(upper) - 1
    return range(n, top + 1)


@dataclass
class TraceReport:
    ok: bool
    mode: str
    starts: list[int]
    violations: list[tuple[int, int]] = field(default_factory=list)
    mismatches: list[int] = field(default_factory=list)
    spaced: bool = True

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "mode": self.mode,
            "starts": self.starts,
            "violations": [list(v) for v in self.violations],
            "mismatches": self.mismatches,
            "spaced": self.spaced,
        }


def _task_starts(task: OrbitTask) -> list[int]:
    if task.mode == "approx":
        if task.starts is None:
            raise ValueError("approximate verification needs start times")
        return list(task.starts)
    if task.gaps is None:
        raise ValueError("gap-mode verification needs gaps")
    return start_times(task.lengths, task.gaps)


def verify_trace(space: ShiftSpace, z: Sequence[int], task: OrbitTask, scale: EpsScale) -> TraceReport:
    z = tuple(z)
    m = scale.m
    task.check_margin(m)
    starts = _task_starts(task)
    need = max(s + ell + m - 1 for s, ell in zip(starts, task.lengths))
    if len(z) < need:
        raise ValueError(f"tracer of length {len(z)} too short; need {need}")
    if not space.is_allowed(z):
        raise ValueError("tracer is not in the language of the space")
    violations: list[tuple[int, int]] = []
    counts: list[int] = []
    for k, (s, x, ell) in enumerate(zip(starts, task.points, task.lengths)):
        bad = [j for j in range(ell) if z[s + j : s + j + m] != x[j : j + m]]
        counts.append(len(bad))
        violations.extend((k, j) for j in bad)
    if task.mode == "gap":
        return TraceReport(not violations, "gap", starts, violations, counts)
    spaced = is_spaced(starts, task.n, task.delta1)
    budget = exact(task.delta2) * task.n
    ok = spaced and all(Fraction(c) < budget for c in counts)
    return TraceReport(ok, "approx", starts, violations, counts, spaced)


# ---------------------------------------------------------------------------
# search


class _Search:
    """Depth-first search for an allowed word satisfying per-block constraints."""

    def __init__(self, space: ShiftSpace, length: int, node_budget: int):
        self.space = space
        self.length = length
        self.node_budget = node_budget
        self.nodes = 0

    def run(self, fixed: dict[int, int], blocks: list[tuple[int, Word, int]], m: int, budget: Fraction | None):
        """``blocks`` are ``(start, point, n)`` with mismatch budget ``budget``
        (``None`` means every position of ``fixed`` is hard)."""
        a = self.space.alphabet_size
        # windows completed when position p is placed: (block, j) with start + j + m - 1 == p
        closes: dict[int, list[tuple[int, int]]] = {}
        if budget is not None:
            for b, (s, x, n) in enumerate(blocks):
                for j in range(n):
                    closes.setdefault(s + j + m - 1, []).append((b, j))
        counts = [0] * len(blocks)
        z: list[int] = []
        choice_stack: list[Iterable[int]] = []
        undo: list[list[int]] = []

        def options(p: int):
            if p in fixed:
                return iter((fixed[p],))
            return iter(range(a))

        choice_stack.append(options(0))
        while choice_stack:
            if len(z) == self.length:
                return tuple(z)
            it = choice_stack[-1]
            placed = False
            for sym in it:
                self.nodes += 1
                if self.nodes > self.node_budget:
                    raise BudgetExceeded(f"tracer search exceeded {self.node_budget} nodes")
                w = tuple(z)
                if not self.space._extends(w, sym):
                    continue
                p = len(z)
                z.append(sym)
                touched: list[int] = []
                fail = False
                for b, j in closes.get(p, ()):
                    s, x, _ = blocks[b]
                    if tuple(z[s + j : s + j + m]) != x[j : j + m]:
                        counts[b] += 1
                        touched.append(b)
                        if Fraction(counts[b]) >= budget:
                            fail = True
                if fail:
                    for b in touched:
                        counts[b] -= 1
                    z.pop()
                    continue
                undo.append(touched)
                placed = True
                break
            if placed:
                if len(z) == self.length:
                    return tuple(z)
                choice_stack.append(options(len(z)))
            else:
                choice_stack.pop()
                if z:
                    z.pop()
                    for b in undo.pop():
                        counts[b] -= 1
        return None


def _fixed_from_segments(starts, points, lengths, m) -> dict[int, int] | None:
    fixed: dict[int, int] = {}
    for s, x, ell in zip(starts, points, lengths):
        for i in range(ell + m - 1):
            p = s + i
            if fixed.setdefault(p, x[i]) != x[i]:
                return None
    return fixed


@dataclass
class Tracer:
    z: Word
    starts: list[int]
    gaps: list[int] | None = None


def find_tracer(
    space: ShiftSpace,
    task: OrbitTask,
    scale: EpsScale,
    max_gap: int | None = None,
    node_budget: int = NODE_BUDGET,
) -> Tracer | None:
    """First tracer in lexicographic order, or ``None`` when none exists.

    Gap mode uses ``task.gaps`` when given, otherwise searches gap vectors in
    ``{1..max_gap}`` (lexicographically, smallest first).  Approximate mode
    uses ``task.starts`` when given, otherwise searches spaced sequences.
    """
    m = scale.m
    task.check_margin(m)
    search = _Search(space, 0, node_budget)
    K = len(task.points)
    if task.mode == "gap":
        if task.gaps is not None:
            gap_vectors: Iterable[tuple[int, ...]] = [tuple(task.gaps)]
        else:
            if max_gap is None:
                raise ValueError("max_gap needed when gaps are not prescribed")
            gap_vectors = itertools.product(range(1, max_gap + 1), repeat=K - 1)
        for gaps in gap_vectors:
            starts = start_times(task.lengths, gaps)
            fixed = _fixed_from_segments(starts, task.points, task.lengths, m)
            if fixed is None:
                continue
            search.length = starts[-1] + task.lengths[-1] + m - 1
            z = search.run(fixed, [], m, None)
            if z is not None:
                return Tracer(z, starts, list(gaps))
        return None
    n = task.n
    budget = exact(task.delta2) * n
    if task.starts is not None:
        start_options: Iterable[list[int]] = [list(task.starts)]
    else:
        choices = spacing_choices(n, task.delta1)
        start_options = (
            list(itertools.accumulate((0,) + d)) for d in itertools.product(choices, repeat=K - 1)
        )
    for starts in start_options:
        if not is_spaced(starts, n, task.delta1):
            continue
        blocks = [(s, x, n) for s, x in zip(starts, task.points)]
        search.length = starts[-1] + n + m - 1
        z = search.run({}, blocks, m, budget)
        if z is not None:
            return Tracer(z, starts)
    return None


# ---------------------------------------------------------------------------
# gap estimation


def sample_word(space: ShiftSpace, length: int, rng: np.random.Generator, enumerate_limit: int = 2**16) -> Word:
    """Uniform from the language when it is small, else a random right-extension walk."""
    if length == 0:
        return ()
    try:
        if space.count_language(length) <= enumerate_limit:
            words = space.language(length)
            return words[int(rng.integers(len(words)))]
    except BudgetExceeded:
        pass
    w: Word = ()
    for _ in range(length):
        opts = [a for a in range(space.alphabet_size) if space._extends(w, a)]
        w = w + (int(rng.choice(opts)),)
    return w


def sample_tasks(
    space: ShiftSpace,
    scale: EpsScale,
    count: int,
    seed: int,
    max_len: int = 8,
    max_segments: int = 5,
    n: int | None = None,
) -> list[OrbitTask]:
    """Seeded task sample: lengths uniform in ``[1, max_len]`` (or all ``n``), 2..max_segments segments."""
    rng = np.random.default_rng(seed)
    tasks = []
    for _ in range(count):
        k = int(rng.integers(2, max_segments + 1))
        lengths = [n if n is not None else int(rng.integers(1, max_len + 1)) for _ in range(k)]
        points = [sample_word(space, ell + scale.m - 1, rng) for ell in lengths]
        tasks.append(OrbitTask(points, lengths))
    return tasks


def exhaustive_pair_tasks(space: ShiftSpace, scale: EpsScale, max_len: int) -> list[OrbitTask]:
    words = [w for ell in range(1, max_len + 1) for w in space.language(ell + scale.m - 1)]
    return [
        OrbitTask([x, y], [len(x) - scale.m + 1, len(y) - scale.m + 1])
        for x in words
        for y in words
    ]


@dataclass
class GapEstimate:
    property: str
    M: int | None
    max_tried: int
    witnesses: list[dict]
    tasks_checked: int

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "M": self.M,
            "max_tried": self.max_tried,
            "witnesses": self.witnesses,
            "tasks_checked": self.tasks_checked,
        }


def _gluing_need(space, task, scale, max_M) -> int | None:
    for M in range(1, max_M + 1):
        if find_tracer(space, task, scale, max_gap=M) is not None:
            return M
    return None


def _spec_ok(space, task, scale, M, spread) -> bool:
    K = len(task.points)
    for gaps in itertools.product(range(M, M + spread + 1), repeat=K - 1):
        t = OrbitTask(task.points, task.lengths, list(gaps))
        if find_tracer(space, t, scale) is None:
            return False
    return True


def estimate_gap(
    space: ShiftSpace,
    scale: EpsScale,
    prop: str = "gluing",
    tasks: Sequence[OrbitTask] | None = None,
    max_M: int = 6,
    delta1: float | None = None,
    delta2: float | None = None,
    n_max: int = 12,
    samples: int = 20,
    seed: int = 0,
    spread: int = 2,
) -> GapEstimate:
    """Smallest uniform gap constant consistent with every checked task.

    ``gluing``: max gap needed.  ``specification``: every gap vector with
    entries in ``[M, M + spread]`` must work.  ``approximate``: the constant
    is the smallest ``M`` with every ``n`` in ``(M, n_max]`` passing.
    """
    if prop in ("gluing", "specification"):
        if tasks is None:
            tasks = sample_tasks(space, scale, samples, seed)
        if prop == "gluing":
            worst, witnesses = 0, []
            for task in tasks:
                need = _gluing_need(space, task, scale, max_M)
                if need is None:
                    witnesses.append({"task": task.to_dict(), "needs": f"> {max_M}"})
                    return GapEstimate(prop, None, max_M, witnesses, len(tasks))
                if need > worst:
                    if worst:
                        witnesses = []
                    worst = need
                    witnesses.append({"task": task.to_dict(), "needs": need})
            return GapEstimate(prop, worst, max_M, witnesses, len(tasks))
        for M in range(1, max_M + 1):
            bad = next((t for t in tasks if not _spec_ok(space, t, scale, M, spread)), None)
            if bad is None:
                wit = [] if M == 1 else [{"task": last_bad.to_dict(), "fails_at": M - 1}]
                return GapEstimate(prop, M, max_M, wit, len(tasks))
            last_bad = bad
        return GapEstimate(prop, None, max_M, [{"task": last_bad.to_dict(), "fails_at": max_M}], len(tasks))
    if prop != "approximate":
        raise ValueError(f"unknown property {prop!r}")
    if delta1 is None or delta2 is None:
        raise ValueError("approximate product estimation needs delta1 and delta2")
    passing: dict[int, bool] = {}
    witnesses = []
    checked = 0
    for n in range(1, n_max + 1):
        ok = True
        for base in sample_tasks(space, scale, samples, seed + n, n=n):
            checked += 1
            task = OrbitTask(base.points, base.lengths, delta1=delta1, delta2=delta2)
            try:
                found = find_tracer(space, task, scale)
            except BudgetExceeded:
                found = None
            if found is None:
                ok = False
                witnesses.append({"n": n, "task": task.to_dict()})
                break
        passing[n] = ok
    if not passing[n_max]:
        return GapEstimate(prop, None, n_max, witnesses, checked)
    M = 0
    for n in range(n_max, 0, -1):
        if not passing[n]:
            M = n
            break
    return GapEstimate(prop, M, n_max, [w for w in witnesses if w["n"] == M], checked)


# ---------------------------------------------------------------------------
# gap functions


@dataclass(frozen=True)
class GapFunction:
    """A tabulated ``L : Z+ -> Z+`` (``values[i] = L(i + 1)``).

    ``tempered`` is a finite proxy: the table is nondecreasing and the largest
    ratio ``L(k)/k`` over the upper half of the table is at most
    ``threshold`` and no larger than over the quarter before it.
    """

    values: tuple[int, ...]
    threshold: float = 0.25

    def __post_init__(self):
        if not self.values or any(v < 1 for v in self.values):
            raise ValueError("gap function values must be positive integers")

    @classmethod
    def from_callable(cls, f: Callable[[int], int], horizon: int, threshold: float = 0.25) -> "GapFunction":
        return cls(tuple(int(f(n)) for n in range(1, horizon + 1)), threshold)

    @property
    def horizon(self) -> int:
        return len(self.values)

    def __call__(self, n: int) -> int:
        if not 1 <= n <= self.horizon:
            raise ValueError(f"gap function tabulated on 1..{self.horizon}; got {n}")
        return self.values[n - 1]

    @property
    def checked_index(self) -> int:
        return max(1, self.horizon // 2)

    def tail_ratio(self, lo: int, hi: int) -> float:
        return max(self(k) / k for k in range(lo, hi + 1))

    @property
    def tempered(self) -> bool:
        H = self.horizon
        if any(b < a for a, b in zip(self.values, self.values[1:])) or H < 4:
            return False
        upper = self.tail_ratio(self.checked_index, H)
        before = self.tail_ratio(max(1, H // 4), self.checked_index)
        return upper <= self.threshold and upper <= before

    def to_dict(self) -> dict:
        return {
            "values": list(self.values),
            "horizon": self.horizon,
            "tempered": self.tempered,
            "checked_index": self.checked_index,
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class ComposedGap:
    function: GapFunction
    tempered: bool


def compose_tempered_gap(L_X: GapFunction, L_Y: GapFunction) -> ComposedGap:
    """``L(n) = L_X(L_Y(n)) + L_Y(n) + L_X(n) - 1`` wherever the tables reach."""
    H = min(L_X.horizon, L_Y.horizon)
    vals = []
    for n in range(1, H + 1):
        inner = L_Y(n)
        if inner > L_X.horizon:
            break
        vals.append(L_X(inner) + inner + L_X(n) - 1)
    if not vals:
        raise ValueError("table underflow: L_X does not cover L_Y(1)")
    return ComposedGap(GapFunction(tuple(vals), max(L_X.threshold, L_Y.threshold)), L_X.tempered and L_Y.tempered)


# ---------------------------------------------------------------------------
# product tracing


def product_tracer(
    space: ProductSpace,
    points: Sequence[Word],
    n: int,
    scale: EpsScale,
    delta1: float,
    delta2: float,
    delta1p: float,
    delta2p: float,
    L_Y: Callable[[int], int],
) -> Tracer:
    """Two-stage tracer on ``X x Y``: approximate tracing in ``X`` at the
    stretched length ``floor((1 + delta1') n)``, then tempered-specification
    gluing in ``Y`` through the induced gaps.
    """
    d1, d2, d1p, d2p = exact(delta1), exact(delta2), exact(delta1p), exact(delta2p)
    if not (1 + d1p) ** 2 < 1 + d1:
        raise ValueError("need (1 + delta1')^2 < 1 + delta1")
    if not d2p * (1 + d1p) < d2:
        raise ValueError("need delta2' (1 + delta1') < delta2")
    if not L_Y(n) < d1p * n:
        raise ValueError("n too small: need L_Y(n) < delta1' n")
    m = scale.m
    nx = math.floor((1 + d1p) * n)
    xs, ys = zip(*(space.split(p) for p in points))
    for x in xs:
        if len(x) < nx + m - 1:
            raise ValueError(f"points need {nx + m - 1} symbols for the stretched X stage")
    task_x = OrbitTask(list(xs), [nx] * len(xs), delta1=float(d1p), delta2=float(d2p))
    tx = find_tracer(space.left, task_x, scale)
    if tx is None:
        raise RuntimeError("X stage found no tracer")
    starts = tx.starts
    gaps = [b - a - (n - 1) for a, b in zip(starts, starts[1:])]
    task_y = OrbitTask([y[: n + m - 1] for y in ys], [n] * len(ys), gaps)
    ty = find_tracer(space.right, task_y, scale)
    if ty is None:
        raise RuntimeError("Y stage found no tracer")
    length = starts[-1] + n + m - 1
    zx = tx.z[:length]
    zy = ty.z[:length]
    return Tracer(space.encode(zx, zy), list(starts))
