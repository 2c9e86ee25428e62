"""Shift spaces as language oracles.

A one-sided subshift is described here purely by its language: the set of
finite words that occur in some point.  Every backend implements
``_extends(w, a)`` (is ``w + a`` allowed, given that ``w`` is) and the base
class builds exact, lexicographically ordered languages on top of it.  All
languages handled here are factorial and right-extendable, so level ``n`` is
obtained from level ``n - 1`` by one-symbol extension.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

Word = tuple[int, ...]

DEFAULT_BUDGET = 2**24


class SpaceSpecError(ValueError):
    """Malformed space description."""


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed its configured word-count budget."""


def parse_word(s: str | Sequence[int]) -> Word:
    """``"0101"`` -> ``(0, 1, 0, 1)``; sequences of ints pass through."""
    if isinstance(s, str):
        if not s.isdigit() and s != "":
            raise ValueError(f"word {s!r} is not a digit string")
        return tuple(int(c) for c in s)
    return tuple(int(c) for c in s)


def format_word(w: Sequence[int]) -> str:
    if all(0 <= a < 10 for a in w):
        return "".join(str(a) for a in w)
    return ".".join(str(a) for a in w)


class ShiftSpace:
    """Base class for language oracles over ``{0, ..., alphabet_size - 1}``."""

    alphabet_size: int
    kind = "abstract"

    def __init__(self, alphabet_size: int, budget: int = DEFAULT_BUDGET):
        if alphabet_size < 1:
            raise SpaceSpecError("alphabet size must be positive")
        self.alphabet_size = int(alphabet_size)
        self.budget = int(budget)
        self._languages: dict[int, list[Word]] = {0: [()]}
        self._arrays: dict[int, np.ndarray] = {}

    # -- backend hooks -------------------------------------------------
    def _extends(self, w: Word, a: int) -> bool:  # pragma: no cover - abstract
        raise NotImplementedError

    def _exact_count(self, n: int) -> int | None:
        """Closed-form or transfer-matrix count, when the backend has one."""
        return None

    # -- public oracle -------------------------------------------------
    def check_symbols(self, w: Sequence[int]) -> None:
        for a in w:
            if not 0 <= a < self.alphabet_size:
                raise ValueError(
                    f"symbol {a} out of range for alphabet of size {self.alphabet_size}"
                )

    def is_allowed(self, w: Sequence[int]) -> bool:
        w = tuple(w)
        self.check_symbols(w)
        for i in range(len(w)):
            if not self._extends(w[:i], w[i]):
                return False
        return True

    def count_language(self, n: int) -> int:
        if n < 0:
            raise ValueError("length must be nonnegative")
        exact = self._exact_count(n)
        if exact is not None:
            return exact
        return len(self.language(n))

    def language(self, n: int) -> list[Word]:
        """All allowed words of length ``n`` in lexicographic order."""
        if n < 0:
            raise ValueError("length must be nonnegative")
        if n in self._languages:
            return self._languages[n]
        exact = self._exact_count(n)
        if exact is not None and exact > self.budget:
            raise BudgetExceeded(
                f"|L_{n}| = {exact} exceeds the word budget {self.budget}"
            )
        prev = self.language(n - 1)
        out: list[Word] = []
        for w in prev:
            for a in range(self.alphabet_size):
                if self._extends(w, a):
                    out.append(w + (a,))
            if len(out) > self.budget:
                raise BudgetExceeded(
                    f"|L_{n}| exceeds the word budget {self.budget}"
                )
        self._languages[n] = out
        return out

    def language_array(self, n: int) -> np.ndarray:
        """The language at length ``n`` as an ``(count, n)`` integer array."""
        if n not in self._arrays:
            words = self.language(n)
            arr = np.array(words, dtype=np.int64).reshape(len(words), n)
            self._arrays[n] = arr
        return self._arrays[n]

    def describe(self) -> dict:  # pragma: no cover - overridden
        return {"backend": self.kind, "alphabet": self.alphabet_size}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.describe()})"


class FullShift(ShiftSpace):
    kind = "full"

    def _extends(self, w: Word, a: int) -> bool:
        return 0 <= a < self.alphabet_size

    def _exact_count(self, n: int) -> int:
        return self.alphabet_size**n

    def describe(self) -> dict:
        return {"backend": "full", "alphabet": self.alphabet_size}


class SFT(ShiftSpace):
    """Subshift of finite type given by forbidden words.

    Internally the space is presented as a graph on allowed words of length
    ``s = max(k - 1, 1)`` (``k`` the longest forbidden word), pruned to the
    states with an infinite forward path so that every accepted word really
    extends to a point.
    """

    kind = "sft"

    def __init__(
        self,
        alphabet_size: int,
        forbidden: Iterable[Sequence[int]] = (),
        budget: int = DEFAULT_BUDGET,
        matrix: Sequence[Sequence[int]] | None = None,
    ):
        super().__init__(alphabet_size, budget)
        self.matrix = None if matrix is None else [list(map(int, r)) for r in matrix]
        forb = {tuple(f) for f in forbidden}
        for f in forb:
            if len(f) == 0:
                raise SpaceSpecError("empty forbidden word")
            self.check_symbols(f)
        self.forbidden = frozenset(forb)
        self._forbidden_lengths = sorted({len(f) for f in forb})
        k = max(self._forbidden_lengths, default=1)
        self.state_length = max(k - 1, 1)
        self._build_graph()

    @classmethod
    def from_matrix(cls, matrix: Sequence[Sequence[int]], budget: int = DEFAULT_BUDGET) -> "SFT":
        a = len(matrix)
        if any(len(row) != a for row in matrix):
            raise SpaceSpecError("transition matrix must be square")
        if any(v not in (0, 1) for row in matrix for v in row):
            raise SpaceSpecError("transition matrix must be 0/1")
        forbidden = [(i, j) for i in range(a) for j in range(a) if not matrix[i][j]]
        return cls(a, forbidden, budget=budget, matrix=matrix)

    def _free(self, u: Word) -> bool:
        """No forbidden word occurs as a suffix of ``u``."""
        for ell in self._forbidden_lengths:
            if ell <= len(u) and u[-ell:] in self.forbidden:
                return False
        return True

    def _has_no_forbidden_factor(self, u: Word) -> bool:
        return all(self._free(u[: i + 1]) for i in range(len(u)))

    def _build_graph(self) -> None:
        s, a = self.state_length, self.alphabet_size
        states = [()]
        for _ in range(s):
            states = [w + (b,) for w in states for b in range(a) if self._free(w + (b,))]
        succ = {w: [w[1:] + (b,) for b in range(a) if self._free(w + (b,))] for w in states}
        live = set(states)
        changed = True
        while changed:
            changed = False
            for w in list(live):
                if not any(v in live for v in succ[w]):
                    live.discard(w)
                    changed = True
        self.states = sorted(live)
        index = {w: i for i, w in enumerate(self.states)}
        adj = [[0] * len(self.states) for _ in self.states]
        for w in self.states:
            for v in succ[w]:
                if v in live:
                    adj[index[w]][index[v]] = 1
        self.adjacency = adj
        self._live = frozenset(live)
        short: set[Word] = set()
        for w in live:
            for i in range(s):
                for j in range(i, s + 1):
                    short.add(w[i:j])
        self._short = frozenset(short)

    def _extends(self, w: Word, a: int) -> bool:
        if not 0 <= a < self.alphabet_size:
            return False
        u = w + (a,)
        s = self.state_length
        if len(u) < s:
            return u in self._short
        if not self._free(u):
            return False
        return u[-s:] in self._live

    def _exact_count(self, n: int) -> int:
        s = self.state_length
        if n < s:
            return sum(1 for w in self._short if len(w) == n)
        vec = [1] * len(self.states)
        for _ in range(n - s):
            vec = [sum(r[j] * vec[j] for j in range(len(vec))) for r in self.adjacency]
        return sum(vec)

    def spectral_radius(self) -> float:
        if not self.states:
            return 0.0
        eig = np.linalg.eigvals(np.array(self.adjacency, dtype=float))
        return float(max(abs(eig)))

    def describe(self) -> dict:
        if self.matrix is not None:
            return {"backend": "sft", "matrix": self.matrix}
        return {
            "backend": "sft",
            "alphabet": self.alphabet_size,
            "forbidden": sorted(format_word(f) for f in self.forbidden),
        }


class BetaShift(ShiftSpace):
    """One-sided beta-shift with the lexicographic (Parry) admissibility test.

    A word is allowed iff every suffix is lexicographically at most the
    equal-length prefix of the quasi-greedy expansion of 1.  When the greedy
    expansion of 1 terminates, the quasi-greedy one is periodic and known to
    every length; otherwise words longer than ``precision`` are refused.
    """

    kind = "beta"

    def __init__(self, beta, precision: int = 64, budget: int = DEFAULT_BUDGET):
        import mpmath

        dps = int(3 * precision + 50)
        with mpmath.workdps(dps):
            b = _parse_real(beta, dps)
            if b <= 1:
                raise SpaceSpecError("beta must exceed 1")
            alphabet = int(mpmath.ceil(b))
            super().__init__(alphabet, budget)
            self.beta = float(b)
            self.beta_input = beta
            self.precision = int(precision)
            tol = mpmath.mpf(10) ** (-(dps // 2))
            digits: list[int] = []
            r = mpmath.mpf(1)
            finite = False
            for _ in range(precision):
                x = b * r
                d = int(mpmath.floor(x + tol))
                digits.append(d)
                r = x - d
                if abs(r) <= tol:
                    finite = True
                    break
        self.greedy = tuple(digits)
        self.finite = finite
        if finite:
            period = list(digits)
            period[-1] -= 1
            self._period = tuple(period)
        else:
            self._period = None
        self.quasi_greedy = self._reference(precision)

    def _reference(self, n: int) -> Word:
        if self._period is not None:
            reps = n // len(self._period) + 1
            return (self._period * reps)[:n]
        if n > len(self.greedy):
            raise ValueError(
                f"beta expansion known to {len(self.greedy)} digits; word length {n} needs more precision"
            )
        return self.greedy[:n]

    def _extends(self, w: Word, a: int) -> bool:
        if not 0 <= a < self.alphabet_size:
            return False
        u = w + (a,)
        ref = self._reference(len(u))
        return all(u[i:] <= ref[: len(u) - i] for i in range(len(u)))

    def entropy(self) -> float:
        return math.log(self.beta)

    def describe(self) -> dict:
        return {"backend": "beta", "beta": self.beta_input, "precision": self.precision}


class HereditaryDensity(ShiftSpace):
    """Words whose windows of length ``n`` hold at most ``L(n)`` marked symbols.

    ``L`` is either a table ``(L(1), ..., L(H))`` or the tag ``"log"`` for
    ``L(n) = floor(1 + ln n)``.  ``symbols`` restricts the letters in use, so
    a space over ``{0, 2}`` inside a 3-letter alphabet is expressible.
    """

    kind = "hereditary"

    def __init__(
        self,
        alphabet_size: int,
        marked: Iterable[int],
        L: Sequence[int] | str = "log",
        symbols: Iterable[int] | None = None,
        budget: int = DEFAULT_BUDGET,
    ):
        super().__init__(alphabet_size, budget)
        self.marked = frozenset(int(a) for a in marked)
        self.symbols = frozenset(range(alphabet_size) if symbols is None else (int(a) for a in symbols))
        self.check_symbols(sorted(self.marked | self.symbols))
        if not self.marked <= self.symbols:
            raise SpaceSpecError("marked symbols must be in use")
        if 0 not in self.symbols or 0 in self.marked:
            raise SpaceSpecError("symbol 0 must be in use and unmarked")
        if isinstance(L, str):
            if L != "log":
                raise SpaceSpecError(f"unknown bound form {L!r}")
            self.L_table = None
        else:
            table = tuple(int(v) for v in L)
            if not table:
                raise SpaceSpecError("empty bound table")
            if table[0] < 1:
                raise SpaceSpecError("L(1) must be at least 1")
            if any(b < a for a, b in zip(table, table[1:])):
                raise SpaceSpecError("L must be nondecreasing")
            self.L_table = table

    def L(self, n: int) -> int:
        if n < 1:
            raise ValueError("L is defined on positive integers")
        if self.L_table is None:
            return int(math.floor(1 + math.log(n)))
        if n > len(self.L_table):
            raise ValueError(f"L tabulated only up to n={len(self.L_table)}; no extrapolation")
        return self.L_table[n - 1]

    def _extends(self, w: Word, a: int) -> bool:
        if a not in self.symbols:
            return False
        if a not in self.marked:
            return True
        u = w + (a,)
        count = 0
        for j in range(len(u) - 1, -1, -1):
            if u[j] in self.marked:
                count += 1
                if count > self.L(len(u) - j):
                    return False
        return True

    def describe(self) -> dict:
        return {
            "backend": "hereditary",
            "alphabet": self.alphabet_size,
            "marked": sorted(self.marked),
            "symbols": sorted(self.symbols),
            "L": {"form": "log"} if self.L_table is None else list(self.L_table),
        }


class ProductSpace(ShiftSpace):
    """Direct product; the pair ``(x, y)`` is the symbol ``x * |B| + y``."""

    kind = "product"

    def __init__(self, left: ShiftSpace, right: ShiftSpace, budget: int = DEFAULT_BUDGET):
        super().__init__(left.alphabet_size * right.alphabet_size, budget)
        self.left, self.right = left, right

    def encode(self, x: Sequence[int], y: Sequence[int]) -> Word:
        if len(x) != len(y):
            raise ValueError("product words need equal-length components")
        b = self.right.alphabet_size
        return tuple(int(p) * b + int(q) for p, q in zip(x, y))

    def split(self, w: Sequence[int]) -> tuple[Word, Word]:
        b = self.right.alphabet_size
        return tuple(a // b for a in w), tuple(a % b for a in w)

    def _extends(self, w: Word, a: int) -> bool:
        x, y = self.split(w + (a,))
        return self.left.is_allowed(x) and self.right.is_allowed(y)

    def _exact_count(self, n: int) -> int:
        return self.left.count_language(n) * self.right.count_language(n)

    def describe(self) -> dict:
        return {"backend": "product", "left": self.left.describe(), "right": self.right.describe()}


class UnionSpace(ShiftSpace):
    """Union of two subshifts over a common alphabet (shared words kept once)."""

    kind = "union"

    def __init__(self, left: ShiftSpace, right: ShiftSpace, budget: int = DEFAULT_BUDGET):
        super().__init__(max(left.alphabet_size, right.alphabet_size), budget)
        self.left, self.right = left, right

    @staticmethod
    def _member(space: ShiftSpace, u: Word) -> bool:
        if any(a >= space.alphabet_size for a in u):
            return False
        return space.is_allowed(u)

    def _extends(self, w: Word, a: int) -> bool:
        u = w + (a,)
        return self._member(self.left, u) or self._member(self.right, u)

    def component_of(self, w: Sequence[int]) -> list[int]:
        """Indices (0 = left, 1 = right) of the components containing ``w``."""
        w = tuple(w)
        return [i for i, sp in enumerate((self.left, self.right)) if self._member(sp, w)]

    def describe(self) -> dict:
        return {"backend": "union", "left": self.left.describe(), "right": self.right.describe()}


def _parse_real(value, dps: int):
    import mpmath

    if isinstance(value, str):
        import sympy

        try:
            expr = sympy.sympify(value)
        except (sympy.SympifyError, SyntaxError, TypeError) as exc:
            raise SpaceSpecError(f"cannot parse beta {value!r}") from exc
        if not expr.is_real:
            raise SpaceSpecError(f"beta {value!r} is not real")
        return mpmath.mpf(str(expr.evalf(dps)))
    return mpmath.mpf(value)


_KEYS = {
    "full": {"alphabet"},
    "sft": {"alphabet", "forbidden", "matrix"},
    "beta": {"beta", "precision"},
    "hereditary": {"alphabet", "marked", "L", "symbols"},
    "product": {"left", "right"},
    "union": {"left", "right"},
}


def build_space(spec: dict, budget: int = DEFAULT_BUDGET) -> ShiftSpace:
    """Instantiate a shift space from its JSON-style description."""
    if not isinstance(spec, dict) or "backend" not in spec:
        raise SpaceSpecError("space description needs a 'backend' key")
    backend = spec["backend"]
    if backend not in _KEYS:
        raise SpaceSpecError(f"unknown backend {backend!r}")
    unknown = set(spec) - _KEYS[backend] - {"backend"}
    if unknown:
        raise SpaceSpecError(f"unknown key(s) for {backend}: {sorted(unknown)}")
    try:
        if backend == "full":
            return FullShift(int(spec.get("alphabet", 2)), budget=budget)
        if backend == "sft":
            if "matrix" in spec:
                if "forbidden" in spec:
                    raise SpaceSpecError("give either 'forbidden' or 'matrix', not both")
                return SFT.from_matrix(spec["matrix"], budget=budget)
            if "alphabet" not in spec:
                raise SpaceSpecError("sft needs 'alphabet'")
            forbidden = [parse_word(f) for f in spec.get("forbidden", [])]
            return SFT(int(spec["alphabet"]), forbidden, budget=budget)
        if backend == "beta":
            if "beta" not in spec:
                raise SpaceSpecError("beta backend needs 'beta'")
            return BetaShift(spec["beta"], int(spec.get("precision", 64)), budget=budget)
        if backend == "hereditary":
            raw_L = spec.get("L", {"form": "log"})
            if isinstance(raw_L, dict):
                if set(raw_L) != {"form"}:
                    raise SpaceSpecError("L object must be {'form': ...}")
                L: Sequence[int] | str = raw_L["form"]
            else:
                L = raw_L
            return HereditaryDensity(
                int(spec.get("alphabet", 2)),
                spec.get("marked", [1]),
                L,
                spec.get("symbols"),
                budget=budget,
            )
        left = build_space(spec["left"], budget)
        right = build_space(spec["right"], budget)
        if backend == "product":
            return ProductSpace(left, right, budget=budget)
        return UnionSpace(left, right, budget=budget)
    except KeyError as exc:
        raise SpaceSpecError(f"missing key {exc.args[0]!r} for {backend}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpaceSpecError):
            raise
        raise SpaceSpecError(str(exc)) from exc


# Fixture spaces used throughout the tests and the CLI suites.
def golden_mean() -> SFT:
    return SFT(2, [(1, 1)])


def example_hereditary() -> HereditaryDensity:
    """Density-bounded hereditary shift with ``L(n) = floor(1 + ln n)``."""
    return HereditaryDensity(2, [1], "log")


def example_union() -> UnionSpace:
    """Union of the density shifts over ``{0, 1}`` and ``{0, 2}``."""
    x1 = HereditaryDensity(3, [1], "log", symbols=[0, 1])
    x2 = HereditaryDensity(3, [2], "log", symbols=[0, 2])
    return UnionSpace(x1, x2)
