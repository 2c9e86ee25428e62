import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from ergokit.shift import (
    SFT,
    BetaShift,
    BudgetExceeded,
    FullShift,
    HereditaryDensity,
    ProductSpace,
    SpaceSpecError,
    UnionSpace,
    build_space,
    example_hereditary,
    example_union,
    format_word,
    golden_mean,
    parse_word,
)
from oracles import all_words, avoids, density_ok, fib_counts


def test_golden_mean_counts_are_fibonacci():
    g = golden_mean()
    assert [g.count_language(n) for n in range(1, 11)] == fib_counts(10)
    assert [len(g.language(n)) for n in range(1, 11)] == fib_counts(10)


def test_golden_mean_rejects_11():
    g = golden_mean()
    assert not g.is_allowed((1, 1))
    assert g.is_allowed((1, 0, 1, 0))


def test_language_is_lexicographic():
    w = golden_mean().language(6)
    assert w == sorted(w)


def test_hereditary_matches_window_oracle():
    # window count oracle, n = 1..10
    her = example_hereditary()
    for n in range(1, 11):
        expected = [w for w in all_words(n) if density_ok(w)]
        assert her.language(n) == expected


def test_hereditary_counts_frozen():
    her = example_hereditary()
    counts = [her.count_language(n) for n in range(1, 15)]
    assert counts == [2, 3, 5, 8, 12, 17, 23, 34, 51, 75, 107, 148, 199, 261]


def test_hereditary_n3_is_five():
    # 011, 110, 111 each hold a window "11" with two marks > L(2) = 1
    her = example_hereditary()
    assert her.language(3) == [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 0, 1)]
    assert not her.is_allowed((1, 1))
    assert her.L(2) == 1 and her.L(3) == 2


def test_hereditary_table_no_extrapolation():
    sp = HereditaryDensity(2, [1], [1, 1, 2])
    assert sp.count_language(3) == 5
    with pytest.raises(ValueError):
        sp.language(5)


def test_hereditary_rejects_decreasing_table():
    with pytest.raises(SpaceSpecError):
        HereditaryDensity(2, [1], [2, 1])


def test_union_counts_and_components():
    u = example_union()
    assert [u.count_language(n) for n in range(1, 6)] == [3, 5, 9, 15, 23]
    assert u.component_of((0, 0)) == [0, 1]
    assert u.component_of((1, 0)) == [0]
    assert u.component_of((0, 2)) == [1]
    assert not u.is_allowed((1, 0, 2))


def test_product_encoding_roundtrip():
    p = ProductSpace(FullShift(2), golden_mean())
    w = p.encode((0, 1, 1), (1, 0, 1))
    assert p.split(w) == ((0, 1, 1), (1, 0, 1))
    assert p.count_language(5) == 32 * 13
    assert len(p.language(4)) == 16 * 8


@pytest.mark.parametrize("beta, alphabet", [(2, 2), (3, 3)])
def test_integer_beta_is_full_shift(beta, alphabet):
    b = BetaShift(beta)
    assert b.alphabet_size == alphabet
    assert [b.count_language(n) for n in range(1, 7)] == [alphabet**n for n in range(1, 7)]


def test_golden_beta_shift():
    b = BetaShift("(1+sqrt(5))/2")
    assert b.greedy == (1, 1) and b.finite
    assert [b.count_language(n) for n in range(1, 11)] == fib_counts(10)
    assert b.entropy() == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-14)


def test_beta_shift_admissibility_oracle():
    # value oracle: w admissible iff every suffix read as a beta-expansion stays below 1
    beta = 1.5
    b = BetaShift(beta, precision=64)
    for n in range(1, 9):
        lang = set(b.language(n))
        for w in all_words(n, 2):
            tails = [sum(d * beta ** -(k + 1) for k, d in enumerate(w[i:])) for i in range(n)]
            if all(t < 1 - 1e-12 for t in tails):
                assert w in lang


def test_budget_exceeded():
    with pytest.raises(BudgetExceeded):
        FullShift(2, budget=100).language(8)
    with pytest.raises(BudgetExceeded):
        HereditaryDensity(2, [1], budget=50).language(12)


def test_build_space_validation():
    assert isinstance(build_space({"backend": "full", "alphabet": 3}), FullShift)
    assert isinstance(build_space({"backend": "sft", "matrix": [[1, 1], [1, 0]]}), SFT)
    with pytest.raises(SpaceSpecError):
        build_space({"backend": "full", "colour": 1})
    with pytest.raises(SpaceSpecError):
        build_space({"backend": "nope"})
    with pytest.raises(SpaceSpecError):
        build_space({"backend": "beta", "beta": 0.5})
    u = build_space(
        {
            "backend": "union",
            "left": {"backend": "hereditary", "alphabet": 3, "marked": [1], "symbols": [0, 1]},
            "right": {"backend": "hereditary", "alphabet": 3, "marked": [2], "symbols": [0, 2]},
        }
    )
    assert isinstance(u, UnionSpace)
    assert u.count_language(4) == 15


def test_matrix_and_forbidden_agree():
    a = SFT.from_matrix([[1, 1], [1, 0]])
    assert [a.count_language(n) for n in range(1, 9)] == fib_counts(8)


def test_word_formatting():
    assert parse_word("0102") == (0, 1, 0, 2)
    assert format_word((0, 1, 12)) == "0.1.12"
    with pytest.raises(ValueError):
        parse_word("0a")


def test_dead_states_pruned():
    # with "10" and "11" forbidden a 1 can never be followed, so it never occurs
    sp = SFT(2, [(1, 0), (1, 1)])
    assert sp.language(4) == [(0, 0, 0, 0)]
    assert not sp.is_allowed((1,))


forbidden_sets = st.lists(
    st.lists(st.integers(0, 1), min_size=1, max_size=3).map(tuple), min_size=0, max_size=3
)


def _oracle_language(forbidden, n, extra=6):
    ext = [w for w in all_words(n + extra) if avoids(w, forbidden)]
    return sorted({w[:n] for w in ext})


@settings(max_examples=60, deadline=None)
@given(forbidden_sets, st.integers(1, 5))
def test_sft_language_matches_oracle(forbidden, n):
    sp = SFT(2, forbidden)
    assert sp.language(n) == _oracle_language(forbidden, n)
    assert sp.count_language(n) == len(sp.language(n))


@settings(max_examples=40, deadline=None)
@given(forbidden_sets, st.integers(2, 6))
def test_language_factorial_and_extendable(forbidden, n):
    sp = SFT(2, forbidden)
    cur, prev = set(sp.language(n)), set(sp.language(n - 1))
    assert all(w[:-1] in prev and w[1:] in prev for w in cur)
    assert all(any(w + (a,) in cur for a in range(2)) for w in prev)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=8).map(sorted), st.integers(1, 8))
def test_hereditary_tables_match_oracle(table, n):
    sp = HereditaryDensity(2, [1], table)
    if n > len(table):
        with pytest.raises(ValueError):
            sp.language(n)
        return
    expected = [w for w in all_words(n) if density_ok(w, L=lambda k: table[k - 1])]
    assert sp.language(n) == expected


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5))
def test_union_is_union_of_languages(n):
    u = example_union()
    left = {w for w in itertools.product((0, 1), repeat=n) if density_ok(w, marked=(1,))}
    right = {w for w in itertools.product((0, 2), repeat=n) if density_ok(w, marked=(2,))}
    assert set(u.language(n)) == left | right
