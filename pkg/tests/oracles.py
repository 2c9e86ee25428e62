"""Independent brute-force oracles shared by the tests.

Nothing here calls into the package: each helper decides membership or
counts directly from a definition.
"""

import itertools
import math


def all_words(n, a=2):
    return list(itertools.product(range(a), repeat=n))


def avoids(w, forbidden):
    return not any(w[i : i + len(f)] == f for f in forbidden for i in range(len(w) - len(f) + 1))


def density_ok(w, marked=(1,), L=lambda n: math.floor(1 + math.log(n))):
    for i in range(len(w)):
        c = 0
        for j in range(i, len(w)):
            c += w[j] in marked
            if c > L(j - i + 1):
                return False
    return True


def fib_counts(n):
    out = [2, 3]
    while len(out) < n:
        out.append(out[-1] + out[-2])
    return out[:n]


def d_n(x, y, n):
    """Bowen distance from the definition: max_{i<n} 2^{-first disagreement of the shifts}."""
    best = 0.0
    for i in range(n):
        u, v = x[i:], y[i:]
        k = next((j for j, (p, q) in enumerate(zip(u, v)) if p != q), None)
        if k is not None:
            best = max(best, 2.0**-k)
    return best


def binary_entropy(p):
    if p in (0, 1):
        return 0.0
    return -p * math.log(p) - (1 - p) * math.log(1 - p)
