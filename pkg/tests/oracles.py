"""Independent brute-force oracles for the test suite.

These deliberately avoid the package's DP and table machinery: welfare by
enumerating raw item-to-agent maps, matchings by trying every permutation,
demand by rescanning bundles.  Slow and obviously correct.
"""

from fractions import Fraction
from itertools import permutations, product

ZERO = Fraction(0)


def brute_welfare(bids, supply):
    """Max total value over assignments of each item copy to an agent or to
    nobody, with per-agent consumption clamped to one copy per item."""
    copies = [j for j, count in enumerate(supply) for _ in range(count)]
    n = len(bids)
    best = ZERO
    for assignment in product(range(n + 1), repeat=len(copies)):
        bundles = [0] * n
        for copy, owner in zip(copies, assignment):
            if owner < n:
                bundles[owner] |= 1 << copy
        total = sum((bid.value(b) for bid, b in zip(bids, bundles)), ZERO)
        if total > best:
            best = total
    return best


def brute_welfare_maps(bids, m):
    """0/1 supply special case via all n^m item-to-agent maps."""
    n = len(bids)
    best = ZERO
    for owners in product(range(n), repeat=m):
        bundles = [0] * n
        for j, owner in enumerate(owners):
            bundles[owner] |= 1 << j
        total = sum((bid.value(b) for bid, b in zip(bids, bundles)), ZERO)
        if total > best:
            best = total
    return best


def brute_demand(v, prices):
    best = None
    winners = []
    for bundle in range(1 << v.m):
        cost = sum((prices[j] for j in range(v.m) if bundle >> j & 1), ZERO)
        u = v.value(bundle) - cost
        if best is None or u > best:
            best = u
            winners = [bundle]
        elif u == best:
            winners.append(bundle)
    return winners


def brute_matching_value(matrix, bundle):
    """Assignment-valuation oracle: try every injective slot assignment."""
    items = [j for j in range(len(matrix)) if bundle >> j & 1]
    slots = range(len(matrix[0]) if matrix else 0)
    best = ZERO
    for k in range(min(len(items), len(slots)) + 1):
        for chosen in permutations(items, k):
            for assigned in permutations(slots, k):
                total = sum((matrix[i][s] for i, s in zip(chosen, assigned)), ZERO)
                if total > best:
                    best = total
    return best


def brute_min_prices(bids, m):
    ones = (1,) * m
    base = brute_welfare(bids, ones)
    out = []
    for j in range(m):
        supply = tuple(2 if k == j else 1 for k in range(m))
        out.append(brute_welfare(bids, supply) - base)
    return tuple(out)


def brute_max_prices(bids, m):
    ones = (1,) * m
    base = brute_welfare(bids, ones)
    out = []
    for j in range(m):
        supply = tuple(0 if k == j else 1 for k in range(m))
        out.append(base - brute_welfare(bids, supply))
    return tuple(out)
