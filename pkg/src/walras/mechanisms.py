"""Declared-welfare-maximizer mechanisms.

All four mechanisms share one allocation rule (the exact declared-welfare
maximizer with canonical tie-breaking) and differ only in payments:

    vcg      externality: W_without_i(1) - W_without_i(1 - x_i)
    english  minimum Walrasian prices of the declared market, per item won
    dutch    maximum Walrasian prices of the declared market, per item won
    paybid   the declared value of the bundle won

Payments stay well-defined for non-GS bids (the marginals always exist);
only the Walrasian interpretation of the english/dutch price vectors can
fail then, which `check_payment_ordering` flags.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product

from .bundles import full_mask, iter_bits, ms_ones
from .money import ZERO, parse_money
from .valuations import Additive, Valuation, budget_additive
from .walrasian import (
    max_walrasian_prices,
    min_walrasian_prices,
    verify_walrasian_equilibrium,
)
from .welfare import Allocation, BidProfile, welfare_max, welfare_value


class PaymentRule(str, Enum):
    VCG = "vcg"
    ENGLISH = "english"
    DUTCH = "dutch"
    PAY_YOUR_BID = "paybid"


@dataclass(frozen=True)
class MechanismOutcome:
    rule: PaymentRule
    allocation: Allocation
    payments: tuple[Fraction, ...]
    prices_used: tuple[Fraction, ...] | None


def allocate_declared(bids: BidProfile) -> Allocation:
    """Welfare-maximizing partition under the bids, canonical tie-breaking.

    Items the maximizer leaves unused carry zero marginal declared value;
    they are handed to agent 0 so the partition is full.
    """
    key = "declared_allocation"
    cached = bids._cache.get(key)
    if cached is not None:
        return cached
    _, bundles = welfare_max(bids, ms_ones(bids.m))
    used = 0
    for b in bundles:
        used |= b
    leftover = full_mask(bids.m) & ~used
    alloc = Allocation(bids.m, (bundles[0] | leftover,) + bundles[1:])
    bids._cache[key] = alloc
    return alloc


def _payments_and_prices(rule: PaymentRule, bids: BidProfile,
                         alloc: Allocation):
    ones = ms_ones(bids.m)
    if rule is PaymentRule.VCG:
        pays = []
        for i, x in enumerate(alloc.bundles):
            if x == 0:
                pays.append(ZERO)
                continue
            rest = tuple(0 if (x >> j) & 1 else 1 for j in range(bids.m))
            pays.append(welfare_value(bids, ones, exclude=i)
                        - welfare_value(bids, rest, exclude=i))
        return tuple(pays), None
    if rule is PaymentRule.ENGLISH:
        prices = min_walrasian_prices(bids)
    elif rule is PaymentRule.DUTCH:
        prices = max_walrasian_prices(bids)
    else:
        return tuple(bid.value(x) for bid, x in zip(bids.bids, alloc.bundles)), None
    pays = tuple(sum((prices[j] for j in iter_bits(x)), ZERO)
                 for x in alloc.bundles)
    return pays, prices


def payments(rule: PaymentRule, bids: BidProfile,
             alloc: Allocation) -> tuple[Fraction, ...]:
    """Per-agent payments for the rule; ``alloc`` must be the declared optimum."""
    if alloc != allocate_declared(bids):
        raise ValueError("allocation mismatch: payments are defined on the "
                         "declared-optimal allocation")
    pays, _ = _payments_and_prices(rule, bids, alloc)
    return pays


def run_mechanism(rule: PaymentRule, bids: BidProfile) -> MechanismOutcome:
    rule = PaymentRule(rule)
    alloc = allocate_declared(bids)
    pays, prices = _payments_and_prices(rule, bids, alloc)
    return MechanismOutcome(rule, alloc, pays, prices)


def utility(true_v: Valuation, outcome: MechanismOutcome, i: int) -> Fraction:
    """Quasi-linear utility: value of the bundle won minus the payment."""
    return true_v.value(outcome.allocation.bundles[i]) - outcome.payments[i]


# -- payment-rule comparison ---------------------------------------------------

@dataclass(frozen=True)
class PaymentOrderingReport:
    allocation: Allocation
    payments_by_rule: dict
    links_per_agent: tuple[tuple[bool, bool, bool], ...]
    chain_ok_per_agent: tuple[bool, ...]
    chain_ok: bool
    english_prices_walrasian: bool
    dutch_prices_walrasian: bool


_CHAIN = (PaymentRule.VCG, PaymentRule.ENGLISH,
          PaymentRule.DUTCH, PaymentRule.PAY_YOUR_BID)


def check_payment_ordering(bids: BidProfile) -> PaymentOrderingReport:
    """Evaluate all four rules on the shared allocation and compare payments.

    For gross-substitutes bids the chain vcg <= english <= dutch <= paybid
    holds agent by agent; outside GS it can break, so the result is a report
    rather than an assertion.  ``links_per_agent`` holds the three adjacent
    comparisons per agent, in chain order.
    """
    alloc = allocate_declared(bids)
    by_rule = {rule: _payments_and_prices(rule, bids, alloc)[0] for rule in _CHAIN}
    links = []
    for i in range(bids.n):
        seq = [by_rule[rule][i] for rule in _CHAIN]
        links.append(tuple(a <= b for a, b in zip(seq, seq[1:])))
    return PaymentOrderingReport(
        allocation=alloc,
        payments_by_rule={rule.value: by_rule[rule] for rule in _CHAIN},
        links_per_agent=tuple(links),
        chain_ok_per_agent=tuple(all(row) for row in links),
        chain_ok=all(all(row) for row in links),
        english_prices_walrasian=verify_walrasian_equilibrium(
            bids, alloc, min_walrasian_prices(bids)).is_equilibrium,
        dutch_prices_walrasian=verify_walrasian_equilibrium(
            bids, alloc, max_walrasian_prices(bids)).is_equilibrium,
    )


@dataclass(frozen=True)
class RankingSearchReport:
    instances_checked: int
    witness_found: bool
    witness: dict | None
    other_link_violations: int


def search_vcg_english_inversion(*, steps=None, scale=100) -> RankingSearchReport:
    """Scan the submodular three-item family for a vcg > english payment.

    The family fixes a dominant two-item additive bidder and a budget-additive
    third bidder min(6, 3A + 5B + 3C), and sweeps a small additive middle
    bidder over a weight grid.  Budget-additive valuations are submodular but
    not gross substitutes, so the usual payment chain is not guaranteed; the
    scan reports whether an inversion actually occurs (no numbers asserted).
    """
    if steps is None:
        steps = [Fraction(k) for k in range(0, 7)]
    else:
        steps = [parse_money(s) for s in steps]
    big = parse_money(scale)
    v1 = Additive((big, big, ZERO))
    v3 = budget_additive((3, 5, 3), 6)
    checked = 0
    witness = None
    other = 0
    for w in product(steps, repeat=3):
        bids = BidProfile(3, (v1, Additive(w), v3))
        report = check_payment_ordering(bids)
        checked += 1
        pays = report.payments_by_rule
        for i in range(3):
            if pays["vcg"][i] > pays["english"][i] and witness is None:
                witness = {
                    "middle_bidder_weights": w,
                    "agent": i,
                    "vcg": pays["vcg"][i],
                    "english": pays["english"][i],
                }
        if not report.chain_ok:
            other += 1
    return RankingSearchReport(
        instances_checked=checked,
        witness_found=witness is not None,
        witness=witness,
        other_link_violations=other,
    )
