"""Bitmask bundles and small item multisets.

A bundle over m items is an ``int`` bitmask with bit j set when item j is
included; m is capped at 16.  An item multiset is a tuple of non-negative
per-item multiplicities.  All welfare formulas in this package need at most
two copies of an item, so multiset arguments are validated to multiplicity 2.
"""

from __future__ import annotations

from typing import Iterator

MAX_ITEMS = 16


def check_item_count(m: int) -> None:
    if not 1 <= m <= MAX_ITEMS:
        raise ValueError(f"item count must be in 1..{MAX_ITEMS}, got {m}")


def full_mask(m: int) -> int:
    return (1 << m) - 1


def check_bundle(m: int, bundle: int) -> None:
    if bundle < 0 or bundle >> m:
        raise ValueError(f"bundle {bundle:#x} has bits outside the {m} items")


def iter_bits(mask: int) -> Iterator[int]:
    """Item indices of a bundle, ascending."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def bits_list(mask: int) -> list[int]:
    return list(iter_bits(mask))


def subsets_ascending(mask: int) -> Iterator[int]:
    """All submasks of ``mask`` in ascending numeric order, starting at 0."""
    s = 0
    while True:
        yield s
        if s == mask:
            return
        s = (s - mask) & mask


# -- item multisets ---------------------------------------------------------

def ms_zeros(m: int) -> tuple[int, ...]:
    return (0,) * m


def ms_ones(m: int) -> tuple[int, ...]:
    return (1,) * m


def ms_unit(m: int, j: int) -> tuple[int, ...]:
    if not 0 <= j < m:
        raise ValueError(f"item index {j} out of range for m={m}")
    return tuple(1 if k == j else 0 for k in range(m))


def ms_from_mask(m: int, mask: int) -> tuple[int, ...]:
    return tuple((mask >> j) & 1 for j in range(m))


def ms_add(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(x + y for x, y in zip(a, b, strict=True))


def ms_sub(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    out = tuple(x - y for x, y in zip(a, b, strict=True))
    if any(x < 0 for x in out):
        raise ValueError(f"multiset difference {a} - {b} goes negative")
    return out


def clamp_mask(ms: tuple[int, ...]) -> int:
    """Bundle of items present at least once (per-agent consumption is 0/1)."""
    mask = 0
    for j, count in enumerate(ms):
        if count > 0:
            mask |= 1 << j
    return mask


def check_multiset(m: int, ms: tuple[int, ...], cap: int = 2) -> None:
    if len(ms) != m:
        raise ValueError(f"multiset length {len(ms)} != m={m}")
    for j, count in enumerate(ms):
        if count < 0:
            raise ValueError(f"negative multiplicity at item {j}")
        if count > cap:
            raise ValueError(
                f"multiplicity {count} at item {j} exceeds {cap}; "
                "the welfare formulas never need more copies"
            )
