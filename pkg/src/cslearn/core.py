"""Set partitions of an agent population, Bell numbers, and the round budgets
that every learning run is checked against."""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import comb
from typing import Iterable, Iterator

FAMILIES = (
    "normal-form",
    "congestion",
    "graphical",
    "auction-iterative",
    "auction-bitwise",
)


def ceil_log2(x: int) -> int:
    """Exact ceil(log2 x) for a positive integer, no floats involved."""
    if x < 1:
        raise ValueError(f"ceil_log2 needs a positive integer, got {x}")
    return (x - 1).bit_length()


def floor_log2(x: int) -> int:
    if x < 1:
        raise ValueError(f"floor_log2 needs a positive integer, got {x}")
    return x.bit_length() - 1


@dataclass(frozen=True)
class CoalitionStructure:
    """A set partition of agents 1..n, held in canonical form.

    Canonical form: members of each block ascending, blocks ordered by their
    minimum element. Construction canonicalizes and validates, so equal
    partitions always compare and hash equal.
    """

    blocks: tuple[tuple[int, ...], ...]

    def __init__(self, blocks: Iterable[Iterable[int]]):
        canonical = tuple(sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b))
        object.__setattr__(self, "blocks", canonical)
        seen: set[int] = set()
        count = 0
        for block in canonical:
            if not block:
                raise ValueError("empty block in coalition structure")
            for i in block:
                if not isinstance(i, int) or isinstance(i, bool):
                    raise ValueError(f"agent ids must be integers, got {i!r}")
                if i in seen:
                    raise ValueError(f"agent {i} appears in more than one block")
                seen.add(i)
                count += 1
        if seen and (min(seen) != 1 or max(seen) != count):
            raise ValueError(f"blocks must partition 1..n exactly, got agents {sorted(seen)}")

    @staticmethod
    def singletons(n: int) -> "CoalitionStructure":
        if n < 0:
            raise ValueError(f"population size must be nonnegative, got {n}")
        return CoalitionStructure([i] for i in range(1, n + 1))

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    def labels(self) -> tuple[int, ...]:
        """Block index per agent; entry 0 is padding so labels()[i] is agent i's."""
        try:
            return object.__getattribute__(self, "_labels")
        except AttributeError:
            pass
        out = [0] * (self.n + 1)
        for idx, block in enumerate(self.blocks):
            for i in block:
                out[i] = idx
        labels = tuple(out)
        object.__setattr__(self, "_labels", labels)
        return labels

    def _check_agent(self, i: int) -> None:
        if not 1 <= i <= self.n:
            raise ValueError(f"agent {i} out of range 1..{self.n}")

    def block_of(self, i: int) -> tuple[int, ...]:
        """The unique block containing agent i."""
        self._check_agent(i)
        return self.blocks[self.labels()[i]]

    def merge(self, i: int, j: int) -> "CoalitionStructure":
        """Unify the blocks of i and j; a no-op when they already share one."""
        self._check_agent(i)
        self._check_agent(j)
        labels = self.labels()
        a, b = labels[i], labels[j]
        if a == b:
            return self
        merged = self.blocks[a] + self.blocks[b]
        rest = (blk for k, blk in enumerate(self.blocks) if k not in (a, b))
        return CoalitionStructure([merged, *rest])

    def max_block_size(self) -> int:
        return max((len(b) for b in self.blocks), default=0)

    def to_json(self) -> str:
        """Canonical wire form: array of arrays, e.g. [[1,4],[2,3]]."""
        return json.dumps([list(b) for b in self.blocks], separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "CoalitionStructure":
        return CoalitionStructure(json.loads(text))


def iter_partitions(n: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Yield every set partition of 1..n exactly once, in canonical form.

    Blocks are created in order of their minimum element and grown with
    ascending agents, so each yielded tuple is already canonical.
    """
    if n < 0:
        raise ValueError(f"population size must be nonnegative, got {n}")

    blocks: list[list[int]] = []

    def rec(k: int) -> Iterator[tuple[tuple[int, ...], ...]]:
        if k > n:
            yield tuple(tuple(b) for b in blocks)
            return
        for b in blocks:
            b.append(k)
            yield from rec(k + 1)
            b.pop()
        blocks.append([k])
        yield from rec(k + 1)
        blocks.pop()

    return rec(1)


# Bell triangle rows, grown on demand. _BELL[n] is the partition count of an
# n-element set; exact big integers throughout.
_BELL: list[int] = [1]
_BELL_ROW: list[int] = [1]


def bell_number(n: int) -> int:
    """Exact number of set partitions of an n-element set."""
    if n < 0:
        raise ValueError(f"bell_number needs n >= 0, got {n}")
    global _BELL_ROW
    while len(_BELL) <= n:
        row = [_BELL_ROW[-1]]
        for value in _BELL_ROW:
            row.append(row[-1] + value)
        _BELL_ROW = row
        _BELL.append(row[0])
    return _BELL[n]


def info_lower_bound(n: int) -> int:
    """Minimum rounds any algorithm needs: each round reveals at most n bits,
    and distinguishing all partitions takes ceil(log2 B_n) bits."""
    if n < 1:
        raise ValueError(f"info_lower_bound needs n >= 1, got {n}")
    bits = ceil_log2(bell_number(n))
    return -(-bits // n)


def upper_bound(family: str, n: int, d: int | None = None, c: int | None = None) -> int:
    """Exact query budget for a family at population size n.

    These are the integer counts from the proofs, not the looser real-valued
    statements: normal-form/congestion ceil(log2 n)+1, graphical
    ceil(2n/d)+2*ceil(log2 d)-2, auction-iterative n-1, auction-bitwise
    (1+floor(log2 n))*(1+c)+1 where c bounds the largest coalition.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if n < 1:
        raise ValueError(f"population size must be >= 1, got {n}")
    if family in ("normal-form", "congestion"):
        return ceil_log2(n) + 1
    if family == "graphical":
        if d is None:
            raise ValueError("graphical budget needs the degree limit d")
        if d % 2 != 0 or not 2 <= d <= n:
            raise ValueError(f"degree limit must be even with 2 <= d <= n, got d={d}, n={n}")
        return -(-2 * n // d) + 2 * ceil_log2(d) - 2
    if family == "auction-iterative":
        return n - 1
    # auction-bitwise
    if c is None:
        raise ValueError("auction-bitwise budget needs the max coalition size c")
    if not 1 <= c <= n:
        raise ValueError(f"max coalition size must satisfy 1 <= c <= n, got c={c}, n={n}")
    return (1 + floor_log2(n)) * (1 + c) + 1


@dataclass(frozen=True)
class BoundsReport:
    """Budget and information lower bound for one (family, n, d, c) point."""

    family: str
    n: int
    d: int | None
    c: int | None
    upper_bound: int
    info_lower_bound: int


def bounds_report(family: str, n: int, d: int | None = None, c: int | None = None) -> BoundsReport:
    return BoundsReport(family, n, d, c, upper_bound(family, n, d=d, c=c), info_lower_bound(n))


def graphical_round_lower_bound(n: int, d: int) -> int:
    """Rounds any degree-d graphical-game algorithm needs: ceil((n-1)/d)."""
    if n < 1 or d < 1:
        raise ValueError("needs n >= 1 and d >= 1")
    return -(-(n - 1) // d)
