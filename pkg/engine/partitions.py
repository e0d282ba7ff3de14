"""
Set-partition enumeration and Möbius weights.

Partitions of {1..n} are generated from restricted-growth strings, which makes the
output canonical for free: blocks appear ordered by their least element and each
block is ascending.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial
from typing import Iterator, List, Sequence, Tuple

from .errors import BoundedInputError, InputError

logger = logging.getLogger(__name__)

MAX_PARTITION_SIZE = 12
# Bell(10) = 115975 partitions is the largest family kept in memory
_CACHE_LIMIT = 10


@dataclass(frozen=True)
class SetPartition:
    """A partition of {1..n} in canonical form."""
    blocks: Tuple[Tuple[int, ...], ...]

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[int]]) -> "SetPartition":
        """Validate arbitrary blocks and return the canonical partition."""
        cleaned = [tuple(sorted(b)) for b in blocks]
        if any(not b for b in cleaned):
            raise InputError("Partition contains an empty block.")
        elements = [e for b in cleaned for e in b]
        n = len(elements)
        if sorted(elements) != list(range(1, n + 1)):
            raise InputError(f"Blocks {blocks} do not partition {{1..{n}}}.")
        cleaned.sort(key=lambda b: b[0])
        return cls(tuple(cleaned))

    @property
    def size(self) -> int:
        return sum(len(b) for b in self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def __str__(self) -> str:
        inner = ", ".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)
        return "{" + inner + "}"


def _check_size(n: int):
    if not isinstance(n, int) or n < 1 or n > MAX_PARTITION_SIZE:
        raise BoundedInputError(f"Partition size must be in [1, {MAX_PARTITION_SIZE}], got {n}.")


def restricted_growth_strings(n: int) -> Iterator[Tuple[int, ...]]:
    """Yield every restricted-growth string of length n in lexicographic order."""
    _check_size(n)
    a = [0] * n
    maxes = [0] * n  # maxes[i] = max(a[0..i-1]), i.e. the largest label usable at i is maxes[i] + 1
    while True:
        yield tuple(a)
        i = n - 1
        while i > 0 and a[i] == maxes[i] + 1:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        for j in range(i + 1, n):
            a[j] = 0
            maxes[j] = max(maxes[j - 1], a[j - 1])


def _blocks_from_rgs(rgs: Tuple[int, ...]) -> Tuple[Tuple[int, ...], ...]:
    blocks: List[List[int]] = []
    for element, label in enumerate(rgs, start=1):
        if label == len(blocks):
            blocks.append([element])
        else:
            blocks[label].append(element)
    return tuple(tuple(b) for b in blocks)


def iter_partitions(n: int) -> Iterator[SetPartition]:
    """Lazily enumerate the partitions of {1..n} in canonical form."""
    for rgs in restricted_growth_strings(n):
        yield SetPartition(_blocks_from_rgs(rgs))


@lru_cache(maxsize=None)
def _cached_partitions(n: int) -> Tuple[SetPartition, ...]:
    logger.debug(f"Enumerating partitions of a {n}-element set")
    return tuple(iter_partitions(n))


def enumerate_partitions(n: int) -> List[SetPartition]:
    """All partitions of {1..n}; the count equals Bell(n)."""
    _check_size(n)
    if n > _CACHE_LIMIT:
        return list(iter_partitions(n))
    return list(_cached_partitions(n))


def moebius_weight_for(block_count: int) -> int:
    """(-1)^(b-1) (b-1)! for a partition with b blocks."""
    if block_count < 1:
        raise InputError("A partition has at least one block.")
    return (-1) ** (block_count - 1) * factorial(block_count - 1)


def moebius_weight(p: SetPartition) -> int:
    """Möbius weight of the moment-to-cumulant inversion."""
    return moebius_weight_for(len(p.blocks))


def bell_number(n: int) -> int:
    """Bell number from the Bell triangle; independent of the enumeration above."""
    if n < 0:
        raise BoundedInputError("Bell numbers are defined for n >= 0.")
    if n == 0:
        return 1
    row = [1]
    for _ in range(n - 1):
        nxt = [row[-1]]
        for value in row:
            nxt.append(nxt[-1] + value)
        row = nxt
    return row[-1]


def bell_by_recurrence(n: int) -> int:
    """B(n+1) = sum_k C(n, k) B(k); a second oracle used by the tests."""
    bells = [1]
    for m in range(n):
        bells.append(sum(comb(m, k) * bells[k] for k in range(m + 1)))
    return bells[n]


@lru_cache(maxsize=None)
def block_profiles(alpha: Tuple[int, ...]) -> Tuple[Tuple[Tuple[Tuple[int, ...], ...], int, int], ...]:
    """
    Group the partitions of the slot multiset encoded by ``alpha`` by the count
    vectors of their blocks.

    ``alpha`` lists how many slots belong to each variable. Returns tuples
    ``(block_vectors, block_count, multiplicity)`` where ``block_vectors`` is the
    sorted tuple of per-block count vectors.
    """
    positions = sorted((i for i, c in enumerate(alpha) if c), key=lambda i: -alpha[i])
    shape = tuple(alpha[i] for i in positions)
    d = len(alpha)
    profiles = {}
    for vectors, _, mult in _shape_profiles(shape):
        placed = []
        for vec in vectors:
            full = [0] * d
            for i, c in zip(positions, vec):
                full[i] = c
            placed.append(tuple(full))
        key = tuple(sorted(placed))
        profiles[key] = profiles.get(key, 0) + mult
    return tuple((key, len(key), mult) for key, mult in sorted(profiles.items()))


@lru_cache(maxsize=None)
def _shape_profiles(alpha: Tuple[int, ...]) -> Tuple[Tuple[Tuple[Tuple[int, ...], ...], int, int], ...]:
    # alpha is sorted descending with no zeros, so equal shapes share one enumeration
    total = sum(alpha)
    _check_size(total)
    owner: List[int] = []
    for var, count in enumerate(alpha):
        owner.extend([var] * count)
    d = len(alpha)
    profiles = {}
    for rgs in restricted_growth_strings(total):
        vectors = [[0] * d for _ in range(max(rgs) + 1)]
        for slot, label in enumerate(rgs):
            vectors[label][owner[slot]] += 1
        key = tuple(sorted(tuple(v) for v in vectors))
        profiles[key] = profiles.get(key, 0) + 1
    return tuple((key, len(key), mult) for key, mult in sorted(profiles.items()))
