from collections import Counter

import pytest

from engine.errors import BoundedInputError, InputError
from engine.partitions import (
    MAX_PARTITION_SIZE,
    SetPartition,
    bell_by_recurrence,
    bell_number,
    block_profiles,
    enumerate_partitions,
    iter_partitions,
    moebius_weight,
    moebius_weight_for,
    restricted_growth_strings,
)


def test_bell_counts():
    assert len(enumerate_partitions(3)) == 5
    assert len(enumerate_partitions(4)) == 15
    for n in range(1, 9):
        assert len(enumerate_partitions(n)) == bell_number(n) == bell_by_recurrence(n)


def test_bell_small_values():
    assert [bell_number(n) for n in range(0, 8)] == [1, 1, 2, 5, 15, 52, 203, 877]


def test_partitions_of_three():
    rendered = [str(p) for p in enumerate_partitions(3)]
    assert rendered == [
        "{{1,2,3}}",
        "{{1,2}, {3}}",
        "{{1,3}, {2}}",
        "{{1}, {2,3}}",
        "{{1}, {2}, {3}}",
    ]


def test_partitions_are_canonical_and_distinct():
    seen = set()
    for p in iter_partitions(6):
        firsts = [b[0] for b in p.blocks]
        assert firsts == sorted(firsts)
        assert all(list(b) == sorted(b) for b in p.blocks)
        assert p.size == 6
        seen.add(p.blocks)
    assert len(seen) == bell_number(6)


def test_restricted_growth_strings_rule():
    for rgs in restricted_growth_strings(5):
        assert rgs[0] == 0
        for i in range(1, len(rgs)):
            assert rgs[i] <= max(rgs[:i]) + 1


def test_size_bounds():
    with pytest.raises(BoundedInputError):
        enumerate_partitions(0)
    with pytest.raises(BoundedInputError):
        enumerate_partitions(MAX_PARTITION_SIZE + 1)


def test_from_blocks_canonicalizes():
    p = SetPartition.from_blocks([[3, 1], [2]])
    assert p.blocks == ((1, 3), (2,))
    assert len(p) == 2
    with pytest.raises(InputError):
        SetPartition.from_blocks([[1, 2], [2, 3]])
    with pytest.raises(InputError):
        SetPartition.from_blocks([[1], []])


def test_moebius_weights():
    assert [moebius_weight_for(b) for b in range(1, 6)] == [1, -1, 2, -6, 24]
    assert moebius_weight(SetPartition.from_blocks([[1], [2], [3]])) == 2
    with pytest.raises(InputError):
        moebius_weight_for(0)


def test_moebius_weights_sum_to_zero():
    # sum over partitions of mu(pi) is the cumulant of the constant 1, which is 0 for n >= 2
    for n in range(2, 8):
        assert sum(moebius_weight(p) for p in iter_partitions(n)) == 0


def test_block_profiles_account_for_every_partition():
    alpha = (2, 1, 1)
    profiles = block_profiles(alpha)
    assert sum(mult for _, _, mult in profiles) == bell_number(4)
    for vectors, count, _ in profiles:
        assert count == len(vectors)
        assert tuple(map(sum, zip(*vectors))) == alpha


def test_block_profiles_match_brute_force():
    alpha = (0, 2, 1)
    owner = [1, 1, 2]
    expected = Counter()
    for p in iter_partitions(3):
        vectors = []
        for block in p.blocks:
            v = [0, 0, 0]
            for slot in block:
                v[owner[slot - 1]] += 1
            vectors.append(tuple(v))
        expected[tuple(sorted(vectors))] += 1
    got = {vectors: mult for vectors, _, mult in block_profiles(alpha)}
    assert got == dict(expected)
