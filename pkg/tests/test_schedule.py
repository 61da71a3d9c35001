"""Tests for block sizing, partitioning and break conditions."""

import math

import pytest

from cascade_sim.errors import ConfigurationError
from cascade_sim.schedule import (
    DynamicSchedule,
    FixedRoundsBreak,
    QuietRoundsBreak,
    StaticSchedule,
    ThresholdBreak,
    block_size_for_round,
    clamp_block_size,
    initial_block_size,
    partition_into_blocks,
    plan_round,
    should_terminate,
)


def test_initial_block_size_known_values():
    assert initial_block_size(0.01) == 100
    assert initial_block_size(0.08) == 13
    assert initial_block_size(0.5) == 2
    assert initial_block_size(0.02) == 50
    with pytest.raises(ConfigurationError):
        initial_block_size(0.0)
    with pytest.raises(ConfigurationError):
        initial_block_size(0.6)


def test_schedule_constructors_validate():
    StaticSchedule(0.1, 3)
    with pytest.raises(ConfigurationError):
        StaticSchedule(0.1, 1)
    with pytest.raises(ConfigurationError):
        StaticSchedule(0.0)
    with pytest.raises(ConfigurationError):
        DynamicSchedule(0.51)


def test_static_schedule_grows_geometrically():
    sched = StaticSchedule(0.125, k=2)
    sizes = [block_size_for_round(sched, r, 4096, []) for r in range(3)]
    assert sizes == [8, 16, 32]
    tripled = StaticSchedule(0.125, k=3)
    assert block_size_for_round(tripled, 2, 4096, []) == 72


def test_round_zero_always_uses_initial_size():
    for sched in (StaticSchedule(0.04), DynamicSchedule(0.04)):
        assert block_size_for_round(sched, 0, 1024, []) == 25


def test_sizes_clamp_to_frame():
    sched = StaticSchedule(0.125, k=2)
    assert block_size_for_round(sched, 10, 64, []) == 64
    # tiny frame clamps the initial size too
    assert block_size_for_round(StaticSchedule(0.001), 0, 16, []) == 16
    assert clamp_block_size(1, 100) == 2
    assert clamp_block_size(7, 100) == 7
    assert clamp_block_size(500, 100) == 100
    with pytest.raises(ConfigurationError):
        clamp_block_size(4, 0)


def test_dynamic_schedule_tracks_observed_corrections():
    sched = DynamicSchedule(0.05)
    assert block_size_for_round(sched, 1, 4096, [32]) == 128
    assert block_size_for_round(sched, 1, 4096, [1]) == 4096
    # a quiet round degenerates to one whole-frame block
    assert block_size_for_round(sched, 1, 4096, [0]) == 4096
    assert block_size_for_round(sched, 2, 4096, [32, 8]) == 512
    with pytest.raises(ConfigurationError):
        block_size_for_round(sched, 2, 4096, [32])


def test_partition_exhaustive_cover_disjoint_uniform():
    for n in range(1, 65):
        for size in range(1, 65):
            blocks = partition_into_blocks(n, size)
            # cover [0, n) without gaps or overlap, in order
            assert blocks[0][0] == 0 and blocks[-1][1] == n
            for (a_lo, a_hi), (b_lo, b_hi) in zip(blocks, blocks[1:]):
                assert a_hi == b_lo
            # uniform width except possibly the last
            for lo, hi in blocks[:-1]:
                assert hi - lo == size
            last_lo, last_hi = blocks[-1]
            assert 1 <= last_hi - last_lo <= size
    with pytest.raises(ConfigurationError):
        partition_into_blocks(0, 4)


def test_plan_round_bundles_size_and_partition():
    plan = plan_round(StaticSchedule(0.25), 1, 10, [])
    assert plan.round_index == 1
    assert plan.block_size == 8
    assert plan.intervals == ((0, 8), (8, 10))


def test_fixed_rounds_break():
    cond = FixedRoundsBreak(3)
    assert not should_terminate(cond, [4])
    assert not should_terminate(cond, [4, 2])
    assert should_terminate(cond, [4, 2, 0])
    with pytest.raises(ConfigurationError):
        FixedRoundsBreak(0)


def test_quiet_rounds_break():
    cond = QuietRoundsBreak(2)
    assert not should_terminate(cond, [0])  # not enough history yet
    assert should_terminate(cond, [5, 0, 0])
    assert not should_terminate(cond, [5, 0, 1])
    assert not should_terminate(cond, [5, 1, 0])
    with pytest.raises(ConfigurationError):
        QuietRoundsBreak(0)


def test_threshold_break():
    cond = ThresholdBreak(1)
    assert should_terminate(cond, [3, 0])
    assert not should_terminate(cond, [3, 1])
    with pytest.raises(ConfigurationError):
        should_terminate(cond, [])
    with pytest.raises(ConfigurationError):
        ThresholdBreak(0)


def test_static_sizes_match_formula_for_many_rounds():
    sched = StaticSchedule(0.02, k=2)
    for r in range(6):
        expect = min(max(50 * 2**r, 2), 100000)
        assert block_size_for_round(sched, r, 100000, []) == expect
    assert initial_block_size(0.02) == math.ceil(1 / 0.02)
