import math
import time

import numpy as np
import pytest

from asyncplan.harness.schedule import (
    BackgroundWorker,
    FeatureCache,
    ScheduleConfig,
    get_feature,
    should_invoke,
)
from asyncplan.planner.types import InstructionFeature


def make_guidance(counter, dim=8, fail=False, delay=0.0):
    def fn():
        counter.append(1)
        if delay:
            time.sleep(delay)
        if fail:
            raise RuntimeError("guidance down")
        return InstructionFeature(vector=np.full(dim, float(len(counter))))
    return fn


def test_should_invoke_basic():
    assert should_invoke(0, 3)
    assert not should_invoke(5, 3)
    assert should_invoke(6, 3)


@pytest.mark.parametrize("k", [1, 3, 9, 17, 149])
def test_invocation_count_is_ceil(k):
    T = 150
    calls = []
    cache = FeatureCache(dim=8)
    schedule = ScheduleConfig(interval_k=k)
    fn = make_guidance(calls)
    for step in range(T):
        get_feature(cache, step, schedule, fn)
    assert len(calls) == math.ceil(T / k)


def test_age_sequence_blocking_k9():
    cache = FeatureCache(dim=4)
    schedule = ScheduleConfig(interval_k=9)
    calls = []
    fn = make_guidance(calls, dim=4)
    ages = [get_feature(cache, step, schedule, fn).age for step in range(27)]
    assert ages == [0, 1, 2, 3, 4, 5, 6, 7, 8] * 3


def test_k1_age_always_zero():
    cache = FeatureCache(dim=4)
    schedule = ScheduleConfig(interval_k=1)
    fn = make_guidance([], dim=4)
    for step in range(20):
        assert get_feature(cache, step, schedule, fn).age == 0


def test_failure_serves_cached_and_flags_degraded():
    cache = FeatureCache(dim=4)
    schedule = ScheduleConfig(interval_k=2)
    good = make_guidance([], dim=4)
    feature0 = get_feature(cache, 0, schedule, good)
    get_feature(cache, 1, schedule, good)
    bad = make_guidance([], dim=4, fail=True)
    feature2 = get_feature(cache, 2, schedule, bad)
    assert cache.degraded
    assert np.array_equal(feature2.vector, feature0.vector)
    assert feature2.age == 2  # age preserved across the failed refresh


def test_failure_with_empty_cache_serves_zero():
    cache = FeatureCache(dim=4)
    schedule = ScheduleConfig(interval_k=1)
    bad = make_guidance([], dim=4, fail=True)
    feature = get_feature(cache, 0, schedule, bad)
    assert cache.degraded
    assert np.array_equal(feature.vector, np.zeros(4))


def test_background_mode_never_stalls():
    cache = FeatureCache(dim=4)
    worker = BackgroundWorker(cache)
    schedule = ScheduleConfig(interval_k=3, mode="background")
    calls = []
    slow = make_guidance(calls, dim=4, delay=0.15)  # slower than k steps
    try:
        t0 = time.perf_counter()
        ages = []
        for step in range(9):
            ages.append(get_feature(cache, step, schedule, slow, worker=worker).age)
        elapsed = time.perf_counter() - t0
        assert elapsed < 0.1, "planner loop must not block on guidance"
        assert max(ages) >= 3  # ages may exceed k in background mode
        time.sleep(0.4)
        assert cache.feature is not None
    finally:
        worker.close()


def test_schedule_config_validation():
    with pytest.raises(ValueError):
        ScheduleConfig(interval_k=0)
    with pytest.raises(ValueError):
        ScheduleConfig(mode="warp")
