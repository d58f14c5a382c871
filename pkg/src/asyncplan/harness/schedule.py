"""Asynchronous guidance scheduling: invocation law, feature cache, modes.

Blocking mode invokes the guidance function synchronously every k-th planner
step and is deterministic. Background mode hands the computation to a worker
thread and keeps serving the cached feature, so the planner never stalls;
feature ages may then exceed k.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..planner.types import D_MODEL, InstructionFeature

GuidanceFn = Callable[[], InstructionFeature]


@dataclass(frozen=True)
class ScheduleConfig:
    interval_k: int = 1
    mode: str = "blocking"      # blocking | background

    def __post_init__(self):
        if self.interval_k < 1:
            raise ValueError(f"interval k must be >= 1, got {self.interval_k}")
        if self.mode not in ("blocking", "background"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")


def should_invoke(step: int, k: int) -> bool:
    return step % k == 0


class FeatureCache:
    """Latest instruction-feature snapshot; replaced atomically."""

    def __init__(self, dim: int = D_MODEL):
        self.dim = dim
        self._lock = threading.Lock()
        self._feature: Optional[InstructionFeature] = None
        self._age = 0
        self._degraded = False

    @property
    def feature(self) -> Optional[InstructionFeature]:
        return self._feature

    @property
    def age(self) -> int:
        return self._age

    @property
    def degraded(self) -> bool:
        return self._degraded

    def publish(self, feature: InstructionFeature) -> None:
        with self._lock:
            self._feature = feature
            self._age = 0
            self._degraded = False

    def tick(self) -> None:
        with self._lock:
            self._age += 1

    def mark_degraded(self) -> None:
        with self._lock:
            self._degraded = True

    def snapshot(self) -> InstructionFeature:
        with self._lock:
            if self._feature is None:
                return InstructionFeature(vector=np.zeros(self.dim), age=self._age, source="mock")
            return self._feature.aged(self._age)


class BackgroundWorker:
    """Single worker computing guidance features off the planner thread."""

    def __init__(self, cache: FeatureCache):
        self.cache = cache
        self._jobs: queue.Queue = queue.Queue(maxsize=1)
        self._busy = threading.Event()
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def submit(self, fn: GuidanceFn) -> bool:
        """Queue a computation unless one is already pending/running."""
        if self._busy.is_set():
            return False
        try:
            self._busy.set()
            self._jobs.put_nowait(fn)
            return True
        except queue.Full:
            return False

    def _run(self) -> None:
        while not self._stop.is_set():
            try:
                fn = self._jobs.get(timeout=0.1)
            except queue.Empty:
                continue
            try:
                self.cache.publish(fn())
            except Exception:
                self.cache.mark_degraded()
            finally:
                self._busy.clear()

    def close(self) -> None:
        self._stop.set()
        self._thread.join(timeout=1.0)


def get_feature(
    cache: FeatureCache,
    step: int,
    schedule: ScheduleConfig,
    guidance_fn: GuidanceFn,
    worker: Optional[BackgroundWorker] = None,
) -> InstructionFeature:
    """Return the feature guiding this planner step per the schedule.

    Step 0 always invokes. In blocking mode a failure keeps the cached feature
    (aged) and flags degradation; with an empty cache a zero feature is served.
    """
    if step > 0:
        cache.tick()
    if should_invoke(step, schedule.interval_k):
        if schedule.mode == "blocking":
            try:
                cache.publish(guidance_fn())
            except Exception:
                cache.mark_degraded()
        else:
            if worker is None:
                raise ValueError("background mode needs a BackgroundWorker")
            worker.submit(guidance_fn)
    return cache.snapshot()
