"""Light-weight planner-facing types (no heavy imports)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

D_MODEL = 128  # desk-scale planner width


@dataclass(frozen=True)
class InstructionFeature:
    """Adapted guidance vector plus its staleness in planner steps."""

    vector: np.ndarray          # (d_model,)
    age: int = 0
    source: str = "learned"     # learned | remote | mock

    def __post_init__(self):
        vec = np.ascontiguousarray(np.asarray(self.vector, dtype=np.float64).reshape(-1))
        if not np.all(np.isfinite(vec)):
            raise ValueError("instruction feature must be finite")
        if self.age < 0:
            raise ValueError("feature age must be >= 0")
        vec.flags.writeable = False
        object.__setattr__(self, "vector", vec)

    def aged(self, age: int) -> "InstructionFeature":
        return InstructionFeature(vector=self.vector, age=age, source=self.source)
