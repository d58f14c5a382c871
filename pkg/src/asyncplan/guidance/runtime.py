"""Closed-loop guidance callable: scene + instructions -> instruction feature."""

from __future__ import annotations

from typing import Sequence

from ..datagen.instructions import RoutingInstruction
from ..planner.features import featurize_scenes
from ..planner.model import PlannerNet
from ..planner.types import InstructionFeature
from ..scene.types import VectorScene
from .model import FeatureAdapter, GuidanceNet
from .tokens import pad_token_batch, tokenize_instructions


class LearnedGuidance:
    """Runs the guidance encoder over the planner's scene tokens."""

    def __init__(self, planner: PlannerNet, guidance: GuidanceNet, adapter: FeatureAdapter):
        self.planner = planner
        self.guidance = guidance
        self.adapter = adapter

    def __call__(self, scene: VectorScene,
                 instructions: Sequence[RoutingInstruction]) -> InstructionFeature:
        feats = featurize_scenes([scene], self.planner.config)
        tokens, mask = self.planner.encoder(feats)
        ids, token_mask = pad_token_batch([tokenize_instructions(list(instructions))])
        hidden = self.guidance(tokens, mask, ids, token_mask)
        return self.adapter.to_feature(hidden.h_last, source="learned")


class MockGuidance:
    """Fixed-vector guidance for tests and profiling stubs."""

    def __init__(self, vector):
        self.vector = vector

    def __call__(self, scene, instructions) -> InstructionFeature:
        return InstructionFeature(vector=self.vector, age=0, source="mock")
