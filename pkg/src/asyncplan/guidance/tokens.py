"""Routing-instruction tokenization with bucketed distances."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..datagen.instructions import Command, RoutingInstruction

MAX_INSTRUCTIONS = 8

_COMMANDS = (Command.TURN_LEFT, Command.TURN_RIGHT, Command.GO_STRAIGHT, Command.STOP)
_CMD_INDEX = {cmd: i for i, cmd in enumerate(_COMMANDS)}

# distance buckets: [0, 5), [5, 20), [20, 50), [50, inf)
BUCKET_EDGES = (5.0, 20.0, 50.0)
N_BUCKETS = 4

BOS = len(_COMMANDS) * N_BUCKETS          # 16
SEP = BOS + 1
EOS = BOS + 2
PAD = BOS + 3
VOCAB_SIZE = PAD + 1


def distance_bucket(distance_m: float) -> int:
    for i, edge in enumerate(BUCKET_EDGES):
        if distance_m < edge:
            return i
    return N_BUCKETS - 1


def instruction_token(instr: RoutingInstruction) -> int:
    return _CMD_INDEX[instr.cmd] * N_BUCKETS + distance_bucket(instr.distance_m)


def tokenize_instructions(instrs: Sequence[RoutingInstruction]) -> list[int]:
    """[BOS, tok, SEP, tok, ..., EOS]; an empty list defaults to far go-straight."""
    if len(instrs) > MAX_INSTRUCTIONS:
        raise ValueError(f"at most {MAX_INSTRUCTIONS} instructions, got {len(instrs)}")
    if not instrs:
        instrs = [RoutingInstruction(Command.GO_STRAIGHT, BUCKET_EDGES[-1])]
    out = [BOS]
    for i, instr in enumerate(instrs):
        if i:
            out.append(SEP)
        out.append(instruction_token(instr))
    out.append(EOS)
    return out


def pad_token_batch(sequences: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad with PAD; returns (ids (B, L), valid mask (B, L))."""
    length = max(len(s) for s in sequences)
    ids = np.full((len(sequences), length), PAD, dtype=np.int64)
    mask = np.zeros((len(sequences), length), dtype=bool)
    for i, seq in enumerate(sequences):
        ids[i, :len(seq)] = seq
        mask[i, :len(seq)] = True
    return ids, mask
