"""Application configuration: JSON file with environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

ENV_PREFIX = "ASYNCPLAN_"


@dataclass
class AppConfig:
    scenario_dir: Optional[str] = None
    checkpoint: Optional[str] = None        # stage-B joint checkpoint
    base_checkpoint: Optional[str] = None   # stage-A planner checkpoint
    port: int = 8787
    host: str = "127.0.0.1"
    interval_k: int = 9
    schedule_mode: str = "blocking"
    guidance_url: Optional[str] = None
    guidance_timeout_ms: float = 250.0
    ui_dir: Optional[str] = None
    default_duration: float = 20.0
    default_seeds: int = 3

    @classmethod
    def load(cls, path: Optional[str | Path] = None) -> "AppConfig":
        raw: dict = {}
        if path is not None:
            raw = json.loads(Path(path).read_text())
        config = cls(**{k: v for k, v in raw.items() if k in {f.name for f in fields(cls)}})
        for f in fields(cls):
            env_key = ENV_PREFIX + f.name.upper()
            if env_key in os.environ:
                value = os.environ[env_key]
                if f.type in ("int", int):
                    value = int(value)
                elif f.type in ("float", float):
                    value = float(value)
                setattr(config, f.name, value)
        return config
