# Keep this init light: sim.engine imports harness.schedule, while evalrun
# imports metrics (which imports sim); re-exporting evalrun here would close
# an import cycle. Import asyncplan.harness.evalrun / .service directly.
from .schedule import (
    BackgroundWorker,
    FeatureCache,
    ScheduleConfig,
    get_feature,
    should_invoke,
)
from .profiling import FIG3_INTERVALS, ProfileRow, format_profile_table, profile_latency
from .config import AppConfig

__all__ = [
    "BackgroundWorker", "FeatureCache", "ScheduleConfig", "get_feature", "should_invoke",
    "FIG3_INTERVALS", "ProfileRow", "format_profile_table", "profile_latency",
    "AppConfig",
]
