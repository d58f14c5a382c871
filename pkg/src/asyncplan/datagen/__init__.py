from .instructions import (
    Command,
    RoutingInstruction,
    path_to_instructions,
    route_instructions,
    waypoints_to_control,
    waypoints_to_highlevel,
)

__all__ = [
    "Command",
    "RoutingInstruction",
    "path_to_instructions",
    "route_instructions",
    "waypoints_to_control",
    "waypoints_to_highlevel",
]
