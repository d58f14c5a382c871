"""Closed-loop driving planner with asynchronously scheduled instruction guidance."""

__version__ = "0.1.0"
