"""Pre-crash scenario analysis of autonomous-vehicle crash reports."""

__version__ = "0.1.0"
