"""vibrosheet: planar simulator and actuation-pattern optimizer for piezoelectric sheet robots."""

from __future__ import annotations

__version__ = "0.1.0"
