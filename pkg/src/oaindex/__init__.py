"""Risk-adjusted occupational automation indices over an O*NET-style taxonomy."""

__version__ = "0.1.0"
