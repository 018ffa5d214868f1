"""Environmental-flows compliance engine for daily river monitoring data."""

__version__ = "0.1.0"
