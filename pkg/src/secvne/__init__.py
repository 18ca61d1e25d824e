"""Security-aware virtual network embedding across multiple clouds."""

__version__ = "0.1.0"
