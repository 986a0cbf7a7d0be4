"""Version information for commlearn."""

__version__ = "0.0.1"
