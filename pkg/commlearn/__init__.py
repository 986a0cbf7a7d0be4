"""Communication-bounded learning on partitioned data."""

from .main import cli_main

__all__ = ["cli_main"]
