"""Registry initialization for all command handlers."""

from .base import registry
from .main_commands import (
    GenCommandHandler,
    HelpCommandHandler,
    RunCommandHandler,
    VerifyCommandHandler,
)


def initialize_registry() -> None:
    """Initialize the registry with all available command handlers."""
    handlers = [
        GenCommandHandler(),
        RunCommandHandler(),
        VerifyCommandHandler(),
        HelpCommandHandler(),
    ]

    for handler in handlers:
        registry.register(handler)


# Initialize the registry when this module is imported
initialize_registry()


__all__ = ["registry"]
