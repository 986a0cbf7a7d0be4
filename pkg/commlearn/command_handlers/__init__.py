"""Command handlers for the commlearn subcommands."""
