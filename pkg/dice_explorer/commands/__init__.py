"""
Command definitions for the CLI and the interactive shell.
Each command is defined once, is a thin wrapper over core, and works in both.
"""
