"""
DICE Explorer
Optimistic actor-critic exploration with DICE distribution correction,
usable as a CLI or an interactive shell.
"""

__version__ = "1.0.0"
