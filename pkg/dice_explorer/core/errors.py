"""
Exception types raised by the core layer.

Every type subclasses a builtin so callers that only know about
ValueError / ArithmeticError / RuntimeError keep working.
"""

from typing import Any, Dict, Optional


class ShapeError(ValueError):
    """Incompatible shapes or lengths (tensors, weights vs batch, env dims)."""


class NonFiniteError(ArithmeticError):
    """A NaN or Inf appeared at an operation boundary or in a gradient."""

    def __init__(self, message: str, loss_name: Optional[str] = None):
        super().__init__(message)
        self.loss_name = loss_name


class GraphError(RuntimeError):
    """Backward called on a non-scalar loss or a malformed graph."""


class CoverageError(ValueError):
    """Target occupancy puts mass where the data distribution has none."""

    def __init__(self, message: str, pairs: Optional[list] = None):
        super().__init__(message)
        self.pairs = pairs or []


class ConvergenceError(RuntimeError):
    """An iterative solver finished with its residual above tolerance."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class ConfigError(ValueError):
    """Invalid configuration value."""


class TrainingDivergedError(RuntimeError):
    """A training loss became non-finite; carries enough context to debug."""

    def __init__(
        self,
        loss_name: str,
        step: int,
        diagnostics: Optional[Dict[str, Any]] = None,
    ):
        self.loss_name = loss_name
        self.step = step
        self.diagnostics = diagnostics or {}
        super().__init__(
            f"Non-finite {loss_name} at step {step}; last diagnostics: {self.diagnostics}"
        )
