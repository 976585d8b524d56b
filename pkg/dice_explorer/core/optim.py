"""
Adam optimizer with explicit state.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from dice_explorer.core.autodiff import Tensor
from dice_explorer.core.errors import NonFiniteError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """Moment accumulators for a fixed, ordered list of parameters."""

    first_moments: List[np.ndarray]
    second_moments: List[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_parameters(cls, params: Sequence[Tensor], **constants) -> "AdamState":
        return cls(
            first_moments=[np.zeros_like(p.values) for p in params],
            second_moments=[np.zeros_like(p.values) for p in params],
            **constants,
        )


def adam_step(
    params: Sequence[Tensor],
    grads: Dict[Tensor, np.ndarray],
    state: AdamState,
    lr: float,
) -> AdamState:
    """
    Apply one bias-corrected Adam update in place.

    Parameters without an entry in grads are left untouched (their moments
    are not decayed either).

    Args:
        params: Parameters, in the order the state was created for
        grads: Gradient map from autodiff.backward
        state: Moment accumulators (mutated)
        lr: Learning rate (>= 0; 0 leaves parameters unchanged)

    Returns:
        The same state object, step counter advanced by one

    Raises:
        ValueError: If lr is negative
        ShapeError: If params do not match the state
        NonFiniteError: If a gradient contains NaN/Inf
    """
    if lr < 0:
        raise ValueError(f"Learning rate must be non-negative, got {lr}")
    if len(params) != len(state.first_moments):
        raise ShapeError(
            f"Adam state tracks {len(state.first_moments)} parameters, got {len(params)}"
        )

    # all gradients are checked before any parameter or moment changes
    for index, param in enumerate(params):
        grad = grads.get(param)
        if grad is None:
            continue
        if grad.shape != param.shape or state.first_moments[index].shape != param.shape:
            raise ShapeError(
                f"Gradient shape {grad.shape} does not match parameter {param.name} {param.shape}"
            )
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError(f"Non-finite gradient for {param.name}")

    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step

    for index, param in enumerate(params):
        grad = grads.get(param)
        if grad is None:
            continue
        first = state.first_moments[index]
        second = state.second_moments[index]
        first *= state.beta1
        first += (1.0 - state.beta1) * grad
        second *= state.beta2
        second += (1.0 - state.beta2) * grad**2

        update = (first / correction1) / (np.sqrt(second / correction2) + state.epsilon)
        param.values -= lr * update

    return state


@dataclass
class Adam:
    """Parameter list + state + learning rate bundled together."""

    params: List[Tensor]
    lr: float
    state: AdamState = field(init=False)

    def __post_init__(self):
        self.params = list(self.params)
        self.state = AdamState.for_parameters(self.params)

    def step(self, grads: Dict[Tensor, np.ndarray]) -> None:
        adam_step(self.params, grads, self.state, self.lr)
