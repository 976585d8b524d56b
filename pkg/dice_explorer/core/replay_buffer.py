"""
FIFO replay buffer; its contents define the data distribution d^D.
"""

import logging
from dataclasses import dataclass

import numpy as np

from dice_explorer.core.errors import ShapeError
from dice_explorer.core.rng import Rng

logger = logging.getLogger(__name__)


@dataclass
class Transition:
    """One (s, a, r, s', done) tuple; done marks true termination only."""

    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool = False


@dataclass
class Batch:
    """Column-stacked transitions."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return len(self.rewards)

    def uniform_weights(self) -> np.ndarray:
        return np.full(len(self), 1.0 / len(self))


class ReplayBuffer:
    """Ring buffer of fixed capacity; once full, the oldest entry is overwritten."""

    def __init__(self, capacity: int, observation_size: int, action_size: int):
        if capacity < 1:
            raise ValueError(f"Capacity must be positive, got {capacity}")
        self.capacity = int(capacity)
        self.observation_size = observation_size
        self.action_size = action_size
        self.states = np.zeros((capacity, observation_size))
        self.actions = np.zeros((capacity, action_size))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, observation_size))
        self.dones = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._cursor = 0

    def __len__(self) -> int:
        return self.size

    def push(self, transition: Transition) -> None:
        """
        Store a transition, evicting the oldest one when full.

        Raises:
            ShapeError: If the dimensions do not match the buffer
        """
        state = np.asarray(transition.state, dtype=np.float64).reshape(-1)
        next_state = np.asarray(transition.next_state, dtype=np.float64).reshape(-1)
        action = np.asarray(transition.action, dtype=np.float64).reshape(-1)
        if state.size != self.observation_size or next_state.size != self.observation_size:
            raise ShapeError(f"Expected states of size {self.observation_size}")
        if action.size != self.action_size:
            raise ShapeError(f"Expected actions of size {self.action_size}, got {action.size}")

        slot = self._cursor
        self.states[slot] = state
        self.actions[slot] = action
        self.rewards[slot] = transition.reward
        self.next_states[slot] = next_state
        self.dones[slot] = transition.done
        self._cursor = (slot + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _gather(self, indices: np.ndarray) -> Batch:
        return Batch(
            states=self.states[indices],
            actions=self.actions[indices],
            rewards=self.rewards[indices],
            next_states=self.next_states[indices],
            dones=self.dones[indices],
        )

    def sample(self, batch_size: int, rng: Rng) -> Batch:
        """
        Draw batch_size transitions uniformly with replacement.

        Raises:
            ValueError: If the buffer is empty
        """
        if self.size == 0:
            raise ValueError("Cannot sample from an empty replay buffer")
        return self._gather(rng.integers(0, self.size, batch_size))

    def all(self) -> Batch:
        """Every stored transition, oldest first."""
        if self.size < self.capacity:
            order = np.arange(self.size)
        else:
            order = (np.arange(self.capacity) + self._cursor) % self.capacity
        return self._gather(order)
