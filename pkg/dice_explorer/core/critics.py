"""
Twin Q critics, confidence bounds and the weighted TD loss.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from dice_explorer.core.autodiff import Tensor, as_tensor, concat, maximum, minimum
from dice_explorer.core.errors import ShapeError
from dice_explorer.core.networks import Mlp
from dice_explorer.core.replay_buffer import Batch
from dice_explorer.core.rng import Rng

logger = logging.getLogger(__name__)

Values = Union[Tensor, np.ndarray, float]


@dataclass
class QBounds:
    mean: Values
    std: Values
    lower: Values
    upper: Values


def q_bounds(q1: Values, q2: Values, beta_ub: float, beta_lb: float) -> QBounds:
    """
    Mean, spread and confidence bounds of two Q estimates.

    mean = (q1 + q2) / 2, std = |q1 - q2| / 2,
    lower = mean - beta_lb * std, upper = mean + beta_ub * std.

    The bounds are assembled from min/max so that beta = 1 reproduces
    min(q1, q2) and max(q1, q2) exactly. Works on floats, numpy arrays and
    Tensors (gradients flow through Tensors).

    Raises:
        ValueError: If a beta is negative
    """
    if beta_ub < 0 or beta_lb < 0:
        raise ValueError(f"beta_ub and beta_lb must be >= 0, got {beta_ub}, {beta_lb}")
    if isinstance(q1, Tensor) or isinstance(q2, Tensor):
        q1, q2 = as_tensor(q1), as_tensor(q2)
        low, high = minimum(q1, q2), maximum(q1, q2)
    else:
        q1, q2 = np.asarray(q1, dtype=np.float64), np.asarray(q2, dtype=np.float64)
        low, high = np.minimum(q1, q2), np.maximum(q1, q2)
    mean = (q1 + q2) * 0.5
    std = (high - low) * 0.5
    lower = low + std * (1.0 - beta_lb)
    upper = high + std * (beta_ub - 1.0)
    return QBounds(mean=mean, std=std, lower=lower, upper=upper)


def soft_update(target: Sequence[Tensor], online: Sequence[Tensor], tau: float) -> None:
    """
    target <- tau * online + (1 - tau) * target, elementwise and in place.

    Raises:
        ValueError: If tau is outside [0, 1]
        ShapeError: If the parameter lists do not line up
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    target, online = list(target), list(online)
    if len(target) != len(online):
        raise ShapeError(f"Parameter count mismatch: {len(target)} vs {len(online)}")
    for target_param, online_param in zip(target, online):
        if target_param.shape != online_param.shape:
            raise ShapeError(
                f"Shape mismatch in soft update: {target_param.shape} vs {online_param.shape}"
            )
        target_param.values[...] = tau * online_param.values + (1.0 - tau) * target_param.values


def soft_bellman_backup(
    rewards: np.ndarray,
    next_min_q: np.ndarray,
    next_log_prob: np.ndarray,
    dones: np.ndarray,
    alpha: float,
    gamma: float,
) -> np.ndarray:
    """r + gamma * (1 - done) * (min Q'(s', a') - alpha * log pi(a'|s'))."""
    bootstrap = np.asarray(next_min_q) - alpha * np.asarray(next_log_prob)
    return np.asarray(rewards) + gamma * (1.0 - np.asarray(dones, dtype=np.float64)) * bootstrap


def critic_loss_corrected(q_values: Tensor, targets: np.ndarray, weights: np.ndarray) -> Tensor:
    """
    Weighted squared TD error: sum_b w_b (Q(s_b, a_b) - target_b)^2.

    With uniform weights this is the plain mean squared TD error.

    Raises:
        ShapeError: If weights, targets and Q values differ in length
    """
    q_values = as_tensor(q_values)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    if not (q_values.size == targets.size == weights.size):
        raise ShapeError(
            f"Length mismatch: {q_values.size} Q values, {targets.size} targets, "
            f"{weights.size} weights"
        )
    error = q_values.reshape((-1,)) - targets
    return (error * error * weights).sum()


class CriticPair:
    """Two identically shaped, differently initialized Q networks plus targets."""

    def __init__(
        self,
        observation_size: int,
        action_size: int,
        hidden_sizes: Sequence[int],
        rng: Rng,
        beta_ub: float = 2.0,
        beta_lb: float = 2.5,
        tau: float = 0.005,
    ):
        if beta_ub < 0 or beta_lb < 0:
            raise ValueError("beta_ub and beta_lb must be >= 0")
        if not 0.0 < tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {tau}")
        input_size = observation_size + action_size
        self.q1 = Mlp(input_size, hidden_sizes, 1, rng.spawn("q1"), name="q1")
        self.q2 = Mlp(input_size, hidden_sizes, 1, rng.spawn("q2"), name="q2")
        self.target1 = self.q1.clone("q1_target")
        self.target2 = self.q2.clone("q2_target")
        self.beta_ub = beta_ub
        self.beta_lb = beta_lb
        self.tau = tau

    def parameters(self) -> List[Tensor]:
        return self.q1.parameters() + self.q2.parameters()

    def values(self, states, actions, frozen: bool = False) -> Tuple[Tensor, Tensor]:
        """Q1(s, a), Q2(s, a) as (batch,) tensors; actions may be graph-attached."""
        inputs = concat([as_tensor(states), as_tensor(actions)], axis=1)
        return (
            self.q1(inputs, frozen=frozen).reshape((-1,)),
            self.q2(inputs, frozen=frozen).reshape((-1,)),
        )

    def bounds(self, states, actions) -> QBounds:
        """Bounds with frozen critic weights; gradient can still flow through actions."""
        q1, q2 = self.values(states, actions, frozen=True)
        return q_bounds(q1, q2, self.beta_ub, self.beta_lb)

    def target_min(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        inputs = np.concatenate([states, actions], axis=1)
        return np.minimum(
            self.target1(inputs, frozen=True).values[:, 0],
            self.target2(inputs, frozen=True).values[:, 0],
        )

    def soft_update_targets(self) -> None:
        soft_update(self.target1.parameters(), self.q1.parameters(), self.tau)
        soft_update(self.target2.parameters(), self.q2.parameters(), self.tau)


def bellman_target(
    batch: Batch, critics: CriticPair, policy, alpha: float, gamma: float, rng: Rng
) -> np.ndarray:
    """
    Soft Bellman target of the batch using frozen target critics.

    a' is drawn fresh from policy at every s'; the entropy term uses log pi(a'|s').
    Genuine terminations zero the bootstrap.

    Returns:
        (batch,) array, detached from every graph
    """
    next_actions, next_log_prob = policy.sample_actions(batch.next_states, rng)
    next_min_q = critics.target_min(batch.next_states, next_actions)
    return soft_bellman_backup(batch.rewards, next_min_q, next_log_prob, batch.dones, alpha, gamma)
