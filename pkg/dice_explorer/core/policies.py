"""
Stochastic policies and the distribution-corrected actor objectives.

GaussianPolicy is the tanh-squashed Gaussian used by both the target
policy (trained against the lower bound) and the exploration policy
(trained against the upper bound). The two are never coupled: each
objective only touches its own policy's parameters.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from dice_explorer.core.autodiff import Tensor, as_tensor, clip, exp, softplus, tanh
from dice_explorer.core.critics import CriticPair
from dice_explorer.core.errors import ShapeError
from dice_explorer.core.networks import Mlp
from dice_explorer.core.rng import Rng, gaussian_sample

logger = logging.getLogger(__name__)

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
ACTION_LIMIT = 1.0 - 1e-12
HALF_LOG_TWO_PI = 0.5 * np.log(2.0 * np.pi)
LOG_TWO = np.log(2.0)


@dataclass
class PolicySample:
    action: Tensor
    log_prob: Tensor
    pre_squash: Tensor


class GaussianPolicy:
    """
    a = tanh(mean(s) + exp(log_std(s)) * eps), eps ~ N(0, I).

    One network emits mean and log_std side by side; log_std is clamped to
    [LOG_STD_MIN, LOG_STD_MAX].
    """

    def __init__(
        self,
        observation_size: int,
        action_size: int,
        hidden_sizes: Sequence[int],
        rng: Rng,
        alpha: float = 0.2,
        name: str = "policy",
    ):
        if alpha < 0:
            raise ValueError(f"Entropy coefficient must be >= 0, got {alpha}")
        self.observation_size = observation_size
        self.action_size = action_size
        self.hidden_sizes = list(hidden_sizes)
        self.alpha = alpha
        self.name = name
        self.network = Mlp(observation_size, hidden_sizes, 2 * action_size, rng, name=name)

    def parameters(self):
        return self.network.parameters()

    def distribution(self, states, frozen: bool = False) -> Tuple[Tensor, Tensor]:
        """(mean, clamped log_std), each of shape (batch, action_size)."""
        states = as_tensor(states)
        if states.values.ndim != 2 or states.shape[1] != self.observation_size:
            raise ShapeError(
                f"{self.name}: expected states of shape (batch, {self.observation_size}), "
                f"got {states.shape}"
            )
        output = self.network(states, frozen=frozen)
        mean = output[:, : self.action_size]
        log_std = clip(output[:, self.action_size :], LOG_STD_MIN, LOG_STD_MAX)
        return mean, log_std

    def sample(
        self,
        states,
        rng: Optional[Rng] = None,
        noise: Optional[np.ndarray] = None,
        frozen: bool = False,
    ) -> PolicySample:
        """
        Reparameterized sample with its squash-corrected log-probability.

        log pi(a|s) = sum_i [-eps_i^2 / 2 - log_std_i - log(2 pi) / 2]
                      - sum_i log(1 - tanh(u_i)^2),
        with log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)).

        Args:
            states: (batch, observation_size)
            rng: Noise source, used when noise is None
            noise: Explicit eps of shape (batch, action_size)
            frozen: Detach the network parameters

        Returns:
            PolicySample; action and log_prob carry gradients to the
            parameters unless frozen
        """
        mean, log_std = self.distribution(states, frozen=frozen)
        if noise is None:
            if rng is None:
                raise ValueError("Either rng or noise is required")
            noise = gaussian_sample(rng, mean.size).reshape(mean.shape)
        noise = np.asarray(noise, dtype=np.float64)
        if noise.shape != mean.shape:
            raise ShapeError(f"Noise shape {noise.shape} does not match {mean.shape}")

        pre_squash = mean + exp(log_std) * noise
        gaussian = (log_std * -1.0 - HALF_LOG_TWO_PI - 0.5 * noise**2).sum(axis=1)
        squash = ((LOG_TWO - pre_squash - softplus(pre_squash * -2.0)) * 2.0).sum(axis=1)
        action = clip(tanh(pre_squash), -ACTION_LIMIT, ACTION_LIMIT)
        return PolicySample(action=action, log_prob=gaussian - squash, pre_squash=pre_squash)

    def sample_actions(self, states: np.ndarray, rng: Rng) -> Tuple[np.ndarray, np.ndarray]:
        """Graph-free (actions, log_probs) for rollouts and targets."""
        sample = self.sample(states, rng, frozen=True)
        return sample.action.values, sample.log_prob.values

    def act(self, observation: np.ndarray) -> np.ndarray:
        """Deterministic evaluation action tanh(mean)."""
        mean, _ = self.distribution(np.asarray(observation).reshape(1, -1), frozen=True)
        return np.clip(np.tanh(mean.values[0]), -ACTION_LIMIT, ACTION_LIMIT)


class RandomPolicy:
    """Uniform actions on the box; the no-learning baseline."""

    def __init__(self, action_size: int, rng: Rng):
        self.action_size = action_size
        self.rng = rng

    def act(self, observation: np.ndarray) -> np.ndarray:
        return self.rng.uniform(-1.0, 1.0, self.action_size)


def _weighted_objective(
    states: np.ndarray,
    weights: np.ndarray,
    policy: GaussianPolicy,
    critics: CriticPair,
    rng: Optional[Rng],
    noise: Optional[np.ndarray],
    use_upper: bool,
) -> Tensor:
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    if weights.size != len(states):
        raise ShapeError(f"{weights.size} weights for a batch of {len(states)}")
    sample = policy.sample(states, rng, noise=noise)
    bounds = critics.bounds(states, sample.action)
    value = bounds.upper if use_upper else bounds.lower
    return ((value - sample.log_prob * policy.alpha) * weights).sum()


def target_policy_objective(
    states: np.ndarray,
    weights: np.ndarray,
    policy: GaussianPolicy,
    critics: CriticPair,
    rng: Optional[Rng] = None,
    noise: Optional[np.ndarray] = None,
) -> Tensor:
    """
    sum_b w_b (Q_LB(s_b, a_b) - alpha log pi_T(a_b|s_b)), a_b = f(s_b, eps_b).

    To be maximized. Critic weights are frozen; the gradient reaches the
    policy through the reparameterized action and its log-probability.

    Raises:
        ShapeError: If weights and batch differ in length
    """
    return _weighted_objective(states, weights, policy, critics, rng, noise, use_upper=False)


def explore_policy_objective(
    states: np.ndarray,
    weights: np.ndarray,
    policy: GaussianPolicy,
    critics: CriticPair,
    rng: Optional[Rng] = None,
    noise: Optional[np.ndarray] = None,
) -> Tensor:
    """Same as target_policy_objective with Q_UB in place of Q_LB."""
    return _weighted_objective(states, weights, policy, critics, rng, noise, use_upper=True)


class SoftmaxTabularPolicy:
    """One logit per (s, a); pi(.|s) = softmax(logits[s])."""

    def __init__(self, logits: np.ndarray):
        self.logits = np.asarray(logits, dtype=np.float64)
        if self.logits.ndim != 2:
            raise ShapeError(f"Logits must be (nS, nA), got {self.logits.shape}")

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "SoftmaxTabularPolicy":
        return cls(np.zeros((n_states, n_actions)))

    def probabilities(self) -> np.ndarray:
        shifted = self.logits - self.logits.max(axis=1, keepdims=True)
        weights = np.exp(shifted)
        return weights / weights.sum(axis=1, keepdims=True)

    def log_probabilities(self) -> np.ndarray:
        shifted = self.logits - self.logits.max(axis=1, keepdims=True)
        return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))

    def state_objectives(self, q_table: np.ndarray, alpha: float) -> np.ndarray:
        """J_s = sum_a pi(a|s) (Q(s, a) - alpha log pi(a|s)) per state."""
        probs = self.probabilities()
        return (probs * (q_table - alpha * self.log_probabilities())).sum(axis=1)

    def state_gradients(self, q_table: np.ndarray, alpha: float) -> np.ndarray:
        """
        d J_s / d logits[s, k] = pi_k (f_k - J_s), f = Q - alpha log pi.

        Row s holds the gradient of J_s; J_s depends on no other row.
        """
        probs = self.probabilities()
        shaped = q_table - alpha * self.log_probabilities()
        objective = (probs * shaped).sum(axis=1, keepdims=True)
        return probs * (shaped - objective)


class TabularActionPolicy:
    """
    Discrete policy table seen through TabularEnv's continuous action bins.

    Emits bin-centre actions so a fixed tabular policy can drive the
    Gaussian-facing code paths (DICE Bellman targets, rollouts).
    """

    def __init__(self, probabilities: np.ndarray):
        self.table = np.asarray(probabilities, dtype=np.float64)
        self.n_actions = self.table.shape[1]

    def action_value(self, index: int) -> float:
        return -1.0 + (2 * index + 1) / self.n_actions

    def sample_actions(self, states: np.ndarray, rng: Rng) -> Tuple[np.ndarray, np.ndarray]:
        """(bin-centre actions, log-probabilities) for one-hot states."""
        indices = np.argmax(states, axis=1)
        chosen = np.array([rng.categorical(self.table[i]) for i in indices], dtype=int)
        actions = np.array([[self.action_value(k)] for k in chosen])
        with np.errstate(divide="ignore"):
            log_probs = np.log(self.table[indices, chosen])
        return actions, log_probs


CHECKPOINT_META = "__meta__"


def save_checkpoint(policy: GaussianPolicy, path: str) -> Path:
    """
    Write policy parameters as named float64 arrays (npz container).

    Architecture metadata rides along under the "__meta__." prefix.
    """
    checkpoint_path = Path(path)
    checkpoint_path.parent.mkdir(parents=True, exist_ok=True)
    arrays: Dict[str, np.ndarray] = dict(policy.network.state_dict())
    arrays[f"{CHECKPOINT_META}.sizes"] = np.array(
        [policy.observation_size, policy.action_size, *policy.hidden_sizes], dtype=np.float64
    )
    arrays[f"{CHECKPOINT_META}.alpha"] = np.array([policy.alpha])
    with open(checkpoint_path, "wb") as handle:
        np.savez(handle, **arrays)
    logger.info(f"Checkpoint saved: {checkpoint_path}")
    return checkpoint_path


def load_checkpoint(path: str) -> GaussianPolicy:
    """
    Rebuild a GaussianPolicy written by save_checkpoint.

    Raises:
        FileNotFoundError: If the file is missing
        ValueError: If metadata is missing or shapes do not match
    """
    checkpoint_path = Path(path)
    if not checkpoint_path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    with np.load(checkpoint_path) as data:
        arrays = {key: data[key] for key in data.files}

    sizes_key = f"{CHECKPOINT_META}.sizes"
    if sizes_key not in arrays:
        raise ValueError(f"Not a policy checkpoint: {path}")
    sizes = [int(v) for v in arrays.pop(sizes_key)]
    alpha = float(arrays.pop(f"{CHECKPOINT_META}.alpha", np.array([0.2]))[0])
    name = next(iter(arrays)).split(".")[0]

    policy = GaussianPolicy(sizes[0], sizes[1], sizes[2:], Rng(0), alpha=alpha, name=name)
    policy.network.load_state_dict(arrays)
    logger.info(f"Checkpoint loaded: {checkpoint_path}")
    return policy
