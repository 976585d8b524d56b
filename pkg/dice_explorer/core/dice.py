"""
Neural estimate of the distribution correction ratio zeta(s, a) ~ d^pi / d^D.

Three players share one minibatch and are updated in turn, each with the
others detached:

    L_nu     = mean(zeta * |B nu - nu|) + alpha_nu * mean(g(nu))
    L_zeta   = alpha_zeta * mean(g(zeta)) - mean(zeta * (|B nu - nu| - lambda))
    L_lambda = lambda * (1 - mean(zeta))

with B nu(s, a) = alpha_r * r + gamma * nu'(s', a'), a' ~ pi_T(.|s'),
g(x) = |x|^m / m and zeta = zeta_raw^2 >= 0. There is no initial-state
term. Per-batch weights come from zeta^(1/T) normalized to sum 1.

Without the initial-state term every constant zeta with mean 1 is a
fixed point once nu fits its own target, so the learned ratio carries no
information about pi. DiceConfig.unbiased restores the consistent
objective: L_nu gains (1 - gamma) * mean(nu(s0, a0)) over initial states
with a0 ~ pi_T, and B nu differentiates through the live nu(s', a')
instead of nu'. Its saddle point satisfies the flow equation
d^D zeta = (1 - gamma) rho0 pi + gamma P^T (d^D zeta) up to the alpha_nu
penalty, so alpha_nu should be small in that mode.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from dice_explorer.core.autodiff import Tensor, as_tensor, backward, concat
from dice_explorer.core.critics import soft_update
from dice_explorer.core.errors import ConfigError, NonFiniteError, ShapeError
from dice_explorer.core.networks import Mlp
from dice_explorer.core.optim import Adam
from dice_explorer.core.replay_buffer import Batch
from dice_explorer.core.rng import Rng

logger = logging.getLogger(__name__)


@dataclass
class DiceConfig:
    learning_rate: float = 0.0001
    temperature: float = 3.0
    alpha_nu: float = 1.0
    alpha_zeta: float = 1.0
    alpha_r: float = 1.0
    exponent: float = 1.5
    gamma: float = 0.99
    tau: float = 0.005
    hidden_sizes: List[int] = field(default_factory=lambda: [64, 64])
    # initial-state term and live next-state nu; needs initial states per update
    unbiased: bool = False

    def __post_init__(self):
        if self.alpha_nu <= 0 or self.alpha_zeta <= 0:
            raise ConfigError("alpha_nu and alpha_zeta must both be > 0")
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be > 0, got {self.temperature}")
        if self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.exponent < 1:
            raise ConfigError(f"exponent must be >= 1, got {self.exponent}")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"tau must be in (0, 1], got {self.tau}")


@dataclass
class DiceDiagnostics:
    loss_nu: float
    loss_zeta: float
    loss_lambda: float
    lam: float
    mean_zeta: float

    def as_dict(self) -> Dict[str, Any]:
        return {
            "loss_nu": self.loss_nu,
            "loss_zeta": self.loss_zeta,
            "loss_lambda": self.loss_lambda,
            "lambda": self.lam,
            "mean_zeta": self.mean_zeta,
        }


def _regularizer(values: Tensor, exponent: float) -> Tensor:
    """mean(|x|^m / m)."""
    return (abs(values) ** exponent).mean() * (1.0 / exponent)


def loss_nu(
    nu_values: Tensor,
    bellman_values,
    zeta_values: np.ndarray,
    alpha_nu: float,
    exponent: float,
    initial_values: Optional[Tensor] = None,
    gamma: float = 0.99,
) -> Tensor:
    """
    mean(zeta * |B nu - nu|) + alpha_nu * mean(|nu|^m / m); zeta is a constant.

    bellman_values may be a graph-attached tensor, in which case the gradient
    also flows through B nu. With initial_values (nu at initial state-action
    pairs) the term (1 - gamma) * mean(initial_values) is added.
    """
    nu_values = as_tensor(nu_values).reshape((-1,))
    zeta_values = np.asarray(zeta_values, dtype=np.float64).reshape(-1)
    residual = abs(as_tensor(bellman_values).reshape((-1,)) - nu_values)
    loss = (residual * zeta_values).mean() + _regularizer(nu_values, exponent) * alpha_nu
    if initial_values is not None:
        loss = loss + as_tensor(initial_values).mean() * (1.0 - gamma)
    return loss


def loss_zeta(
    zeta_values: Tensor,
    residuals: np.ndarray,
    lam: float,
    alpha_zeta: float,
    exponent: float,
) -> Tensor:
    """alpha_zeta * mean(zeta^m / m) - mean(zeta * (|B nu - nu| - lambda)); residuals constant."""
    zeta_values = as_tensor(zeta_values).reshape((-1,))
    advantage = np.asarray(residuals, dtype=np.float64).reshape(-1) - float(lam)
    return _regularizer(zeta_values, exponent) * alpha_zeta - (zeta_values * advantage).mean()


def loss_lambda(lam: Tensor, zeta_values: np.ndarray) -> Tensor:
    """lambda * (1 - mean(zeta)); zeta is a constant."""
    return as_tensor(lam).sum() * (1.0 - float(np.mean(zeta_values)))


def normalize_zeta(zeta_values: np.ndarray, temperature: float) -> np.ndarray:
    """
    Self-normalized weights zeta^(1/T) / sum(zeta^(1/T)).

    Computed in log space. An all-zero batch falls back to uniform weights.

    Raises:
        ValueError: If temperature <= 0 or any zeta is negative
    """
    if temperature <= 0:
        raise ValueError(f"Temperature must be > 0, got {temperature}")
    zeta_values = np.asarray(zeta_values, dtype=np.float64).reshape(-1)
    if zeta_values.size == 0:
        raise ShapeError("Cannot normalize an empty batch")
    if np.any(zeta_values < 0):
        raise ValueError("zeta values must be non-negative")
    if not np.any(zeta_values > 0):
        logger.warning("All zeta values are zero; falling back to uniform weights")
        return np.full(zeta_values.size, 1.0 / zeta_values.size)

    with np.errstate(divide="ignore"):
        log_weights = np.log(zeta_values) / temperature
    weights = np.exp(log_weights - log_weights.max())
    return weights / weights.sum()


def dual_estimate(weights: np.ndarray, rewards: np.ndarray) -> float:
    """sum_b w_b r_b with weights summing to 1."""
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    rewards = np.asarray(rewards, dtype=np.float64).reshape(-1)
    if weights.size != rewards.size:
        raise ShapeError(f"{weights.size} weights for {rewards.size} rewards")
    return float(weights @ rewards)


class DiceState:
    """nu, its target nu', zeta_raw and the multiplier lambda."""

    def __init__(
        self, observation_size: int, action_size: int, config: DiceConfig, rng: Rng
    ):
        self.config = config
        input_size = observation_size + action_size
        self.nu = Mlp(input_size, config.hidden_sizes, 1, rng.spawn("nu"), name="nu")
        self.nu_target = self.nu.clone("nu_target")
        self.zeta_raw = Mlp(input_size, config.hidden_sizes, 1, rng.spawn("zeta"), name="zeta")
        self.lam = Tensor(0.0, requires_grad=True, name="lambda")

    @staticmethod
    def _inputs(states, actions) -> Tensor:
        return concat([as_tensor(states), as_tensor(actions)], axis=1)

    def nu_values(self, states, actions, frozen: bool = False) -> Tensor:
        return self.nu(self._inputs(states, actions), frozen=frozen).reshape((-1,))

    def zeta(self, states, actions, frozen: bool = False) -> Tensor:
        """zeta(s, a) = zeta_raw(s, a)^2, shape (batch,)."""
        raw = self.zeta_raw(self._inputs(states, actions), frozen=frozen).reshape((-1,))
        return raw * raw

    def bellman_nu(self, batch: Batch, policy, rng: Rng) -> np.ndarray:
        """alpha_r * r + gamma * nu'(s', a') with fresh a' ~ pi_T(.|s'); detached."""
        next_actions, _ = policy.sample_actions(batch.next_states, rng)
        inputs = np.concatenate([batch.next_states, next_actions], axis=1)
        next_nu = self.nu_target(inputs, frozen=True).values[:, 0]
        return self.config.alpha_r * batch.rewards + self.config.gamma * next_nu

    def bellman_nu_live(self, batch: Batch, next_actions: np.ndarray, frozen: bool = False) -> Tensor:
        """alpha_r * r + gamma * nu(s', a') through the live nu network."""
        next_nu = self.nu_values(batch.next_states, next_actions, frozen=frozen)
        return next_nu * self.config.gamma + self.config.alpha_r * batch.rewards

    def weights(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Self-normalized weights for a batch at the configured temperature."""
        zeta_values = self.zeta(states, actions, frozen=True).values
        return normalize_zeta(zeta_values, self.config.temperature)

    def soft_update_target(self) -> None:
        soft_update(self.nu_target.parameters(), self.nu.parameters(), self.config.tau)


class DiceOptimizers:
    """Independent Adam states for nu, zeta and lambda at one shared rate."""

    def __init__(self, state: DiceState, learning_rate: Optional[float] = None):
        rate = state.config.learning_rate if learning_rate is None else learning_rate
        self.nu = Adam(state.nu.parameters(), rate)
        self.zeta = Adam(state.zeta_raw.parameters(), rate)
        self.lam = Adam([state.lam], rate)


def _checked(loss: Tensor, name: str) -> Dict[Tensor, np.ndarray]:
    if not np.isfinite(loss.item()):
        raise NonFiniteError(f"{name} is not finite", loss_name=name)
    try:
        return backward(loss)
    except NonFiniteError as error:
        raise NonFiniteError(str(error), loss_name=name) from error


def dice_update(
    batch: Batch,
    state: DiceState,
    optimizers: DiceOptimizers,
    policy,
    rng: Rng,
    initial_states: Optional[np.ndarray] = None,
) -> DiceDiagnostics:
    """
    One Adam step on nu, then zeta, then lambda, on the same batch.

    Each loss sees the latest values of the other players, detached. The
    nu' target is not touched here.

    Args:
        initial_states: Observations drawn from the initial distribution;
            required when the config is unbiased, ignored otherwise

    Raises:
        ValueError: If the batch is empty, or initial states are missing
            in unbiased mode
        NonFiniteError: If a loss is not finite (loss_name is set)
    """
    if len(batch) == 0:
        raise ValueError("DICE update needs a non-empty batch")
    config = state.config
    initial_nu = None
    if config.unbiased:
        if initial_states is None or len(initial_states) == 0:
            raise ValueError("Unbiased DICE update needs initial states")
        next_actions, _ = policy.sample_actions(batch.next_states, rng)
        initial_actions, _ = policy.sample_actions(initial_states, rng)
        bellman = state.bellman_nu_live(batch, next_actions)
        initial_nu = state.nu_values(initial_states, initial_actions)
    else:
        bellman = state.bellman_nu(batch, policy, rng)

    try:
        zeta_now = state.zeta(batch.states, batch.actions, frozen=True).values
        nu_loss = loss_nu(
            state.nu_values(batch.states, batch.actions),
            bellman,
            zeta_now,
            config.alpha_nu,
            config.exponent,
            initial_values=initial_nu,
            gamma=config.gamma,
        )
        optimizers.nu.step(_checked(nu_loss, "loss_nu"))

        if config.unbiased:
            bellman = state.bellman_nu_live(batch, next_actions, frozen=True).values
        nu_now = state.nu_values(batch.states, batch.actions, frozen=True).values
        zeta_loss = loss_zeta(
            state.zeta(batch.states, batch.actions),
            np.abs(bellman - nu_now),
            state.lam.item(),
            config.alpha_zeta,
            config.exponent,
        )
        optimizers.zeta.step(_checked(zeta_loss, "loss_zeta"))

        zeta_now = state.zeta(batch.states, batch.actions, frozen=True).values
        lambda_loss = loss_lambda(state.lam, zeta_now)
        optimizers.lam.step(_checked(lambda_loss, "loss_lambda"))
    except NonFiniteError as error:
        if error.loss_name is None:
            raise NonFiniteError(str(error), loss_name="dice") from error
        raise

    diagnostics = DiceDiagnostics(
        loss_nu=nu_loss.item(),
        loss_zeta=zeta_loss.item(),
        loss_lambda=lambda_loss.item(),
        lam=state.lam.item(),
        mean_zeta=float(np.mean(zeta_now)),
    )
    logger.debug(f"DICE update: {diagnostics}")
    return diagnostics
