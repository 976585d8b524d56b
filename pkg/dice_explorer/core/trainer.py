"""
Training loop: optimistic exploration with explicit distribution correction.

Per environment step the behavior policy acts once; after warm-up each
training iteration runs, in order:

    sample minibatch -> DICE update -> normalize weights
    -> update target policy (lower bound) -> update exploration policy
    (upper bound) -> update critics -> soft-update Q'1, Q'2 and nu'

Ablation modes decide which policy acts and where the weights apply.
"""

import logging
import math
from dataclasses import dataclass, field, fields
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from dice_explorer.core.autodiff import backward
from dice_explorer.core.critics import CriticPair, bellman_target, critic_loss_corrected
from dice_explorer.core.dice import (
    DiceConfig,
    DiceDiagnostics,
    DiceOptimizers,
    DiceState,
    dice_update,
    dual_estimate,
)
from dice_explorer.core.envs import Environment, make_env
from dice_explorer.core.errors import ConfigError, NonFiniteError, TrainingDivergedError
from dice_explorer.core.optim import Adam
from dice_explorer.core.policies import (
    GaussianPolicy,
    explore_policy_objective,
    target_policy_objective,
)
from dice_explorer.core.replay_buffer import Batch, ReplayBuffer, Transition
from dice_explorer.core.rng import Rng
from dice_explorer.core.run_log import LogRow, TrainingLog

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModeSpec:
    behavior: str  # "explore" or "target"
    uses_dice: bool
    weight_policies: bool
    weight_critics: bool
    trains_explore: bool


MODES: Dict[str, ModeSpec] = {
    "ours": ModeSpec("explore", True, True, True, True),
    "no_dice": ModeSpec("explore", False, False, False, True),
    "only_weight_policies": ModeSpec("explore", True, True, False, True),
    "only_weight_q": ModeSpec("explore", True, False, True, True),
    "sac_dice": ModeSpec("target", True, True, True, False),
    "sac": ModeSpec("target", False, False, False, False),
}

PROFILES: Dict[str, Dict[str, Any]] = {
    "desk": {"hidden_sizes": [64, 64], "buffer_capacity": 100000},
    "full": {"hidden_sizes": [256, 256], "buffer_capacity": 1000000},
}


@dataclass
class TrainingConfig:
    env: str = "point-mass"
    seed: int = 0
    mode: str = "ours"
    total_steps: int = 30000
    warmup_steps: int = 1000
    batch_size: int = 256
    buffer_capacity: int = 100000
    gamma: float = 0.99
    tau: float = 0.005
    learning_rate: float = 0.0003
    alpha: float = 0.2
    beta_ub: float = 2.0
    beta_lb: float = 2.5
    hidden_sizes: List[int] = field(default_factory=lambda: [64, 64])
    gradient_steps: int = 1
    target_update_interval: int = 1
    eval_interval: int = 1000
    eval_episodes: int = 10
    dice: DiceConfig = field(default_factory=DiceConfig)
    tabular: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"Unknown mode: {self.mode}. Available: {', '.join(MODES)}")
        for name in ("learning_rate", "tau", "gamma"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("batch_size", "buffer_capacity", "gradient_steps",
                     "target_update_interval", "eval_interval", "eval_episodes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.total_steps < 0 or self.warmup_steps < 0:
            raise ConfigError("total_steps and warmup_steps must be >= 0")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma must be in (0, 1), got {self.gamma}")
        if self.tau > 1.0:
            raise ConfigError(f"tau must be in (0, 1], got {self.tau}")
        if self.beta_ub < 0 or self.beta_lb < 0:
            raise ConfigError("beta_ub and beta_lb must be >= 0")
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")

    @property
    def spec(self) -> ModeSpec:
        return MODES[self.mode]

    @classmethod
    def from_dict(cls, config: Dict[str, Any]) -> "TrainingConfig":
        """
        Build from a merged config dictionary (sections profile, training,
        dice, tabular). Profile values fill hidden_sizes and buffer_capacity
        unless the training section sets them.

        Raises:
            ConfigError: Unknown profile, unknown key or invalid value
        """
        profile_name = config.get("profile", "desk")
        if profile_name not in PROFILES:
            raise ConfigError(f"Unknown profile: {profile_name}. Available: {', '.join(PROFILES)}")
        profile = PROFILES[profile_name]

        training = dict(config.get("training") or {})
        known = {f.name for f in fields(cls)} - {"dice", "tabular"}
        unknown = set(training) - known
        if unknown:
            raise ConfigError(f"Unknown training settings: {', '.join(sorted(unknown))}")
        for key, value in profile.items():
            if training.get(key) is None:
                training[key] = value

        dice_settings = dict(config.get("dice") or {})
        if dice_settings.get("hidden_sizes") is None:
            dice_settings["hidden_sizes"] = training["hidden_sizes"]
        dice_settings.setdefault("tau", training.get("tau", 0.005))
        known_dice = {f.name for f in fields(DiceConfig)}
        unknown = set(dice_settings) - known_dice
        if unknown:
            raise ConfigError(f"Unknown dice settings: {', '.join(sorted(unknown))}")

        try:
            training = {key: _coerce(cls, key, value) for key, value in training.items()}
            dice = DiceConfig(**{key: _coerce(DiceConfig, key, value) for key, value in dice_settings.items()})
        except (TypeError, ValueError) as error:
            if isinstance(error, ConfigError):
                raise
            raise ConfigError(f"Invalid configuration value: {error}") from error
        return cls(dice=dice, tabular=dict(config.get("tabular") or {}), **training)


def _coerce(owner, key: str, value: Any) -> Any:
    """Convert YAML/CLI strings to the dataclass field's type."""
    kind = next(f.type for f in fields(owner) if f.name == key)
    if value is None:
        return value
    if kind is bool:
        if isinstance(value, str):
            if value.strip().lower() not in ("true", "false", "yes", "no", "1", "0"):
                raise ConfigError(f"{key} must be true or false, got {value!r}")
            return value.strip().lower() in ("true", "yes", "1")
        return bool(value)
    if kind is int:
        return int(float(value))
    if kind is float:
        return float(value)
    if kind == List[int]:
        if isinstance(value, str):
            value = [part for part in value.replace("[", "").replace("]", "").split(",") if part.strip()]
        return [int(v) for v in value]
    return value


@dataclass
class EvaluationResult:
    average_return: float
    average_reward: float


def evaluate(policy, env: Environment, episodes: int, rng: Rng) -> EvaluationResult:
    """
    Roll out policy.act (deterministic for Gaussian policies) for whole episodes.

    Returns:
        Average undiscounted episode return and average per-step reward

    Raises:
        ValueError: If episodes < 1
    """
    if episodes < 1:
        raise ValueError(f"Need at least one episode, got {episodes}")
    total_return = 0.0
    total_steps = 0
    for _ in range(episodes):
        observation = env.reset(rng)
        while True:
            result = env.step(policy.act(observation), rng)
            total_return += result.reward
            total_steps += 1
            observation = result.observation
            if result.done:
                break
    return EvaluationResult(total_return / episodes, total_return / total_steps)


Listener = Callable[..., None]


class Trainer:
    """
    Owns every network, optimizer, buffer and random stream of one run.

    Each consumer draws from its own named child stream of the seed, so a
    component that is skipped (DICE in no_dice mode) never shifts the
    draws of the others.

    Args:
        config: Validated run configuration
        dice: Optional pre-built DICE state (created from config otherwise)
        listener: Called as listener(event) after every update and as
            listener("weights", objective=..., weights=...) before each
            weighted objective
    """

    def __init__(
        self,
        config: TrainingConfig,
        dice: Optional[DiceState] = None,
        listener: Optional[Listener] = None,
    ):
        self.config = config
        self.spec = config.spec
        self.listener = listener

        root = Rng(config.seed)
        self.env_rng = root.spawn("env")
        self.action_rng = root.spawn("action")
        self.buffer_rng = root.spawn("buffer")
        self.update_rng = root.spawn("update")
        self.dice_rng = root.spawn("dice")
        self.eval_rng = root.spawn("eval")
        init_rng = root.spawn("init")

        env_settings = {"gamma": config.gamma, **config.tabular}
        self.env = make_env(config.env, env_settings)
        self.eval_env = make_env(config.env, env_settings)
        obs_size, act_size = self.env.observation_size, self.env.action_size

        self.target_policy = GaussianPolicy(
            obs_size, act_size, config.hidden_sizes, init_rng.spawn("target_policy"),
            alpha=config.alpha, name="target_policy",
        )
        self.explore_policy = GaussianPolicy(
            obs_size, act_size, config.hidden_sizes, init_rng.spawn("explore_policy"),
            alpha=config.alpha, name="explore_policy",
        )
        self.critics = CriticPair(
            obs_size, act_size, config.hidden_sizes, init_rng.spawn("critics"),
            beta_ub=config.beta_ub, beta_lb=config.beta_lb, tau=config.tau,
        )
        self.target_optimizer = Adam(self.target_policy.parameters(), config.learning_rate)
        self.explore_optimizer = Adam(self.explore_policy.parameters(), config.learning_rate)
        self.critic_optimizer = Adam(self.critics.parameters(), config.learning_rate)
        self.buffer = ReplayBuffer(config.buffer_capacity, obs_size, act_size)

        self.dice = dice
        self.dice_optimizers: Optional[DiceOptimizers] = None
        if self.spec.uses_dice:
            if self.dice is None:
                self.dice = DiceState(obs_size, act_size, config.dice, init_rng.spawn("dice"))
            self.dice_optimizers = DiceOptimizers(self.dice)

        self.behavior_policy = self.explore_policy if self.spec.behavior == "explore" else self.target_policy
        self.initial_observations: List[np.ndarray] = []
        self.last_diagnostics: Optional[DiceDiagnostics] = None
        self.last_row: Dict[str, Any] = {}

    def _emit(self, event: str, **details) -> None:
        if self.listener is not None:
            self.listener(event, **details)

    def _weights(self, batch: Batch) -> np.ndarray:
        if not self.spec.uses_dice:
            return batch.uniform_weights()
        return self.dice.weights(batch.states, batch.actions)

    def _initial_batch(self) -> Optional[np.ndarray]:
        """Reset observations seen so far, resampled to batch size (unbiased DICE only)."""
        if not self.config.dice.unbiased or not self.initial_observations:
            return None
        picks = self.dice_rng.integers(0, len(self.initial_observations), self.config.batch_size)
        return np.stack(self.initial_observations)[picks]

    def train_iteration(self, step: int) -> None:
        """One pass of the update sequence on a fresh minibatch."""
        config = self.config
        batch = self.buffer.sample(config.batch_size, self.buffer_rng)
        self._emit("sample")

        stage = "loss_dice"
        try:
            if self.spec.uses_dice:
                self.last_diagnostics = dice_update(
                    batch, self.dice, self.dice_optimizers, self.target_policy, self.dice_rng,
                    initial_states=self._initial_batch(),
                )
                self._emit("dice_update")
            weights = self._weights(batch)
            self._emit("normalize")
            uniform = batch.uniform_weights()
            policy_weights = weights if self.spec.weight_policies else uniform
            critic_weights = weights if self.spec.weight_critics else uniform

            stage = "loss_target_policy"
            self._emit("weights", objective="target_policy", weights=policy_weights)
            objective = target_policy_objective(
                batch.states, policy_weights, self.target_policy, self.critics, self.update_rng
            )
            self.target_optimizer.step(backward(objective * -1.0))
            self._emit("update_target_policy")

            if self.spec.trains_explore:
                stage = "loss_explore_policy"
                self._emit("weights", objective="explore_policy", weights=policy_weights)
                objective = explore_policy_objective(
                    batch.states, policy_weights, self.explore_policy, self.critics, self.update_rng
                )
                self.explore_optimizer.step(backward(objective * -1.0))
                self._emit("update_explore_policy")

            stage = "loss_critic"
            targets = bellman_target(
                batch, self.critics, self.target_policy, config.alpha, config.gamma, self.update_rng
            )
            self._emit("weights", objective="critics", weights=critic_weights)
            q1, q2 = self.critics.values(batch.states, batch.actions)
            loss = critic_loss_corrected(q1, targets, critic_weights) + critic_loss_corrected(
                q2, targets, critic_weights
            )
            self.critic_optimizer.step(backward(loss))
            self._emit("update_critics")
        except NonFiniteError as error:
            raise TrainingDivergedError(error.loss_name or stage, step, self.last_row) from error

        if step % config.target_update_interval == 0:
            self.critics.soft_update_targets()
            if self.spec.uses_dice:
                self.dice.soft_update_target()
            self._emit("soft_update")

    def evaluation_row(self, step: int) -> LogRow:
        """Evaluate both policies and the dual estimate on a fresh buffer batch."""
        config = self.config
        target = evaluate(self.target_policy, self.eval_env, config.eval_episodes, self.eval_rng)
        explore_return = math.nan
        if self.spec.trains_explore:
            explore_return = evaluate(
                self.explore_policy, self.eval_env, config.eval_episodes, self.eval_rng
            ).average_return

        batch_reward = dual = math.nan
        if len(self.buffer) > 0:
            batch = self.buffer.sample(config.batch_size, self.eval_rng)
            batch_reward = float(np.mean(batch.rewards))
            dual = dual_estimate(self._weights(batch), batch.rewards)
            if self.spec.uses_dice:
                raw = self.dice.zeta(batch.states, batch.actions, frozen=True).values
                logger.debug(f"Unnormalized dual estimate at step {step}: {np.mean(raw * batch.rewards):.6f}")

        diagnostics = self.last_diagnostics
        return LogRow(
            step=step,
            return_target=target.average_return,
            return_explore=explore_return,
            dual_estimate=dual,
            batch_reward=batch_reward,
            onpolicy_reward=target.average_reward,
            loss_nu=diagnostics.loss_nu if diagnostics else math.nan,
            loss_zeta=diagnostics.loss_zeta if diagnostics else math.nan,
            loss_lambda=diagnostics.loss_lambda if diagnostics else math.nan,
            lam=diagnostics.lam if diagnostics else math.nan,
            mean_zeta=diagnostics.mean_zeta if diagnostics else math.nan,
        )

    def train(self) -> TrainingLog:
        """
        Run the configured number of environment steps.

        Returns:
            TrainingLog with one row per evaluation interval

        Raises:
            TrainingDivergedError: A loss became non-finite
        """
        config = self.config
        log = TrainingLog()
        logger.info(
            f"Training {config.mode} on {config.env}: {config.total_steps} steps, seed {config.seed}"
        )
        observation = self.env.reset(self.env_rng) if config.total_steps > 0 else None
        if observation is not None:
            self.initial_observations.append(observation)
        for step in range(1, config.total_steps + 1):
            if step <= config.warmup_steps:
                action = self.action_rng.uniform(-1.0, 1.0, self.env.action_size)
            else:
                actions, _ = self.behavior_policy.sample_actions(observation[None, :], self.action_rng)
                action = actions[0]
            result = self.env.step(action, self.env_rng)
            self.buffer.push(
                Transition(observation, action, result.reward, result.observation, result.terminated)
            )
            self._emit("rollout")
            if result.done:
                observation = self.env.reset(self.env_rng)
                self.initial_observations.append(observation)
            else:
                observation = result.observation

            if step > config.warmup_steps:
                for _ in range(config.gradient_steps):
                    self.train_iteration(step)

            if step % config.eval_interval == 0:
                row = self.evaluation_row(step)
                log.append(row)
                self.last_row = {name: getattr(row, name) for name in row.__dataclass_fields__}
                logger.info(
                    f"step {step}: return_target={row.return_target:.3f} "
                    f"dual={row.dual_estimate:.4f} batch={row.batch_reward:.4f} "
                    f"onpolicy={row.onpolicy_reward:.4f}"
                )
        logger.info(f"Training finished: {len(log)} evaluation rows")
        return log
