"""
Built-in environments: finite tabular MDPs and two continuous-control toys.

All environments are stateful (reset, then step) and expose actions as a
box [-1, 1]^action_size; out-of-box actions are clipped before dynamics.
Reaching the episode horizon sets `truncated`, never `terminated`: a time
limit is not a terminal state and must not zero the bootstrap.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from dice_explorer.core.errors import ConfigError, ShapeError
from dice_explorer.core.rng import Rng

logger = logging.getLogger(__name__)

PROBABILITY_TOLERANCE = 1e-12


@dataclass
class TabularMDP:
    """
    Finite MDP (S, A, R, T, gamma, rho0).

    Attributes:
        transition: T[s, a, s'] = P(s' | s, a)
        reward: R[s, a]
        initial: rho0[s]
        gamma: Discount in (0, 1)
    """

    transition: np.ndarray
    reward: np.ndarray
    initial: np.ndarray
    gamma: float = 0.99

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=np.float64)
        self.reward = np.asarray(self.reward, dtype=np.float64)
        self.initial = np.asarray(self.initial, dtype=np.float64)

        if self.transition.ndim != 3 or self.transition.shape[0] != self.transition.shape[2]:
            raise ShapeError(f"Transition table must be (nS, nA, nS), got {self.transition.shape}")
        n_states, n_actions, _ = self.transition.shape
        if self.reward.shape != (n_states, n_actions):
            raise ShapeError(f"Reward table must be ({n_states}, {n_actions}), got {self.reward.shape}")
        if self.initial.shape != (n_states,):
            raise ShapeError(f"Initial distribution must have {n_states} entries")
        if np.any(self.transition < 0) or np.any(self.initial < 0):
            raise ValueError("Probabilities must be non-negative")
        row_error = np.max(np.abs(self.transition.sum(axis=2) - 1.0))
        if row_error > PROBABILITY_TOLERANCE:
            raise ValueError(f"Transition rows must sum to 1 (max error {row_error:.3e})")
        if abs(self.initial.sum() - 1.0) > PROBABILITY_TOLERANCE:
            raise ValueError("Initial distribution must sum to 1")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    def sample_initial(self, rng: Rng) -> int:
        return rng.categorical(self.initial)

    def sample_step(self, state: int, action: int, rng: Rng) -> Tuple[int, float]:
        """
        Draw s' ~ T(.|s, a) and return (s', R(s, a)).

        Raises:
            ValueError: If state or action is out of range
        """
        if not 0 <= state < self.n_states:
            raise ValueError(f"Invalid state index {state} (nS={self.n_states})")
        if not 0 <= action < self.n_actions:
            raise ValueError(f"Invalid action index {action} (nA={self.n_actions})")
        next_state = rng.categorical(self.transition[state, action])
        return next_state, float(self.reward[state, action])


def random_mdp(
    rng: Rng,
    n_states: int,
    n_actions: int,
    reward_scale: float = 1.0,
    gamma: float = 0.99,
    reward_offset: float = 0.0,
) -> TabularMDP:
    """
    Random MDP with normalized-uniform transition rows and initial distribution.

    Args:
        rng: Random source
        n_states: Number of states (>= 1)
        n_actions: Number of actions (>= 1)
        reward_scale: Rewards are uniform in [offset, offset + reward_scale]
        gamma: Discount
        reward_offset: Lower end of the reward range

    Returns:
        TabularMDP satisfying all table invariants
    """
    if n_states < 1 or n_actions < 1:
        raise ValueError(f"Need at least one state and action, got {n_states}x{n_actions}")
    raw = rng.uniform(size=(n_states, n_actions, n_states))
    transition = raw / raw.sum(axis=2, keepdims=True)
    reward = rng.uniform(reward_offset, reward_offset + reward_scale, (n_states, n_actions))
    initial = rng.uniform(size=n_states)
    initial = initial / initial.sum()
    return TabularMDP(transition, reward, initial, gamma)


def load_tabular_mdp(path: str, gamma: float = 0.99) -> TabularMDP:
    """
    Read an MDP from a plain-text table.

    Format, one row per line (blank lines and '#' comments ignored):
        s a s' prob reward      transition row
        init s prob             optional initial-state row

    R(s, a) is the probability-weighted reward over the rows of (s, a).
    Without init rows the initial distribution is uniform.

    Raises:
        FileNotFoundError: If the file is missing
        ValueError: If a row is malformed or the tables are invalid
    """
    table_path = Path(path)
    if not table_path.exists():
        raise FileNotFoundError(f"MDP table not found: {path}")

    rows = []
    initial_rows = []
    for line_number, line in enumerate(table_path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            if fields[0] == "init":
                if len(fields) != 3:
                    raise ValueError("expected 'init s prob'")
                initial_rows.append((int(fields[1]), float(fields[2])))
            else:
                if len(fields) != 5:
                    raise ValueError("expected 's a s' prob reward'")
                rows.append((int(fields[0]), int(fields[1]), int(fields[2]), float(fields[3]), float(fields[4])))
        except ValueError as error:
            raise ValueError(f"{path}:{line_number}: {error}") from error

    if not rows:
        raise ValueError(f"No transition rows in {path}")
    n_states = 1 + max(max(row[0], row[2]) for row in rows)
    n_actions = 1 + max(row[1] for row in rows)

    transition = np.zeros((n_states, n_actions, n_states))
    reward = np.zeros((n_states, n_actions))
    for state, action, next_state, prob, row_reward in rows:
        transition[state, action, next_state] += prob
        reward[state, action] += prob * row_reward

    if initial_rows:
        initial = np.zeros(n_states)
        for state, prob in initial_rows:
            initial[state] += prob
    else:
        initial = np.full(n_states, 1.0 / n_states)

    logger.info(f"Loaded tabular MDP {n_states}x{n_actions} from {path}")
    return TabularMDP(transition, reward, initial, gamma)


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    terminated: bool = False
    truncated: bool = False

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


class Environment:
    """Common surface of the built-in environments."""

    name = "environment"
    observation_size = 0
    action_size = 0

    def __init__(self, horizon: int):
        self.horizon = int(horizon)
        self.elapsed = 0

    def reset(self, rng: Rng) -> np.ndarray:
        self.elapsed = 0
        return self._reset(rng)

    def step(self, action: np.ndarray, rng: Rng) -> StepResult:
        action = np.asarray(action, dtype=np.float64).reshape(-1)
        if action.shape != (self.action_size,):
            raise ShapeError(f"{self.name}: expected action of size {self.action_size}, got {action.shape}")
        observation, reward = self._step(np.clip(action, -1.0, 1.0), rng)
        self.elapsed += 1
        return StepResult(observation, reward, truncated=self.elapsed >= self.horizon)

    def _reset(self, rng: Rng) -> np.ndarray:
        raise NotImplementedError

    def _step(self, action: np.ndarray, rng: Rng) -> Tuple[np.ndarray, float]:
        raise NotImplementedError


class TabularEnv(Environment):
    """
    A TabularMDP behind the continuous interface.

    Observations are one-hot states; the single action coordinate in [-1, 1]
    is split into nA equal bins.
    """

    name = "tabular"
    action_size = 1

    def __init__(self, mdp: TabularMDP, horizon: int = 100):
        super().__init__(horizon)
        self.mdp = mdp
        self.observation_size = mdp.n_states
        self.state = 0

    def action_index(self, action: np.ndarray) -> int:
        position = (float(np.clip(action[0], -1.0, 1.0)) + 1.0) / 2.0
        return min(int(position * self.mdp.n_actions), self.mdp.n_actions - 1)

    def action_value(self, index: int) -> np.ndarray:
        """Centre of the bin for a discrete action."""
        return np.array([-1.0 + (2 * index + 1) / self.mdp.n_actions])

    def one_hot(self, state: int) -> np.ndarray:
        observation = np.zeros(self.mdp.n_states)
        observation[state] = 1.0
        return observation

    def _reset(self, rng: Rng) -> np.ndarray:
        self.state = self.mdp.sample_initial(rng)
        return self.one_hot(self.state)

    def _step(self, action: np.ndarray, rng: Rng) -> Tuple[np.ndarray, float]:
        self.state, reward = self.mdp.sample_step(self.state, self.action_index(action), rng)
        return self.one_hot(self.state), reward


class PointMassEnv(Environment):
    """
    2-D double integrator reaching for a goal.

    State (x, y, vx, vy), action = acceleration in [-1, 1]^2. Semi-implicit
    Euler: v' = v + dt * a / mass, p' = p + dt * v'. Reward -||p' - goal||.
    Reset draws the position in [-0.1, 0.1]^2 with zero velocity.
    """

    name = "point-mass"
    observation_size = 4
    action_size = 2

    def __init__(
        self,
        horizon: int = 100,
        dt: float = 0.1,
        mass: float = 1.0,
        goal: Tuple[float, float] = (1.0, 1.0),
    ):
        super().__init__(horizon)
        self.dt = dt
        self.mass = mass
        self.goal = np.asarray(goal, dtype=np.float64)
        self.state = np.zeros(4)

    def _reset(self, rng: Rng) -> np.ndarray:
        self.state = np.concatenate([rng.uniform(-0.1, 0.1, 2), np.zeros(2)])
        return self.state.copy()

    def _step(self, action: np.ndarray, rng: Rng) -> Tuple[np.ndarray, float]:
        velocity = self.state[2:] + self.dt * action / self.mass
        position = self.state[:2] + self.dt * velocity
        self.state = np.concatenate([position, velocity])
        reward = -float(np.linalg.norm(position - self.goal))
        return self.state.copy(), reward


class PendulumEnv(Environment):
    """
    Torque-limited pendulum swing-up (angle 0 is upright).

    Observation (cos theta, sin theta, theta_dot); the action in [-1, 1] is
    scaled to max_torque. Reward -(theta^2 + 0.1 theta_dot^2 + 0.001 u^2)
    on the pre-step state, theta wrapped to [-pi, pi). Reset draws
    theta in [-pi, pi] and theta_dot in [-1, 1].
    """

    name = "pendulum"
    observation_size = 3
    action_size = 1

    def __init__(
        self,
        horizon: int = 200,
        dt: float = 0.05,
        max_torque: float = 2.0,
        max_speed: float = 8.0,
        gravity: float = 10.0,
        mass: float = 1.0,
        length: float = 1.0,
    ):
        super().__init__(horizon)
        self.dt = dt
        self.max_torque = max_torque
        self.max_speed = max_speed
        self.gravity = gravity
        self.mass = mass
        self.length = length
        self.theta = 0.0
        self.theta_dot = 0.0

    def observation(self) -> np.ndarray:
        return np.array([np.cos(self.theta), np.sin(self.theta), self.theta_dot])

    def _reset(self, rng: Rng) -> np.ndarray:
        self.theta = float(rng.uniform(-np.pi, np.pi))
        self.theta_dot = float(rng.uniform(-1.0, 1.0))
        return self.observation()

    def _step(self, action: np.ndarray, rng: Rng) -> Tuple[np.ndarray, float]:
        torque = float(action[0]) * self.max_torque
        angle = (self.theta + np.pi) % (2 * np.pi) - np.pi
        reward = -(angle**2 + 0.1 * self.theta_dot**2 + 0.001 * torque**2)

        acceleration = (
            3.0 * self.gravity / (2.0 * self.length) * np.sin(self.theta)
            + 3.0 / (self.mass * self.length**2) * torque
        )
        self.theta_dot = float(
            np.clip(self.theta_dot + acceleration * self.dt, -self.max_speed, self.max_speed)
        )
        self.theta = self.theta + self.theta_dot * self.dt
        return self.observation(), float(reward)


def _make_tabular(settings: Dict[str, Any]) -> TabularEnv:
    gamma = float(settings.get("gamma", 0.99))
    path = settings.get("path")
    if path:
        mdp = load_tabular_mdp(path, gamma=gamma)
    else:
        mdp = random_mdp(
            Rng(int(settings.get("seed", 0))).spawn("mdp"),
            int(settings.get("n_states", 5)),
            int(settings.get("n_actions", 2)),
            float(settings.get("reward_scale", 1.0)),
            gamma,
            float(settings.get("reward_offset", 0.0)),
        )
    return TabularEnv(mdp, horizon=int(settings.get("horizon", 100)))


ENVIRONMENTS: Dict[str, Callable[[Dict[str, Any]], Environment]] = {
    "point-mass": lambda settings: PointMassEnv(),
    "pendulum": lambda settings: PendulumEnv(),
    "tabular": _make_tabular,
}


def make_env(name: str, settings: Optional[Dict[str, Any]] = None) -> Environment:
    """
    Build an environment by name.

    Args:
        name: One of ENVIRONMENTS
        settings: Extra settings (the `tabular` config section for "tabular")

    Raises:
        ConfigError: Unknown environment name
    """
    if name not in ENVIRONMENTS:
        raise ConfigError(f"Unknown environment: {name}. Available: {', '.join(ENVIRONMENTS)}")
    return ENVIRONMENTS[name](settings or {})
