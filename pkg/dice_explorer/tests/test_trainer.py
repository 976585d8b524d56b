"""
Tests for the training loop, its ablation modes and evaluation.
"""

import math

import numpy as np
import pytest

from dice_explorer.core.dice import DiceConfig, DiceState
from dice_explorer.core.envs import make_env
from dice_explorer.core.errors import ConfigError, TrainingDivergedError
from dice_explorer.core.policies import RandomPolicy
from dice_explorer.core.rng import Rng
from dice_explorer.core.run_log import COLUMNS
from dice_explorer.core.trainer import MODES, Trainer, TrainingConfig, evaluate

TABULAR = {"n_states": 3, "n_actions": 2, "horizon": 10}


def _config(mode: str = "ours", **overrides) -> TrainingConfig:
    settings = dict(
        env="tabular",
        mode=mode,
        total_steps=30,
        warmup_steps=10,
        batch_size=8,
        buffer_capacity=100,
        hidden_sizes=[8],
        eval_interval=10,
        eval_episodes=1,
        dice=DiceConfig(hidden_sizes=[8], learning_rate=0.001),
        tabular=dict(TABULAR),
    )
    settings.update(overrides)
    return TrainingConfig(**settings)


class Recorder:
    """Listener that keeps every event and every weight vector."""

    def __init__(self):
        self.events = []
        self.weights = {}

    def __call__(self, event, objective=None, weights=None):
        self.events.append(event)
        if event == "weights":
            self.weights.setdefault(objective, []).append(np.array(weights))


def _table(log) -> np.ndarray:
    return np.stack([log.column(name) for name in COLUMNS])


def _is_uniform(weights: np.ndarray) -> bool:
    return np.allclose(weights, 1.0 / len(weights))


class TestUpdateOrder:
    """Tests for the per-iteration update sequence."""

    def test_full_mode_sequence(self):
        """ours: DICE first, then target policy, exploration policy, critics, targets."""
        recorder = Recorder()
        Trainer(_config(total_steps=11, eval_interval=100), listener=recorder).train()
        assert recorder.events[:11] == ["rollout"] * 11
        assert recorder.events[11:] == [
            "sample",
            "dice_update",
            "normalize",
            "weights",
            "update_target_policy",
            "weights",
            "update_explore_policy",
            "weights",
            "update_critics",
            "soft_update",
        ]

    def test_sac_skips_dice_and_exploration(self):
        """sac trains only the target policy and critics."""
        recorder = Recorder()
        Trainer(_config("sac", total_steps=11, eval_interval=100), listener=recorder).train()
        assert "dice_update" not in recorder.events
        assert "update_explore_policy" not in recorder.events
        assert recorder.events[-1] == "soft_update"

    def test_target_update_interval(self):
        """Soft updates happen only on multiples of the interval."""
        recorder = Recorder()
        Trainer(
            _config(total_steps=14, eval_interval=100, target_update_interval=2), listener=recorder
        ).train()
        assert recorder.events.count("update_critics") == 4
        assert recorder.events.count("soft_update") == 2


class TestWeightTaps:
    """Tests for where the DICE weights are applied in each mode."""

    def _first_weights(self, mode: str):
        recorder = Recorder()
        Trainer(_config(mode, total_steps=11, eval_interval=100), listener=recorder).train()
        return {name: values[0] for name, values in recorder.weights.items()}

    def test_ours_weights_everything(self):
        """Both objectives and the critics see the corrected weights."""
        weights = self._first_weights("ours")
        assert not _is_uniform(weights["target_policy"])
        assert not _is_uniform(weights["critics"])
        np.testing.assert_array_equal(weights["target_policy"], weights["explore_policy"])

    def test_only_weight_q(self):
        """Policies see uniform weights; critics see corrected ones."""
        weights = self._first_weights("only_weight_q")
        assert _is_uniform(weights["target_policy"])
        assert _is_uniform(weights["explore_policy"])
        assert not _is_uniform(weights["critics"])

    def test_only_weight_policies(self):
        """Policies see corrected weights; critics see uniform ones."""
        weights = self._first_weights("only_weight_policies")
        assert not _is_uniform(weights["target_policy"])
        assert _is_uniform(weights["critics"])

    def test_no_dice_is_uniform(self):
        """Without DICE every objective is unweighted."""
        weights = self._first_weights("no_dice")
        assert all(_is_uniform(values) for values in weights.values())

    def test_weights_sum_to_one(self):
        """Every tapped weight vector is normalized."""
        for values in self._first_weights("ours").values():
            assert values.sum() == pytest.approx(1.0)


class TestModes:
    """Tests for mode-specific behaviour."""

    def test_mode_table(self):
        """Six modes with the expected behaviour policies."""
        assert set(MODES) == {"ours", "no_dice", "only_weight_policies", "only_weight_q", "sac_dice", "sac"}
        assert MODES["sac_dice"].behavior == "target"
        assert MODES["ours"].behavior == "explore"

    def test_no_dice_ignores_injected_state(self):
        """An injected DICE state is never updated and does not change the run."""
        config = _config("no_dice")
        dice = DiceState(3, 1, config.dice, Rng(99))
        before = [param.values.copy() for param in dice.nu.parameters() + dice.zeta_raw.parameters()]

        plain = Trainer(config).train()
        injected_trainer = Trainer(_config("no_dice"), dice=dice)
        injected = injected_trainer.train()

        np.testing.assert_array_equal(_table(plain), _table(injected))
        assert injected_trainer.dice_optimizers is None
        after = dice.nu.parameters() + dice.zeta_raw.parameters()
        for old, param in zip(before, after):
            np.testing.assert_array_equal(old, param.values)

    def test_sac_dice_acts_with_target_policy(self):
        """sac_dice rolls out the target policy and logs no exploration return."""
        trainer = Trainer(_config("sac_dice"))
        assert trainer.behavior_policy is trainer.target_policy
        log = trainer.train()
        assert all(math.isnan(value) for value in log.column("return_explore"))
        assert np.all(np.isfinite(log.column("dual_estimate")))

    def test_unknown_mode(self):
        """Unknown modes are a configuration error."""
        with pytest.raises(ConfigError):
            _config("greedy")


class TestTraining:
    """Tests for the run as a whole."""

    def test_log_grid(self):
        """One row per evaluation interval with DICE diagnostics after warm-up."""
        log = Trainer(_config()).train()
        assert log.steps == [10, 20, 30]
        assert math.isnan(log.rows[0].loss_nu)
        assert np.isfinite(log.rows[1].loss_nu)
        assert np.all(np.isfinite(log.column("return_target")))

    def test_deterministic(self):
        """Same config, same log."""
        first = Trainer(_config()).train()
        second = Trainer(_config()).train()
        np.testing.assert_array_equal(_table(first), _table(second))

    def test_seed_changes_run(self):
        """A different seed gives a different run."""
        first = Trainer(_config()).train()
        second = Trainer(_config(seed=1)).train()
        assert not np.array_equal(_table(first), _table(second), equal_nan=True)

    def test_zero_steps(self):
        """total_steps = 0 produces an empty log."""
        assert len(Trainer(_config(total_steps=0)).train()) == 0

    def test_unbiased_dice_trains_on_reset_observations(self):
        """Every reset is kept as an initial state and the run stays finite."""
        dice = DiceConfig(hidden_sizes=[8], learning_rate=0.001, unbiased=True)
        trainer = Trainer(_config(dice=dice))
        log = trainer.train()
        assert len(trainer.initial_observations) == 4
        assert trainer._initial_batch().shape == (8, 3)
        assert np.all(np.isfinite(log.column("loss_nu")[1:]))

    def test_initial_batch_only_in_unbiased_mode(self):
        """The default DICE update gets no initial states."""
        trainer = Trainer(_config())
        trainer.train()
        assert trainer._initial_batch() is None

    def test_divergence_names_the_stage(self):
        """A NaN critic weight aborts with the stage and step."""
        trainer = Trainer(_config())
        trainer.critics.q1.weights[0].values[0, 0] = np.nan
        with pytest.raises(TrainingDivergedError) as info:
            trainer.train()
        assert info.value.step == 11
        assert info.value.loss_name == "loss_target_policy"
        assert info.value.diagnostics["step"] == 10


class TestEvaluate:
    """Tests for deterministic policy evaluation."""

    def test_averages(self):
        """Per-step reward is the return divided by the horizon."""
        env = make_env("tabular", {"n_states": 3, "n_actions": 2, "horizon": 5})
        result = evaluate(RandomPolicy(1, Rng(0)), env, 2, Rng(1))
        assert result.average_reward == pytest.approx(result.average_return / 5.0)

    def test_needs_an_episode(self):
        """episodes must be at least one."""
        env = make_env("tabular", dict(TABULAR))
        with pytest.raises(ValueError):
            evaluate(RandomPolicy(1, Rng(0)), env, 0, Rng(1))
