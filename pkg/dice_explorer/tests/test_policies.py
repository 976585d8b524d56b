"""
Tests for Gaussian and tabular policies, actor objectives and checkpoints.
"""

import numpy as np
import pytest

from dice_explorer.core.autodiff import backward
from dice_explorer.core.critics import CriticPair
from dice_explorer.core.errors import ShapeError
from dice_explorer.core.policies import (
    LOG_STD_MAX,
    GaussianPolicy,
    SoftmaxTabularPolicy,
    TabularActionPolicy,
    explore_policy_objective,
    load_checkpoint,
    save_checkpoint,
    target_policy_objective,
)
from dice_explorer.core.rng import Rng


def _zeroed_policy(observation_size: int = 2, action_size: int = 1) -> GaussianPolicy:
    policy = GaussianPolicy(observation_size, action_size, [4], Rng(0))
    for param in policy.parameters():
        param.values[...] = 0.0
    return policy


class TestGaussianPolicy:
    """Tests for the tanh-squashed Gaussian."""

    def test_log_prob_matches_change_of_variables(self):
        """Zero network: u = eps, log pi = log N(eps) - log(1 - tanh(eps)^2)."""
        policy = _zeroed_policy()
        sample = policy.sample(np.zeros((1, 2)), noise=np.array([[0.5]]))
        expected = -0.125 - 0.5 * np.log(2.0 * np.pi) - np.log(1.0 - np.tanh(0.5) ** 2)
        assert sample.log_prob.values[0] == pytest.approx(expected)
        assert sample.action.values[0, 0] == pytest.approx(np.tanh(0.5))

    def test_actions_inside_box(self):
        """Sampled actions lie strictly inside (-1, 1)."""
        policy = GaussianPolicy(3, 2, [8], Rng(0))
        actions, log_probs = policy.sample_actions(np.ones((50, 3)) * 5.0, Rng(1))
        assert actions.shape == (50, 2)
        assert log_probs.shape == (50,)
        assert np.all(np.abs(actions) < 1.0)

    def test_log_std_clamped(self):
        """A huge log_std output is clamped to the maximum."""
        policy = _zeroed_policy()
        policy.network.biases[-1].values[1] = 10.0
        _, log_std = policy.distribution(np.zeros((1, 2)))
        assert log_std.values[0, 0] == LOG_STD_MAX

    def test_noise_required(self):
        """Without rng or noise there is nothing to sample from."""
        with pytest.raises(ValueError):
            _zeroed_policy().sample(np.zeros((1, 2)))

    def test_noise_shape_checked(self):
        """Explicit noise must match the action batch."""
        with pytest.raises(ShapeError):
            _zeroed_policy().sample(np.zeros((2, 2)), noise=np.zeros((1, 1)))

    def test_state_shape_checked(self):
        """States of the wrong width raise ShapeError."""
        with pytest.raises(ShapeError):
            _zeroed_policy().distribution(np.zeros((1, 3)))

    def test_act_is_tanh_mean(self):
        """Evaluation action is deterministic."""
        policy = _zeroed_policy()
        policy.network.biases[-1].values[0] = 0.3
        np.testing.assert_allclose(policy.act(np.zeros(2)), [np.tanh(0.3)])

    def test_negative_alpha(self):
        """The entropy coefficient is non-negative."""
        with pytest.raises(ValueError):
            GaussianPolicy(2, 1, [4], Rng(0), alpha=-0.1)


class TestActorObjectives:
    """Tests for the weighted lower/upper bound objectives."""

    def setup_method(self):
        rng = Rng(3)
        self.critics = CriticPair(2, 1, [8], rng.spawn("critics"))
        self.target = GaussianPolicy(2, 1, [8], rng.spawn("target"), name="target_policy")
        self.explore = GaussianPolicy(2, 1, [8], rng.spawn("explore"), name="explore_policy")
        self.states = rng.spawn("states").normal((6, 2))
        self.noise = rng.spawn("noise").normal((6, 1))

    def test_gradient_reaches_only_own_policy(self):
        """Target objective touches neither critics nor the exploration policy."""
        weights = np.full(6, 1.0 / 6.0)
        objective = target_policy_objective(
            self.states, weights, self.target, self.critics, noise=self.noise
        )
        grads = backward(objective)
        assert any(param in grads for param in self.target.parameters())
        assert not any(param in grads for param in self.explore.parameters())
        assert not any(param in grads for param in self.critics.parameters())

    def test_upper_objective_not_below_lower(self):
        """Same policy and noise: the optimistic objective dominates."""
        weights = np.full(6, 1.0 / 6.0)
        lower = target_policy_objective(self.states, weights, self.explore, self.critics, noise=self.noise)
        upper = explore_policy_objective(self.states, weights, self.explore, self.critics, noise=self.noise)
        assert upper.item() >= lower.item()

    def test_zero_weights_give_zero_objective(self):
        """All-zero weights make the objective vanish."""
        objective = target_policy_objective(
            self.states, np.zeros(6), self.target, self.critics, noise=self.noise
        )
        assert objective.item() == 0.0

    def test_weight_length_checked(self):
        """Weights must match the batch."""
        with pytest.raises(ShapeError):
            target_policy_objective(self.states, np.ones(5), self.target, self.critics, noise=self.noise)


class TestTabularPolicies:
    """Tests for softmax tables and bin-centre action tables."""

    def test_probabilities_normalized(self):
        """Softmax rows sum to one even for large logits."""
        policy = SoftmaxTabularPolicy(np.array([[1000.0, 0.0], [0.0, 0.0]]))
        probs = policy.probabilities()
        np.testing.assert_allclose(probs.sum(axis=1), 1.0)
        np.testing.assert_allclose(probs[1], [0.5, 0.5])

    def test_state_gradients_match_finite_differences(self):
        """Analytic d J_s / d logits agrees with central differences."""
        rng = np.random.default_rng(0)
        logits = rng.normal(size=(3, 2))
        q_table = rng.normal(size=(3, 2))
        analytic = SoftmaxTabularPolicy(logits).state_gradients(q_table, alpha=0.3)
        numeric = np.zeros_like(logits)
        step = 1e-6
        for index in np.ndindex(logits.shape):
            shifted = logits.copy()
            shifted[index] += step
            upper = SoftmaxTabularPolicy(shifted).state_objectives(q_table, 0.3)[index[0]]
            shifted[index] -= 2 * step
            lower = SoftmaxTabularPolicy(shifted).state_objectives(q_table, 0.3)[index[0]]
            numeric[index] = (upper - lower) / (2 * step)
        np.testing.assert_allclose(analytic, numeric, atol=1e-7)

    def test_bad_logit_shape(self):
        """Logits must be two-dimensional."""
        with pytest.raises(ShapeError):
            SoftmaxTabularPolicy(np.zeros(3))

    def test_action_table_deterministic(self):
        """A one-hot table emits its bin centre with log-probability 0."""
        policy = TabularActionPolicy(np.array([[0.0, 1.0], [1.0, 0.0]]))
        actions, log_probs = policy.sample_actions(np.eye(2), Rng(0))
        np.testing.assert_allclose(actions, [[0.5], [-0.5]])
        np.testing.assert_allclose(log_probs, [0.0, 0.0])


class TestCheckpoints:
    """Tests for saving and loading policy parameters."""

    def test_round_trip(self, tmp_path):
        """A reloaded policy acts identically."""
        policy = GaussianPolicy(3, 2, [8, 4], Rng(0), alpha=0.1, name="target_policy")
        path = save_checkpoint(policy, str(tmp_path / "nested" / "policy.npz"))
        loaded = load_checkpoint(str(path))
        observation = np.array([0.1, -0.2, 0.3])
        np.testing.assert_allclose(loaded.act(observation), policy.act(observation))
        assert loaded.hidden_sizes == [8, 4]
        assert loaded.alpha == pytest.approx(0.1)

    def test_missing_file(self, tmp_path):
        """Missing checkpoints raise FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_checkpoint(str(tmp_path / "missing.npz"))

    def test_not_a_checkpoint(self, tmp_path):
        """Archives without metadata are refused."""
        path = tmp_path / "other.npz"
        np.savez(path, weights=np.zeros(3))
        with pytest.raises(ValueError):
            load_checkpoint(str(path))
