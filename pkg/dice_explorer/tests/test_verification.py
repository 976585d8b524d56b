"""
Tests for the acceptance suites and their helpers.
"""

import numpy as np
import pytest

from dice_explorer.core.dice import DiceConfig
from dice_explorer.core.envs import random_mdp
from dice_explorer.core.rng import Rng
from dice_explorer.core.verification import (
    SUITES,
    GradientEstimate,
    buffer_pair_indices,
    draw_pairs,
    gradient_agreement,
    improvement_factor,
    mixed_sign_rewards,
    pair_inputs,
    random_distribution,
    random_policy_table,
    run_suite,
    smoothed_improvement_share,
    suite_learning,
    suite_prop1,
    suite_tabular_dice,
    suite_theorem1,
    tabular_fixture,
    train_tabular_dice,
)


class TestHelpers:
    """Tests for sampling and fixture helpers."""

    def test_draw_pairs_frequencies(self):
        """Empirical pair frequencies match the distribution."""
        distribution = np.array([[0.1, 0.2], [0.3, 0.4]])
        states, actions = draw_pairs(distribution, 50000, Rng(0))
        counts = np.zeros((2, 2))
        np.add.at(counts, (states, actions), 1)
        np.testing.assert_allclose(counts / counts.sum(), distribution, atol=0.01)

    def test_random_tables_are_distributions(self):
        """Distributions sum to one and policy rows sum to one."""
        assert random_distribution(Rng(0), (3, 2)).sum() == pytest.approx(1.0)
        table = random_policy_table(Rng(0), 3, 2)
        np.testing.assert_allclose(table.sum(axis=1), 1.0)
        assert table.min() > 0.0

    def test_tabular_fixture(self):
        """Empirical d^D covers every pair and pair_inputs enumerates them row-major."""
        fixture = tabular_fixture(seed=0, n_states=3, n_actions=2, transitions=2000)
        assert fixture.d_D.shape == (3, 2)
        assert fixture.d_D.sum() == pytest.approx(1.0)
        assert len(fixture.buffer) == 2000
        states, actions = pair_inputs(fixture.env)
        np.testing.assert_array_equal(np.argmax(states, axis=1), [0, 0, 1, 1, 2, 2])
        np.testing.assert_allclose(actions[:, 0], [-0.5, 0.5, -0.5, 0.5, -0.5, 0.5])

    def test_gradient_agreement(self):
        """Identical estimate and exact give cosine 1 and zero deviation."""
        exact = np.array([[1.0, -2.0], [0.5, 0.0]])
        result = GradientEstimate(estimate=exact.copy(), standard_error=np.full((2, 2), 0.1), exact=exact)
        cosine, deviation = gradient_agreement(result)
        assert cosine == pytest.approx(1.0)
        assert deviation == 0.0


class TestSuites:
    """Tests for the fast suites."""

    def test_registry(self):
        """Every suite is reachable by name."""
        assert set(SUITES) == {"grad", "tabular-dice", "prop1", "theorem1", "bounds", "normalize", "learning"}
        with pytest.raises(ValueError):
            run_suite("nope")

    @pytest.mark.parametrize("name", ["bounds", "normalize", "grad"])
    def test_fast_suites_pass(self, name):
        """Exact identities and gradient checks hold."""
        results = run_suite(name)
        assert results
        assert all(result.passed for result in results), [r for r in results if not r.passed]

    def test_ratio_weighted_gradient_is_unbiased(self):
        """The buffer gradient points along the exact one within sampling error."""
        cosine, deviation = (result.value for result in suite_prop1(seed=0))
        assert cosine > 0.999
        assert deviation < 4.0

    def test_grad_suite_reports_skipped_coordinates(self):
        """Every gradient check comes with a checked-share companion and a skip count."""
        results = run_suite("grad")
        shares = [result for result in results if result.name.endswith("share checked")]
        assert len(shares) == len(results) // 2
        assert all("coordinates skipped near kinks" in result.detail for result in results)
        assert any("initial term" in result.name for result in results)


class TestLearningHelpers:
    """Tests for the learning smoke-test arithmetic."""

    @pytest.mark.parametrize(
        "trained, baseline, expected",
        [(-20.0, -285.0, 14.25), (-100.0, -100.0, 1.0), (10.0, 2.0, 5.0), (0.5, -3.0, float("inf"))],
    )
    def test_improvement_factor(self, trained, baseline, expected):
        """Costs compare as baseline / trained, rewards as trained / baseline."""
        assert improvement_factor(trained, baseline) == pytest.approx(expected)

    def test_smoothed_improvement_share(self):
        """A rising series scores 1, a falling one 0, and a too-short one 0."""
        rising = np.arange(20.0)
        assert smoothed_improvement_share(rising) == 1.0
        assert smoothed_improvement_share(-rising) == 0.0
        assert smoothed_improvement_share(np.arange(4.0)) == 0.0


class TestTabularDiceHelpers:
    """Tests for the pieces of the ratio recovery suite."""

    def test_buffer_pair_indices(self):
        """Stored transitions map back to the pair counts behind d^D."""
        fixture = tabular_fixture(seed=1, n_states=3, n_actions=2, transitions=3000)
        states, actions = buffer_pair_indices(fixture.buffer, fixture.env)
        counts = np.zeros((3, 2))
        np.add.at(counts, (states, actions), 1)
        np.testing.assert_allclose(counts / counts.sum(), fixture.d_D)

    def test_reward_offset_shifts_fixture_rewards(self):
        """The recovery fixture's rewards lie in [offset, offset + 1]."""
        fixture = tabular_fixture(seed=0, n_states=3, n_actions=2, transitions=500, reward_offset=1.0)
        assert fixture.mdp.reward.min() >= 1.0
        assert fixture.mdp.reward.max() <= 2.0
        assert fixture.buffer.all().rewards.min() >= 1.0

    def test_short_training_gives_a_finite_table(self):
        """A few unbiased updates produce a non-negative (nS, nA) ratio table."""
        fixture = tabular_fixture(seed=0, n_states=3, n_actions=2, transitions=2000, gamma=0.9,
                                  reward_offset=1.0)
        config = DiceConfig(learning_rate=1e-3, alpha_nu=1e-3, hidden_sizes=[8], gamma=0.9, unbiased=True)
        result = train_tabular_dice(fixture, 40, seed=0, config=config, batch_size=32)
        assert result.zeta_table.shape == (3, 2)
        assert np.all(np.isfinite(result.zeta_table))
        assert np.all(result.zeta_table >= 0.0)

    def test_mixed_sign_rewards(self):
        """The shifted table has a negative minimum and keeps every gap between rewards."""
        mdp = random_mdp(Rng(4), 3, 2, gamma=0.9)
        shifted = mixed_sign_rewards(mdp)
        spread = mdp.reward.max() - mdp.reward.min()
        assert shifted.reward.min() == pytest.approx(-0.1 * spread)
        np.testing.assert_allclose(np.diff(shifted.reward.ravel()), np.diff(mdp.reward.ravel()))


@pytest.mark.slow
class TestAcceptanceSuites:
    """Full-length suites: every check must pass."""

    def test_tabular_dice_recovers_ratio(self):
        """Learned zeta matches d^pi / d^D and the live dual estimate beats the batch mean."""
        results = suite_tabular_dice(seed=0)
        assert len(results) == 3
        assert all(result.passed for result in results), [r for r in results if not r.passed]

    def test_theorem1_abs_and_signed_agree(self):
        """Both saddle programs reach the exact ratio, and the abs solve met negative residuals."""
        results = suite_theorem1(seed=0)
        assert any("negative residuals" in result.name for result in results)
        assert all(result.passed for result in results), [r for r in results if not r.passed]

    def test_point_mass_beats_random_policy(self):
        """Mode ours on point-mass ends at least 5x better than uniform random actions."""
        results = suite_learning(seed=0, steps=8000, seeds=1, pendulum_steps=0)
        assert all(result.passed for result in results), [r for r in results if not r.passed]
