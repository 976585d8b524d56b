"""
Tests for the ratio estimator: losses, normalization and the update step.
"""

import numpy as np
import pytest

from dice_explorer.core.autodiff import Tensor, backward
from dice_explorer.core.dice import (
    DiceConfig,
    DiceOptimizers,
    DiceState,
    dice_update,
    dual_estimate,
    loss_lambda,
    loss_nu,
    loss_zeta,
    normalize_zeta,
)
from dice_explorer.core.errors import ConfigError, NonFiniteError, ShapeError
from dice_explorer.core.policies import GaussianPolicy
from dice_explorer.core.replay_buffer import Batch
from dice_explorer.core.rng import Rng


def _batch(rng: Rng, size: int = 16) -> Batch:
    return Batch(
        states=rng.normal((size, 2)),
        actions=rng.uniform(-1.0, 1.0, (size, 1)),
        rewards=rng.uniform(0.0, 1.0, size),
        next_states=rng.normal((size, 2)),
        dones=np.zeros(size, dtype=bool),
    )


def _setup(seed: int = 0, **overrides):
    config = DiceConfig(hidden_sizes=[8], learning_rate=0.01, **overrides)
    rng = Rng(seed)
    state = DiceState(2, 1, config, rng.spawn("dice"))
    policy = GaussianPolicy(2, 1, [8], rng.spawn("policy"))
    return state, DiceOptimizers(state), policy, rng


class TestNormalizeZeta:
    """Tests for self-normalized weights."""

    def test_temperature_one_is_proportional(self):
        """T = 1 normalizes zeta itself."""
        np.testing.assert_allclose(normalize_zeta(np.array([1.0, 3.0]), 1.0), [0.25, 0.75])

    def test_temperature_flattens(self):
        """Higher T moves weights toward uniform."""
        zeta = np.array([0.5, 1.0, 4.0])
        sharp = normalize_zeta(zeta, 1.0)
        flat = normalize_zeta(zeta, 3.0)
        assert flat.max() < sharp.max()
        assert flat.min() > sharp.min()
        np.testing.assert_allclose(flat, zeta ** (1 / 3) / np.sum(zeta ** (1 / 3)))

    def test_all_zero_falls_back_to_uniform(self):
        """No mass anywhere gives uniform weights."""
        np.testing.assert_allclose(normalize_zeta(np.zeros(4), 3.0), np.full(4, 0.25))

    def test_zero_entries_get_zero_weight(self):
        """Zeros stay at zero weight."""
        weights = normalize_zeta(np.array([0.0, 2.0]), 2.0)
        np.testing.assert_allclose(weights, [0.0, 1.0])

    def test_huge_values_do_not_overflow(self):
        """Log-space normalization handles extreme ratios."""
        weights = normalize_zeta(np.array([1e300, 1e-300]), 0.5)
        assert np.all(np.isfinite(weights))
        assert weights.sum() == pytest.approx(1.0)

    def test_invalid_inputs(self):
        """T <= 0, negatives and empty batches are rejected."""
        with pytest.raises(ValueError):
            normalize_zeta(np.ones(2), 0.0)
        with pytest.raises(ValueError):
            normalize_zeta(np.array([1.0, -0.1]), 1.0)
        with pytest.raises(ShapeError):
            normalize_zeta(np.zeros(0), 1.0)

    def test_dual_estimate(self):
        """Weighted reward average."""
        assert dual_estimate(np.array([0.25, 0.75]), np.array([4.0, 0.0])) == pytest.approx(1.0)
        with pytest.raises(ShapeError):
            dual_estimate(np.ones(2), np.ones(3))


class TestLosses:
    """Tests for the three player losses."""

    def test_loss_nu_value(self):
        """mean(zeta |B nu - nu|) + mean(nu^2 / 2) for m = 2."""
        loss = loss_nu(Tensor([1.0, 2.0]), np.array([2.0, 2.0]), np.array([1.0, 3.0]), 1.0, 2.0)
        assert loss.item() == pytest.approx(0.5 + 1.25)

    def test_loss_nu_worked_value(self):
        """One sample, zeta = 1, B nu = 1, nu = 0.5, alpha = 1, m = 1.5: 0.5 + 0.5^1.5 / 1.5."""
        loss = loss_nu(Tensor([0.5]), np.array([1.0]), np.array([1.0]), 1.0, 1.5)
        assert loss.item() == pytest.approx(0.73570, abs=1e-5)

    def test_loss_nu_initial_term(self):
        """Initial-state nu adds (1 - gamma) * mean and gets gradient (1 - gamma) / n."""
        initial = Tensor([2.0, 4.0], requires_grad=True)
        loss = loss_nu(Tensor([0.5]), np.array([1.0]), np.array([1.0]), 1.0, 1.5,
                       initial_values=initial, gamma=0.9)
        assert loss.item() == pytest.approx(0.73570 + 0.3, abs=1e-5)
        np.testing.assert_allclose(backward(loss)[initial], [0.05, 0.05])

    def test_loss_nu_live_bellman_gets_gradient(self):
        """A graph-attached B nu receives minus the residual-side gradient."""
        nu = Tensor([0.5], requires_grad=True)
        live = Tensor([1.0], requires_grad=True)
        grads = backward(loss_nu(nu, live, np.array([2.0]), 1.0, 2.0))
        assert float(grads[live][0]) == pytest.approx(2.0)
        assert float(grads[nu][0]) == pytest.approx(-2.0 + 0.5)

    def test_loss_zeta_value(self):
        """mean(zeta^2 / 2) - mean(zeta (residual - lambda)) for m = 2."""
        loss = loss_zeta(Tensor([1.0, 2.0]), np.array([3.0, 1.0]), 1.0, 1.0, 2.0)
        assert loss.item() == pytest.approx(1.25 - 1.0)

    def test_loss_lambda_gradient(self):
        """d/d lambda = 1 - mean(zeta)."""
        lam = Tensor(2.0, requires_grad=True)
        loss = loss_lambda(lam, np.array([0.5, 0.5]))
        assert loss.item() == pytest.approx(1.0)
        assert float(backward(loss)[lam]) == pytest.approx(0.5)

    def test_loss_nu_treats_zeta_as_constant(self):
        """Only nu receives a gradient from the nu loss."""
        nu = Tensor([1.0, 2.0], requires_grad=True)
        grads = backward(loss_nu(nu, np.array([0.0, 0.0]), np.array([1.0, 1.0]), 1.0, 1.5))
        assert list(grads) == [nu]


class TestDiceConfig:
    """Tests for hyperparameter validation."""

    @pytest.mark.parametrize(
        "overrides",
        [
            {"alpha_nu": 0.0},
            {"alpha_zeta": -1.0},
            {"temperature": 0.0},
            {"learning_rate": -1e-3},
            {"exponent": 0.5},
            {"gamma": 1.0},
            {"tau": 0.0},
        ],
    )
    def test_invalid_values(self, overrides):
        """Each out-of-range value raises ConfigError."""
        with pytest.raises(ConfigError):
            DiceConfig(**overrides)


class TestDiceUpdate:
    """Tests for the sequential nu / zeta / lambda update."""

    def test_all_players_move(self):
        """One update changes nu, zeta and lambda but not the nu target."""
        state, optimizers, policy, rng = _setup()
        nu_before = state.nu.weights[0].values.copy()
        zeta_before = state.zeta_raw.weights[0].values.copy()
        target_before = state.nu_target.weights[0].values.copy()
        dice_update(_batch(rng.spawn("batch")), state, optimizers, policy, rng.spawn("update"))
        assert not np.allclose(state.nu.weights[0].values, nu_before)
        assert not np.allclose(state.zeta_raw.weights[0].values, zeta_before)
        assert state.lam.item() != 0.0
        np.testing.assert_array_equal(state.nu_target.weights[0].values, target_before)

    def test_lambda_moves_against_mass_gap(self):
        """First Adam step on lambda is -lr * sign(1 - mean zeta)."""
        state, optimizers, policy, rng = _setup()
        diagnostics = dice_update(
            _batch(rng.spawn("batch")), state, optimizers, policy, rng.spawn("update")
        )
        expected = -0.01 * np.sign(1.0 - diagnostics.mean_zeta)
        assert diagnostics.lam == pytest.approx(expected, rel=1e-3)

    def test_deterministic(self):
        """Same seeds give identical diagnostics."""
        results = []
        for _ in range(2):
            state, optimizers, policy, rng = _setup(seed=4)
            results.append(
                dice_update(_batch(rng.spawn("batch")), state, optimizers, policy, rng.spawn("u")).as_dict()
            )
        assert results[0] == results[1]

    def test_zeta_is_non_negative(self):
        """zeta = zeta_raw^2 never goes below zero."""
        state, _, _, rng = _setup()
        batch = _batch(rng.spawn("batch"), size=64)
        assert np.all(state.zeta(batch.states, batch.actions).values >= 0.0)
        weights = state.weights(batch.states, batch.actions)
        assert weights.sum() == pytest.approx(1.0)

    def test_soft_update_target(self):
        """tau = 1 copies nu into its target."""
        state, _, _, _ = _setup(tau=1.0)
        state.nu.weights[0].values += 0.5
        state.soft_update_target()
        np.testing.assert_allclose(state.nu_target.weights[0].values, state.nu.weights[0].values)

    def test_empty_batch(self):
        """An empty batch is rejected."""
        state, optimizers, policy, rng = _setup()
        empty = Batch(np.zeros((0, 2)), np.zeros((0, 1)), np.zeros(0), np.zeros((0, 2)), np.zeros(0))
        with pytest.raises(ValueError):
            dice_update(empty, state, optimizers, policy, rng)

    def test_non_finite_reward_is_named(self):
        """An infinite reward surfaces as a NonFiniteError with a loss name."""
        state, optimizers, policy, rng = _setup()
        batch = _batch(rng.spawn("batch"))
        batch.rewards[0] = np.inf
        with pytest.raises(NonFiniteError) as info:
            dice_update(batch, state, optimizers, policy, rng.spawn("update"))
        assert info.value.loss_name in ("loss_nu", "dice")


class TestUnbiasedDiceUpdate:
    """Tests for the update with the initial-state term and live next-state nu."""

    def test_needs_initial_states(self):
        """Unbiased mode refuses to run without initial states."""
        state, optimizers, policy, rng = _setup(unbiased=True)
        batch = _batch(rng.spawn("batch"))
        with pytest.raises(ValueError):
            dice_update(batch, state, optimizers, policy, rng.spawn("update"))
        with pytest.raises(ValueError):
            dice_update(batch, state, optimizers, policy, rng.spawn("update"), initial_states=np.zeros((0, 2)))

    def test_runs_with_initial_states(self):
        """All three players move and the losses are finite."""
        state, optimizers, policy, rng = _setup(unbiased=True)
        nu_before = state.nu.weights[0].values.copy()
        initial = rng.spawn("initial").normal((8, 2))
        diagnostics = dice_update(
            _batch(rng.spawn("batch")), state, optimizers, policy, rng.spawn("update"), initial_states=initial
        )
        assert np.all(np.isfinite(list(diagnostics.as_dict().values())))
        assert not np.allclose(state.nu.weights[0].values, nu_before)
        assert state.lam.item() != 0.0

    def test_initial_states_ignored_by_default(self):
        """The default mode gives the same result with or without initial states."""
        results = []
        for initial in (None, np.ones((4, 2))):
            state, optimizers, policy, rng = _setup(seed=2)
            results.append(
                dice_update(_batch(rng.spawn("batch")), state, optimizers, policy, rng.spawn("u"),
                            initial_states=initial).as_dict()
            )
        assert results[0] == results[1]
