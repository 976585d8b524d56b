"""
Exact tabular ground truth: occupancies, ratios, values, gradients and
a full-expectation saddle-point solver for the ratio program.

State-action pairs are flattened row-major: index = s * nA + a.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from dice_explorer.core.envs import TabularMDP
from dice_explorer.core.errors import ConvergenceError, CoverageError, ShapeError
from dice_explorer.core.policies import SoftmaxTabularPolicy
from dice_explorer.core.rng import Rng

logger = logging.getLogger(__name__)

FIXED_POINT_TOLERANCE = 1e-10


@dataclass
class ExactQuantities:
    d_pi: np.ndarray
    zeta_star: np.ndarray
    mu_pi: float
    d_D: np.ndarray


def _check_policy(mdp: TabularMDP, policy: np.ndarray) -> np.ndarray:
    policy = np.asarray(policy, dtype=np.float64)
    if policy.shape != (mdp.n_states, mdp.n_actions):
        raise ShapeError(f"Policy must be ({mdp.n_states}, {mdp.n_actions}), got {policy.shape}")
    if np.any(policy < 0) or np.max(np.abs(policy.sum(axis=1) - 1.0)) > 1e-10:
        raise ValueError("Policy rows must be probability distributions")
    return policy


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")


def successor_matrix(mdp: TabularMDP, policy: np.ndarray) -> np.ndarray:
    """P[(s, a), (s', a')] = T(s'|s, a) * pi(a'|s')."""
    n = mdp.n_states * mdp.n_actions
    return (mdp.transition[:, :, :, None] * policy[None, None, :, :]).reshape(n, n)


def initial_pairs(mdp: TabularMDP, policy: np.ndarray) -> np.ndarray:
    """rho0(s) * pi(a|s), flattened."""
    return (mdp.initial[:, None] * policy).reshape(-1)


def stationary_distribution(mdp: TabularMDP, policy: np.ndarray, gamma: float) -> np.ndarray:
    """
    Discounted occupancy d^pi(s, a).

    Solves d = (1 - gamma) rho0 pi + gamma P^T d directly.

    Args:
        mdp: Tabular MDP
        policy: (nS, nA) conditional distribution pi(a|s)
        gamma: Discount in (0, 1)

    Returns:
        (nS, nA) table summing to 1

    Raises:
        ValueError: If gamma or the policy is invalid
        ConvergenceError: If the solve misses the fixed point
    """
    _check_gamma(gamma)
    policy = _check_policy(mdp, policy)
    successor = successor_matrix(mdp, policy)
    start = initial_pairs(mdp, policy)
    system = np.eye(successor.shape[0]) - gamma * successor.T
    occupancy = np.linalg.solve(system, (1.0 - gamma) * start)

    residual = np.max(np.abs((1.0 - gamma) * start + gamma * successor.T @ occupancy - occupancy))
    if residual > FIXED_POINT_TOLERANCE:
        raise ConvergenceError(f"Occupancy solve residual {residual:.3e}", residual=residual)
    logger.debug(f"Occupancy solved, residual {residual:.3e}")
    return occupancy.reshape(mdp.n_states, mdp.n_actions)


def policy_value(mdp: TabularMDP, policy: np.ndarray, gamma: float) -> float:
    """Normalized per-step value sum_{s,a} d^pi(s, a) R(s, a)."""
    return float(np.sum(stationary_distribution(mdp, policy, gamma) * mdp.reward))


def exact_ratio(d_pi: np.ndarray, d_D: np.ndarray) -> np.ndarray:
    """
    zeta* = d^pi / d^D, with 0 where both are 0.

    Raises:
        ShapeError: If the tables differ in shape
        CoverageError: If d^pi > 0 where d^D = 0 (names the pairs)
    """
    d_pi = np.asarray(d_pi, dtype=np.float64)
    d_D = np.asarray(d_D, dtype=np.float64)
    if d_pi.shape != d_D.shape:
        raise ShapeError(f"Shape mismatch: {d_pi.shape} vs {d_D.shape}")
    uncovered = (d_D <= 0) & (d_pi > 0)
    if np.any(uncovered):
        pairs = [tuple(int(i) for i in index) for index in np.argwhere(uncovered)]
        raise CoverageError(f"d^pi > 0 where d^D = 0 at {pairs}", pairs=pairs)
    ratio = np.zeros_like(d_pi)
    covered = d_D > 0
    ratio[covered] = d_pi[covered] / d_D[covered]
    return ratio


def exact_quantities(
    mdp: TabularMDP, policy: np.ndarray, d_D: np.ndarray, gamma: float
) -> ExactQuantities:
    d_pi = stationary_distribution(mdp, policy, gamma)
    return ExactQuantities(
        d_pi=d_pi,
        zeta_star=exact_ratio(d_pi, d_D),
        mu_pi=float(np.sum(d_pi * mdp.reward)),
        d_D=np.asarray(d_D, dtype=np.float64),
    )


def exact_policy_gradient(
    mdp: TabularMDP,
    policy: SoftmaxTabularPolicy,
    q_table: np.ndarray,
    gamma: float,
    alpha: float,
) -> np.ndarray:
    """
    Gradient over logits of sum_s d^pi(s) sum_a pi(a|s) (Q(s, a) - alpha log pi(a|s)).

    The state weights d^pi(s) are held fixed (semi-gradient).
    """
    state_weights = stationary_distribution(mdp, policy.probabilities(), gamma).sum(axis=1)
    return state_weights[:, None] * policy.state_gradients(q_table, alpha)


def monte_carlo_value(
    mdp: TabularMDP,
    policy: np.ndarray,
    gamma: float,
    rng: Rng,
    trajectories: int = 100000,
    horizon: Optional[int] = None,
):
    """
    Estimate (1 - gamma) E[sum_t gamma^t r_t] by parallel rollouts.

    The horizon defaults to the point where gamma^t < 1e-10.

    Returns:
        (mean, standard error)
    """
    _check_gamma(gamma)
    policy = _check_policy(mdp, policy)
    if horizon is None:
        horizon = int(np.ceil(np.log(1e-10) / np.log(gamma)))

    cumulative_initial = np.cumsum(mdp.initial)
    cumulative_policy = np.cumsum(policy, axis=1)
    cumulative_transition = np.cumsum(mdp.transition, axis=2)

    def draw(cumulative_rows: np.ndarray) -> np.ndarray:
        u = rng.uniform(size=len(cumulative_rows))[:, None] * cumulative_rows[:, -1:]
        index = (cumulative_rows <= u).sum(axis=1)
        return np.minimum(index, cumulative_rows.shape[1] - 1)

    states = draw(np.broadcast_to(cumulative_initial, (trajectories, mdp.n_states)))
    returns = np.zeros(trajectories)
    discount = 1.0
    for _ in range(horizon):
        actions = draw(cumulative_policy[states])
        returns += discount * mdp.reward[states, actions]
        states = draw(cumulative_transition[states, actions])
        discount *= gamma

    samples = (1.0 - gamma) * returns
    return float(samples.mean()), float(samples.std(ddof=1) / np.sqrt(trajectories))


@dataclass
class SaddleSolution:
    zeta: np.ndarray
    nu: np.ndarray
    lam: float
    residual: float
    iterations: int
    # gradient evaluations that saw some Bellman residual below zero
    negative_evaluations: int = 0


def saddle_solve(
    mdp: TabularMDP,
    policy: np.ndarray,
    d_D: np.ndarray,
    gamma: float,
    abs_mode: bool = False,
    iterations: int = 60000,
    tolerance: float = 1e-4,
    decay_horizon: float = 1e6,
    nu_init: Optional[float] = None,
    lam_init: Optional[float] = None,
) -> SaddleSolution:
    """
    Solve the unregularized ratio program by full-expectation projected extragradient.

    With w = d^D * zeta the Lagrangian is

        (1 - gamma) <rho0 pi, nu> + <w, delta(nu)> + lambda (1 - sum w),
        delta(nu) = R + gamma P nu - nu,

    minimized over (nu, lambda) and maximized over w >= 0. In abs_mode
    delta is replaced by |delta|. Each iteration is an extragradient step
    (a look-ahead half step, then the update with the look-ahead gradients)
    rather than a simultaneous (Jacobi) descent-ascent step. The step is
    eta0 / sqrt(1 + t / decay_horizon), eta0 = 0.8 / ||C||_2 where C is the
    bilinear coupling [-(I - gamma P)^T; -1^T]; the result is the iterate
    average over the last 10% of iterations.

    By default nu starts at a constant offset that makes every delta
    positive, so the abs branch never switches sign. nu_init and lam_init
    start from other constants; negative_evaluations in the result counts
    gradient evaluations that met a negative delta.

    Args:
        mdp: Tabular MDP
        policy: (nS, nA) target policy
        d_D: (nS, nA) data distribution with full support
        gamma: Discount in (0, 1)
        abs_mode: Use |delta| in the Lagrangian
        iterations: Fixed iteration budget
        tolerance: Largest acceptable stationarity residual
        decay_horizon: Step-size decay scale
        nu_init: Constant starting value for nu (default: the positive-delta offset)
        lam_init: Starting lambda (default: the same offset)

    Returns:
        SaddleSolution with zeta as an (nS, nA) table

    Raises:
        ValueError: If d^D lacks full support
        ConvergenceError: If the averaged iterate's residual exceeds tolerance
    """
    _check_gamma(gamma)
    policy = _check_policy(mdp, policy)
    d_D = np.asarray(d_D, dtype=np.float64)
    if d_D.shape != policy.shape:
        raise ShapeError(f"d^D must be {policy.shape}, got {d_D.shape}")
    if np.any(d_D <= 0):
        raise ValueError("saddle_solve needs a full-support data distribution")
    d_D = d_D / d_D.sum()

    successor = successor_matrix(mdp, policy)
    start = (1.0 - gamma) * initial_pairs(mdp, policy)
    reward = mdp.reward.reshape(-1)
    n = reward.size
    bellman = np.eye(n) - gamma * successor  # delta(nu) = R - bellman @ nu

    coupling = np.vstack([-bellman.T, -np.ones((1, n))])
    step0 = 0.8 / np.linalg.norm(coupling, 2)

    shift = 10.0 * (1.0 + np.max(np.abs(reward))) / (1.0 - gamma)
    nu = np.full(n, -shift / (1.0 - gamma) if nu_init is None else float(nu_init))
    lam = shift if lam_init is None else float(lam_init)
    w = d_D.reshape(-1).copy()
    negative_evaluations = 0

    def gradients(nu, lam, w, count=True):
        nonlocal negative_evaluations
        delta = reward - bellman @ nu
        if count and np.any(delta < 0):
            negative_evaluations += 1
        sign = np.sign(delta) if abs_mode else np.ones(n)
        effective = np.abs(delta) if abs_mode else delta
        grad_nu = start - bellman.T @ (w * sign)
        grad_lam = 1.0 - w.sum()
        grad_w = effective - lam
        return grad_nu, grad_lam, grad_w

    window_start = iterations - max(1, iterations // 10)
    nu_sum = np.zeros(n)
    w_sum = np.zeros(n)
    lam_sum = 0.0
    for t in range(iterations):
        step = step0 / np.sqrt(1.0 + t / decay_horizon)
        g_nu, g_lam, g_w = gradients(nu, lam, w)
        nu_half = nu - step * g_nu
        lam_half = lam - step * g_lam
        w_half = np.maximum(w + step * g_w, 0.0)
        g_nu, g_lam, g_w = gradients(nu_half, lam_half, w_half)
        nu = nu - step * g_nu
        lam = lam - step * g_lam
        w = np.maximum(w + step * g_w, 0.0)
        if t >= window_start:
            nu_sum += nu
            w_sum += w
            lam_sum += lam

    count = iterations - window_start
    nu, w, lam = nu_sum / count, w_sum / count, lam_sum / count
    grad_nu, grad_lam, _ = gradients(nu, lam, w, count=False)
    residual = float(np.max(np.abs(grad_nu)) + abs(grad_lam))
    mode = "abs" if abs_mode else "signed"
    if residual > tolerance:
        logger.warning(f"Saddle solver ({mode}) did not converge: residual {residual:.3e}")
        raise ConvergenceError(
            f"Saddle solver ({mode}) residual {residual:.3e} above {tolerance:.1e}",
            residual=residual,
        )
    logger.debug(f"Saddle solver ({mode}) converged: residual {residual:.3e}")
    return SaddleSolution(
        zeta=(w / d_D.reshape(-1)).reshape(policy.shape),
        nu=nu.reshape(policy.shape),
        lam=float(lam),
        residual=residual,
        iterations=iterations,
        negative_evaluations=negative_evaluations,
    )
