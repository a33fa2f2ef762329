"""Policy optimization over the MDP posterior: BBI, PSRL, MMBI, Bayes bound."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .inference import (
    DEFAULT_N_NEXT_DRAWS,
    LikelihoodScale,
    MdpEnsemble,
    Method1Engine,
    ValueBeliefGaussian,
    WeightedValueEnsemble,
    fit_gaussian_belief,
    propagate_values,
    sample_belief,
)
from .mdp import (
    NonstationaryPolicy,
    StationaryPolicy,
    backwards_induction,
    exact_optimal,
)


@dataclass
class PlannerConfig:
    lookahead: int = 100
    n_mdp_samples: int = 10
    n_value_samples: int = 50
    n_next_draws: int = DEFAULT_N_NEXT_DRAWS
    scale: LikelihoodScale = field(default_factory=lambda: LikelihoodScale(1.0))
    replan_schedule: str = "triangular"

    def __post_init__(self):
        if self.lookahead < 1 or self.n_mdp_samples < 1 or self.n_value_samples < 1:
            raise ValueError("lookahead and sample counts must be >= 1")


@dataclass(frozen=True)
class PlanOutput:
    policy: NonstationaryPolicy
    beliefs: list  # [psi_1, ..., psi_T]
    bayes_q: list  # diagnostic Q-bar tables, [Q_1, ..., Q_T]

    def __post_init__(self):
        if len(self.policy) != len(self.beliefs) or len(self.policy) != len(self.bayes_q):
            raise ValueError("policy, beliefs and Q tables must have equal length")


def bayes_q(mdps: MdpEnsemble, weights: np.ndarray, value_samples: np.ndarray) -> np.ndarray:
    """Posterior-expected Q table from weighted MDP and value samples.

    Q(s,a) = sum_{j,k} w_jk/N_V * [r_j(s,a) + gamma sum_s' P_j(s'|s,a) V^k(s')],
    with the weights already normalized over j for each k.
    """
    n_v = value_samples.shape[0]
    w_hat = weights / n_v  # total mass 1
    w_j = w_hat.sum(axis=1)  # (N_M,)
    v_j = w_hat @ value_samples  # (N_M, S): sum_k w_hat_jk V^k
    q = np.einsum("j,jsa->sa", w_j, mdps.reward, optimize=True)
    q += mdps.gamma * np.einsum("jsat,jt->sa", mdps.transition, v_j, optimize=True)
    return q


def bbi_plan(
    posterior,
    config: PlannerConfig,
    rng: np.random.Generator,
    uniform_weights: bool = False,
    mdps: MdpEnsemble | None = None,
) -> PlanOutput:
    """Bayesian backwards induction with Monte-Carlo value-belief propagation.

    Each lookahead step scores the sampled MDPs against the step-(i+1)
    belief, takes the greedy policy of the posterior-expected Q table, then
    rescores and propagates under that policy to obtain the step-i belief.
    With ``uniform_weights`` the importance weighting collapses to the
    mean-field ablation.
    """
    if mdps is None:
        mdps = MdpEnsemble.sample(posterior, config.n_mdp_samples, rng)
    lookahead = config.lookahead
    n_states, n_actions = mdps.reward.shape[1], mdps.reward.shape[2]
    engine = Method1Engine(
        mdps,
        config.scale,
        rng,
        n_value_samples=config.n_value_samples,
        n_next_draws=config.n_next_draws,
        uniform_weights=uniform_weights,
    )
    beliefs = [None] * (lookahead + 1)
    policies = [None] * (lookahead + 1)
    q_tables = [None] * (lookahead + 1)
    beliefs[lookahead] = ValueBeliefGaussian.point_mass(np.zeros(n_states))
    # terminal step: myopic on the posterior-mean sampled reward
    q_tables[lookahead] = mdps.reward.mean(axis=0)
    policies[lookahead] = StationaryPolicy.deterministic(
        np.argmax(q_tables[lookahead], axis=1), n_actions
    )
    for i in range(lookahead - 1, 0, -1):
        next_belief = beliefs[i + 1]
        values = sample_belief(next_belief, config.n_value_samples, engine.rng)
        w_in = engine.reweight(values, policies[i + 1], next_belief)
        q_bar = bayes_q(mdps, w_in, values)
        policy_i = StationaryPolicy.deterministic(np.argmax(q_bar, axis=1), n_actions)
        w_out = engine.reweight(values, policy_i, next_belief)
        propagated = propagate_values(mdps, policy_i, values)
        beliefs[i] = fit_gaussian_belief(WeightedValueEnsemble(propagated, w_out))
        policies[i] = policy_i
        q_tables[i] = q_bar
    return PlanOutput(
        NonstationaryPolicy(tuple(policies[1:])), beliefs[1:], q_tables[1:]
    )


def psrl_plan(posterior, rng: np.random.Generator) -> StationaryPolicy:
    """Posterior sampling: one MDP draw, solved exactly."""
    mdp = posterior.sample_mdp(rng)
    policy, _ = exact_optimal(mdp)
    return policy


def mmbi_plan(
    posterior,
    n_mdp_samples: int,
    horizon: int,
    rng: np.random.Generator,
    mdps: MdpEnsemble | None = None,
) -> NonstationaryPolicy:
    """Simultaneous backward induction across posterior samples.

    Keeps one value vector per sampled MDP; at each step the shared policy
    is greedy for the across-sample average Q, and every per-MDP value is
    updated under that shared policy.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if mdps is None:
        mdps = MdpEnsemble.sample(posterior, n_mdp_samples, rng)
    n_states, n_actions = mdps.reward.shape[1], mdps.reward.shape[2]
    if mdps.n_mdps == 1:
        policy, _ = backwards_induction(mdps.mdp(0), horizon)
        return policy
    v = np.zeros((mdps.n_mdps, n_states))
    policies = []
    for _ in range(horizon):
        q = mdps.reward + mdps.gamma * np.einsum(
            "jsat,jt->jsa", mdps.transition, v, optimize=True
        )
        greedy = np.argmax(q.mean(axis=0), axis=1)
        policies.append(StationaryPolicy.deterministic(greedy, n_actions))
        v = q[:, np.arange(n_states), greedy]
    policies.reverse()
    return NonstationaryPolicy(tuple(policies))


def bayes_upper_bound(posterior, rng: np.random.Generator, n_mdp_samples: int = 100):
    """Monte-Carlo bound on the Bayes-optimal value: average of per-sample optima.

    Returns (per_state_mean, per_state_draws) where the draws are the
    (n_mdp_samples, n_states) optimal values of each posterior sample.
    """
    draws = np.stack(
        [exact_optimal(posterior.sample_mdp(rng))[1].values for _ in range(n_mdp_samples)]
    )
    return draws.mean(axis=0), draws
