"""Tabular MDPs, policies and exact dynamic-programming solvers.

Everything here is deliberately small and exact: these routines double as
ground-truth oracles for the approximate planners, so tolerances are tight
and the linear-solve path is preferred whenever it is feasible.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ROW_SUM_TOL = 1e-9
VALUE_ITER_TOL = 1e-9
VALUE_ITER_MAX_SWEEPS = 100_000
# above this many states the (I - gamma P) solve gets replaced by iteration
LINEAR_SOLVE_MAX_STATES = 2000


class DimensionError(ValueError):
    """Raised when operands of a Bellman computation do not line up."""


@dataclass(frozen=True)
class DiscreteMdp:
    """A finite MDP: transition kernel P(s'|s,a), mean rewards r(s,a), discount."""

    transition: np.ndarray  # (S, A, S)
    reward_mean: np.ndarray  # (S, A)
    discount: float

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=float)
        r = np.asarray(self.reward_mean, dtype=float)
        if t.ndim != 3 or t.shape[0] != t.shape[2]:
            raise DimensionError(f"transition must be (S, A, S), got {t.shape}")
        if r.shape != t.shape[:2]:
            raise DimensionError(
                f"reward_mean shape {r.shape} does not match transitions {t.shape[:2]}"
            )
        if np.any(t < 0):
            raise ValueError("transition kernel has negative entries")
        row_sums = t.sum(axis=2)
        if np.max(np.abs(row_sums - 1.0)) > ROW_SUM_TOL:
            raise ValueError("transition rows must sum to 1")
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must lie in (0, 1), got {self.discount}")
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "reward_mean", r)
        t.setflags(write=False)
        r.setflags(write=False)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]


@dataclass(frozen=True)
class StationaryPolicy:
    """Stochastic Markov policy pi(a|s) as an (S, A) row-stochastic table."""

    action_prob: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.action_prob, dtype=float)
        if p.ndim != 2:
            raise DimensionError(f"action_prob must be (S, A), got {p.shape}")
        if np.any(p < 0) or np.max(np.abs(p.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
            raise ValueError("policy rows must be nonnegative and sum to 1")
        object.__setattr__(self, "action_prob", p)
        p.setflags(write=False)

    @staticmethod
    def deterministic(actions, n_actions: int) -> "StationaryPolicy":
        actions = np.asarray(actions, dtype=int)
        p = np.zeros((actions.shape[0], n_actions))
        p[np.arange(actions.shape[0]), actions] = 1.0
        return StationaryPolicy(p)

    @staticmethod
    def uniform(n_states: int, n_actions: int) -> "StationaryPolicy":
        return StationaryPolicy(np.full((n_states, n_actions), 1.0 / n_actions))

    def greedy_actions(self) -> np.ndarray:
        return np.argmax(self.action_prob, axis=1)

    def sample_action(self, state: int, rng: np.random.Generator) -> int:
        return int(rng.choice(self.action_prob.shape[1], p=self.action_prob[state]))


@dataclass(frozen=True)
class NonstationaryPolicy:
    """A finite sequence of stationary policies, one per remaining step."""

    steps: tuple

    def __post_init__(self):
        if len(self.steps) < 1:
            raise ValueError("need at least one policy step")
        object.__setattr__(self, "steps", tuple(self.steps))

    def __len__(self) -> int:
        return len(self.steps)

    def first(self) -> StationaryPolicy:
        return self.steps[0]


@dataclass(frozen=True)
class ValueVector:
    """State values V(s), optionally with the matching Q(s,a) table."""

    values: np.ndarray
    q_values: np.ndarray | None = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("value vector has non-finite entries")
        object.__setattr__(self, "values", v)
        if self.q_values is not None:
            q = np.asarray(self.q_values, dtype=float)
            if not np.all(np.isfinite(q)):
                raise ValueError("Q table has non-finite entries")
            object.__setattr__(self, "q_values", q)


def policy_marginals(mdp: DiscreteMdp, policy: StationaryPolicy):
    """Return (P^pi, r^pi): kernel and mean reward with the policy marginalized out."""
    pi = policy.action_prob
    if pi.shape != mdp.reward_mean.shape:
        raise DimensionError(
            f"policy shape {pi.shape} does not match MDP {mdp.reward_mean.shape}"
        )
    p_pi = np.einsum("sat,sa->st", mdp.transition, pi)
    r_pi = np.einsum("sa,sa->s", mdp.reward_mean, pi)
    return p_pi, r_pi


def bellman_backup(
    mdp: DiscreteMdp, policy: StationaryPolicy, v_next: ValueVector
) -> ValueVector:
    """One application of the Bellman operator for `policy`."""
    p_pi, r_pi = policy_marginals(mdp, policy)
    v = np.asarray(v_next.values, dtype=float)
    if v.shape[0] != mdp.n_states:
        raise DimensionError(
            f"value vector length {v.shape[0]} != n_states {mdp.n_states}"
        )
    return ValueVector(r_pi + mdp.discount * (p_pi @ v))


def exact_policy_value(mdp: DiscreteMdp, policy: StationaryPolicy) -> ValueVector:
    """Fixed point of the policy's Bellman operator, V = r^pi + gamma P^pi V."""
    p_pi, r_pi = policy_marginals(mdp, policy)
    n = mdp.n_states
    if n <= LINEAR_SOLVE_MAX_STATES:
        v = np.linalg.solve(np.eye(n) - mdp.discount * p_pi, r_pi)
    else:
        v = np.zeros(n)
        for _ in range(VALUE_ITER_MAX_SWEEPS):
            v_new = r_pi + mdp.discount * (p_pi @ v)
            if np.max(np.abs(v_new - v)) <= VALUE_ITER_TOL:
                v = v_new
                break
            v = v_new
    return ValueVector(v)


def stationary_distribution(mdp: DiscreteMdp, policy: StationaryPolicy) -> np.ndarray:
    """Stationary state distribution d = d P^pi, solved as a linear system.

    Requires the chain induced by the policy to have a unique stationary
    distribution (one recurrent class); the normalization constraint replaces
    one redundant balance equation.
    """
    p_pi, _ = policy_marginals(mdp, policy)
    n = mdp.n_states
    a = np.vstack([(np.eye(n) - p_pi).T, np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    d, *_ = np.linalg.lstsq(a, b, rcond=None)
    d = np.clip(d, 0.0, None)
    return d / d.sum()


def stationary_average_reward(mdp: DiscreteMdp, policy: StationaryPolicy) -> float:
    """Long-run average reward per step of the policy, sum_s d(s) r^pi(s)."""
    _, r_pi = policy_marginals(mdp, policy)
    return float(stationary_distribution(mdp, policy) @ r_pi)


def q_from_values(mdp: DiscreteMdp, v: np.ndarray) -> np.ndarray:
    """Q(s,a) = r(s,a) + gamma sum_s' P(s'|s,a) V(s')."""
    return mdp.reward_mean + mdp.discount * (mdp.transition @ np.asarray(v))


def exact_optimal(mdp: DiscreteMdp):
    """Value iteration to convergence; greedy ties break to the lowest action index.

    Returns (StationaryPolicy, ValueVector); the value satisfies the Bellman
    optimality equation to well below 1e-7 in sup norm.
    """
    v = np.zeros(mdp.n_states)
    for _ in range(VALUE_ITER_MAX_SWEEPS):
        q = q_from_values(mdp, v)
        v_new = q.max(axis=1)
        if np.max(np.abs(v_new - v)) <= VALUE_ITER_TOL:
            v = v_new
            break
        v = v_new
    q = q_from_values(mdp, v)
    greedy = np.argmax(q, axis=1)
    policy = StationaryPolicy.deterministic(greedy, mdp.n_actions)
    # polish the value for the greedy policy so the fixed point is exact
    value = exact_policy_value(mdp, policy)
    return policy, ValueVector(value.values, q_values=q_from_values(mdp, value.values))


def backwards_induction(mdp: DiscreteMdp, horizon: int):
    """Finite-horizon dynamic programming with terminal value zero.

    Returns (NonstationaryPolicy, [V_1, ..., V_T+1]) where V_{T+1} = 0 and the
    policy's i-th entry is greedy for the remaining i..T steps.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    v = np.zeros(mdp.n_states)
    values = [ValueVector(v)]
    policies = []
    for _ in range(horizon):
        q = q_from_values(mdp, v)
        greedy = np.argmax(q, axis=1)
        policies.append(StationaryPolicy.deterministic(greedy, mdp.n_actions))
        v = q.max(axis=1)
        values.append(ValueVector(v, q_values=q))
    policies.reverse()
    values.reverse()
    return NonstationaryPolicy(tuple(policies)), values
