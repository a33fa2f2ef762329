"""Benchmark environments: dynamics, rewards, exported MDPs, determinism."""
import numpy as np
import pytest

from bbrl.envs import (
    InvalidActionError,
    MapParseError,
    doubleloop,
    inverted_pendulum,
    lavalake,
    linear_model,
    maze,
    nchain,
    parse_map,
    pendulum_features,
    pendulum_features_batch,
    pendulum_model_features_batch,
)
from bbrl.envs.grid import GOAL, LAVA, START, WALL
from bbrl.envs.pendulum import pendulum_dynamics


def test_nchain_rewards_and_shape():
    env = nchain(seed=0)
    assert env.n_states == 5 and env.n_actions == 2
    mdp = env.as_mdp()
    # return action from state 0: reward 2 unless the slip advances instead
    assert np.isclose(mdp.reward_mean[0, 0], 0.8 * 2.0)
    # advance from the last state: 10 unless the slip returns (paying 2)
    assert np.isclose(mdp.reward_mean[4, 1], 0.8 * 10.0 + 0.2 * 2.0)
    assert np.allclose(mdp.transition.sum(axis=2), 1.0)


def test_nchain_slip_frequency():
    env = nchain(seed=7)
    n, slipped = 100_000, 0
    for _ in range(n):
        env.set_state(0)
        result = env.step(1)  # advance; a slip returns to 0 and pays 2
        if result.next_state == 0:
            slipped += 1
    assert abs(slipped / n - 0.2) < 0.005


def test_nchain_simulator_matches_export():
    env = nchain(seed=3)
    mdp = env.as_mdp()
    n = 20_000
    for state, action in ((2, 1), (4, 1), (1, 0)):
        hits = np.zeros(5)
        for _ in range(n):
            env.set_state(state)
            hits[env.step(action).next_state] += 1
        for s2 in range(5):
            p = mdp.transition[state, action, s2]
            se = np.sqrt(max(p * (1 - p) / n, 1e-12))
            assert abs(hits[s2] / n - p) <= 3 * se + 1e-9


def test_nchain_invalid_action():
    with pytest.raises(InvalidActionError):
        nchain(seed=0).step(2)


def test_doubleloop_loop_payoffs():
    env = doubleloop()
    env.reset()
    total = sum(env.step(1).reward for _ in range(5))
    assert total == 2.0  # left loop pays 2 per 5-step lap
    env.reset()
    total = sum(env.step(0).reward for _ in range(5))
    assert total == 1.0  # right loop pays 1 per 5-step lap
    assert env.state == 0


def test_doubleloop_left_loop_abort():
    env = doubleloop()
    env.reset()
    env.step(1)  # enter the left loop
    result = env.step(0)  # action 0 inside it resets without payoff
    assert result.next_state == 0 and result.reward == 0.0


def test_doubleloop_export_deterministic():
    mdp = doubleloop().as_mdp()
    assert np.all(np.isin(mdp.transition, (0.0, 1.0)))
    # best stationary behavior is the left lap at 2 reward per 5 steps
    from bbrl.mdp import StationaryPolicy, stationary_average_reward

    left = StationaryPolicy.deterministic(np.ones(9, dtype=int), 2)
    assert np.isclose(stationary_average_reward(mdp, left), 0.4)


def test_lavalake_layout_rewards():
    env = lavalake("5x7", seed=0)
    grid = env.grid
    assert (grid.width, grid.height) == (7, 5)
    assert grid.slip_intended == 0.8 and grid.slip_perp == 0.1
    mdp = env.as_mdp()
    goal_loc = next(i for i, loc in enumerate(env.locations) if grid.kind(*loc) == GOAL)
    # moving straight into the goal pays 50 with the intended-move probability
    gr, gc = env.locations[goal_loc]
    left_of_goal = env.loc_index[(gr, gc - 1)]
    cell_reward = {GOAL: 50.0, LAVA: -50.0}
    expected = 0.0
    for (dr, dc), prob in (((0, 1), 0.8), ((-1, 0), 0.1), ((1, 0), 0.1)):
        nr, nc = gr + dr, gc - 1 + dc
        in_bounds = 0 <= nr < grid.height and 0 <= nc < grid.width
        kind = grid.kind(nr, nc) if in_bounds else WALL
        target = (gr, gc - 1) if kind == WALL else (nr, nc)
        expected += prob * cell_reward.get(grid.kind(*target), -1.0)
    assert np.isclose(mdp.reward_mean[left_of_goal, 3], expected)
    # the goal transition teleports back to the start state
    assert mdp.transition[left_of_goal, 3, env.start_state] >= 0.8


def test_lavalake_wall_blocking():
    env = lavalake("5x7", seed=0, slip_intended=1.0, slip_perp=0.0)
    env.reset()  # start is the top-left corner
    result = env.step(0)  # up, into the boundary
    assert result.next_state == env.start_state
    assert result.reward == -1.0


def test_lavalake_slip_frequency():
    env = lavalake("5x7", seed=11)
    start = env.start_state
    n, intended = 100_000, 0
    for _ in range(n):
        env.set_state(start)
        result = env.step(3)  # right along the top row, all outcomes distinct
        intended += result.next_state == env._encode(env.loc_index[(0, 1)], 0)
    assert abs(intended / n - 0.8) < 0.005


def test_lavalake_simulator_matches_export():
    env = lavalake("10x10", seed=5)
    mdp = env.as_mdp()
    state, action, n = env.start_state, 1, 20_000
    hits = {}
    for _ in range(n):
        env.set_state(state)
        s2 = env.step(action).next_state
        hits[s2] = hits.get(s2, 0) + 1
    for s2, count in hits.items():
        p = mdp.transition[state, action, s2]
        se = np.sqrt(p * (1 - p) / n)
        assert abs(count / n - p) <= 3 * se + 1e-9


def test_maze_state_count_and_flags():
    env = maze(seed=0)
    assert env.n_states == 264
    assert len(env.flag_cells) == 3
    assert env.reward_bounds() == (0.0, 3.0)
    # reaching the goal with k flags pays k
    goal_loc = next(
        i for i, loc in enumerate(env.locations) if env.grid.kind(*loc) == GOAL
    )
    gr, gc = env.locations[goal_loc]
    neighbor = env.loc_index[(gr, gc - 1)] if (gr, gc - 1) in env.loc_index else env.loc_index[(gr - 1, gc)]
    mask = 0b101  # two flags collected
    env.slip_intended, env.slip_perp = 1.0, 0.0
    env.set_state(env._encode(neighbor, mask))
    dr = gr - env.locations[neighbor][0]
    dc = gc - env.locations[neighbor][1]
    action = {(-1, 0): 0, (1, 0): 1, (0, -1): 2, (0, 1): 3}[(dr, dc)]
    result = env.step(action)
    assert result.reward == 2.0 and result.terminal
    assert result.next_state == env.start_state


def test_map_parse_errors_cite_position():
    with pytest.raises(MapParseError, match="line 1"):
        parse_map("3 2 0.8\nS.G\n...")
    with pytest.raises(MapParseError, match="line 3"):
        parse_map("3 2 0.8 0.1\nS.G\n..")
    with pytest.raises(MapParseError, match="line 2, column 2"):
        parse_map("3 2 0.8 0.1\nSXG\n...")
    with pytest.raises(MapParseError, match="unreachable"):
        parse_map("3 3 0.8 0.1\nS#G\n.#.\n.#.")


def test_linear_model_spectral_radius_capped():
    for seed in range(5):
        env = linear_model(seed=seed)
        for m in env.transition_matrices:
            rho = max(abs(np.linalg.eigvals(m)))
            assert rho <= 0.95 + 1e-9


def test_linear_model_reward_is_linear():
    env = linear_model(seed=2, noise_std=0.0)
    state = env.reset()
    result = env.step(4)
    assert np.isclose(result.reward, env.reward_vectors[4] @ state)
    assert np.allclose(result.next_state, env.transition_matrices[4] @ state)


def test_linear_model_determinism():
    a, b = linear_model(seed=9), linear_model(seed=9)
    a.reset(), b.reset()
    for t in range(50):
        ra, rb = a.step(t % 11), b.step(t % 11)
        assert np.array_equal(ra.next_state, rb.next_state)
        assert ra.reward == rb.reward


def test_pendulum_equilibrium():
    env = inverted_pendulum(seed=0, force_noise=0.0)
    env.set_state(0.0, 0.0)
    result = env.step(1)  # zero force at the upright equilibrium
    assert np.allclose(result.next_state, [0.0, 0.0])
    assert result.reward == 0.0 and not result.terminal


def test_pendulum_falls_without_control():
    env = inverted_pendulum(seed=0, force_noise=0.0)
    env.set_state(0.1, 0.0)
    thetas = [0.1]
    for _ in range(30):
        result = env.step(1)
        if result.terminal:
            break
        thetas.append(result.next_state[0])
    diffs = np.diff(thetas)
    assert np.all(diffs >= -1e-12)  # the angle never swings back on its own
    assert result.terminal and result.reward == -1.0


def test_pendulum_dynamics_signs():
    assert pendulum_dynamics(0.0, 0.0, 0.0) == 0.0
    assert pendulum_dynamics(0.1, 0.0, 0.0) > 0.0  # gravity pulls outward
    assert pendulum_dynamics(0.0, 0.0, 50.0) < 0.0  # push reacts against the pole


def test_pendulum_features_values():
    phi = pendulum_features((0.0, 0.0))
    assert phi.shape == (10,)
    assert phi[0] == 1.0
    assert np.isclose(phi[5], 1.0)  # center (0, 0) is the fifth RBF
    theta, vel = np.pi / 4, 1.0
    phi = pendulum_features((theta, vel))
    centers = [(t, v) for t in (-np.pi / 4, 0.0, np.pi / 4) for v in (-1.0, 0.0, 1.0)]
    expected = [np.exp(-((t - theta) ** 2 + (v - vel) ** 2) / 2.0) for t, v in centers]
    assert np.allclose(phi[1:], expected)


def test_pendulum_feature_batches_agree():
    rng = np.random.default_rng(0)
    states = rng.uniform(-1.5, 1.5, size=(20, 2))
    batch = pendulum_features_batch(states)
    rows = np.stack([pendulum_features(s) for s in states])
    assert np.allclose(batch, rows)
    model = pendulum_model_features_batch(states)
    assert model.shape == (20, 12)
    assert np.allclose(model[:, :2], states)
    assert np.allclose(model[:, 2:], batch)


def test_pendulum_random_policy_falls_fast():
    env = inverted_pendulum(seed=0)
    rng = np.random.default_rng(1)
    lengths = []
    for _ in range(1000):
        env.reset()
        steps = 0
        while True:
            steps += 1
            if env.step(int(rng.integers(0, 3))).terminal:
                break
        lengths.append(steps)
    assert np.mean(lengths) < 200


def test_pendulum_determinism():
    a, b = inverted_pendulum(seed=4), inverted_pendulum(seed=4)
    a.reset(), b.reset()
    for t in range(100):
        ra, rb = a.step(t % 3), b.step(t % 3)
        assert np.array_equal(ra.next_state, rb.next_state)
        assert ra.reward == rb.reward and ra.terminal == rb.terminal
