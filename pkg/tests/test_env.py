import csv

import numpy as np
import pytest

from mcalab.env import (OBS_NAMES, TRACE_COLUMNS, EnvUsageError, EpisodeConfig, McaEnv, VecMcaEnv, episode_seed,
                        rollout_policy)
from mcalab.kinematics import DA_MAX, DT
from mcalab.reward import RewardWeights
from mcalab.trajectory import LaneChangeSpec, ReferenceTrajectory, lane_change_profile


def test_episode_config_geometry():
    c = EpisodeConfig()
    assert c.dt * c.steps_per_section == pytest.approx(20.004, abs=1e-12)
    assert c.episode_steps == 5 * 1667
    assert len(OBS_NAMES) == 8


def test_reset_zero_platform_and_determinism():
    env = McaEnv()
    o1 = env.reset(seed=11)
    assert np.all(o1[:6] == 0.0)
    ref1 = env.reference
    o2 = env.reset(seed=11)
    assert np.array_equal(o1, o2) and np.array_equal(ref1.f_v, env.reference.f_v)
    env.reset(seed=12)
    assert not np.array_equal(ref1.f_v, env.reference.f_v)


def test_flat_stretch_with_zero_actions_gives_unit_reward():
    env = McaEnv(reference=ReferenceTrajectory.zeros(200))
    env.reset()
    rewards = [env.step([0.0, 0.0])[1] for _ in range(199)]
    assert rewards == [1.0] * 199


def test_full_acceleration_crosses_workspace_at_predicted_step():
    env = McaEnv(reference=ReferenceTrajectory.zeros(2000))
    env.reset()
    # x_k = dt^2 * da * k (k+1) (k+2) / 6 under constant increments
    k = np.arange(1, 2000)
    x = DT**2 * DA_MAX * k * (k + 1) * (k + 2) / 6
    predicted = int(k[np.argmax(x >= 1.0)])
    assert x[predicted - 1] - 1.0 > 1e-6 and 1.0 - x[predicted - 2] > 1e-6
    n = 0
    done = False
    while not done:
        _, r, done, info = env.step([1.0, 0.0])
        n += 1
    assert n == predicted
    assert info["terminated"] and r < -90
    with pytest.raises(EnvUsageError):
        env.step([0.0, 0.0])


def test_zero_action_episode_return_closed_form():
    ref = lane_change_profile(LaneChangeSpec(2.0, 1, 3.0, 3.5), DT)
    w = RewardWeights()
    _, ret, term = rollout_policy(lambda o: np.zeros(2), ref, weights=w)
    expected = (len(ref) - 1) - np.sum(w.w_f * np.abs(ref.f_v[1:]))
    assert not term
    assert ret == pytest.approx(expected, abs=1e-9)


def test_full_episode_length():
    env = VecMcaEnv(1, 0, auto_reset=False)
    env.reset()
    n = 0
    done = np.array([False])
    while not done[0]:
        _, _, done, info = env.step(np.zeros((1, 2)))
        n += 1
    assert n == 5 * 1667 and info["truncated"][0] and not info["terminated"][0]


def test_step_before_reset_is_usage_error():
    with pytest.raises(EnvUsageError):
        McaEnv().step([0, 0])


def test_observation_round_trip_and_layout():
    rng = np.random.default_rng(0)
    env = VecMcaEnv(2, 3)
    obs = env.reset()
    for _ in range(50):
        obs, *_ = env.step(rng.uniform(-1, 1, (2, 2)))
    raw = env.denormalize(obs)
    x, v, a, phi, omega, f = env._state
    assert np.allclose(raw[:, :6], np.stack([x, v, a, f, phi, omega], 1), rtol=1e-15, atol=1e-15)
    rows = np.arange(2)
    assert np.allclose(raw[:, 6], env._ref_f[rows, env._k + 1], rtol=1e-15, atol=0)


def test_observation_carries_next_reference():
    ref = ReferenceTrajectory(DT, np.arange(10.0) * 0.1, np.zeros(10))
    env = McaEnv(reference=ref)
    obs = env.reset()
    assert obs[6] * 3.0 == pytest.approx(0.1)
    obs, *_ = env.step([0, 0])
    assert obs[6] * 3.0 == pytest.approx(0.2)


def test_reward_uses_post_step_state_and_same_index_reference():
    ref = ReferenceTrajectory(DT, np.array([0.0, 0.4, 0.0]), np.zeros(3))
    env = McaEnv(reference=ref)
    env.reset()
    _, r, _, info = env.step([0.0, 0.0])
    assert r == pytest.approx(1.0 - 0.25 * 0.4)


def test_markov_identical_futures():
    rng = np.random.default_rng(5)
    acts = rng.uniform(-1, 1, (300, 2)) * np.array([0.05, 1.0])
    acts[150:, 0] *= -1
    outs = []
    for _ in range(2):
        env = McaEnv(base_seed=9)
        env.reset(seed=4)
        outs.append([env.step(a)[0] for a in acts])
    assert np.array_equal(np.array(outs[0]), np.array(outs[1]))


def test_batch_equals_independent_references():
    cfg = EpisodeConfig()
    env = VecMcaEnv(3, 21, cfg)
    env.reset()
    for i in range(3):
        ref = cfg.sample_reference(episode_seed(21, i, 0))
        assert np.array_equal(env._ref_f[i, :-1], ref.f_v)


def test_auto_reset_draws_next_episode():
    cfg = EpisodeConfig(steps_per_section=300, sections_per_episode=1, t_start_range=(0.01, 0.02),
                        peak_range=(2.1, 2.2), displacement_range=(1.0, 1.01))
    env = VecMcaEnv(1, 0, cfg)
    env.reset()
    first = env._ref_f[0].copy()
    for _ in range(300):
        _, _, d, info = env.step(np.zeros((1, 2)))
    assert d[0] and "terminal_obs" in info
    assert env.episode_count[0] == 1 and not np.array_equal(first, env._ref_f[0])
    assert env.completed[0][2] == 300


def test_trace_export(tmp_path, iso_ref):
    env, _, _ = rollout_policy(lambda o: np.array([0.01, -0.1]), ReferenceTrajectory(DT, iso_ref.f_v[:300],
                                                                                     iso_ref.omega_v[:300]))
    path = tmp_path / "trace.csv"
    env.write_trace_csv(path)
    rows = list(csv.reader(open(path)))
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert len(rows) == 301
    tr = env.trace()
    assert np.allclose(tr["t"], np.arange(300) * DT)
    assert np.allclose(tr["action_a"][1:], 0.01 * DA_MAX)
    p = env.platform_trajectory()
    assert np.array_equal(p.x, tr["x"])
