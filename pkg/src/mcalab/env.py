"""The motion cueing MDP: platform kinematics + vehicle reference + reward.

:class:`VecMcaEnv` steps a batch of independent environments with numpy
arrays (one row per environment) and is what the PPO trainer drives.
:class:`McaEnv` is the single-environment view with explicit reset/step
semantics, used for evaluation and tracing.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field

import numpy as np

from . import trajectory
from .kinematics import DA_MAX, DOMEGA_MAX, DT, PlatformTrajectory, step_arrays
from .reward import RewardWeights, reward_terms
from .trajectory import ReferenceTrajectory

OBS_NAMES = ("x", "v", "a", "f", "phi", "omega", "f_v_next", "omega_v_next")
TRACE_COLUMNS = ("t", "x", "v", "a", "f", "phi", "omega", "f_v", "omega_v", "action_a", "action_w", "reward", "done")


class EnvUsageError(RuntimeError):
    pass


@dataclass(frozen=True)
class ObservationScales:
    x: float = 1.0
    v: float = 1.0
    a: float = 3.0
    f: float = 3.0
    phi: float = np.pi / 2
    omega: float = 0.3
    f_v: float = 3.0
    omega_v: float = 0.3

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.v, self.a, self.f, self.phi, self.omega, self.f_v, self.omega_v])


@dataclass(frozen=True)
class EpisodeConfig:
    dt: float = DT
    steps_per_section: int = 1667
    sections_per_episode: int = 5
    scales: ObservationScales = field(default_factory=ObservationScales)
    da_max: float = DA_MAX
    domega_max: float = DOMEGA_MAX
    k_roll: float = trajectory.K_ROLL
    tau_roll: float = trajectory.TAU_ROLL
    t_start_range: tuple = trajectory.T_START_RANGE
    displacement_range: tuple = trajectory.DISPLACEMENT_RANGE
    peak_range: tuple = trajectory.PEAK_FORCE_RANGE

    @property
    def episode_steps(self) -> int:
        return self.steps_per_section * self.sections_per_episode

    def to_dict(self):
        return asdict(self)

    def sample_reference(self, seed) -> ReferenceTrajectory:
        ref, _ = trajectory.sample_episode(
            seed, self.sections_per_episode, self.steps_per_section, self.dt,
            self.k_roll, self.tau_roll, t_start_range=self.t_start_range,
            displacement_range=self.displacement_range, peak_range=self.peak_range,
        )
        return ref


def episode_seed(base_seed: int, env_index: int, episode: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([base_seed, env_index, episode])


class VecMcaEnv:
    """``n_envs`` independent environments stepped in lockstep.

    Environment ``i`` draws the reference of its ``k``-th episode from the seed
    ``(seed, i, k)``, so a batch of N is identical to N single environments.
    Finished environments are reset automatically; the returned observation is
    then the first one of the new episode.  If ``reference`` is given every
    episode replays it instead of sampling.
    """

    obs_dim = 8
    act_dim = 2

    def __init__(self, n_envs: int = 1, seed: int = 0, config: EpisodeConfig = EpisodeConfig(),
                 weights: RewardWeights = RewardWeights(), reference: ReferenceTrajectory | None = None,
                 auto_reset: bool = True):
        self.n_envs = n_envs
        self.seed = seed
        self.config = config
        self.weights = weights
        self.fixed_reference = reference
        self.auto_reset = auto_reset
        self._inv_scale = 1.0 / config.scales.as_array()
        self.episode_count = np.zeros(n_envs, dtype=np.int64)
        self.completed: list[tuple[int, float, int]] = []  # (env, return, length)
        self._state = np.zeros((6, n_envs))  # x, v, a, phi, omega, f
        self._k = np.zeros(n_envs, dtype=np.int64)
        self._ret = np.zeros(n_envs)
        self._done = np.ones(n_envs, dtype=bool)
        self._ref_f = None
        self._ref_w = None
        self._n_steps = None

    # -- references --------------------------------------------------------
    def _reference_for(self, i: int, seed=None) -> ReferenceTrajectory:
        if self.fixed_reference is not None:
            return self.fixed_reference
        if seed is None:
            seed = episode_seed(self.seed, i, int(self.episode_count[i]))
        return self.config.sample_reference(seed)

    def _install(self, i: int, ref: ReferenceTrajectory):
        n = len(ref)
        if self._ref_f is None or self._ref_f.shape[1] != n + 1:
            if self._ref_f is not None and self.n_envs > 1:
                raise EnvUsageError("all environments of a batch must use equally long references")
            self._ref_f = np.zeros((self.n_envs, n + 1))
            self._ref_w = np.zeros((self.n_envs, n + 1))
        # one sample of padding so the final observation has a "next" reference
        self._ref_f[i, :n] = ref.f_v
        self._ref_f[i, n] = ref.f_v[-1]
        self._ref_w[i, :n] = ref.omega_v
        self._ref_w[i, n] = ref.omega_v[-1]
        self._n_steps = n - 1

    def _reset_env(self, i: int, seed=None):
        self._install(i, self._reference_for(i, seed))
        self._state[:, i] = 0.0
        self._k[i] = 0
        self._ret[i] = 0.0
        self._done[i] = False

    # -- MDP interface -----------------------------------------------------
    def observe(self) -> np.ndarray:
        rows = np.arange(self.n_envs)
        nxt = self._k + 1
        raw = np.stack([
            self._state[0], self._state[1], self._state[2], self._state[5], self._state[3], self._state[4],
            self._ref_f[rows, nxt], self._ref_w[rows, nxt],
        ], axis=1)
        return raw * self._inv_scale

    def reset(self, seeds=None) -> np.ndarray:
        for i in range(self.n_envs):
            self._reset_env(i, None if seeds is None else seeds[i])
        return self.observe()

    def scale_actions(self, actions) -> tuple[np.ndarray, np.ndarray]:
        actions = np.clip(np.asarray(actions, dtype=float).reshape(self.n_envs, 2), -1.0, 1.0)
        return actions[:, 0] * self.config.da_max, actions[:, 1] * self.config.domega_max

    def step(self, actions):
        """Apply normalised actions in [-1, 1]^2. Returns ``(obs, rewards, dones, info)``."""
        if np.any(self._done):
            raise EnvUsageError("step() called on a finished episode; call reset() first")
        da, dw = self.scale_actions(actions)
        x, v, a, phi, omega, f = self._state
        x, v, a, phi, omega, f = step_arrays(x, v, a, phi, omega, da, dw, self.config.dt)
        self._state = np.stack([x, v, a, phi, omega, f])
        self._k += 1
        rows = np.arange(self.n_envs)
        ref_f = self._ref_f[rows, self._k]
        ref_w = self._ref_w[rows, self._k]
        rewards, terms, terminated = reward_terms(x, phi, omega, f, da, dw, ref_f, ref_w, self.weights)
        self._ret += rewards
        dones = terminated | (self._k >= self._n_steps)
        info = {"terminated": terminated.copy(), "truncated": dones & ~terminated, "terms": terms,
                "ref_f": ref_f, "ref_omega": ref_w, "delta_a": da, "delta_omega": dw}
        if np.any(dones):
            info["terminal_obs"] = self.observe()
        self._done = dones.copy()
        for i in np.flatnonzero(dones):
            self.completed.append((int(i), float(self._ret[i]), int(self._k[i])))
            self.episode_count[i] += 1
            if self.auto_reset:
                self._reset_env(int(i))
        return self.observe(), rewards, dones, info

    def denormalize(self, obs) -> np.ndarray:
        return np.asarray(obs) * self.config.scales.as_array()


class McaEnv:
    """Single environment with explicit episode boundaries.

    Stepping a finished episode raises :class:`EnvUsageError`.  Every step is
    recorded so the episode can be exported as a trace.
    """

    def __init__(self, config: EpisodeConfig = EpisodeConfig(), weights: RewardWeights = RewardWeights(),
                 reference: ReferenceTrajectory | None = None, base_seed: int = 0):
        self._vec = VecMcaEnv(1, base_seed, config, weights, reference, auto_reset=False)
        self.config = config
        self.weights = weights
        self._rows: list[list[float]] = []
        self._started = False

    @property
    def reference(self) -> ReferenceTrajectory:
        n = self._vec._n_steps + 1
        return ReferenceTrajectory(self.config.dt, self._vec._ref_f[0, :n].copy(), self._vec._ref_w[0, :n].copy())

    @property
    def n_steps(self) -> int:
        return self._vec._n_steps

    def reset(self, seed=None) -> np.ndarray:
        """Zero the platform and draw a fresh reference from ``seed`` (ignored with a fixed reference)."""
        if seed is not None and not isinstance(seed, np.random.SeedSequence):
            seed = np.random.SeedSequence(seed)
        obs = self._vec.reset(None if seed is None else [seed])[0]
        self._started = True
        s = self._vec._state[:, 0]
        self._rows = [[0.0, *s[[0, 1, 2, 5, 3, 4]], self._vec._ref_f[0, 0], self._vec._ref_w[0, 0], 0.0, 0.0, 0.0, 0.0]]
        return obs

    def step(self, action):
        if not self._started or self._vec._done[0]:
            raise EnvUsageError("step() called before reset() or after the episode ended")
        obs, r, d, info = self._vec.step(np.asarray(action, dtype=float).reshape(1, 2))
        s = self._vec._state[:, 0]
        k = int(self._vec._k[0])
        self._rows.append([k * self.config.dt, *s[[0, 1, 2, 5, 3, 4]], info["ref_f"][0], info["ref_omega"][0],
                           info["delta_a"][0], info["delta_omega"][0], r[0], float(d[0])])
        info = {k_: (v[:, 0] if k_ == "terms" else v[0]) for k_, v in info.items()}
        return obs[0], float(r[0]), bool(d[0]), info

    @property
    def platform_state(self):
        x, v, a, phi, omega, f = self._vec._state[:, 0]
        return dict(x=x, v=v, a=a, phi=phi, omega=omega, f=f)

    def trace(self) -> dict[str, np.ndarray]:
        data = np.array(self._rows)
        return {name: data[:, j] for j, name in enumerate(TRACE_COLUMNS)}

    def platform_trajectory(self) -> PlatformTrajectory:
        tr = self.trace()
        return PlatformTrajectory(self.config.dt, tr["x"], tr["v"], tr["a"], tr["phi"], tr["omega"], tr["f"])

    def write_trace_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for row in self._rows:
                w.writerow([f"{v:.12g}" for v in row[:-1]] + [str(int(row[-1]))])


def rollout_policy(act, reference: ReferenceTrajectory, config: EpisodeConfig = EpisodeConfig(),
                   weights: RewardWeights = RewardWeights()) -> tuple[McaEnv, float, bool]:
    """Run ``act(obs) -> action`` over a fixed reference until the episode ends.

    Returns the environment (holding the trace), the return, and whether a
    workspace termination occurred.
    """
    env = McaEnv(config, weights, reference)
    obs = env.reset()
    total, done, terminated = 0.0, False, False
    while not done:
        obs, r, done, info = env.step(act(obs))
        total += r
        terminated = terminated or bool(info["terminated"])
    return env, total, terminated
