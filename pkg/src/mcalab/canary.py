"""A 1-D integrator that must reach and hold a constant target.

Small enough that a working PPO learns it in well under 200k steps; used as
a smoke test for the trainer.
"""
import numpy as np


class IntegratorCanary:
    obs_dim = 2
    act_dim = 1

    def __init__(self, n_envs: int = 1, seed: int = 0, horizon: int = 50, gain: float = 0.1):
        self.n_envs = n_envs
        self.horizon = horizon
        self.gain = gain
        self.rng = np.random.default_rng(np.random.SeedSequence([seed, 0xCA]))
        self.completed = []
        self.pos = np.zeros(n_envs)
        self.target = np.zeros(n_envs)
        self.k = np.zeros(n_envs, dtype=np.int64)
        self.ret = np.zeros(n_envs)

    def _obs(self):
        return np.stack([self.pos, self.target], axis=1)

    def _reset(self, idx):
        self.pos[idx] = 0.0
        self.target[idx] = self.rng.uniform(-1.0, 1.0, size=len(idx))
        self.k[idx] = 0
        self.ret[idx] = 0.0

    def reset(self):
        self._reset(np.arange(self.n_envs))
        return self._obs()

    def step(self, actions):
        u = np.clip(np.asarray(actions, dtype=float).reshape(self.n_envs), -1.0, 1.0)
        self.pos = self.pos + self.gain * u
        reward = -((self.pos - self.target) ** 2)
        self.ret += reward
        self.k += 1
        done = self.k >= self.horizon
        idx = np.flatnonzero(done)
        info = {"truncated": done.copy()}
        if len(idx):
            info["terminal_obs"] = self._obs()
        for i in idx:
            self.completed.append((int(i), float(self.ret[i]), int(self.k[i])))
        if len(idx):
            self._reset(idx)
        return self._obs(), reward, done, info
