"""Proximal policy optimisation with separate actor and critic MLPs.

Rollouts are collected from a batched environment (``VecMcaEnv`` or anything
with the same ``reset``/``step``/``completed`` surface), advantages come from
GAE, and the actor is updated with the clipped surrogate objective.
"""
from __future__ import annotations

import csv
import logging
import os
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from . import nn

log = logging.getLogger(__name__)

LOG_COLUMNS = ("iteration", "steps", "mean_ep_reward", "policy_loss", "value_loss", "clip_fraction", "entropy",
               "mean_step_reward", "approx_kl", "explained_variance", "log_std_a", "log_std_w")


class NumericalError(FloatingPointError):
    pass


@dataclass
class PpoConfig:
    gamma: float = 0.999
    gae_lambda: float = 0.95
    clip: float = 0.2
    n_envs: int = 16
    n_steps: int = 1024
    minibatch: int = 2**9
    epochs: int = 10
    lr: float = 3e-4
    vf_coef: float = 0.5
    ent_coef: float = 0.0
    max_grad_norm: float = 0.5
    total_steps: int = 2_000_000
    hidden: tuple = (64, 64)
    log_std_init: float = -1.0
    normalize_reward: bool = True
    checkpoint_every: int = 0

    def __post_init__(self):
        self.hidden = tuple(self.hidden)
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0 < self.clip < 1:
            raise ValueError("clip must lie in (0, 1)")
        if self.batch_size % self.minibatch:
            raise ValueError(f"minibatch {self.minibatch} does not divide batch {self.batch_size}")

    @property
    def batch_size(self) -> int:
        return self.n_envs * self.n_steps

    @property
    def iterations(self) -> int:
        return max(1, self.total_steps // self.batch_size)

    @classmethod
    def full_scale(cls, **overrides):
        """Batch 2^18 (16 x 16384), minibatch 2^11, 57M steps."""
        kw = dict(n_envs=16, n_steps=2**14, minibatch=2**11, total_steps=57_000_000)
        kw.update(overrides)
        return cls(**kw)

    def to_dict(self):
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


# -- estimators -----------------------------------------------------------------

def compute_gae(rewards, values, dones, last_value, gamma: float, lam: float):
    """Generalised advantage estimation along axis 0.

    ``dones[t]`` marks that the episode ended with the transition at ``t``;
    ``last_value`` is V of the observation following the final step.
    Returns ``(advantages, returns)``.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    notdone = 1.0 - np.asarray(dones, dtype=float)
    next_values = np.concatenate([values[1:], np.asarray(last_value, dtype=float)[None]], axis=0)
    deltas = rewards + gamma * next_values * notdone - values
    adv = np.zeros_like(deltas)
    running = np.zeros_like(deltas[0])
    for t in range(len(deltas) - 1, -1, -1):
        running = deltas[t] + gamma * lam * notdone[t] * running
        adv[t] = running
    return adv, adv + values


def clipped_objective(log_prob_new, log_prob_old, advantage, eta: float):
    """Per-sample clipped surrogate and its derivative w.r.t. ``log_prob_new``."""
    ratio = np.exp(np.asarray(log_prob_new) - np.asarray(log_prob_old))
    unclipped = ratio * advantage
    clipped = np.clip(ratio, 1.0 - eta, 1.0 + eta) * advantage
    objective = np.minimum(unclipped, clipped)
    grad = np.where(unclipped <= clipped, unclipped, 0.0)
    return objective, grad, ratio


def clipped_policy_loss(log_prob_new, log_prob_old, advantage, eta: float = 0.2):
    """Mean negative clipped objective, plus the fraction of samples whose ratio left [1-eta, 1+eta]."""
    objective, _, ratio = clipped_objective(log_prob_new, log_prob_old, advantage, eta)
    return -float(np.mean(objective)), float(np.mean(np.abs(ratio - 1.0) > eta))


def normalize(x):
    """Zero mean, unit variance; a (near) constant batch is only centred."""
    x = np.asarray(x, dtype=float)
    centred = x - x.mean()
    std = float(np.sqrt(np.mean(centred**2)))
    return centred / std if std > 1e-12 else centred


class ReturnScaler:
    """Divides rewards by a running std of the discounted return.

    Keeps value targets O(1) whatever the reward offset and horizon; the
    statistics are merged batch-wise (parallel variance formula).
    """

    def __init__(self, n_envs: int, gamma: float, eps: float = 1e-8):
        self.gamma = gamma
        self.eps = eps
        self.acc = np.zeros(n_envs)
        self.count = 0
        self.mean = 0.0
        self.var = 1.0

    def update(self, rewards, dones):
        self.acc = self.acc * self.gamma + rewards
        x = self.acc
        n, m, v = len(x), float(np.mean(x)), float(np.var(x))
        if self.count == 0:
            self.count, self.mean, self.var = n, m, v
        else:
            tot = self.count + n
            delta = m - self.mean
            self.var = (self.var * self.count + v * n + delta**2 * self.count * n / tot) / tot
            self.mean += delta * n / tot
            self.count = tot
        self.acc = np.where(dones, 0.0, self.acc)

    @property
    def scale(self) -> float:
        return float(np.sqrt(self.var + self.eps))


# -- actor critic -----------------------------------------------------------------

@dataclass
class ActorCritic:
    policy: nn.Mlp
    log_std: np.ndarray
    value: nn.Mlp

    @classmethod
    def init(cls, obs_dim: int, act_dim: int, rng: np.random.Generator, hidden=(64, 64), log_std_init: float = -1.0):
        policy = nn.Mlp.init((obs_dim, *hidden, act_dim), rng, out_gain=0.01)
        value = nn.Mlp.init((obs_dim, *hidden, 1), rng, out_gain=1.0)
        return cls(policy, np.full(act_dim, float(log_std_init)), value)

    @property
    def obs_dim(self) -> int:
        return self.policy.sizes[0]

    def act(self, obs, rng: np.random.Generator):
        mean = self.policy(obs)
        action, logp = nn.gaussian_logprob_and_sample(mean, self.log_std, rng)
        return action, logp, self.value(obs)[..., 0]

    def greedy(self, obs):
        return self.policy(obs)

    def save(self, path, meta: dict | None = None):
        tensors = {**nn.mlp_tensors("policy", self.policy), "policy.log_std": self.log_std,
                   **nn.mlp_tensors("value", self.value)}
        meta = dict(meta or {})
        meta.update(policy_sizes=list(self.policy.sizes), value_sizes=list(self.value.sizes),
                    hidden_activation="relu", output_activation="linear")
        nn.save_weights(path, tensors, meta)

    @classmethod
    def load(cls, path):
        tensors, meta = nn.load_weights(path)
        policy = nn.mlp_from_tensors("policy", tensors, meta["policy_sizes"])
        value = nn.mlp_from_tensors("value", tensors, meta["value_sizes"])
        return cls(policy, tensors["policy.log_std"].copy(), value)


def ppo_gradients(ac: ActorCritic, obs, actions, old_logp, adv, returns, cfg: PpoConfig):
    """Loss statistics and gradients for one minibatch.

    Returns ``(stats, policy_grads, log_std_grad, value_grads)``.
    """
    b = len(obs)
    mean, pcache = nn.forward(ac.policy.params, obs, return_cache=True)
    logp = nn.gaussian_log_prob(actions, mean, ac.log_std)
    objective, dobj, ratio = clipped_objective(logp, old_logp, adv, cfg.clip)
    dlogp = -dobj / b
    dmean, dlogstd = nn.gaussian_log_prob_grads(actions, mean, ac.log_std)
    policy_grads, _ = nn.backward(ac.policy.params, pcache, dmean * dlogp[:, None])
    log_std_grad = (dlogstd * dlogp[:, None]).sum(axis=0) - cfg.ent_coef

    v, vcache = nn.forward(ac.value.params, obs, return_cache=True)
    v = v[:, 0]
    err = v - returns
    value_grads, _ = nn.backward(ac.value.params, vcache, (cfg.vf_coef * 2.0 / b * err)[:, None])

    stats = {
        "policy_loss": -float(np.mean(objective)),
        "value_loss": float(np.mean(err**2)),
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > cfg.clip)),
        "approx_kl": float(np.mean((ratio - 1.0) - (logp - old_logp))),
    }
    return stats, policy_grads, log_std_grad, value_grads


# -- training ---------------------------------------------------------------------

@dataclass
class TrainResult:
    model: ActorCritic
    log: list = field(default_factory=list)
    episode_returns: list = field(default_factory=list)
    value_improved_fraction: float = float("nan")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.10g}"


def write_log_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in LOG_COLUMNS])


def _dump_and_raise(out_dir, iteration, ac, what):
    if out_dir:
        path = os.path.join(out_dir, f"nan_dump_iter{iteration:05d}.mcaw")
        ac.save(path, {"iteration": iteration, "reason": what})
        what += f" (parameters dumped to {path})"
    raise NumericalError(f"non-finite {what} at iteration {iteration}")


def train(env_factory, cfg: PpoConfig, seed: int = 0, out_dir: str | None = None, callback=None) -> TrainResult:
    """Train an actor-critic on ``env_factory(n_envs, seed)``.

    Everything random flows from ``seed`` so two runs with equal arguments
    produce identical logs and weights.  ``callback(row, model)`` is called
    after each iteration.
    """
    env = env_factory(cfg.n_envs, seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5050]))
    ac = ActorCritic.init(env.obs_dim, env.act_dim, rng, cfg.hidden, cfg.log_std_init)
    opt_pi = nn.Adam(lr=cfg.lr)
    opt_v = nn.Adam(lr=cfg.lr)
    T, N = cfg.n_steps, cfg.n_envs
    buf_obs = np.zeros((T, N, env.obs_dim))
    buf_act = np.zeros((T, N, env.act_dim))
    buf_logp = np.zeros((T, N))
    buf_rew = np.zeros((T, N))
    buf_val = np.zeros((T, N))
    buf_done = np.zeros((T, N))
    buf_raw = np.zeros((T, N))
    scaler = ReturnScaler(N, cfg.gamma) if cfg.normalize_reward else None
    recent = deque(maxlen=100)
    result = TrainResult(ac)
    improved = []
    obs = env.reset()
    steps = 0
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)

    for it in range(1, cfg.iterations + 1):
        n_done_before = len(env.completed)
        for t in range(T):
            action, logp, value = ac.act(obs, rng)
            buf_obs[t], buf_act[t], buf_logp[t], buf_val[t] = obs, action, logp, value
            obs, reward, done, info = env.step(action)
            buf_raw[t] = reward
            if scaler is not None:
                scaler.update(reward, done)
                reward = reward / scaler.scale
            truncated = info.get("truncated")
            if truncated is not None and np.any(truncated):
                # time-limit ends are not failures: bootstrap from the final observation
                reward = np.array(reward, dtype=float)
                idx = np.flatnonzero(truncated)
                reward[idx] += cfg.gamma * ac.value(info["terminal_obs"][idx])[:, 0]
            buf_rew[t], buf_done[t] = reward, done
        steps += T * N
        for _, ret, _ in env.completed[n_done_before:]:
            recent.append(ret)
            result.episode_returns.append(ret)

        last_value = ac.value(obs)[:, 0]
        adv, returns = compute_gae(buf_rew, buf_val, buf_done, last_value, cfg.gamma, cfg.gae_lambda)
        b_obs = buf_obs.reshape(T * N, -1)
        b_act = buf_act.reshape(T * N, -1)
        b_logp = buf_logp.reshape(-1)
        b_ret = returns.reshape(-1)
        b_adv = normalize(adv.reshape(-1))
        if not (np.all(np.isfinite(b_adv)) and np.all(np.isfinite(b_ret))):
            _dump_and_raise(out_dir, it, ac, "advantages/returns")

        stats_acc = {k: [] for k in ("policy_loss", "value_loss", "clip_fraction", "approx_kl")}
        epoch_vloss = []
        for _ in range(cfg.epochs):
            perm = rng.permutation(T * N)
            vl = []
            for start in range(0, T * N, cfg.minibatch):
                idx = perm[start:start + cfg.minibatch]
                stats, g_pi, g_std, g_v = ppo_gradients(ac, b_obs[idx], b_act[idx], b_logp[idx],
                                                        b_adv[idx], b_ret[idx], cfg)
                if not all(np.isfinite(v) for v in stats.values()):
                    _dump_and_raise(out_dir, it, ac, "loss")
                g_all, _ = nn.clip_grad_norm(g_pi + [g_std], cfg.max_grad_norm)
                g_v, _ = nn.clip_grad_norm(g_v, cfg.max_grad_norm)
                opt_pi.step(ac.policy.params + [ac.log_std], g_all)
                opt_v.step(ac.value.params, g_v)
                for k in stats_acc:
                    stats_acc[k].append(stats[k])
                vl.append(stats["value_loss"])
            epoch_vloss.append(np.mean(vl))
        improved.append(epoch_vloss[-1] < epoch_vloss[0])

        var_ret = np.var(b_ret)
        explained = float(1.0 - np.var(b_ret - buf_val.reshape(-1)) / var_ret) if var_ret > 0 else float("nan")
        row = {
            "iteration": it,
            "steps": steps,
            "mean_ep_reward": float(np.mean(recent)) if recent else float("nan"),
            "policy_loss": float(np.mean(stats_acc["policy_loss"])),
            "value_loss": float(np.mean(stats_acc["value_loss"])),
            "clip_fraction": float(np.mean(stats_acc["clip_fraction"])),
            "entropy": nn.gaussian_entropy(ac.log_std),
            "mean_step_reward": float(np.mean(buf_raw)),
            "approx_kl": float(np.mean(stats_acc["approx_kl"])),
            "explained_variance": explained,
            "log_std_a": float(ac.log_std[0]),
            "log_std_w": float(ac.log_std[-1]),
        }
        result.log.append(row)
        log.info("iter %d steps %d ep_rew %.2f step_rew %.4f clip %.3f", it, steps, row["mean_ep_reward"],
                 row["mean_step_reward"], row["clip_fraction"])
        if out_dir and cfg.checkpoint_every and it % cfg.checkpoint_every == 0:
            os.makedirs(os.path.join(out_dir, "checkpoints"), exist_ok=True)
            ac.save(os.path.join(out_dir, "checkpoints", f"iter_{it:05d}.mcaw"), {"iteration": it, "steps": steps})
        if callback is not None:
            callback(row, ac)

    result.value_improved_fraction = float(np.mean(improved)) if improved else float("nan")
    return result
