"""In-process policy-gradient training.

Scenarios are resampled every episode from configured (x_a, d) ranges.
Episode seeds derive from (master seed, episode index), so a run is
reproducible bit for bit regardless of how rollouts are scheduled across
workers.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..scenario import CAV_ID, EMS_ID, NetworkKind, ScenarioSpec
from .env import CorridorEnv
from .policy import PolicyGradients, PolicyNet


class TrainingDivergenceError(RuntimeError):
    """Parameters or returns became non-finite; carries the last checkpoint."""

    def __init__(self, message: str, checkpoint: dict | None = None):
        super().__init__(message)
        self.checkpoint = checkpoint


@dataclass(frozen=True)
class TrainConfig:
    network: NetworkKind = NetworkKind.ONE
    episodes: int = 2000
    batch_episodes: int = 10
    horizon_steps: int = 600
    gamma: float = 0.999
    learning_rate: float = 0.001
    clip_ratio: float = 0.2
    ppo_epochs: int = 4
    algorithm: str = "ppo"              # "ppo" or "vpg"
    hidden: tuple[int, ...] = (32, 32, 32)
    seed: int = 0
    workers: int = 1
    inflow_vph: float = 1000.0
    x_a_range: tuple[float, float] = (0.0, 60.0)
    d_range: tuple[float, float] = (5.0, 60.0)
    early_stop: bool = True             # end episodes once both crossed
    eval_episodes: int = 3
    eval_every: int = 5                 # iterations between evaluations

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if self.horizon_steps <= 0:
            raise ValueError("horizon must be positive")


@dataclass
class Trajectory:
    obs: np.ndarray          # (T, 9) normalized observations
    pre_squash: np.ndarray   # (T,) stored Gaussian draws
    rewards: np.ndarray      # (T,)

    @property
    def total_return(self) -> float:
        return float(self.rewards.sum())

    def discounted_return(self, gamma: float) -> float:
        return float(discounted_returns(self.rewards, gamma)[0])


@dataclass
class TrainResult:
    net: PolicyNet                       # best checkpoint by evaluation return
    final_net: PolicyNet
    curve: list[dict] = field(default_factory=list)
    best_return: float = -math.inf

    def write_curve(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(("iteration", "mean_return", "ems_travel_time",
                             "cav_travel_time"))
            for row in self.curve:
                writer.writerow((row["iteration"], repr(row["mean_return"]),
                                 repr(row["ems_travel_time"]),
                                 repr(row["cav_travel_time"])))


def discounted_returns(rewards: np.ndarray, gamma: float) -> np.ndarray:
    """Return-to-go satisfying G_t = r_t + gamma * G_{t+1} exactly."""
    out = np.empty(len(rewards), dtype=np.float64)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def episode_rng(master_seed: int, episode_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, episode_index)))


def sample_spec(cfg: TrainConfig, rng: np.random.Generator,
                episode_index: int) -> ScenarioSpec:
    x_a = rng.uniform(*cfg.x_a_range)
    d = rng.uniform(*cfg.d_range)
    return ScenarioSpec(network=cfg.network, x_a=x_a, d=d,
                        inflow_vph=cfg.inflow_vph, seed=episode_index,
                        horizon_steps=cfg.horizon_steps)


def rollout(env: CorridorEnv, net: PolicyNet, rng: np.random.Generator,
            stochastic: bool = True) -> Trajectory:
    obs = env.reset()
    observations, draws, rewards = [], [], []
    done = False
    while not done:
        if stochastic:
            action, u = net.sample(obs, rng)
        else:
            action = net.act(obs, deterministic=True)
            u = float(net.mean_pre_squash(obs)[0])
        observations.append(obs)
        draws.append(u)
        obs, r, done, _ = env.step(action)
        rewards.append(r)
    return Trajectory(obs=np.array(observations), pre_squash=np.array(draws),
                      rewards=np.array(rewards, dtype=np.float64))


def _collect_one(args) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    checkpoint, cfg, episode_index = args
    net = PolicyNet.from_checkpoint(checkpoint)
    rng = episode_rng(cfg.seed, episode_index)
    spec = sample_spec(cfg, rng, episode_index)
    env = CorridorEnv(spec, early_stop=cfg.early_stop)
    traj = rollout(env, net, rng)
    return traj.obs, traj.pre_squash, traj.rewards


def collect_batch(net: PolicyNet, cfg: TrainConfig, first_episode: int,
                  n_episodes: int,
                  pool: ProcessPoolExecutor | None = None) -> list[Trajectory]:
    indices = range(first_episode, first_episode + n_episodes)
    if pool is None:
        out = [_collect_one((net.to_checkpoint(), cfg, i)) for i in indices]
    else:
        checkpoint = net.to_checkpoint()
        out = list(pool.map(_collect_one,
                            [(checkpoint, cfg, i) for i in indices]))
    return [Trajectory(obs=o, pre_squash=u, rewards=r) for o, u, r in out]


def _stacked(trajectories: list[Trajectory], gamma: float):
    obs = np.concatenate([t.obs for t in trajectories])
    draws = np.concatenate([t.pre_squash for t in trajectories])
    returns = np.concatenate([discounted_returns(t.rewards, gamma)
                              for t in trajectories])
    return obs, draws, returns


def _check_finite(net: PolicyNet) -> None:
    if not np.all(np.isfinite(net.flat_params())):
        raise TrainingDivergenceError("non-finite policy parameters",
                                      checkpoint=net.to_checkpoint())


def vpg_update(net: PolicyNet, trajectories: list[Trajectory],
               cfg: TrainConfig) -> PolicyNet:
    """One vanilla policy-gradient ascent step.

    theta <- theta + beta * mean over trajectories of
    sum_t grad log pi(a_t|s_t) * return-to-go(t).
    """
    if not trajectories:
        return net
    obs, draws, returns = _stacked(trajectories, cfg.gamma)
    coeff = returns / len(trajectories)
    grads = net.weighted_logprob_grad(obs, draws, coeff)
    net.apply_gradients(grads, cfg.learning_rate)
    _check_finite(net)
    return net


def vpg_surrogate(net: PolicyNet, trajectories: list[Trajectory],
                  gamma: float) -> float:
    """Scalar whose gradient is the vanilla policy-gradient direction."""
    obs, draws, returns = _stacked(trajectories, gamma)
    logp = net.log_prob(obs, draws)
    return float(np.sum(logp * returns) / len(trajectories))


def clipped_coefficients(adv: np.ndarray, ratio: np.ndarray,
                         clip_ratio: float) -> np.ndarray:
    """Per-sample log-prob weights of the clipped surrogate's gradient.

    The gradient of min(ratio*adv, clip(ratio)*adv) through the ratio is
    adv*ratio where the clip is inactive and exactly zero once saturated.
    """
    active = np.where(adv >= 0.0, ratio <= 1.0 + clip_ratio,
                      ratio >= 1.0 - clip_ratio)
    return adv * ratio * active / len(adv)


def timestep_baseline(trajectories: list[Trajectory],
                      gamma: float) -> np.ndarray:
    """Mean return-to-go per timestep over the trajectories reaching it.

    Subtracting it removes the horizon trend of raw returns-to-go (early
    steps always carry more remaining reward than late ones) without
    introducing a learned value function.
    """
    returns = [discounted_returns(t.rewards, gamma) for t in trajectories]
    longest = max(len(g) for g in returns)
    sums = np.zeros(longest)
    counts = np.zeros(longest)
    for g in returns:
        sums[:len(g)] += g
        counts[:len(g)] += 1
    baseline = sums / counts
    return np.concatenate([g - baseline[:len(g)] for g in returns])


def ppo_update(net: PolicyNet, trajectories: list[Trajectory],
               cfg: TrainConfig) -> PolicyNet:
    """Clipped-surrogate ascent over a fresh on-policy batch.

    Advantages are returns-to-go centered by the per-timestep batch mean
    and normalized. On the first epoch the importance ratio is identically
    one, so the clipped objective matches the unclipped one by
    construction.
    """
    if not trajectories:
        return net
    obs, draws, _ = _stacked(trajectories, cfg.gamma)
    adv = timestep_baseline(trajectories, cfg.gamma)
    std = adv.std()
    if std > 1e-8:
        adv = adv / std
    logp_old = net.log_prob(obs, draws)
    for _ in range(cfg.ppo_epochs):
        logp = net.log_prob(obs, draws)
        ratio = np.exp(np.clip(logp - logp_old, -30.0, 30.0))
        if not np.all(np.isfinite(ratio)):
            raise TrainingDivergenceError("non-finite importance ratio",
                                          checkpoint=net.to_checkpoint())
        coeff = clipped_coefficients(adv, ratio, cfg.clip_ratio)
        grads = net.weighted_logprob_grad(obs, draws, coeff)
        net.apply_gradients(grads, cfg.learning_rate)
        _check_finite(net)
    return net


def ppo_surrogate(net: PolicyNet, logp_old: np.ndarray, obs: np.ndarray,
                  draws: np.ndarray, adv: np.ndarray, clip_ratio: float) -> float:
    logp = net.log_prob(obs, draws)
    ratio = np.exp(logp - logp_old)
    clipped = np.clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio)
    return float(np.mean(np.minimum(ratio * adv, clipped * adv)))


def evaluate(net: PolicyNet, cfg: TrainConfig, n_episodes: int | None = None,
             deterministic: bool = True) -> dict:
    """Deterministic-policy evaluation on a fixed scenario slate.

    Returns are discounted with the training gamma, matching the objective
    being optimized.
    """
    n = n_episodes if n_episodes is not None else cfg.eval_episodes
    returns, t_evs, t_cavs = [], [], []
    horizon_s = cfg.horizon_steps * 0.5
    for k in range(n):
        rng = episode_rng(cfg.seed + 777_000, k)
        spec = sample_spec(cfg, rng, k)
        env = CorridorEnv(spec, early_stop=False)
        traj = rollout(env, net, rng, stochastic=not deterministic)
        returns.append(traj.discounted_return(cfg.gamma))
        record = env.sim.record
        final = len(env.sim.network.stop_lines) - 1
        t_ev = record.crossing_time(EMS_ID, final)
        t_cav = record.crossing_time(CAV_ID, final)
        t_evs.append(t_ev if t_ev is not None else horizon_s)
        t_cavs.append(t_cav if t_cav is not None else horizon_s)
    return {"mean_return": float(np.mean(returns)),
            "ems_travel_time": float(np.mean(t_evs)),
            "cav_travel_time": float(np.mean(t_cavs))}


def random_policy_returns(cfg: TrainConfig, n_episodes: int,
                          seed_offset: int = 555_000) -> list[float]:
    """Discounted episode returns of uniform random actions (baseline CI)."""
    out = []
    for k in range(n_episodes):
        rng = episode_rng(cfg.seed + seed_offset, k)
        spec = sample_spec(cfg, rng, k)
        env = CorridorEnv(spec, early_stop=False)
        env.reset()
        rewards, done = [], False
        while not done:
            action = rng.uniform(env.bounds.a_min, env.bounds.a_max)
            _, r, done, _ = env.step(action)
            rewards.append(r)
        out.append(float(discounted_returns(np.asarray(rewards),
                                            cfg.gamma)[0]))
    return out


def train(cfg: TrainConfig, net: PolicyNet | None = None,
          progress=None) -> TrainResult:
    """Run the configured number of episodes and keep the best checkpoint."""
    if net is None:
        net = PolicyNet(hidden=cfg.hidden, seed=cfg.seed)
    result = TrainResult(net=net.copy(), final_net=net)
    if cfg.episodes <= 0:
        result.net = net
        return result

    pool = None
    if cfg.workers > 1:
        pool = ProcessPoolExecutor(max_workers=cfg.workers)
    try:
        episode = 0
        iteration = 0
        stats = None
        n_iterations = -(-cfg.episodes // cfg.batch_episodes)
        while episode < cfg.episodes:
            batch_n = min(cfg.batch_episodes, cfg.episodes - episode)
            batch = collect_batch(net, cfg, episode, batch_n, pool)
            episode += batch_n
            if cfg.algorithm == "vpg":
                vpg_update(net, batch, cfg)
            else:
                ppo_update(net, batch, cfg)
            iteration += 1
            if stats is None or iteration % cfg.eval_every == 0 \
                    or iteration == n_iterations:
                stats = evaluate(net, cfg)
                if stats["mean_return"] > result.best_return:
                    result.best_return = stats["mean_return"]
                    result.net = net.copy()
            mean_batch_return = float(np.mean(
                [t.discounted_return(cfg.gamma) for t in batch]))
            if not math.isfinite(mean_batch_return):
                raise TrainingDivergenceError("non-finite batch return",
                                              checkpoint=net.to_checkpoint())
            result.curve.append({"iteration": iteration,
                                 "mean_return": mean_batch_return,
                                 "ems_travel_time": stats["ems_travel_time"],
                                 "cav_travel_time": stats["cav_travel_time"]})
            if progress is not None:
                progress(iteration, episode, mean_batch_return)
    finally:
        if pool is not None:
            pool.shutdown()
    result.final_net = net
    return result


def config_from_dict(data: dict) -> TrainConfig:
    kwargs = dict(data)
    if "network" in kwargs:
        kwargs["network"] = NetworkKind.parse(kwargs["network"])
    for key in ("hidden", "x_a_range", "d_range"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    return TrainConfig(**kwargs)
