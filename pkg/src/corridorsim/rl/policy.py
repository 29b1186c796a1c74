"""Small tanh MLP emitting a squashed-Gaussian acceleration.

The network maps the 9-component observation to the mean of a Gaussian in
an unbounded pre-action space; a learnable state-independent log standard
deviation completes the distribution. Actions are ``a_max * tanh(u)`` of a
draw ``u``, so every sample lands inside the permitted acceleration box.
Gradients are computed analytically (plain backprop) so they can be checked
against finite differences.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

CHECKPOINT_FORMAT = 1
LOG_2PI = math.log(2.0 * math.pi)
SQUASH_EPS = 1e-8


@dataclass
class PolicyGradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    log_std: float


class PolicyNet:
    """Fully connected tanh network with a linear scalar head."""

    def __init__(self, input_dim: int = 9, hidden: tuple[int, ...] = (32, 32, 32),
                 a_max: float = 3.0, log_std_init: float = math.log(0.5),
                 seed: int = 0, zero_final: bool = True):
        self.input_dim = input_dim
        self.hidden = tuple(hidden)
        self.a_max = a_max
        sizes = (input_dim, *hidden, 1)
        rng = np.random.default_rng(seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            scale = math.sqrt(2.0 / (fan_in + fan_out))
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        if zero_final:
            self.weights[-1][:] = 0.0
        self.log_std = float(log_std_init)

    # -- forward -------------------------------------------------------------

    def _forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Pre-squash mean for a batch; returns activations for backprop."""
        h = np.atleast_2d(np.asarray(x, dtype=np.float64))
        activations = [h]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = np.tanh(z) if i < len(self.weights) - 1 else z
            activations.append(h)
        return h[:, 0], activations

    def mean_pre_squash(self, obs: np.ndarray) -> np.ndarray:
        mu, _ = self._forward(obs)
        return mu

    def act(self, obs: np.ndarray, deterministic: bool = True,
            rng: np.random.Generator | None = None) -> float:
        """Bounded acceleration for one observation."""
        obs = np.asarray(obs, dtype=np.float64)
        if not np.all(np.isfinite(obs)):
            raise ValueError("non-finite observation")
        mu = float(self.mean_pre_squash(obs)[0])
        if deterministic:
            u = mu
        else:
            if rng is None:
                raise ValueError("stochastic action requires an rng")
            u = mu + math.exp(self.log_std) * rng.standard_normal()
        return self.a_max * math.tanh(u)

    def sample(self, obs: np.ndarray, rng: np.random.Generator) -> tuple[float, float]:
        """(action, pre-squash draw) for rollout storage."""
        obs = np.asarray(obs, dtype=np.float64)
        if not np.all(np.isfinite(obs)):
            raise ValueError("non-finite observation")
        mu = float(self.mean_pre_squash(obs)[0])
        u = mu + math.exp(self.log_std) * rng.standard_normal()
        return self.a_max * math.tanh(u), u

    def log_prob(self, obs: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Log density of stored pre-squash draws, with the tanh correction."""
        mu, _ = self._forward(obs)
        u = np.asarray(u, dtype=np.float64)
        std = math.exp(self.log_std)
        gauss = -0.5 * (((u - mu) / std) ** 2) - self.log_std - 0.5 * LOG_2PI
        correction = np.log(self.a_max * (1.0 - np.tanh(u) ** 2) + SQUASH_EPS)
        return gauss - correction

    # -- analytic gradient -----------------------------------------------------

    def weighted_logprob_grad(self, obs: np.ndarray, u: np.ndarray,
                              coeff: np.ndarray) -> PolicyGradients:
        """Gradient of sum_i coeff_i * log pi(u_i | obs_i) in the parameters."""
        mu, activations = self._forward(obs)
        u = np.asarray(u, dtype=np.float64)
        coeff = np.asarray(coeff, dtype=np.float64)
        std = math.exp(self.log_std)
        dmu = coeff * (u - mu) / std ** 2                  # dL/dmu per sample
        dlog_std = float(np.sum(coeff * (((u - mu) / std) ** 2 - 1.0)))

        grads_w = [np.zeros_like(w) for w in self.weights]
        grads_b = [np.zeros_like(b) for b in self.biases]
        delta = dmu[:, None]
        for i in reversed(range(len(self.weights))):
            grads_w[i] = activations[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (1.0 - activations[i] ** 2)
        return PolicyGradients(weights=grads_w, biases=grads_b, log_std=dlog_std)

    def apply_gradients(self, grads: PolicyGradients, lr: float) -> None:
        for w, gw in zip(self.weights, grads.weights):
            w += lr * gw
        for b, gb in zip(self.biases, grads.biases):
            b += lr * gb
        self.log_std += lr * grads.log_std

    # -- flat parameter view (finite differences, checkpoints) -----------------

    def flat_params(self) -> np.ndarray:
        parts = [w.ravel() for w in self.weights] + [b for b in self.biases]
        parts.append(np.array([self.log_std]))
        return np.concatenate(parts)

    def set_flat_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        i = 0
        for w in self.weights:
            w[:] = flat[i:i + w.size].reshape(w.shape)
            i += w.size
        for b in self.biases:
            b[:] = flat[i:i + b.size]
            i += b.size
        self.log_std = float(flat[i])

    def flat_gradients(self, grads: PolicyGradients) -> np.ndarray:
        parts = [g.ravel() for g in grads.weights] + list(grads.biases)
        parts.append(np.array([grads.log_std]))
        return np.concatenate(parts)

    def copy(self) -> "PolicyNet":
        clone = PolicyNet(self.input_dim, self.hidden, a_max=self.a_max)
        clone.set_flat_params(self.flat_params())
        return clone

    # -- persistence ------------------------------------------------------------

    def to_checkpoint(self) -> dict:
        return {
            "format_version": CHECKPOINT_FORMAT,
            "input_dim": self.input_dim,
            "hidden": list(self.hidden),
            "a_max": self.a_max,
            "log_std": self.log_std,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_checkpoint(cls, data: dict) -> "PolicyNet":
        if data.get("format_version") != CHECKPOINT_FORMAT:
            raise ValueError("unsupported checkpoint format")
        net = cls(input_dim=int(data["input_dim"]),
                  hidden=tuple(data["hidden"]), a_max=float(data["a_max"]))
        net.weights = [np.array(w, dtype=np.float64) for w in data["weights"]]
        net.biases = [np.array(b, dtype=np.float64) for b in data["biases"]]
        net.log_std = float(data["log_std"])
        return net

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_checkpoint(), f)

    @classmethod
    def load(cls, path) -> "PolicyNet":
        with open(path) as f:
            return cls.from_checkpoint(json.load(f))
