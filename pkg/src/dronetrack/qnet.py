"""Dense Q-network with hand-rolled backprop, TD targets, replay storage.

The network is a plain multilayer perceptron: affine layers with rectifier
activations in between and a linear head, one output per action. Gradients
of the half-squared TD error are derived analytically (the test suite checks
them against central finite differences) and applied with plain gradient
descent; there is no momentum and no adaptive scaling.

All parameters and activations are 64-bit floats. Checkpoints are JSON
documents with base64-encoded little-endian parameter buffers, so a
save/load round trip is bit-exact.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

CHECKPOINT_FORMAT = "dronetrack-checkpoint"
CHECKPOINT_VERSION = 1


class QNetwork:
    """MLP mapping an observation vector to one Q-value per action.

    Args:
        weights: per-layer matrices of shape (fan_in, fan_out).
        biases: per-layer vectors of shape (fan_out,).
    """

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        if len(weights) != len(biases):
            raise ValueError("weights and biases must pair up layer by layer")
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or b.ndim != 1 or w.shape[1] != b.shape[0]:
                raise ValueError(f"bad layer shapes: weights {w.shape}, biases {b.shape}")

    @classmethod
    def create(cls, layer_sizes: tuple[int, ...], rng: np.random.Generator) -> "QNetwork":
        """Seeded He-uniform initialization; biases start at zero."""
        if len(layer_sizes) < 2:
            raise ValueError("need at least an input and an output layer")
        weights = []
        biases = []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            limit = np.sqrt(6.0 / fan_in)
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def num_actions(self) -> int:
        return self.weights[-1].shape[1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Q-values for one observation (1-d input) or a batch (2-d input)."""
        h = np.asarray(x, dtype=np.float64)
        single = h.ndim == 1
        if single:
            h = h[np.newaxis, :]
        if h.ndim != 2 or h.shape[1] != self.input_dim:
            raise ValueError(f"expected input dim {self.input_dim}, got shape {np.shape(x)}")
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
        out = h @ self.weights[-1] + self.biases[-1]
        return out[0] if single else out

    def copy(self) -> "QNetwork":
        return QNetwork([w.copy() for w in self.weights], [b.copy() for b in self.biases])


class Batch(NamedTuple):
    """Column-wise minibatch of transitions."""

    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    dones: np.ndarray


@dataclass(frozen=True)
class Experience:
    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity FIFO transition store with uniform sampling."""

    def __init__(self, capacity: int, obs_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._obs = np.empty((capacity, obs_dim))
        self._actions = np.empty(capacity, dtype=np.int64)
        self._rewards = np.empty(capacity)
        self._next_obs = np.empty((capacity, obs_dim))
        self._dones = np.empty(capacity, dtype=bool)
        self._size = 0
        self._cursor = 0

    def __len__(self) -> int:
        return self._size

    def push(self, e: Experience) -> None:
        """Append one transition, evicting the oldest once full."""
        i = self._cursor
        self._obs[i] = e.obs
        self._actions[i] = e.action
        self._rewards[i] = e.reward
        self._next_obs[i] = e.next_obs
        self._dones[i] = e.done
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform sample without replacement within the batch."""
        if batch_size > self._size:
            raise ValueError(f"cannot sample {batch_size} from buffer of size {self._size}")
        idx = rng.choice(self._size, size=batch_size, replace=False)
        return Batch(
            obs=self._obs[idx],
            actions=self._actions[idx],
            rewards=self._rewards[idx],
            next_obs=self._next_obs[idx],
            dones=self._dones[idx],
        )


def td_target(reward: float, q_next: np.ndarray, gamma: float, done: bool) -> float:
    """Bootstrap target: the reward alone on terminal steps, else reward plus
    the discounted best next-state value from the frozen network."""
    if done:
        return float(reward)
    return float(reward) + gamma * float(np.max(q_next))


def _batch_targets(target_net: QNetwork, batch: Batch, gamma: float) -> np.ndarray:
    q_next = target_net.forward(batch.next_obs)
    return batch.rewards + gamma * q_next.max(axis=1) * ~batch.dones


def batch_loss(net: QNetwork, target_net: QNetwork, batch: Batch, gamma: float) -> float:
    """Mean over the batch of half the squared TD error on the taken action."""
    y = _batch_targets(target_net, batch, gamma)
    q = net.forward(batch.obs)
    q_taken = q[np.arange(len(batch.actions)), batch.actions]
    return float(np.mean(0.5 * (y - q_taken) ** 2))


@dataclass
class Gradients:
    """Parameter-shaped gradient container mirroring a QNetwork."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def global_norm(self) -> float:
        total = 0.0
        for g in self.weights + self.biases:
            total += float(np.sum(g * g))
        return float(np.sqrt(total))


def gradient(net: QNetwork, target_net: QNetwork, batch: Batch, gamma: float) -> Gradients:
    """Analytic gradient of :func:`batch_loss` with respect to ``net`` only.

    TD targets are treated as constants (they depend on the frozen network),
    so the error signal reaches a single output unit per sample.
    """
    y = _batch_targets(target_net, batch, gamma)

    # Forward pass keeping pre-activation caches.
    h = np.asarray(batch.obs, dtype=np.float64)
    activations = [h]
    pre_acts = []
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        z = h @ w + b
        pre_acts.append(z)
        h = np.maximum(z, 0.0)
        activations.append(h)
    q = h @ net.weights[-1] + net.biases[-1]

    n = len(batch.actions)
    rows = np.arange(n)
    delta = np.zeros_like(q)
    delta[rows, batch.actions] = (q[rows, batch.actions] - y) / n

    grad_w: list[np.ndarray] = [np.empty(0)] * len(net.weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(net.biases)
    for layer in range(len(net.weights) - 1, -1, -1):
        grad_w[layer] = activations[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ net.weights[layer].T) * (pre_acts[layer - 1] > 0.0)
    return Gradients(grad_w, grad_b)


def sgd_step(net: QNetwork, grads: Gradients, lr: float) -> None:
    """In-place plain gradient descent: ``theta <- theta - lr * grad``."""
    for w, gw in zip(net.weights, grads.weights):
        w -= lr * gw
    for b, gb in zip(net.biases, grads.biases):
        b -= lr * gb


def clip_gradients(grads: Gradients, max_norm: float) -> Gradients:
    """Scale the whole gradient down when its global norm exceeds ``max_norm``.

    Direction is preserved; gradients at or under the bound pass through
    untouched.
    """
    norm = grads.global_norm()
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.weights + grads.biases:
            g *= scale
    return grads


def sync_target(net: QNetwork, target_net: QNetwork) -> None:
    """Copy the online parameters over the frozen ones."""
    if net.layer_sizes != target_net.layer_sizes:
        raise ValueError(
            f"cannot sync networks with different shapes: {net.layer_sizes} vs {target_net.layer_sizes}"
        )
    for dst, src in zip(target_net.weights, net.weights):
        dst[...] = src
    for dst, src in zip(target_net.biases, net.biases):
        dst[...] = src


# --- checkpoint serialization ------------------------------------------------


@dataclass
class Checkpoint:
    """Self-describing training snapshot; see :func:`save_checkpoint`."""

    net: QNetwork
    target_net: QNetwork
    lr: float
    episode: int
    rng_state: dict | None = None


def _encode_params(net: QNetwork) -> dict:
    flat = {
        "weights": [base64.b64encode(np.ascontiguousarray(w, dtype="<f8").tobytes()).decode("ascii") for w in net.weights],
        "biases": [base64.b64encode(np.ascontiguousarray(b, dtype="<f8").tobytes()).decode("ascii") for b in net.biases],
    }
    return flat


def _decode_params(doc: dict, layer_sizes: list[int]) -> QNetwork:
    weights = []
    biases = []
    for i, (fan_in, fan_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
        w = np.frombuffer(base64.b64decode(doc["weights"][i]), dtype="<f8").reshape(fan_in, fan_out)
        b = np.frombuffer(base64.b64decode(doc["biases"][i]), dtype="<f8")
        if b.shape[0] != fan_out:
            raise ValueError(f"layer {i}: expected {fan_out} biases, got {b.shape[0]}")
        weights.append(w.copy())
        biases.append(b.copy())
    return QNetwork(weights, biases)


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    """Write a versioned JSON checkpoint; the round trip is lossless."""
    if ckpt.net.layer_sizes != ckpt.target_net.layer_sizes:
        raise ValueError("online and frozen networks disagree on shape")
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "dtype": "float64",
        "encoding": "base64/little-endian",
        "layer_sizes": list(ckpt.net.layer_sizes),
        "net": _encode_params(ckpt.net),
        "target_net": _encode_params(ckpt.target_net),
        "optimizer": {"lr": ckpt.lr},
        "episode": ckpt.episode,
        "rng_state": ckpt.rng_state,
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


def load_checkpoint(path: str | Path) -> Checkpoint:
    """Read a checkpoint written by :func:`save_checkpoint`.

    Raises:
        ValueError: on a foreign document or an unsupported version.
    """
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"not a {CHECKPOINT_FORMAT} document: {path}")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    layer_sizes = [int(n) for n in doc["layer_sizes"]]
    return Checkpoint(
        net=_decode_params(doc["net"], layer_sizes),
        target_net=_decode_params(doc["target_net"], layer_sizes),
        lr=float(doc["optimizer"]["lr"]),
        episode=int(doc["episode"]),
        rng_state=doc.get("rng_state"),
    )
