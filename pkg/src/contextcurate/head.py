"""The fusion regression head: a small MLP trained on frozen input vectors.

The encoder that produced the input vectors is deliberately frozen; only
this head trains. That is the desk-scale adaptation of the original GPU
recipe (which fine-tuned the whole 0.6B encoder), and it keeps the training
loop exact, dependency-free, and fast enough for property tests.

Forward pass per hidden layer: linear, ReLU, dropout (inverted scaling, so
eval mode needs no rescaling). The output layer is linear and scalar with no
activation. Loss is the Huber / smooth-L1 form; the optimizer is AdamW with
decoupled weight decay. Everything is plain numpy with explicit reverse-mode
gradients, so correctness is checkable against finite differences.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

CHECKPOINT_MAGIC = b"CTXHEAD1"


@dataclass(frozen=True)
class HeadConfig:
    input_dim: int
    hidden_dims: tuple[int, ...] = (512, 512)
    dropout_rate: float = 0.1
    # Activation is fixed to ReLU; kept as a field so checkpoints are explicit.
    activation: str = "relu"

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if any(h < 1 for h in self.hidden_dims):
            raise ValueError("hidden dims must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.activation != "relu":
            raise ValueError("only ReLU is supported")

    def layer_shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden_dims, 1]
        return list(zip(dims[:-1], dims[1:]))

    def n_params(self) -> int:
        return sum(fan_in * fan_out + fan_out for fan_in, fan_out in self.layer_shapes())


@dataclass(frozen=True)
class TrainConfig:
    # The original recipe used lr 1e-5 over 2 epochs for full fine-tuning; a
    # cold head trained alone wants a larger step, hence the 1e-3 default.
    learning_rate: float = 1e-3
    weight_decay: float = 0.01
    batch_size: int = 16
    epochs: int = 2
    huber_beta: float = 1.0
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0 or self.huber_beta <= 0:
            raise ValueError("learning_rate and huber_beta must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")


@dataclass
class MLPHead:
    config: HeadConfig
    weights: list[np.ndarray]  # weights[l] has shape (fan_in, fan_out)
    biases: list[np.ndarray]
    seed: int

    def parameters(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "MLPHead":
        return MLPHead(
            config=self.config,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            seed=self.seed,
        )


@dataclass
class Grads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class OptState:
    """AdamW accumulators; shapes mirror the head's parameters."""

    m_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_weights: list[np.ndarray]
    v_biases: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_head(cls, head: MLPHead) -> "OptState":
        return cls(
            m_weights=[np.zeros_like(w) for w in head.weights],
            m_biases=[np.zeros_like(b) for b in head.biases],
            v_weights=[np.zeros_like(w) for w in head.weights],
            v_biases=[np.zeros_like(b) for b in head.biases],
        )


def init_head(config: HeadConfig, seed: int) -> MLPHead:
    """He-uniform weights, zero biases, deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in config.layer_shapes():
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MLPHead(config=config, weights=weights, biases=biases, seed=seed)


def _dropout_masks(
    config: HeadConfig, batch_size: int, dropout_seed: int | None
) -> list[np.ndarray] | None:
    if config.dropout_rate == 0.0:
        return None
    rng = np.random.default_rng(dropout_seed)
    keep = 1.0 - config.dropout_rate
    return [
        (rng.random((batch_size, h)) < keep).astype(np.float64) / keep
        for h in config.hidden_dims
    ]


def _forward_batch(
    head: MLPHead,
    x: np.ndarray,
    train_mode: bool,
    dropout_seed: int | None,
    keep_trace: bool = False,
):
    """Batched forward pass; optionally returns the per-layer trace for backprop.

    The dropout masks are a pure function of dropout_seed, so repeated calls
    with the same seed see the same masks.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != head.config.input_dim:
        raise ValueError(f"expected inputs of shape (n, {head.config.input_dim}), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    masks = _dropout_masks(head.config, x.shape[0], dropout_seed) if train_mode else None
    activations = [x]
    relu_gates = []
    a = x
    n_hidden = len(head.config.hidden_dims)
    for layer in range(n_hidden):
        z = a @ head.weights[layer] + head.biases[layer]
        gate = (z > 0).astype(np.float64)
        a = z * gate
        if masks is not None:
            gate = gate * masks[layer]
            a = a * masks[layer]
        relu_gates.append(gate)
        activations.append(a)
    y_hat = (a @ head.weights[-1] + head.biases[-1]).ravel()
    if keep_trace:
        return y_hat, activations, relu_gates
    return y_hat


def forward(
    head: MLPHead,
    x: np.ndarray,
    train_mode: bool = False,
    dropout_seed: int | None = None,
) -> float:
    """Scalar prediction for one input vector."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    return float(_forward_batch(head, x, train_mode, dropout_seed)[0])


def huber_loss(pred: float, target: float, beta: float = 1.0) -> float:
    """Smooth-L1: quadratic within beta of the target, linear beyond."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    e = abs(pred - target)
    if e < beta:
        return 0.5 * e * e / beta
    return e - 0.5 * beta


def batch_loss(
    head: MLPHead,
    x: np.ndarray,
    targets: np.ndarray,
    beta: float = 1.0,
    train_mode: bool = False,
    dropout_seed: int | None = None,
) -> float:
    """Mean Huber loss over a batch (same dropout mask as backward for a seed)."""
    y_hat = _forward_batch(head, x, train_mode, dropout_seed)
    e = np.abs(y_hat - np.asarray(targets, dtype=np.float64))
    per = np.where(e < beta, 0.5 * e * e / beta, e - 0.5 * beta)
    return float(per.mean())


def backward(
    head: MLPHead,
    x: np.ndarray,
    targets: np.ndarray,
    beta: float = 1.0,
    train_mode: bool = False,
    dropout_seed: int | None = None,
) -> tuple[Grads, float]:
    """Exact gradients of the mean Huber loss over the batch.

    The dropout mask is fixed per call via dropout_seed, so batch_loss with
    the same seed evaluates exactly the function being differentiated.
    """
    targets = np.asarray(targets, dtype=np.float64).ravel()
    if targets.size == 0:
        raise ValueError("empty batch")
    y_hat, activations, relu_gates = _forward_batch(
        head, x, train_mode, dropout_seed, keep_trace=True
    )
    n = targets.size
    e = y_hat - targets
    # d(mean huber)/d(y_hat): e/beta inside the quadratic zone, +-1 outside.
    dloss = np.clip(e / beta, -1.0, 1.0) / n

    g_w = [np.zeros_like(w) for w in head.weights]
    g_b = [np.zeros_like(b) for b in head.biases]
    delta = dloss.reshape(-1, 1)  # gradient w.r.t. the output layer's z
    g_w[-1] = activations[-1].T @ delta
    g_b[-1] = delta.sum(axis=0)
    upstream = delta @ head.weights[-1].T
    for layer in range(len(head.config.hidden_dims) - 1, -1, -1):
        dz = upstream * relu_gates[layer]  # gates fold in the dropout scaling
        g_w[layer] = activations[layer].T @ dz
        g_b[layer] = dz.sum(axis=0)
        if layer > 0:
            upstream = dz @ head.weights[layer].T
    loss = float(np.where(np.abs(e) < beta, 0.5 * e * e / beta, np.abs(e) - 0.5 * beta).mean())
    return Grads(weights=g_w, biases=g_b), loss


def adamw_step(
    head: MLPHead, grads: Grads, state: OptState, config: TrainConfig
) -> tuple[MLPHead, OptState]:
    """One decoupled-weight-decay Adam update; returns the updated head and state.

    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * theta,
    with both terms computed from the pre-step theta.
    """
    state.step += 1
    c1 = 1.0 - state.beta1**state.step
    c2 = 1.0 - state.beta2**state.step
    lr, wd = config.learning_rate, config.weight_decay

    def update(theta, g, m, v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / c1
        v_hat = v / c2
        return theta - lr * (m_hat / (np.sqrt(v_hat) + state.eps)) - lr * wd * theta

    new = head.copy()
    for i in range(len(new.weights)):
        new.weights[i] = update(head.weights[i], grads.weights[i], state.m_weights[i], state.v_weights[i])
        new.biases[i] = update(head.biases[i], grads.biases[i], state.m_biases[i], state.v_biases[i])
    return new, state


def train(
    inputs: Mapping[str, np.ndarray],
    labels: Mapping[str, float],
    train_ids: Sequence[str],
    head_config: HeadConfig,
    train_config: TrainConfig,
) -> tuple[MLPHead, list[float]]:
    """Mini-batch training loop; deterministic given the config seed.

    Returns the trained head and the mean training loss per epoch (recorded,
    not necessarily decreasing). Zero epochs returns the freshly initialized
    head untouched.
    """
    train_ids = sorted(train_ids)
    missing = [i for i in train_ids if i not in inputs or i not in labels]
    if missing:
        raise KeyError(f"train ids without input or label: {missing[:5]}")
    if not train_ids:
        raise ValueError("empty training set")
    x = np.stack([np.asarray(inputs[i], dtype=np.float64) for i in train_ids])
    y = np.array([labels[i] for i in train_ids], dtype=np.float64)

    head = init_head(head_config, train_config.seed)
    state = OptState.for_head(head)
    # A stream separate from the init draw, so layer sizes never shift the
    # shuffle sequence.
    rng = np.random.default_rng([train_config.seed, 1])
    n = len(train_ids)
    epoch_losses: list[float] = []
    for _ in range(train_config.epochs):
        order = rng.permutation(n) if train_config.shuffle else np.arange(n)
        total = 0.0
        for start in range(0, n, train_config.batch_size):
            batch = order[start : start + train_config.batch_size]
            dropout_seed = int(rng.integers(0, 2**63 - 1))
            grads, loss = backward(
                head,
                x[batch],
                y[batch],
                beta=train_config.huber_beta,
                train_mode=True,
                dropout_seed=dropout_seed,
            )
            head, state = adamw_step(head, grads, state, train_config)
            total += loss * batch.size
        epoch_losses.append(total / n)
    return head, epoch_losses


def predict_batch(head: MLPHead, inputs: Mapping[str, np.ndarray]) -> dict[str, float]:
    """Eval-mode predictions, raw and unclamped, keyed by context id."""
    if not inputs:
        return {}
    ids = list(inputs)
    x = np.stack([np.asarray(inputs[i], dtype=np.float64) for i in ids])
    y_hat = _forward_batch(head, x, train_mode=False, dropout_seed=None)
    return {i: float(v) for i, v in zip(ids, y_hat)}


# ---------------------------------------------------------------------------
# Checkpoints: magic, a length-prefixed JSON header (config, seed, optional
# feature normalization stats), then parameters as little-endian float64 in
# layer order, each layer's weight matrix row-major followed by its bias.
# ---------------------------------------------------------------------------


def save_checkpoint(
    head: MLPHead, path: str | Path, norm_stats: dict | None = None
) -> None:
    header = {
        "version": 1,
        "config": {
            "input_dim": head.config.input_dim,
            "hidden_dims": list(head.config.hidden_dims),
            "dropout_rate": head.config.dropout_rate,
            "activation": head.config.activation,
        },
        "seed": head.seed,
        "norm_stats": norm_stats,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for w, b in zip(head.weights, head.biases):
            fh.write(np.asarray(w, dtype="<f8").tobytes(order="C"))
            fh.write(np.asarray(b, dtype="<f8").tobytes(order="C"))


def load_checkpoint(path: str | Path) -> tuple[MLPHead, dict | None]:
    with Path(path).open("rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a {CHECKPOINT_MAGIC.decode()} checkpoint")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        cfg = HeadConfig(
            input_dim=int(header["config"]["input_dim"]),
            hidden_dims=tuple(header["config"]["hidden_dims"]),
            dropout_rate=float(header["config"]["dropout_rate"]),
            activation=header["config"]["activation"],
        )
        weights, biases = [], []
        for fan_in, fan_out in cfg.layer_shapes():
            w = np.frombuffer(fh.read(fan_in * fan_out * 8), dtype="<f8").reshape(fan_in, fan_out)
            b = np.frombuffer(fh.read(fan_out * 8), dtype="<f8")
            weights.append(w.copy())
            biases.append(b.copy())
        trailing = fh.read(1)
        if trailing:
            raise ValueError(f"{path}: trailing bytes after parameters")
    head = MLPHead(config=cfg, weights=weights, biases=biases, seed=int(header.get("seed", 0)))
    return head, header.get("norm_stats")


def save_loss_trace(losses: Sequence[float], path: str | Path) -> None:
    """Per-epoch mean loss as a two-column CSV."""
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("epoch,mean_loss\n")
        for i, loss in enumerate(losses, start=1):
            fh.write(f"{i},{loss!r}\n")
