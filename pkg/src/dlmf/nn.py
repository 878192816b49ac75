"""Dense ReLU networks with hand-written backpropagation, three optimizers and
parameter clipping.

A network maps ``in_dim`` inputs to one scalar output through hidden ReLU layers
and an identity output layer.  Parameters are kept as a flat list
``[W_1, b_1, W_2, b_2, ...]`` with ``W_l`` of shape (fan_out, fan_in); gradients
use the same layout, which is what the optimizers and :func:`clip_params` walk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .reference import RngStream


class Network:
    def __init__(self, layer_sizes: Sequence[int], params: List[np.ndarray]):
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        self.params = params
        check_network(self)

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def weights(self) -> List[np.ndarray]:
        return self.params[0::2]

    @property
    def biases(self) -> List[np.ndarray]:
        return self.params[1::2]

    def copy(self) -> "Network":
        return Network(self.layer_sizes, [p.copy() for p in self.params])

    def __eq__(self, other):
        if not isinstance(other, Network) or self.layer_sizes != other.layer_sizes:
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.params, other.params))

    def __repr__(self):
        return f"Network({list(self.layer_sizes)})"


def _check_sizes(layer_sizes) -> None:
    if len(layer_sizes) < 3:
        raise ValueError("need an input size, at least one hidden layer and an output size")
    if any(int(s) < 1 for s in layer_sizes):
        raise ValueError(f"every layer size must be >= 1, got {list(layer_sizes)}")


def check_network(net: Network) -> None:
    sizes = net.layer_sizes
    _check_sizes(sizes)
    if sizes[-1] != 1:
        raise ValueError("output layer must have a single unit")
    if len(net.params) != 2 * (len(sizes) - 1):
        raise ValueError("parameter list does not match layer sizes")
    for l, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        W, b = net.params[2 * l], net.params[2 * l + 1]
        if W.shape != (fan_out, fan_in) or b.shape != (fan_out,):
            raise ValueError(f"layer {l}: expected W {(fan_out, fan_in)}, b {(fan_out,)}")
        if not (np.isfinite(W).all() and np.isfinite(b).all()):
            raise ValueError(f"layer {l} has non-finite parameters")


def mlp_init(layer_sizes: Sequence[int], seed: int) -> Network:
    """Glorot-uniform weights from a stream keyed by ``seed``, zero biases."""
    _check_sizes(layer_sizes)
    rng = RngStream(seed, "init")
    params = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        params.append(rng.gen.uniform(-bound, bound, size=(fan_out, fan_in)))
        params.append(np.zeros(fan_out))
    return Network(layer_sizes, params)


def zero_network(layer_sizes: Sequence[int], output_bias: float = 0.0) -> Network:
    _check_sizes(layer_sizes)
    params = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        params += [np.zeros((fan_out, fan_in)), np.zeros(fan_out)]
    params[-1][:] = output_bias
    return Network(layer_sizes, params)


def forward_batch(net: Network, inputs: np.ndarray) -> np.ndarray:
    """Outputs for each row of ``inputs`` (k x in_dim) as a length-k vector."""
    h = np.asarray(inputs, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != net.in_dim:
        raise ValueError(f"expected inputs of shape (k, {net.in_dim}), got {h.shape}")
    n_layers = len(net.params) // 2
    for l in range(n_layers):
        W, b = net.params[2 * l], net.params[2 * l + 1]
        h = h @ W.T
        h += b
        if l < n_layers - 1:
            np.maximum(h, 0.0, out=h)
    return h[:, 0]


def forward(net: Network, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != net.in_dim:
        raise ValueError(f"input length {x.shape} does not match in_dim {net.in_dim}")
    return float(forward_batch(net, x[None, :])[0])


def forward_cache(net: Network, inputs: np.ndarray) -> list:
    """Forward pass keeping every layer's (post-activation) output."""
    n_layers = len(net.params) // 2
    acts = [np.asarray(inputs, dtype=np.float64)]
    h = acts[0]
    for l in range(n_layers):
        W, b = net.params[2 * l], net.params[2 * l + 1]
        h = h @ W.T
        h += b
        if l < n_layers - 1:
            np.maximum(h, 0.0, out=h)
        acts.append(h)
    return acts


def backward(net: Network, acts: list, dout: np.ndarray, need_input_grad=False):
    """Reverse pass for an arbitrary output cotangent ``dout`` (length k).

    Returns ``(grads, input_grad)``; ``input_grad`` is None unless requested.
    The adversarial trainers need it to push the discriminator's sensitivity
    back into the generator.
    """
    n_layers = len(net.params) // 2
    grads: List[Optional[np.ndarray]] = [None] * len(net.params)
    delta = np.asarray(dout, dtype=np.float64).reshape(-1, 1)
    for l in range(n_layers - 1, -1, -1):
        grads[2 * l] = delta.T @ acts[l]
        grads[2 * l + 1] = delta.sum(axis=0)
        if l == 0 and not need_input_grad:
            break
        delta = delta @ net.params[2 * l]
        if l > 0:
            delta *= acts[l] > 0
    return grads, (delta if need_input_grad else None)


def loss_and_grads(net: Network, inputs: np.ndarray, targets: np.ndarray):
    """Mean squared error over the batch and its exact gradient."""
    targets = np.asarray(targets, dtype=np.float64)
    k = targets.shape[0]
    if k < 1:
        raise ValueError("empty batch")
    acts = forward_cache(net, inputs)
    resid = acts[-1][:, 0] - targets
    grads, _ = backward(net, acts, resid * (2.0 / k))
    return float(resid @ resid) / k, grads


OPTIMIZERS = ("sgd", "adam", "rmsprop")


@dataclass
class OptimizerState:
    kind: str
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    rms_decay: float = 0.99
    step_count: int = 0
    m: list = field(default_factory=list, repr=False)
    v: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.kind = self.kind.lower()
        if self.kind not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.kind!r}")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        for name in ("beta1", "beta2", "rms_decay"):
            if not 0 <= getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in [0, 1)")


def make_optimizer(kind: str, net: Network, lr: float, **kw) -> OptimizerState:
    state = OptimizerState(kind, lr, **kw)
    if state.kind in ("adam", "rmsprop"):
        state.v = [np.zeros_like(p) for p in net.params]
    if state.kind == "adam":
        state.m = [np.zeros_like(p) for p in net.params]
    return state


def optimizer_step(state: OptimizerState, net: Network, grads) -> None:
    """One in-place update of ``net`` (and the moment buffers in ``state``)."""
    if len(grads) != len(net.params) or any(
        g.shape != p.shape for g, p in zip(grads, net.params)
    ):
        raise ValueError("gradient shapes do not match the network parameters")
    state.step_count += 1
    lr = state.lr
    if state.kind == "sgd":
        for p, g in zip(net.params, grads):
            p -= lr * g
    elif state.kind == "rmsprop":
        rho = state.rms_decay
        for p, g, v in zip(net.params, grads, state.v):
            v *= rho
            v += (1.0 - rho) * g * g
            p -= lr * g / (np.sqrt(v) + state.eps)
    else:
        b1, b2, t = state.beta1, state.beta2, state.step_count
        c1 = 1.0 - b1**t
        c2 = 1.0 - b2**t
        for p, g, m, v in zip(net.params, grads, state.m, state.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def clip_params(net: Network, m: float) -> None:
    """Clip every weight and bias into [-m, m], in place."""
    for p in net.params:
        np.clip(p, -m, m, out=p)


@dataclass
class EarlyStop:
    """Coverage-based early stopping.

    Every ``period`` epochs the quantile interval at level ``alpha`` (built from
    ``draws`` Monte Carlo samples) is evaluated on ``validation``; training stops
    once the empirical coverage reaches ``1 - alpha``.
    """

    period: int
    alpha: float
    validation: object
    draws: int = 1000

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("early-stopping period must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass
class TrainSpec:
    epochs: int = 5000
    lr: float = 0.001
    clip_m: float = 20.0
    optimizer: str = "rmsprop"
    seed: int = 0
    hidden: tuple = (50,)
    early_stop: Optional[EarlyStop] = None

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.clip_m <= 0:
            raise ValueError("clip_m must be positive")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.optimizer.lower() not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if not self.hidden or min(self.hidden) < 1:
            raise ValueError("need at least one hidden layer of positive width")
        if self.early_stop is not None and self.early_stop.period > self.epochs:
            raise ValueError("early-stopping period exceeds the epoch budget")

    def layer_sizes(self, in_dim: int) -> list:
        return [in_dim, *self.hidden, 1]


def theory_architecture(d: int, p: int, n: int, tau: float):
    """Width, depth and the two integer knobs of the approximation-theory sizing.

    Returns ``(W, L, N1, N2)`` with natural logarithms throughout.  Advisory only;
    nothing in the package trains networks of this size automatically.
    """
    k = d + p
    if k < 2:
        raise ValueError("need d + p >= 2")
    if not tau > 1:
        raise ValueError("need tau > 1")
    if n < 3:
        raise ValueError("need n >= 3")
    N1 = math.ceil(n ** (k / (2 * (tau + k))) / math.log(n))
    N2 = math.ceil(math.log(n))
    # integer k-th root, guarded against floating error at exact powers
    root = int(round(N1 ** (1.0 / k)))
    while root**k > N1:
        root -= 1
    while (root + 1) ** k <= N1:
        root += 1
    W = 3 ** (k + 3) * max(k * root, N1 + 1)
    L = 12 * N2 + 14 + 2 * k
    return W, L, N1, N2


def network_to_text(net: Network) -> str:
    lines = [",".join(str(s) for s in net.layer_sizes) + ";"]
    for l in range(len(net.params) // 2):
        vals = np.concatenate([net.params[2 * l].ravel(), net.params[2 * l + 1]])
        lines.append(" ".join(format(float(v), ".17g") for v in vals))
    return "\n".join(lines) + "\n"


def network_from_text(text: str) -> Network:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].strip()
    if not head.endswith(";"):
        raise ValueError("network block must start with 'layer_sizes;'")
    sizes = [int(s) for s in head[:-1].split(",")]
    if len(lines) != len(sizes):
        raise ValueError(f"expected {len(sizes) - 1} layer lines, got {len(lines) - 1}")
    params = []
    for fan_in, fan_out, line in zip(sizes[:-1], sizes[1:], lines[1:]):
        vals = np.array([float(v) for v in line.split()])
        if vals.size != fan_out * fan_in + fan_out:
            raise ValueError("layer line has the wrong number of parameters")
        params.append(vals[: fan_out * fan_in].reshape(fan_out, fan_in))
        params.append(vals[fan_out * fan_in:].copy())
    return Network(sizes, params)
