"""Minimal dense-network engine: forward/backward, MSE, Adam, weight I/O.

Supports weight tying: a layer may use the transpose of another layer's
matrix as its own, sharing a single parameter block (gradients from every
use site accumulate into that block). Parameters are float32; tests run
finite-difference checks on float64 copies.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

TIE_NONE = 0xFF
_ACT_CODES = {"linear": 0, "relu": 1}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}
MAGIC = b"NPW1"


@dataclass
class DenseLayer:
    """One fully connected layer: y = act(x @ W.T + b).

    `weights` is (out, in). A tied layer has weights=None and `tie` set to
    the index of the layer whose transposed matrix it borrows.
    """

    weights: np.ndarray | None
    bias: np.ndarray
    activation: str = "relu"
    tie: int | None = None

    def __post_init__(self):
        if self.activation not in _ACT_CODES:
            raise ValueError(f"unknown activation {self.activation!r}")
        if (self.weights is None) == (self.tie is None):
            raise ValueError("layer must have either own weights or a tie, not both")


@dataclass
class MlpModel:
    layers: list[DenseLayer]

    def weight_of(self, i: int) -> np.ndarray:
        layer = self.layers[i]
        if layer.tie is not None:
            return self.layers[layer.tie].weights.T
        return layer.weights

    @property
    def input_dim(self) -> int:
        return self.weight_of(0).shape[1]

    @property
    def output_dim(self) -> int:
        return self.weight_of(len(self.layers) - 1).shape[0]

    def parameters(self) -> list[np.ndarray]:
        """Own weight matrices and biases, layer order, tied blocks once."""
        out = []
        for layer in self.layers:
            if layer.tie is None:
                out.append(layer.weights)
            out.append(layer.bias)
        return out

    def set_parameters(self, blocks: list[np.ndarray]) -> None:
        it = iter(blocks)
        for layer in self.layers:
            if layer.tie is None:
                layer.weights = next(it)
            layer.bias = next(it)

    def parameter_count(self) -> int:
        return sum(b.size for b in self.parameters())

    def astype(self, dtype) -> "MlpModel":
        return MlpModel(
            layers=[
                DenseLayer(
                    weights=None if l.weights is None else l.weights.astype(dtype),
                    bias=l.bias.astype(dtype),
                    activation=l.activation,
                    tie=l.tie,
                )
                for l in self.layers
            ]
        )

    def copy(self) -> "MlpModel":
        return self.astype(self.layers[0].bias.dtype)


def make_mlp(
    dims: list[int],
    activations: list[str],
    rng: np.random.Generator,
    dtype=np.float32,
) -> MlpModel:
    """Glorot-uniform init: W ~ U(+-sqrt(6/(fan_in+fan_out))), zero bias."""
    if len(activations) != len(dims) - 1:
        raise ValueError("need one activation per layer")
    layers = []
    for i, act in enumerate(activations):
        fan_in, fan_out = dims[i], dims[i + 1]
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in)).astype(dtype)
        layers.append(
            DenseLayer(weights=w, bias=np.zeros(fan_out, dtype=dtype), activation=act)
        )
    return MlpModel(layers=layers)


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]  # input to each layer
    pre_activations: list[np.ndarray]
    output: np.ndarray


def forward(model: MlpModel, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    x = np.atleast_2d(np.asarray(x))
    if x.shape[1] != model.input_dim:
        raise ValueError(
            f"input width {x.shape[1]} does not match model input {model.input_dim}"
        )
    inputs, pres = [], []
    for i, layer in enumerate(model.layers):
        inputs.append(x)
        z = x @ model.weight_of(i).T + layer.bias
        pres.append(z)
        x = np.maximum(z, 0) if layer.activation == "relu" else z
    return x, ForwardCache(inputs=inputs, pre_activations=pres, output=x)


def backward(
    model: MlpModel, cache: ForwardCache, output_gradient: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray]:
    """Reverse-mode gradients. Returns (parameter grads aligned with
    model.parameters(), gradient w.r.t. the network input)."""
    d = np.atleast_2d(np.asarray(output_gradient))
    if d.shape != cache.output.shape:
        raise ValueError("output gradient shape does not match cached forward pass")
    n = len(model.layers)
    weight_grads: dict[int, np.ndarray] = {}
    bias_grads: list[np.ndarray | None] = [None] * n
    for i in range(n - 1, -1, -1):
        layer = model.layers[i]
        if layer.activation == "relu":
            d = d * (cache.pre_activations[i] > 0)
        bias_grads[i] = d.sum(axis=0)
        gw = d.T @ cache.inputs[i]  # (out, in)
        owner = layer.tie if layer.tie is not None else i
        gw = gw.T if layer.tie is not None else gw
        if owner in weight_grads:
            weight_grads[owner] = weight_grads[owner] + gw
        else:
            weight_grads[owner] = gw
        d = d @ model.weight_of(i)
    grads: list[np.ndarray] = []
    for i, layer in enumerate(model.layers):
        if layer.tie is None:
            grads.append(weight_grads.get(i, np.zeros_like(layer.weights)))
        grads.append(bias_grads[i])
    return grads, d


def mse(prediction: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over all elements, with gradient w.r.t. prediction."""
    p = np.asarray(prediction)
    t = np.asarray(target)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {t.shape}")
    diff = p - t
    loss = float(np.mean(diff**2))
    grad = (2.0 / diff.size) * diff
    return loss, grad


@dataclass
class AdamState:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: list[np.ndarray] = field(default_factory=list)
    second_moment: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_parameters(
        cls, params: list[np.ndarray], learning_rate: float = 1e-4
    ) -> "AdamState":
        return cls(
            learning_rate=learning_rate,
            first_moment=[np.zeros_like(p, dtype=np.float32) for p in params],
            second_moment=[np.zeros_like(p, dtype=np.float32) for p in params],
        )


def adam_step(
    params: list[np.ndarray], grads: list[np.ndarray], state: AdamState
) -> list[np.ndarray]:
    """Standard Adam update with bias correction; mutates `state`, returns
    the updated parameter blocks."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ValueError("parameter/gradient/state block counts differ")
    state.step_count += 1
    t = state.step_count
    out = []
    for k, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise ValueError(f"block {k}: shape mismatch {p.shape} vs {g.shape}")
        g = g.astype(np.float32)
        m = state.beta1 * state.first_moment[k] + (1 - state.beta1) * g
        v = state.beta2 * state.second_moment[k] + (1 - state.beta2) * g**2
        state.first_moment[k] = m
        state.second_moment[k] = v
        m_hat = m / (1 - state.beta1**t)
        v_hat = v / (1 - state.beta2**t)
        out.append(
            (p - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)).astype(
                p.dtype
            )
        )
    return out


def save_weights(model: MlpModel) -> bytes:
    """NPW1 blob: magic, u16 layer count, per layer (u32 in, u32 out,
    u8 activation, u8 tie), then f32 LE blocks (tied matrices stored once,
    at their owning layer)."""
    parts = [MAGIC, struct.pack("<H", len(model.layers))]
    for i, layer in enumerate(model.layers):
        w = model.weight_of(i)
        tie = TIE_NONE if layer.tie is None else layer.tie
        parts.append(
            struct.pack("<IIBB", w.shape[1], w.shape[0], _ACT_CODES[layer.activation], tie)
        )
    for layer in model.layers:
        if not np.all(np.isfinite(layer.bias)) or (
            layer.weights is not None and not np.all(np.isfinite(layer.weights))
        ):
            raise ValueError("model parameters must be finite")
        if layer.tie is None:
            parts.append(layer.weights.astype("<f4").tobytes())
        parts.append(layer.bias.astype("<f4").tobytes())
    return b"".join(parts)


def load_weights(blob: bytes) -> MlpModel:
    if blob[:4] != MAGIC:
        raise ValueError("not an NPW1 weight blob")
    if len(blob) < 6:
        raise ValueError("corrupt header: truncated")
    (n_layers,) = struct.unpack_from("<H", blob, 4)
    pos = 6
    headers = []
    for _ in range(n_layers):
        if pos + 10 > len(blob):
            raise ValueError("corrupt header: truncated layer table")
        headers.append(struct.unpack_from("<IIBB", blob, pos))
        pos += 10
    layers = []
    for i, (d_in, d_out, act_code, tie) in enumerate(headers):
        if act_code not in _ACT_NAMES:
            raise ValueError(f"corrupt header: unknown activation code {act_code}")
        own = tie == TIE_NONE
        weights = None
        if own:
            count = d_in * d_out
            if pos + 4 * count > len(blob):
                raise ValueError("corrupt weight file: matrix block truncated")
            weights = (
                np.frombuffer(blob, dtype="<f4", count=count, offset=pos)
                .reshape(d_out, d_in)
                .copy()
            )
            pos += 4 * count
        elif not 0 <= tie < i:
            raise ValueError(f"corrupt header: layer {i} ties to invalid layer {tie}")
        if pos + 4 * d_out > len(blob):
            raise ValueError("corrupt weight file: bias block truncated")
        bias = np.frombuffer(blob, dtype="<f4", count=d_out, offset=pos).copy()
        pos += 4 * d_out
        layers.append(
            DenseLayer(
                weights=weights,
                bias=bias,
                activation=_ACT_NAMES[act_code],
                tie=None if own else tie,
            )
        )
    if pos != len(blob):
        raise ValueError("corrupt weight file: trailing bytes")
    model = MlpModel(layers=layers)
    for i, (d_in, d_out, _, _) in enumerate(headers):
        if model.weight_of(i).shape != (d_out, d_in):
            raise ValueError(f"corrupt weight file: layer {i} shape mismatch")
    return model
