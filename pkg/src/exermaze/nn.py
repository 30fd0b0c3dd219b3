"""Minimal float64 neural-network kernel with manual backpropagation.

The value network mirrors the generator's input structure: two 3x3
convolutions over the maze map, flattened and concatenated with the scalar
features (difficulty, scaled crossing count, occupied-room vector), then one
hidden dense layer and a linear output with one Q-value per action.

Everything is float64 so gradient checks against central finite differences
can be held to tight tolerances.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .maze import StateEncoding

NET_SCHEMA_VERSION = 1

# Raw crossing counts reach ~20 on busy mazes; scale them near [0, 1]
# before concatenating with the other features.
CROSSINGS_SCALE = 10.0

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

GradientSet = dict[str, np.ndarray]


def encode_array(arr: np.ndarray) -> dict:
    """Lossless, compact array encoding: base64 of little-endian float64
    bytes in C order, with the shape alongside.  Big JSON number lists are
    an order of magnitude larger and slower to write."""
    data = np.ascontiguousarray(arr, dtype="<f8")
    return {"shape": list(arr.shape), "f8le": base64.b64encode(data.tobytes()).decode("ascii")}


def decode_array(doc: dict) -> np.ndarray:
    arr = np.frombuffer(base64.b64decode(doc["f8le"]), dtype="<f8")
    return arr.reshape(doc["shape"]).astype(np.float64)


class QNetwork:
    """Conv + dense action-value network over encoded maze states."""

    def __init__(
        self,
        height: int,
        width: int,
        n_rooms: int,
        conv1_filters: int = 8,
        conv2_filters: int = 16,
        hidden: int = 128,
        padding: str = "valid",
        seed: int = 0,
    ):
        if padding not in ("valid", "same"):
            raise ValueError(f"padding must be 'valid' or 'same', got {padding!r}")
        shrink = 0 if padding == "same" else 2
        if height - 2 * shrink <= 0 or width - 2 * shrink <= 0:
            raise ValueError(f"map {height}x{width} too small for two 3x3 convolutions")
        self.height = height
        self.width = width
        self.n_rooms = n_rooms
        self.conv1_filters = conv1_filters
        self.conv2_filters = conv2_filters
        self.hidden = hidden
        self.padding = padding
        self.n_actions = n_rooms + 1
        self.n_extras = n_rooms + 2
        self.flat_size = (height - 2 * shrink) * (width - 2 * shrink) * conv2_filters

        rng = np.random.default_rng(seed)
        he = lambda fan_in: np.sqrt(2.0 / fan_in)
        # Biases get a small random offset so ReLU pre-activations do not sit
        # exactly on the kink, where finite differences see one-sided slopes.
        self.params: dict[str, np.ndarray] = {
            "conv1_w": rng.normal(0.0, he(9), size=(conv1_filters, 3, 3, 1)),
            "conv1_b": rng.normal(0.0, 0.05, size=conv1_filters),
            "conv2_w": rng.normal(0.0, he(9 * conv1_filters), size=(conv2_filters, 3, 3, conv1_filters)),
            "conv2_b": rng.normal(0.0, 0.05, size=conv2_filters),
            "fc1_w": rng.normal(0.0, he(self.flat_size + self.n_extras), size=(hidden, self.flat_size + self.n_extras)),
            "fc1_b": rng.normal(0.0, 0.05, size=hidden),
            "out_w": rng.normal(0.0, 0.01, size=(self.n_actions, hidden)),
            "out_b": np.zeros(self.n_actions),
        }

    @classmethod
    def zeros(cls, height: int, width: int, n_rooms: int, **kwargs) -> "QNetwork":
        net = cls(height, width, n_rooms, **kwargs)
        for arr in net.params.values():
            arr[...] = 0.0
        return net

    def clone(self) -> "QNetwork":
        other = object.__new__(QNetwork)
        other.__dict__.update(self.__dict__)
        other.params = {name: arr.copy() for name, arr in self.params.items()}
        return other

    def copy_params_from(self, other: "QNetwork") -> None:
        for name, arr in other.params.items():
            self.params[name][...] = arr

    def arch_dict(self) -> dict:
        return {
            "height": self.height,
            "width": self.width,
            "n_rooms": self.n_rooms,
            "conv1_filters": self.conv1_filters,
            "conv2_filters": self.conv2_filters,
            "hidden": self.hidden,
            "padding": self.padding,
        }

    def to_json_dict(self) -> dict:
        return {
            "v": NET_SCHEMA_VERSION,
            "arch": self.arch_dict(),
            "params": {name: encode_array(arr) for name, arr in self.params.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_dict(cls, doc: dict) -> "QNetwork":
        if not isinstance(doc, dict) or doc.get("v") != NET_SCHEMA_VERSION:
            raise ValueError(f"unsupported network document (expected v={NET_SCHEMA_VERSION})")
        net = cls(**doc["arch"])
        for name, arr in net.params.items():
            stored = decode_array(doc["params"][name])
            if stored.shape != arr.shape:
                raise ValueError(f"parameter {name}: stored shape {stored.shape} != {arr.shape}")
            net.params[name] = stored
        return net

    @classmethod
    def from_json(cls, text: str) -> "QNetwork":
        return cls.from_json_dict(json.loads(text))


def state_inputs(net: QNetwork, states: list[StateEncoding]):
    """Stack encodings into the (maps, extras) arrays the network consumes."""
    maps = np.stack([s.map_codes for s in states]).astype(np.float64) / 12.0
    extras = np.empty((len(states), net.n_extras))
    for i, s in enumerate(states):
        extras[i, 0] = s.difficulty
        extras[i, 1] = s.crossings / CROSSINGS_SCALE
        extras[i, 2:] = s.occupied
    return maps[..., np.newaxis], extras


def _im2col(x: np.ndarray) -> np.ndarray:
    """(B, H, W, C) -> (B, H-2, W-2, C*9) patch matrix, channel-major."""
    win = sliding_window_view(x, (3, 3), axis=(1, 2))  # (B, OH, OW, C, 3, 3)
    b, oh, ow = win.shape[:3]
    return np.ascontiguousarray(win).reshape(b, oh, ow, -1)


def _conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, padding: str):
    """Returns (out, patches); patches are cached for the backward pass."""
    if padding == "same":
        x = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    patches = _im2col(x)
    n_out = w.shape[0]
    w2 = w.transpose(0, 3, 1, 2).reshape(n_out, -1)  # rows match patch layout
    bsz, oh, ow, k = patches.shape
    out = patches.reshape(-1, k) @ w2.T
    out += b
    return out.reshape(bsz, oh, ow, n_out), patches


def _conv_backward(patches: np.ndarray, w: np.ndarray, grad_out: np.ndarray, padding: str):
    """Gradients of a valid 3x3 correlation (with optional same-padding)."""
    n_out, _, _, n_in = w.shape
    bsz, oh, ow, k = patches.shape
    g2 = grad_out.reshape(-1, n_out)
    dw2 = g2.T @ patches.reshape(-1, k)  # (O, C*9) in (c, u, v) patch layout
    dw = dw2.reshape(n_out, n_in, 3, 3).transpose(0, 2, 3, 1)
    db = g2.sum(axis=0)
    # Input gradient by shift-and-accumulate: one small GEMM per kernel tap
    # instead of an im2col gather of the padded output gradient.
    hp, wp = oh + 2, ow + 2
    dxp = np.zeros((bsz, hp, wp, n_in))
    for u in range(3):
        for v in range(3):
            contrib = (g2 @ w[:, u, v, :]).reshape(bsz, oh, ow, n_in)
            dxp[:, u : u + oh, v : v + ow, :] += contrib
    dx = dxp[:, 1:-1, 1:-1, :] if padding == "same" else dxp
    return dx, dw, db


def _forward_cached(net: QNetwork, maps: np.ndarray, extras: np.ndarray):
    p = net.params
    z1, patches1 = _conv_forward(maps, p["conv1_w"], p["conv1_b"], net.padding)
    a1 = np.maximum(z1, 0.0)
    z2, patches2 = _conv_forward(a1, p["conv2_w"], p["conv2_b"], net.padding)
    a2 = np.maximum(z2, 0.0)
    x = np.concatenate([a2.reshape(len(maps), -1), extras], axis=1)
    z3 = x @ p["fc1_w"].T + p["fc1_b"]
    a3 = np.maximum(z3, 0.0)
    q = a3 @ p["out_w"].T + p["out_b"]
    return q, (patches1, z1, patches2, z2, a2, x, z3, a3)


def forward_batch(net: QNetwork, states: list[StateEncoding]) -> np.ndarray:
    maps, extras = state_inputs(net, states)
    q, _ = _forward_cached(net, maps, extras)
    return q


def forward(net: QNetwork, state: StateEncoding) -> np.ndarray:
    """Q-value vector for one state; deterministic and side-effect free."""
    return forward_batch(net, [state])[0]


def loss_and_gradients(
    net: QNetwork, batch: list[tuple[StateEncoding, int, float]]
) -> tuple[float, GradientSet]:
    """Mean squared TD error on the taken actions, with its gradients.

    Only the Q-value of each item's taken action enters the loss, so the
    outputs of all other actions receive zero gradient.
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    states = [item[0] for item in batch]
    actions = np.array([item[1] for item in batch], dtype=np.intp)
    targets = np.array([item[2] for item in batch], dtype=np.float64)
    if not np.all(np.isfinite(targets)):
        raise ValueError("targets must be finite")

    p = net.params
    maps, extras = state_inputs(net, states)
    q, (patches1, z1, patches2, z2, a2, x, z3, a3) = _forward_cached(net, maps, extras)

    rows = np.arange(len(batch))
    err = q[rows, actions] - targets
    loss = float(np.mean(err**2))

    dq = np.zeros_like(q)
    dq[rows, actions] = 2.0 * err / len(batch)

    grads: GradientSet = {}
    grads["out_w"] = dq.T @ a3
    grads["out_b"] = dq.sum(axis=0)
    da3 = dq @ p["out_w"]
    dz3 = da3 * (z3 > 0.0)
    grads["fc1_w"] = dz3.T @ x
    grads["fc1_b"] = dz3.sum(axis=0)
    dx = dz3 @ p["fc1_w"]
    da2 = dx[:, : net.flat_size].reshape(a2.shape)
    dz2 = da2 * (z2 > 0.0)
    da1, grads["conv2_w"], grads["conv2_b"] = _conv_backward(patches2, p["conv2_w"], dz2, net.padding)
    dz1 = da1 * (z1 > 0.0)
    _, grads["conv1_w"], grads["conv1_b"] = _conv_backward(patches1, p["conv1_w"], dz1, net.padding)
    return loss, grads


@dataclass
class AdamState:
    """First/second moment accumulators, one per parameter tensor."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]

    @classmethod
    def for_network(cls, net: QNetwork) -> "AdamState":
        return cls(
            m={name: np.zeros_like(arr) for name, arr in net.params.items()},
            v={name: np.zeros_like(arr) for name, arr in net.params.items()},
        )

    def to_json_dict(self) -> dict:
        return {
            "m": {name: encode_array(arr) for name, arr in self.m.items()},
            "v": {name: encode_array(arr) for name, arr in self.v.items()},
        }

    @classmethod
    def from_json_dict(cls, doc: dict, net: QNetwork) -> "AdamState":
        state = cls.for_network(net)
        for name in state.m:
            state.m[name] = decode_array(doc["m"][name])
            state.v[name] = decode_array(doc["v"][name])
        return state


def adam_step(
    net: QNetwork, grads: GradientSet, state: AdamState, lr: float, t: int
) -> QNetwork:
    """One bias-corrected Adam update, applied in place; returns the net."""
    if t < 1:
        raise ValueError("Adam step index t starts at 1")
    bc1 = 1.0 - ADAM_BETA1**t
    bc2 = 1.0 - ADAM_BETA2**t
    # Fused form of lr * (m/bc1) / (sqrt(v/bc2) + eps), fewer temporaries.
    step_size = lr * np.sqrt(bc2) / bc1
    eps_hat = ADAM_EPS * np.sqrt(bc2)
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * np.square(g)
        denom = np.sqrt(v)
        denom += eps_hat
        np.divide(m, denom, out=denom)
        denom *= step_size
        net.params[name] -= denom
    return net


def grad_check(
    net: QNetwork,
    state: StateEncoding,
    action: int,
    sample_fraction: float = 1.0,
    seed: int = 0,
    step: float = 1e-5,
) -> float:
    """Worst relative error of backprop gradients vs central differences.

    Checks every parameter (or a random sample for speed).  Entries where
    both gradients vanish count as zero error.
    """
    target = float(forward(net, state)[action]) - 1.0
    _, grads = loss_and_gradients(net, [(state, action, target)])

    def loss_now() -> float:
        q = forward(net, state)[action]
        return float((q - target) ** 2)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, arr in net.params.items():
        flat = arr.ravel()
        n = flat.size
        if sample_fraction >= 1.0:
            indices = range(n)
        else:
            count = max(1, int(round(sample_fraction * n)))
            indices = rng.choice(n, size=count, replace=False)
        g_flat = grads[name].ravel()
        for i in indices:
            original = flat[i]
            flat[i] = original + step
            loss_plus = loss_now()
            flat[i] = original - step
            loss_minus = loss_now()
            flat[i] = original
            fd = (loss_plus - loss_minus) / (2.0 * step)
            bp = g_flat[i]
            denom = max(abs(fd), abs(bp))
            if denom > 1e-12:
                worst = max(worst, abs(fd - bp) / denom)
    return worst
