"""Fixed-architecture dense networks and a GRU cell with analytic gradients.

All forward functions accept inputs of shape (..., dim) and broadcast over
leading axes; backward functions accumulate parameter gradients into a flat
dict keyed "{name}/W{l}" etc., summing over all leading axes. Gradients are
exact derivatives of the forward map and are checked against central finite
differences in the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("identity", "silu")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def silu(x: np.ndarray) -> np.ndarray:
    return x * _sigmoid(x)


def dsilu(x: np.ndarray) -> np.ndarray:
    s = _sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def dsoftplus(x: np.ndarray) -> np.ndarray:
    return _sigmoid(x)


@dataclass
class DenseNet:
    """Feedforward stack; nonlinearity on hidden layers, linear output."""

    sizes: tuple[int, ...]
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)
    activation: str = "silu"

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]


def dense(sizes, activation: str = "silu", rng: np.random.Generator | None = None) -> DenseNet:
    """Build a net; zero-initialized unless an rng is given (He-scaled)."""
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) < 2 or any(s <= 0 for s in sizes):
        raise ValueError(f"bad layer sizes {sizes}")
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        if rng is None:
            w = np.zeros((fan_out, fan_in))
        else:
            w = rng.standard_normal((fan_out, fan_in)) * np.sqrt(1.0 / fan_in)
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return DenseNet(sizes, weights, biases, activation)


def net_forward(net: DenseNet, x: np.ndarray):
    """Run the net; returns (output, cache) with cache for net_backward."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.in_dim:
        raise ValueError(f"input dim {x.shape[-1]} != expected {net.in_dim}")
    inputs, preacts = [], []
    h = x
    last = len(net.weights) - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        inputs.append(h)
        z = h @ w.T + b
        preacts.append(z)
        h = z if l == last or net.activation == "identity" else silu(z)
    return h, (inputs, preacts)


def net_backward(net: DenseNet, cache, dy: np.ndarray, grads: dict, name: str) -> np.ndarray:
    """Backprop dy through the cached forward; accumulates into grads."""
    inputs, preacts = cache
    last = len(net.weights) - 1
    dh = np.asarray(dy, dtype=float)
    for l in range(last, -1, -1):
        if l == last or net.activation == "identity":
            dz = dh
        else:
            dz = dh * dsilu(preacts[l])
        x = inputs[l]
        x2 = x.reshape(-1, x.shape[-1])
        dz2 = dz.reshape(-1, dz.shape[-1])
        _acc(grads, f"{name}/W{l}", dz2.T @ x2)
        _acc(grads, f"{name}/b{l}", dz2.sum(axis=0))
        dh = dz @ net.weights[l]
    return dh


def forward_backward(net: DenseNet, x: np.ndarray, output_grad: np.ndarray):
    """Single-call contract: output, input gradient, parameter gradients."""
    y, cache = net_forward(net, x)
    grads: dict[str, np.ndarray] = {}
    dx = net_backward(net, cache, output_grad, grads, "net")
    return y, dx, grads


def net_params(net: DenseNet, name: str) -> dict[str, np.ndarray]:
    out = {}
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        out[f"{name}/W{l}"] = w
        out[f"{name}/b{l}"] = b
    return out


@dataclass
class GruCell:
    """Gated recurrent cell; zero state is a fixed point of the zero cell."""

    input_size: int
    hidden_size: int
    w_z: np.ndarray = field(repr=False)
    u_z: np.ndarray = field(repr=False)
    b_z: np.ndarray = field(repr=False)
    w_r: np.ndarray = field(repr=False)
    u_r: np.ndarray = field(repr=False)
    b_r: np.ndarray = field(repr=False)
    w_h: np.ndarray = field(repr=False)
    u_h: np.ndarray = field(repr=False)
    b_h: np.ndarray = field(repr=False)


def gru(input_size: int, hidden_size: int, rng: np.random.Generator | None = None) -> GruCell:
    def mk(rows, cols):
        if rng is None:
            return np.zeros((rows, cols))
        return rng.standard_normal((rows, cols)) * np.sqrt(1.0 / cols)

    return GruCell(
        input_size, hidden_size,
        mk(hidden_size, input_size), mk(hidden_size, hidden_size), np.zeros(hidden_size),
        mk(hidden_size, input_size), mk(hidden_size, hidden_size), np.zeros(hidden_size),
        mk(hidden_size, input_size), mk(hidden_size, hidden_size), np.zeros(hidden_size),
    )


def gru_forward(cell: GruCell, x: np.ndarray, h: np.ndarray):
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    if x.shape[-1] != cell.input_size or h.shape[-1] != cell.hidden_size:
        raise ValueError("gru dimension mismatch")
    az = x @ cell.w_z.T + h @ cell.u_z.T + cell.b_z
    ar = x @ cell.w_r.T + h @ cell.u_r.T + cell.b_r
    z = _sigmoid(az)
    r = _sigmoid(ar)
    rh = r * h
    ag = x @ cell.w_h.T + rh @ cell.u_h.T + cell.b_h
    g = np.tanh(ag)
    h_new = (1.0 - z) * h + z * g
    return h_new, (x, h, z, r, rh, g)


def gru_backward(cell: GruCell, cache, dh_new: np.ndarray, grads: dict, name: str):
    """Returns (dx, dh_prev); parameter gradients accumulate into grads."""
    x, h, z, r, rh, g = cache
    dh_new = np.asarray(dh_new, dtype=float)
    dz = dh_new * (g - h)
    dg = dh_new * z
    dh = dh_new * (1.0 - z)
    dag = dg * (1.0 - g * g)
    drh = dag @ cell.u_h
    dr = drh * h
    dh = dh + drh * r
    daz = dz * z * (1.0 - z)
    dar = dr * r * (1.0 - r)

    def flat(a):
        return a.reshape(-1, a.shape[-1])

    x2, h2, rh2 = flat(x), flat(h), flat(rh)
    daz2, dar2, dag2 = flat(daz), flat(dar), flat(dag)
    _acc(grads, f"{name}/w_z", daz2.T @ x2)
    _acc(grads, f"{name}/u_z", daz2.T @ h2)
    _acc(grads, f"{name}/b_z", daz2.sum(axis=0))
    _acc(grads, f"{name}/w_r", dar2.T @ x2)
    _acc(grads, f"{name}/u_r", dar2.T @ h2)
    _acc(grads, f"{name}/b_r", dar2.sum(axis=0))
    _acc(grads, f"{name}/w_h", dag2.T @ x2)
    _acc(grads, f"{name}/u_h", dag2.T @ rh2)
    _acc(grads, f"{name}/b_h", dag2.sum(axis=0))

    dx = daz @ cell.w_z + dar @ cell.w_r + dag @ cell.w_h
    dh = dh + daz @ cell.u_z + dar @ cell.u_r
    return dx, dh


def gru_params(cell: GruCell, name: str) -> dict[str, np.ndarray]:
    return {
        f"{name}/w_z": cell.w_z, f"{name}/u_z": cell.u_z, f"{name}/b_z": cell.b_z,
        f"{name}/w_r": cell.w_r, f"{name}/u_r": cell.u_r, f"{name}/b_r": cell.b_r,
        f"{name}/w_h": cell.w_h, f"{name}/u_h": cell.u_h, f"{name}/b_h": cell.b_h,
    }


def _acc(grads: dict, key: str, value: np.ndarray) -> None:
    if key in grads:
        grads[key] += value
    else:
        grads[key] = value.copy() if isinstance(value, np.ndarray) else np.asarray(value)
