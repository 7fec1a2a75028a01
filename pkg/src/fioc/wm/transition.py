"""Graph-conditioned latent dynamics: self term plus edge-gated messages.

Per object i the next dynamic-part moments are
    self_net(d_i, c_i, a if agent) + sum_j w[j, i] * msg_net(d_i, d_j, c_j),
with soft weights scaling messages linearly. Outputs are (mean, raw sigma)
stacked; sigma passes through softplus with a small floor.

Pair enumeration is shared repo-wide: pair p runs over ordered (sender s,
receiver r), s != r, row-major in s; the edge weight for p sits at
graph[s, r].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import numkit as nk
from ..graphs import matrix_to_weights, pair_indices, weights_to_matrix

# Predictive-sigma floor. Deliberately coarse: it caps the 1/sigma^2 weight
# of abundant easy transitions so rare interaction events keep enough
# gradient share for the message nets to learn them.
SIGMA_FLOOR = 0.05

__all__ = [
    "SIGMA_FLOOR", "TransitionNets", "make_transition", "matrix_to_weights",
    "pair_indices", "predict_next", "predict_next_backward",
    "transition_params", "weights_to_matrix",
]


@dataclass
class TransitionNets:
    """Message inputs are the relative dynamic coordinates (d_i - d_j, c_j):
    pairwise interactions are translation-invariant, and dropping the
    absolute coordinates keeps the message path structurally unable to
    absorb self-dynamics (e.g. wall effects), so edge usefulness stays
    identified with actual interactions."""

    self_net: nk.DenseNet   # (d + c + act) -> 2 * dyn_out
    msg_net: nk.DenseNet    # (d_rel + c_sender) -> 2 * dyn_out
    d_dim: int
    c_dim: int
    dyn_out: int
    act_dim: int
    sigma_floor: float = SIGMA_FLOOR


def make_transition(d_dim: int, c_dim: int, dyn_out: int, act_dim: int,
                    hidden: int, rng: np.random.Generator | None = None,
                    sigma_floor: float = SIGMA_FLOOR) -> TransitionNets:
    # two hidden layers: the self path must capture sharp wall reflections,
    # or their residue leaks into the interaction structure
    return TransitionNets(
        self_net=nk.dense((d_dim + c_dim + act_dim, hidden, hidden, 2 * dyn_out), rng=rng),
        msg_net=nk.dense((d_dim + c_dim, hidden, hidden, 2 * dyn_out), rng=rng),
        d_dim=d_dim,
        c_dim=c_dim,
        dyn_out=dyn_out,
        act_dim=act_dim,
        sigma_floor=sigma_floor,
    )


def transition_params(nets: TransitionNets, prefix: str) -> dict[str, np.ndarray]:
    out = {}
    out.update(nk.net_params(nets.self_net, f"{prefix}/self"))
    out.update(nk.net_params(nets.msg_net, f"{prefix}/msg"))
    return out


def predict_next(nets: TransitionNets, d: np.ndarray, c: np.ndarray,
                 action: np.ndarray, weights: np.ndarray, agent: int = 0):
    """Next dynamic-part moments given features, action, soft graph.

    d (B, N, d_dim), c (B, N, c_dim), action (B, act_dim),
    weights (B, N, N) soft in [0, 1]. Returns (mu, sigma, cache).
    """
    b, n, _ = d.shape
    senders, receivers = pair_indices(n)
    act_full = np.zeros((b, n, nets.act_dim))
    act_full[:, agent, :] = action
    self_in = np.concatenate([d, c, act_full], axis=-1)
    self_out, self_cache = nk.net_forward(nets.self_net, self_in)

    msg_in = np.concatenate([d[:, receivers] - d[:, senders], c[:, senders]], axis=-1)
    msg_out, msg_cache = nk.net_forward(nets.msg_net, msg_in)     # (B, P, 2*dyn)
    w = weights[:, senders, receivers]                            # (B, P)
    scaled = w[..., None] * msg_out
    total = self_out.copy()
    np.add.at(total, (slice(None), receivers), scaled)

    mu = total[..., : nets.dyn_out]
    sig_raw = total[..., nets.dyn_out:]
    sigma = nk.softplus(sig_raw) + nets.sigma_floor
    cache = (self_cache, msg_cache, msg_out, w, sig_raw, senders, receivers, b, n)
    return mu, sigma, cache


def predict_next_backward(nets: TransitionNets, cache, dmu: np.ndarray,
                          dsigma: np.ndarray, grads: dict, prefix: str):
    """Returns (dd, dc, dweights); parameter grads accumulate into grads."""
    self_cache, msg_cache, msg_out, w, sig_raw, senders, receivers, b, n = cache
    dtotal = np.concatenate([dmu, dsigma * nk.dsoftplus(sig_raw)], axis=-1)

    dself_in = nk.net_backward(nets.self_net, self_cache, dtotal, grads, f"{prefix}/self")
    dd = dself_in[..., : nets.d_dim].copy()
    dc = dself_in[..., nets.d_dim: nets.d_dim + nets.c_dim].copy()

    dscaled = dtotal[:, receivers]                                # (B, P, 2*dyn)
    dw = np.sum(dscaled * msg_out, axis=-1)                       # (B, P)
    dmsg_out = dscaled * w[..., None]
    dmsg_in = nk.net_backward(nets.msg_net, msg_cache, dmsg_out, grads, f"{prefix}/msg")
    # msg input is (d_receiver - d_sender, c_sender)
    np.add.at(dd, (slice(None), receivers), dmsg_in[..., : nets.d_dim])
    np.add.at(dd, (slice(None), senders), -dmsg_in[..., : nets.d_dim])
    np.add.at(dc, (slice(None), senders), dmsg_in[..., nets.d_dim:])

    dweights = np.zeros((b, n, n))
    dweights[:, senders, receivers] = dw
    return dd, dc, dweights
