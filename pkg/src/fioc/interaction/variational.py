"""Variational categorical masks over edges, trained through a dynamics ELBO.

Each ordered pair gets a two-logit head on its pairwise embedding; the soft
edge weight is the relaxed-categorical probability of the "edge" class. The
negative ELBO combines the Gaussian log-likelihood of next-step dynamic
parts under the graph-conditioned transition with Bernoulli KLs of the edge
posteriors against a sparse prior.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import numkit as nk
from .. import graphs as tr
from .pairwise import pairwise_embed, pairwise_embed_backward

EDGE_CLASS = 1  # logit channel interpreted as "edge present"
P_EDGE_DEFAULT = 0.1
TAU_DEFAULT = 0.5


@dataclass
class VariationalMask:
    pair_net: nk.DenseNet    # 2 * s_dim -> u_dim
    edge_net: nk.DenseNet    # u_dim -> 2
    temperature: float = TAU_DEFAULT
    p_edge: float = P_EDGE_DEFAULT


def make_variational(s_dim: int, u_dim: int, hidden: int,
                     rng: np.random.Generator | None = None,
                     temperature: float = TAU_DEFAULT,
                     p_edge: float = P_EDGE_DEFAULT,
                     edge_bias: float = 0.0) -> VariationalMask:
    """edge_bias > 0 starts edges mostly on, so message nets see gradient
    before the sparsity prior can prune them (collapse guard)."""
    mask = VariationalMask(
        pair_net=nk.dense((2 * s_dim, hidden, u_dim), rng=rng),
        edge_net=nk.dense((u_dim, hidden // 2, 2), rng=rng),
        temperature=temperature,
        p_edge=p_edge,
    )
    mask.edge_net.biases[-1][EDGE_CLASS] = edge_bias
    return mask


def variational_params(mask: VariationalMask, prefix: str) -> dict[str, np.ndarray]:
    out = {}
    out.update(nk.net_params(mask.pair_net, f"{prefix}/pair"))
    out.update(nk.net_params(mask.edge_net, f"{prefix}/edge"))
    return out


def soft_graph(mask: VariationalMask, s: np.ndarray, noise: np.ndarray | None):
    """Relaxed edge weights from latents.

    s (B, N, s_dim); noise (B, P, 2) Gumbel draws or None for the
    deterministic relaxation. Returns (weights (B, N, N), edge probabilities
    q (B, P), cache).
    """
    b, n, _ = s.shape
    u, pair_cache = pairwise_embed(mask.pair_net, s)
    logits, edge_cache = nk.net_forward(mask.edge_net, u)
    if noise is None:
        noise = np.zeros_like(logits)
    y = nk.softmax((logits + noise) / mask.temperature, axis=-1)
    w = y[..., EDGE_CLASS]
    weights = tr.weights_to_matrix(w, n)
    q = nk.softmax(logits, axis=-1)[..., EDGE_CLASS]
    cache = (pair_cache, edge_cache, logits, y, q, n)
    return weights, q, cache


def soft_graph_backward(mask: VariationalMask, cache, dweights: np.ndarray,
                        dq: np.ndarray | None, grads: dict, prefix: str,
                        logit_decay: float = 0.0) -> np.ndarray:
    """Backprop through sampling and the edge/pair nets; returns ds.

    logit_decay adds the gradient of (decay/2) * mean(logits^2): a weak pull
    toward the responsive zone of the relaxation, so edges never freeze at a
    saturated rail where both the ELBO and the prior lose their grip.
    """
    pair_cache, edge_cache, logits, y, q, n = cache
    dw = tr.matrix_to_weights(dweights)
    # relaxed sample: w = softmax((logits + g)/tau)[EDGE]
    dlogits = (dw[..., None] / mask.temperature) * y[..., EDGE_CLASS, None] * (
        _onehot_minus(y) )
    if dq is not None:
        # posterior probability: q = softmax(logits)[EDGE]
        p = nk.softmax(logits, axis=-1)
        dlogits = dlogits + dq[..., None] * p[..., EDGE_CLASS, None] * _onehot_minus(p)
    if logit_decay > 0.0:
        dlogits = dlogits + logit_decay * logits / logits.size
    du = nk.net_backward(mask.edge_net, edge_cache, dlogits, grads, f"{prefix}/edge")
    return pairwise_embed_backward(mask.pair_net, pair_cache, du, grads, f"{prefix}/pair")


def _onehot_minus(y: np.ndarray) -> np.ndarray:
    """d softmax[EDGE] / d logit_k = y_EDGE (1[k = EDGE] - y_k); this returns
    the bracketed factor."""
    out = -y.copy()
    out[..., EDGE_CLASS] += 1.0
    return out


def harden(weights: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    return (np.asarray(weights) >= threshold).astype(np.uint8)


def mask_elbo_terms(d_next: np.ndarray, mu: np.ndarray, sigma: np.ndarray,
                    q: np.ndarray, p_edge: float):
    """Negative-ELBO pieces: (nll mean per sample, bernoulli KL mean per pair).

    d_next (B, N, dd): realized next dynamic parts; (mu, sigma): prior
    moments under the sampled soft graph; q (B, P): edge posteriors.
    """
    nll = -nk.gaussian_logpdf(d_next, mu, sigma).mean()
    kl = nk.bernoulli_kl(q, p_edge).mean()
    return float(nll), float(kl)


def mask_elbo_backward(d_next, mu, sigma, q, p_edge, scale_nll=1.0, scale_kl=1.0):
    """Gradients of the two negative-ELBO pieces w.r.t. their inputs.

    Returns (dmu, dsigma, dq, dd_next). Scales let callers pre-weight terms.
    """
    count = float(np.prod(d_next.shape[:-1]))
    z = (d_next - mu) / sigma
    dmu = scale_nll * (-z / sigma) / count
    dsigma = scale_nll * ((1.0 / sigma) - z * z / sigma) / count
    dd_next = scale_nll * (z / sigma) / count
    eps = 1e-12
    qc = np.clip(q, eps, 1.0 - eps)
    dq = scale_kl * (np.log(qc) - np.log(p_edge)
                     - np.log(1.0 - qc) + np.log(1.0 - p_edge)) / q.size
    return dmu, dsigma, dq, dd_next
