"""Shared trainer for the variational mask + graph-conditioned transition.

Works on any per-step feature sequences (simulator ground truth or frozen
world-model latents). The dynamics ELBO over a relaxed mask has two
absorbing rails (all-off starves the message nets, all-on entangles them
with self-dynamics), and its adaptive sigma prefers inflating uncertainty
over learning rare interaction corrections. The schedule below sidesteps
both failure modes while optimizing the same objective:

  phase 0  self path alone, mean fitted by MSE (sigma silent)
  phase 1  messages on dropout-thinned full graphs, minibatches oversampled
           by self-model surprise (no labels involved)
  phase 2  coordinate ascent: the E-step labels pairs by counterfactual
           likelihood advantage against the Bernoulli prior cost, the
           M-step fits the 2-logit edge head to confident labels and
           continues transition training under sampled soft graphs
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import numkit as nk
from .. import rng as rngmod
from ..wm.transition import TransitionNets, predict_next, predict_next_backward, \
    transition_params
from .variational import (
    VariationalMask,
    mask_elbo_backward,
    soft_graph,
    soft_graph_backward,
    variational_params,
)


@dataclass(frozen=True)
class MaskFitConfig:
    pretrain_epochs: int = 25
    em_rounds: int = 2
    head_epochs: int = 60
    dyn_epochs: int = 8
    batch: int = 64
    lr: float = 3e-3
    head_lr: float = 1e-2
    p_edge: float = 0.1
    edge_dropout: float = 0.3
    logit_decay: float = 1e-3
    grad_clip: float = 10.0
    seed: int = 0
    # surprise-coincidence labeling: a pair is interacting when both slots'
    # median-normalized self-prediction errors exceed coincidence_hi, and a
    # confident negative below coincidence_lo; in between is ambiguous
    # (e.g. gentle persistent contacts) and excluded from the head fit.
    # Positive labels dilate one step in time (contacts persist).
    coincidence_hi: float = 2.0
    coincidence_lo: float = 1.2
    dilate: int = 1


@dataclass
class FeatureTransitions:
    """Flattened per-transition features: inputs at t, dynamic target at t+1."""

    c: np.ndarray        # (S, N, c_dim)
    d: np.ndarray        # (S, N, d_dim)
    s: np.ndarray        # (S, N, s_dim) input to the pair encoder
    actions: np.ndarray  # (S, act_dim)
    target: np.ndarray   # (S, N, dyn_out)
    episode: np.ndarray | None = None   # (S,) source episode per transition

    @property
    def count(self) -> int:
        return self.s.shape[0]

    @property
    def n(self) -> int:
        return self.s.shape[1]


def pair_slot(n: int, sender: int, receiver: int) -> int:
    """Index of ordered pair (sender, receiver) in the shared enumeration."""
    return sender * (n - 1) + (receiver if receiver < sender else receiver - 1)


def _dilate_time(flags: np.ndarray, episode: np.ndarray | None, radius: int) -> np.ndarray:
    """Spread positive flags to neighbors within the same episode."""
    out = flags.copy()
    for shift in range(1, radius + 1):
        fwd = np.zeros_like(flags)
        bwd = np.zeros_like(flags)
        fwd[shift:] = flags[:-shift]
        bwd[:-shift] = flags[shift:]
        if episode is not None:
            fwd[shift:] &= episode[shift:] == episode[:-shift]
            bwd[:-shift] &= episode[:-shift] == episode[shift:]
        out |= fwd | bwd
    return out


def pretrain_transition(trans: TransitionNets, data: FeatureTransitions,
                        cfg: MaskFitConfig, train_rng: np.random.Generator) -> None:
    """Phases 0 and 1: MSE mean fit, self-only then dropout-thinned full
    graphs on surprise-oversampled minibatches."""
    n, count = data.n, data.count
    batch = cfg.batch
    full = np.ones((batch, n, n))
    full[:, np.arange(n), np.arange(n)] = 0.0
    zero = np.zeros((batch, n, n))
    trans_params = transition_params(trans, "trans")
    opt_pre = nk.adam_init(trans_params, lr=cfg.lr)

    def mse_batch(idx, weights_b):
        mu, sigma, tr_cache = predict_next(trans, data.d[idx], data.c[idx],
                                           data.actions[idx], weights_b)
        dmu = (mu - data.target[idx]) / (idx.size * trans.dyn_out)
        grads: dict[str, np.ndarray] = {}
        predict_next_backward(trans, tr_cache, dmu, np.zeros_like(sigma), grads, "trans")
        nk.clip_grad_norm(grads, cfg.grad_clip)
        nk.adam_step(opt_pre, trans_params, grads)

    for _ in range(cfg.pretrain_epochs):
        order = train_rng.permutation(count)
        for lo in range(0, count, batch):
            idx = order[lo: lo + batch]
            mse_batch(idx, zero[: idx.size])

    mu0, _, _ = predict_next(trans, data.d, data.c, data.actions,
                             np.zeros((count, n, n)))
    surprise = np.sum((data.target - mu0) ** 2, axis=(1, 2))
    w_samp = np.clip(surprise - np.median(surprise), 0.0, None) + 1.0
    p_samp = w_samp / w_samp.sum()
    for _ in range(cfg.pretrain_epochs):
        for _ in range(max(1, count // batch)):
            idx = train_rng.choice(count, size=min(batch, count), p=p_samp)
            keep = (train_rng.random((idx.size, n, n)) > cfg.edge_dropout).astype(float)
            mse_batch(idx, full[: idx.size] * keep)


def fit_mask(mask: VariationalMask, trans: TransitionNets,
             data: FeatureTransitions, cfg: MaskFitConfig) -> None:
    """Train mask and transition in place on one transition set."""
    n, count = data.n, data.count
    pairs = n * (n - 1)
    batch = cfg.batch
    train_rng = rngmod.stream(cfg.seed, "maskfit")
    trans_params = transition_params(trans, "trans")
    pretrain_transition(trans, data, cfg, train_rng)

    # phase 2: EM rounds. The E-step labels a pair as interacting when BOTH
    # its slots are simultaneously surprising to the self-only model (an
    # interaction perturbs every participant, while self-dynamics artifacts
    # such as wall bounces perturb one object at a time). Surprise is the
    # self-prediction error normalized by its own per-slot median, so the
    # labels are invariant to latent scaling. Labels cover sharp impacts;
    # gentle persistent contacts sit in the ambiguity band and are left to
    # the head's geometric generalization.
    all_params = {**variational_params(mask, "mask"), **trans_params}
    opt = nk.adam_init(all_params, lr=cfg.lr)
    upper = [(i, j) for i in range(n) for j in range(i + 1, n)]

    mu_base, _, _ = predict_next(trans, data.d, data.c, data.actions,
                                 np.zeros((count, n, n)))
    resid2 = ((data.target - mu_base) ** 2).sum(axis=-1)          # (S, N)
    slot_scale = np.maximum(np.median(resid2, axis=0),
                            n_dims_floor := trans.dyn_out * trans.sigma_floor ** 2)
    surprise = resid2 / slot_scale                                 # (S, N)

    labels = np.zeros((count, len(upper)))
    confident = np.zeros((count, len(upper)), dtype=bool)
    for k, (i, j) in enumerate(upper):
        pair_score = np.minimum(surprise[:, i], surprise[:, j])
        lab = pair_score > cfg.coincidence_hi
        if cfg.dilate > 0:
            lab = _dilate_time(lab, data.episode, cfg.dilate)
        labels[:, k] = lab.astype(float)
        confident[:, k] = lab | (pair_score < cfg.coincidence_lo)

    for _ in range(cfg.em_rounds):

        # coincidence labels are precise but rare; upweight positives so the
        # head cannot satisfy the loss by never firing
        pos = labels[confident].mean() if confident.any() else 0.0
        pos_weight = min(10.0, (1.0 - pos) / max(pos, 1e-3))
        head_params = variational_params(mask, "mask")
        opt_head = nk.adam_init(head_params, lr=cfg.head_lr)
        for _ in range(cfg.head_epochs):
            order = train_rng.permutation(count)
            for lo in range(0, count, batch):
                idx = order[lo: lo + batch]
                _, q, g_cache = soft_graph(mask, data.s[idx], noise=None)
                dq = np.zeros_like(q)
                for k, (i, j) in enumerate(upper):
                    lab = labels[idx, k]
                    wgt = np.where(lab > 0, pos_weight, 1.0) * confident[idx, k]
                    for a, b_ in ((i, j), (j, i)):
                        p_idx = pair_slot(n, a, b_)
                        qv = np.clip(q[:, p_idx], 1e-6, 1.0 - 1e-6)
                        dq[:, p_idx] += wgt * (qv - lab) / (qv * (1.0 - qv)) / idx.size
                grads: dict[str, np.ndarray] = {}
                soft_graph_backward(mask, g_cache, np.zeros((idx.size, n, n)),
                                    dq, grads, "mask", logit_decay=cfg.logit_decay)
                nk.clip_grad_norm(grads, cfg.grad_clip)
                nk.adam_step(opt_head, head_params, grads)

        for _ in range(cfg.dyn_epochs):
            order = train_rng.permutation(count)
            for lo in range(0, count, batch):
                idx = order[lo: lo + batch]
                noise = nk.sample_gumbel(train_rng, (idx.size, pairs, 2))
                weights_b, q, _ = soft_graph(mask, data.s[idx], noise)
                keep = (train_rng.random(weights_b.shape) > cfg.edge_dropout).astype(float)
                mu, sigma, tr_cache = predict_next(trans, data.d[idx], data.c[idx],
                                                   data.actions[idx], weights_b * keep)
                dmu, dsigma, _, _ = mask_elbo_backward(data.target[idx], mu, sigma,
                                                       q, cfg.p_edge)
                grads = {}
                predict_next_backward(trans, tr_cache, dmu, dsigma, grads, "trans")
                nk.clip_grad_norm(grads, cfg.grad_clip)
                nk.adam_step(opt, all_params, grads)


def fit_fc_transition(trans: TransitionNets, data: FeatureTransitions,
                      cfg: MaskFitConfig) -> None:
    """The fully-connected counterpart of fit_mask: identical pretraining
    and the same budget of dynamics epochs, with edges pinned everywhere on
    (dropout-thinned) instead of inferred."""
    n, count = data.n, data.count
    batch = cfg.batch
    train_rng = rngmod.stream(cfg.seed, "maskfit")
    pretrain_transition(trans, data, cfg, train_rng)
    trans_params = transition_params(trans, "trans")
    opt = nk.adam_init(trans_params, lr=cfg.lr)
    full = np.ones((batch, n, n))
    full[:, np.arange(n), np.arange(n)] = 0.0
    q_prior = np.full((batch, n * (n - 1)), cfg.p_edge)
    for _ in range(cfg.em_rounds * cfg.dyn_epochs):
        order = train_rng.permutation(count)
        for lo in range(0, count, batch):
            idx = order[lo: lo + batch]
            keep = (train_rng.random((idx.size, n, n)) > cfg.edge_dropout).astype(float)
            mu, sigma, tr_cache = predict_next(trans, data.d[idx], data.c[idx],
                                               data.actions[idx],
                                               full[: idx.size] * keep)
            dmu, dsigma, _, _ = mask_elbo_backward(data.target[idx], mu, sigma,
                                                   q_prior[: idx.size], cfg.p_edge)
            grads: dict[str, np.ndarray] = {}
            predict_next_backward(trans, tr_cache, dmu, dsigma, grads, "trans")
            nk.clip_grad_norm(grads, cfg.grad_clip)
            nk.adam_step(opt, trans_params, grads)


def fit_codebook(mask: VariationalMask, codebook, trans: TransitionNets,
                 data: FeatureTransitions, cfg: MaskFitConfig) -> None:
    """Codebook regime: shared transition pretraining, then joint training
    of pair encoder, prototypes, and graph decoder through the dynamics
    likelihood with straight-through quantization and VQ losses."""
    from .codebook import decode_backward, decode_code_to_graph, pool_embeddings, \
        quantize, quantize_backward
    from .codebook import codebook_params
    from .pairwise import pairwise_embed, pairwise_embed_backward

    n, count = data.n, data.count
    batch = cfg.batch
    train_rng = rngmod.stream(cfg.seed, "codebookfit")
    pretrain_transition(trans, data, cfg, train_rng)
    all_params = {**nk.net_params(mask.pair_net, "mask/pair"),
                  **codebook_params(codebook, "cb"),
                  **transition_params(trans, "trans")}
    opt = nk.adam_init(all_params, lr=cfg.lr)
    for _ in range(cfg.em_rounds * cfg.dyn_epochs):
        order = train_rng.permutation(count)
        for lo in range(0, count, batch):
            idx = order[lo: lo + batch]
            u, pair_cache = pairwise_embed(mask.pair_net, data.s[idx])
            pooled = pool_embeddings(u)
            _, e_z, _, q_cache = quantize(codebook, pooled)
            weights_b, dec_cache = decode_code_to_graph(codebook, e_z)
            mu, sigma, tr_cache = predict_next(trans, data.d[idx], data.c[idx],
                                               data.actions[idx], weights_b)
            dmu, dsigma, _, _ = mask_elbo_backward(
                data.target[idx], mu, sigma,
                np.full((idx.size, n * (n - 1)), cfg.p_edge), cfg.p_edge)
            grads: dict[str, np.ndarray] = {}
            _, _, dw = predict_next_backward(trans, tr_cache, dmu, dsigma,
                                             grads, "trans")
            de_z = decode_backward(codebook, dec_cache, dw, grads, "cb")
            du_pool = quantize_backward(codebook, q_cache, de_z, grads, "cb")
            du = np.repeat(du_pool[:, None, :], u.shape[1], axis=1) / u.shape[1]
            pairwise_embed_backward(mask.pair_net, pair_cache, du, grads, "mask/pair")
            nk.clip_grad_norm(grads, cfg.grad_clip)
            nk.adam_step(opt, all_params, grads)
