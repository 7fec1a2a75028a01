"""Graph inference fed with ground-truth latents, bypassing the world model.

The identifiability ceiling: with d = (position, velocity) and c = (mass,
radius, one-hot type) taken straight from the simulator, the variational
mask trains on the dynamics ELBO alone, and CIT fits its regressors on the
same features. Structure must be recoverable when representation error is
removed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng as rngmod
from ..env.dataset import EpisodeRecord
from ..wm.transition import TransitionNets, make_transition, predict_next, \
    transition_params
from . import cit as citm
from .maskfit import FeatureTransitions, MaskFitConfig, fit_mask
from .variational import (
    VariationalMask,
    harden,
    make_variational,
    mask_elbo_terms,
    soft_graph,
    variational_params,
)


def gt_features(rec: EpisodeRecord):
    """Per-step (c, d, s) feature arrays from recorded ground truth."""
    t_steps, n = rec.gt_pos.shape[:2]
    n_types = rec.config.n_types
    onehot = np.zeros((t_steps, n, n_types))
    for t in range(t_steps):
        onehot[t, np.arange(n), rec.type_id[t]] = 1.0
    c = np.concatenate([rec.mass[..., None], rec.radius[..., None], onehot], axis=-1)
    d = np.concatenate([rec.gt_pos, rec.gt_vel], axis=-1)
    s = np.concatenate([c, d], axis=-1)
    return c, d, s


def gt_transitions(records: list[EpisodeRecord]) -> FeatureTransitions:
    cs, ds, ss, acts, dnext, episode = [], [], [], [], [], []
    for e, rec in enumerate(records):
        c, d, s = gt_features(rec)
        cs.append(c[:-1])
        ds.append(d[:-1])
        ss.append(s[:-1])
        acts.append(rec.actions[:-1])
        dnext.append(d[1:])
        episode.append(np.full(rec.horizon - 1, e))
    return FeatureTransitions(
        c=np.concatenate(cs), d=np.concatenate(ds), s=np.concatenate(ss),
        actions=np.concatenate(acts), target=np.concatenate(dnext),
        episode=np.concatenate(episode))


@dataclass
class GtMaskModel:
    mask: VariationalMask
    trans: TransitionNets
    c_dim: int
    d_dim: int

    def params(self) -> dict[str, np.ndarray]:
        out = variational_params(self.mask, "mask")
        out.update(transition_params(self.trans, "trans"))
        return out


def fit_mask_on_gt_latents(records: list[EpisodeRecord], epochs: int = 100,
                           pretrain_epochs: int = 25, seed: int = 0,
                           hidden: int = 48, u_dim: int = 12,
                           temperature: float = 0.5, p_edge: float = 0.1,
                           lr: float = 3e-3) -> GtMaskModel:
    """Identifiability-ceiling training; epochs maps to EM rounds (20 per)."""
    data = gt_transitions(records)
    c_dim, d_dim, s_dim = data.c.shape[-1], data.d.shape[-1], data.s.shape[-1]
    act_dim = data.actions.shape[-1]
    init_rng = rngmod.stream(seed, "gtmask/init")
    model = GtMaskModel(
        mask=make_variational(s_dim, u_dim, hidden, rng=init_rng,
                              temperature=temperature, p_edge=p_edge,
                              edge_bias=1.0),
        trans=make_transition(d_dim, c_dim, d_dim, act_dim, hidden, rng=init_rng),
        c_dim=c_dim, d_dim=d_dim,
    )
    cfg = MaskFitConfig(pretrain_epochs=pretrain_epochs,
                        em_rounds=max(1, epochs // 20), lr=lr,
                        p_edge=p_edge, seed=seed)
    fit_mask(model.mask, model.trans, data, cfg)
    return model


def gt_mask_elbo(model: GtMaskModel, records: list[EpisodeRecord],
                 p_edge: float = 0.1) -> tuple[float, float]:
    """Deterministic negative-ELBO terms over a dataset (diagnostics)."""
    nlls, kls = [], []
    for rec in records:
        c, d, s = gt_features(rec)
        weights, q, _ = soft_graph(model.mask, s[:-1], noise=None)
        mu, sigma, _ = predict_next(model.trans, d[:-1], c[:-1], rec.actions[:-1], weights)
        nll, kl = mask_elbo_terms(d[1:], mu, sigma, q, p_edge)
        nlls.append(nll)
        kls.append(kl)
    return float(np.mean(nlls)), float(np.mean(kls))


def gt_graphs_variational(model: GtMaskModel, rec: EpisodeRecord):
    _, _, s = gt_features(rec)
    soft, _, _ = soft_graph(model.mask, s, noise=None)
    return soft, harden(soft)


def fit_cit_on_gt_latents(records: list[EpisodeRecord], seed: int = 0,
                          hidden: int = 48, epochs: int = 40) -> citm.CitModels:
    data = gt_transitions(records)
    return citm.fit_cit_models(data.d, data.target, data.actions,
                               rngmod.stream(seed, "gtcit"),
                               hidden=hidden, epochs=epochs)


def gt_graphs_cit(models: citm.CitModels, rec: EpisodeRecord,
                  threshold: float = citm.CIT_THRESHOLD_DEFAULT, smooth: int = 1):
    _, d, _ = gt_features(rec)
    soft, hard = citm.infer_graph_cit(models, d[:-1], d[1:], rec.actions[:-1],
                                      threshold=threshold, smooth=smooth)
    soft = np.concatenate([soft, soft[-1:]], axis=0)
    hard = np.concatenate([hard, hard[-1:]], axis=0)
    return soft, hard
