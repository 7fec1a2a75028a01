"""Episode-level graph inference and nSHD evaluation for every regime."""
from __future__ import annotations

import numpy as np

from ..env.dataset import EpisodeRecord
from ..wm.model import WorldModel, fc_weights
from ..wm.train import infer_latents
from . import cit as citm
from .codebook import decode_code_to_graph, pool_embeddings, quantize
from .metrics import nshd
from .pairwise import pairwise_embed
from .variational import harden, soft_graph


def episode_graphs_variational(model: WorldModel, rec: EpisodeRecord):
    """Soft and hardened graph estimates per step from posterior latents
    (deterministic relaxation: zero Gumbel noise, posterior means); the
    whole episode runs as one batch over time."""
    latents = infer_latents(model, rec)
    soft, _, _ = soft_graph(model.mask, latents["s"], noise=None)
    return soft, harden(soft)


def episode_graphs_codebook(model: WorldModel, rec: EpisodeRecord):
    latents = infer_latents(model, rec)
    u, _ = pairwise_embed(model.mask.pair_net, latents["s"])
    _, e_z, _, _ = quantize(model.codebook, pool_embeddings(u))
    soft, _ = decode_code_to_graph(model.codebook, e_z)
    return soft, harden(soft)


def episode_graphs_oracle(rec: EpisodeRecord):
    """Ground-truth graphs echoed back; the perfect-regime baseline."""
    g = rec.graphs.astype(float)
    return g, rec.graphs.copy()


def episode_graphs_fc(rec: EpisodeRecord):
    t_steps, n = rec.horizon, rec.obs.shape[1]
    soft = np.repeat(fc_weights(1, n), t_steps, axis=0)
    return soft, harden(soft)


def cit_transitions(model: WorldModel, records: list[EpisodeRecord]):
    """Stacked latent-d transitions (d_t, d_t+1, a_t) across episodes."""
    d_list, dn_list, a_list = [], [], []
    for rec in records:
        latents = infer_latents(model, rec)
        d_list.append(latents["d"][:-1])
        dn_list.append(latents["d"][1:])
        a_list.append(rec.actions[:-1])
    return (np.concatenate(d_list), np.concatenate(dn_list), np.concatenate(a_list))


def episode_graphs_cit(model: WorldModel, models: citm.CitModels, rec: EpisodeRecord,
                       threshold: float, smooth: int = 1):
    """CIT estimates per transition; the final step repeats the last graph
    so the sequence aligns with the recorded horizon."""
    latents = infer_latents(model, rec)
    d, dn = latents["d"][:-1], latents["d"][1:]
    soft, hard = citm.infer_graph_cit(models, d, dn, rec.actions[:-1],
                                      threshold=threshold, smooth=smooth)
    soft = np.concatenate([soft, soft[-1:]], axis=0)
    hard = np.concatenate([hard, hard[-1:]], axis=0)
    return soft, hard


def per_episode_nshd(hard_sequences: list[np.ndarray],
                     records: list[EpisodeRecord]) -> list[float]:
    return [nshd(hard, rec.graphs) for hard, rec in zip(hard_sequences, records)]
