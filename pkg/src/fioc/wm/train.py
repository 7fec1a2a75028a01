"""Offline world-model training over episode windows."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import numkit as nk
from .. import rng as rngmod
from ..env.dataset import EpisodeRecord
from .losses import LossBreakdown, sample_window_noise, window_loss
from .model import WorldModel

WINDOW_LENGTH = 10


class DivergenceError(RuntimeError):
    """Training hit a non-finite loss; carries the last good parameters."""

    def __init__(self, message: str, checkpoint: dict[str, np.ndarray], epoch: int):
        super().__init__(message)
        self.checkpoint = checkpoint
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    batch: int = 16
    lr: float = 3e-4            # paper's world-model learning rate
    window: int = WINDOW_LENGTH
    stride: int = 5
    grad_clip: float = 5.0
    seed: int = 0
    # structure-learning schedule (variational/codebook regimes): after the
    # representation stage, the mask and transition are refit on frozen
    # latents, then everything fine-tunes jointly for a few epochs
    edge_dropout: float = 0.3
    mask_pretrain: int = 25
    mask_em_rounds: int = 5
    mask_lr: float = 3e-3
    finetune_epochs: int = 3
    # collapse guards (training-time only; the reported losses are exact)
    free_nats: float = 0.1
    detach_dyn_target: bool = True


@dataclass
class Windows:
    obs: np.ndarray      # (W, T, N, obs)
    actions: np.ndarray  # (W, T, act)
    rewards: np.ndarray  # (W, T)

    def __len__(self) -> int:
        return self.obs.shape[0]


def make_windows(records: list[EpisodeRecord], window: int, stride: int) -> Windows:
    obs, actions, rewards = [], [], []
    for rec in records:
        horizon = rec.horizon
        for lo in range(0, horizon - window + 1, stride):
            obs.append(rec.obs[lo: lo + window])
            actions.append(rec.actions[lo: lo + window])
            rewards.append(rec.rewards[lo: lo + window])
    if not obs:
        raise ValueError("no full windows in the dataset; shorten the window")
    return Windows(np.array(obs), np.array(actions), np.array(rewards))


@dataclass
class TrainResult:
    curves: list[LossBreakdown] = field(default_factory=list)
    eval_curves: list[LossBreakdown] = field(default_factory=list)
    diverged: bool = False


def train_world_model(model: WorldModel, records: list[EpisodeRecord],
                      config: TrainConfig,
                      eval_records: list[EpisodeRecord] | None = None) -> TrainResult:
    """Stage-scheduled training; deterministic given the seed.

    Representation stage: full window loss with the transition gated by
    dropout-thinned fully-connected graphs, so encoder, decoder,
    factorizers, recurrence, and reward train on every regime identically.
    Structure stage (variational/codebook): the mask (or codebook) and
    transition are refit on the frozen posterior latents via the shared
    curriculum in interaction.maskfit. A short joint fine-tune then lets
    gradients flow end to end through the learned soft edges.

    curves holds the per-epoch mean of training-batch losses; when
    eval_records is given, eval_curves holds an epoch-end fixed-noise
    evaluation, the stable signal for smoke checks. Raises DivergenceError
    (with the last finite-epoch parameters) when the loss goes non-finite.
    """
    if not records:
        raise ValueError("dataset is empty")
    windows = make_windows(records, config.window, config.stride)
    params = model.params()
    opt = nk.adam_init(params, lr=config.lr)
    shuffle_rng = rngmod.stream(config.seed, "train/shuffle")
    noise_rng = rngmod.stream(config.seed, "train/noise")
    result = TrainResult()
    last_good = {k: v.copy() for k, v in params.items()}
    n = model.dims.n_objects
    structured = model.regime in ("variational", "codebook")

    def run_epochs(n_epochs: int, use_override: bool, optimizer, epoch_offset: int):
        nonlocal last_good
        for epoch in range(n_epochs):
            order = shuffle_rng.permutation(len(windows))
            accum: dict[str, float] = {}
            batches = 0
            for lo in range(0, len(order), config.batch):
                idx = order[lo: lo + config.batch]
                obs = windows.obs[idx]
                acts = windows.actions[idx]
                rews = windows.rewards[idx]
                b, t_steps = obs.shape[0], obs.shape[1]
                noise = sample_window_noise(model, b, t_steps, noise_rng)
                override = None
                if use_override:
                    keep = (noise_rng.random((b, t_steps, n, n))
                            > config.edge_dropout).astype(float)
                    override = keep
                    override[..., np.arange(n), np.arange(n)] = 0.0
                parts, grads, _ = window_loss(model, obs, acts, rews, noise,
                                              graph_override=override,
                                              free_nats=config.free_nats,
                                              detach_dyn_target=config.detach_dyn_target)
                if not np.isfinite(parts.total):
                    raise DivergenceError(
                        f"non-finite loss at epoch {epoch_offset + epoch}",
                        last_good, epoch_offset + epoch)
                nk.clip_grad_norm(grads, config.grad_clip)
                nk.adam_step(optimizer, params, grads)
                for key, value in parts.as_row().items():
                    accum[key] = accum.get(key, 0.0) + value
                batches += 1
            mean_row = {k: v / batches for k, v in accum.items()}
            result.curves.append(LossBreakdown(**mean_row))
            if eval_records is not None:
                result.eval_curves.append(evaluate_loss(model, eval_records, config))
            last_good = {k: v.copy() for k, v in params.items()}

    repr_epochs = config.epochs
    if structured:
        repr_epochs = max(1, config.epochs - config.finetune_epochs)
    run_epochs(repr_epochs, use_override=True, optimizer=opt, epoch_offset=0)

    refit_structure(model, records, config)
    if structured and config.finetune_epochs > 0:
        opt_ft = nk.adam_init(params, lr=config.lr)
        run_epochs(config.finetune_epochs, use_override=False,
                   optimizer=opt_ft, epoch_offset=repr_epochs)
    return result


def latent_transitions(model: WorldModel, records: list[EpisodeRecord]):
    """Flattened (c, d, s, action, next dyn part) over frozen latents."""
    from ..interaction.maskfit import FeatureTransitions

    cs, ds, ss, acts, target, episode = [], [], [], [], [], []
    static_in = model.dims.static_in
    for e, rec in enumerate(records):
        latents = infer_latents(model, rec)
        cs.append(latents["c"][:-1])
        ds.append(latents["d"][:-1])
        ss.append(latents["s"][:-1])
        acts.append(rec.actions[:-1])
        target.append(latents["s"][1:][..., static_in:])
        episode.append(np.full(rec.horizon - 1, e))
    return FeatureTransitions(
        c=np.concatenate(cs), d=np.concatenate(ds), s=np.concatenate(ss),
        actions=np.concatenate(acts), target=np.concatenate(target),
        episode=np.concatenate(episode))


def refit_structure(model: WorldModel, records: list[EpisodeRecord],
                    config: TrainConfig) -> None:
    """Refit interaction structure and transition on frozen latents."""
    from ..interaction.maskfit import (
        MaskFitConfig,
        fit_codebook,
        fit_fc_transition,
        fit_mask,
    )

    data = latent_transitions(model, records)
    mcfg = MaskFitConfig(pretrain_epochs=config.mask_pretrain,
                         em_rounds=config.mask_em_rounds,
                         lr=config.mask_lr,
                         p_edge=model.mask.p_edge if model.mask else 0.1,
                         edge_dropout=config.edge_dropout,
                         seed=config.seed)
    if model.regime == "variational":
        fit_mask(model.mask, model.trans, data, mcfg)
    elif model.regime == "codebook":
        fit_codebook(model.mask, model.codebook, model.trans, data, mcfg)
    else:  # fc / cit: the same budget with edges pinned fully on
        fit_fc_transition(model.trans, data, mcfg)


def evaluate_loss(model: WorldModel, records: list[EpisodeRecord],
                  config: TrainConfig, seed: int = 1234) -> LossBreakdown:
    """Mean loss over all windows with a fixed noise stream (bit-stable)."""
    windows = make_windows(records, config.window, config.stride)
    noise_rng = rngmod.stream(seed, "eval/noise")
    accum: dict[str, float] = {}
    batches = 0
    for lo in range(0, len(windows), config.batch):
        obs = windows.obs[lo: lo + config.batch]
        acts = windows.actions[lo: lo + config.batch]
        rews = windows.rewards[lo: lo + config.batch]
        noise = sample_window_noise(model, obs.shape[0], obs.shape[1], noise_rng)
        parts, _, _ = window_loss(model, obs, acts, rews, noise, compute_grads=False)
        for key, value in parts.as_row().items():
            accum[key] = accum.get(key, 0.0) + value
        batches += 1
    return LossBreakdown(**{k: v / batches for k, v in accum.items()})


def infer_latents(model: WorldModel, rec: EpisodeRecord, deterministic: bool = True,
                  seed: int = 0):
    """Posterior latents (and features) over one episode.

    Returns dict with s (T, N, s_dim), c, d feature arrays. Deterministic
    mode uses the posterior mean (zero reparameterization noise).
    """
    from .model import encode_step, features

    t_steps = rec.horizon
    n = rec.obs.shape[1]
    rng = rngmod.stream(seed, "latents")
    hidden = None
    s_out = np.zeros((t_steps, n, model.dims.s_dim))
    for t in range(t_steps):
        eps = (np.zeros((1, n, model.dims.s_dim)) if deterministic
               else rng.standard_normal((1, n, model.dims.s_dim)))
        s, _, hidden = encode_step(model, rec.obs[t][None], hidden, eps)
        s_out[t] = s[0]
    c_out, d_out = features(model, s_out)
    return {"s": s_out, "c": c_out, "d": d_out}
