"""Factored per-slot world model: shared encoder/decoder, static/dynamic
factorizers, graph-conditioned transition, reward head, and the interaction
regime nets.

Latent layout: each slot's latent s splits by index into a static-in part
(first static_in coords, feeding f_c) and a dynamic-in part (feeding f_d).
The transition predicts moments of the next dynamic-in part; the prior over
the static part is a unit-variance random walk around the previous sample.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import numkit as nk
from ..interaction.codebook import Codebook, codebook_params, make_codebook
from ..interaction.variational import (
    P_EDGE_DEFAULT,
    TAU_DEFAULT,
    VariationalMask,
    make_variational,
    variational_params,
)
from .transition import TransitionNets, make_transition, transition_params

REGIMES = ("variational", "codebook", "cit", "fc")
# Random-walk prior width for the static part of the latent; pairs with the
# running-mean pooling of the static posterior (see encode_step), which is
# what actually keeps time-varying content out of the static slice.
STATIC_PRIOR_STD = 0.1
CONTRASTIVE_TEMPERATURE = 0.1
SIGMA_FLOOR = 1e-4


@dataclass(frozen=True)
class ModelDims:
    n_objects: int
    obs_dim: int
    act_dim: int = 2
    static_in: int = 6    # slice of s feeding f_c; paper-scale static dim
    dyn_in: int = 8       # slice of s feeding f_d; paper-scale dynamic dim
    c_dim: int = 6
    d_dim: int = 8
    h_dim: int = 24
    u_dim: int = 16
    enc_hidden: int = 48
    dec_hidden: int = 48
    trans_hidden: int = 48
    fact_hidden: int = 16
    codebook_size: int = 16
    mask_hidden: int = 64

    @property
    def s_dim(self) -> int:
        return self.static_in + self.dyn_in

    def to_vector(self) -> np.ndarray:
        return np.array([
            self.n_objects, self.obs_dim, self.act_dim, self.static_in,
            self.dyn_in, self.c_dim, self.d_dim, self.h_dim, self.u_dim,
            self.enc_hidden, self.dec_hidden, self.trans_hidden,
            self.fact_hidden, self.codebook_size, self.mask_hidden,
        ], dtype=float)

    @staticmethod
    def from_vector(vec: np.ndarray) -> "ModelDims":
        v = [int(x) for x in np.asarray(vec).ravel()]
        return ModelDims(*v)


@dataclass(frozen=True)
class LossWeights:
    # paper defaults: pred 1, kl 0.05, static 0.1, contrastive 0.2
    alpha: float = 1.0
    beta: float = 0.05
    gamma: float = 0.1
    eta: float = 0.2
    reward: float = 1.0
    mask: float = 1.0

    def __post_init__(self) -> None:
        if min(self.alpha, self.beta, self.gamma, self.eta) < 0:
            raise ValueError("loss weights must be non-negative")

    def to_vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma, self.eta,
                         self.reward, self.mask])

    @staticmethod
    def from_vector(vec: np.ndarray) -> "LossWeights":
        return LossWeights(*[float(x) for x in np.asarray(vec).ravel()])


@dataclass
class WorldModel:
    dims: ModelDims
    regime: str
    weights: LossWeights
    gru: nk.GruCell
    enc: nk.DenseNet
    dec: nk.DenseNet
    f_c: nk.DenseNet
    f_d: nk.DenseNet
    trans: TransitionNets
    rew: nk.DenseNet
    mask: VariationalMask | None = None
    codebook: Codebook | None = None
    contrastive_temp: float = CONTRASTIVE_TEMPERATURE
    extras: dict = field(default_factory=dict)

    def params(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        out.update(nk.gru_params(self.gru, "gru"))
        out.update(nk.net_params(self.enc, "enc"))
        out.update(nk.net_params(self.dec, "dec"))
        out.update(nk.net_params(self.f_c, "fc"))
        out.update(nk.net_params(self.f_d, "fd"))
        out.update(transition_params(self.trans, "trans"))
        out.update(nk.net_params(self.rew, "rew"))
        if self.mask is not None:
            out.update(variational_params(self.mask, "mask"))
        if self.codebook is not None:
            out.update(codebook_params(self.codebook, "cb"))
        return out


def make_model(dims: ModelDims, regime: str, rng: np.random.Generator,
               weights: LossWeights | None = None,
               temperature: float = TAU_DEFAULT,
               p_edge: float = P_EDGE_DEFAULT) -> WorldModel:
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    weights = weights or LossWeights()
    model = WorldModel(
        dims=dims,
        regime=regime,
        weights=weights,
        gru=nk.gru(dims.s_dim, dims.h_dim, rng=rng),
        enc=nk.dense((dims.obs_dim + dims.h_dim, dims.enc_hidden, 2 * dims.s_dim), rng=rng),
        dec=nk.dense((dims.s_dim, dims.dec_hidden, dims.obs_dim), rng=rng),
        f_c=nk.dense((dims.static_in, dims.fact_hidden, dims.c_dim), rng=rng),
        f_d=nk.dense((dims.dyn_in, dims.fact_hidden, dims.d_dim), rng=rng),
        trans=make_transition(dims.d_dim, dims.c_dim, dims.dyn_in, dims.act_dim,
                              dims.trans_hidden, rng=rng),
        rew=nk.dense((2 * dims.s_dim + dims.act_dim, 32, 1), rng=rng),
    )
    # pairwise nets exist for every regime that infers graphs from latents
    if regime in ("variational", "codebook"):
        model.mask = make_variational(dims.s_dim, dims.u_dim, dims.mask_hidden,
                                      rng=rng, temperature=temperature,
                                      p_edge=p_edge)
    if regime == "codebook":
        model.codebook = make_codebook(dims.u_dim, dims.n_objects,
                                       k=dims.codebook_size, hidden=32, rng=rng)
    return model


def encode_step(model: WorldModel, obs: np.ndarray, hidden, eps: np.ndarray):
    """One posterior step: advances the recurrent state, returns sample.

    The static-slice posterior is the running temporal mean of the per-step
    encoder outputs, so constant attributes sharpen over time while anything
    time-varying is squeezed out of the static slice into the dynamic one
    (a scale-invariant routing pressure a width prior cannot provide).

    obs (B, N, obs_dim); hidden is (h_prev, s_prev, raw_sum, count) or None
    for the zero initial state; eps (B, N, s_dim) reparameterization draws.
    Returns (s sample, (mu, sigma), next hidden).
    """
    b, n, _ = obs.shape
    d = model.dims
    if obs.shape[-1] != d.obs_dim:
        raise ValueError(f"obs dim {obs.shape[-1]} != expected {d.obs_dim}")
    if hidden is None:
        h_prev = np.zeros((b, n, d.h_dim))
        s_prev = np.zeros((b, n, d.s_dim))
        raw_sum = np.zeros((b, n, 2 * d.static_in))
        count = 0
    else:
        h_prev, s_prev, raw_sum, count = hidden
    h, _ = nk.gru_forward(model.gru, s_prev, h_prev)
    raw, _ = nk.net_forward(model.enc, np.concatenate([obs, h], axis=-1))
    raw = pool_static_raw(model.dims, raw, raw_sum, count)
    mu = raw[..., : d.s_dim]
    sigma = nk.softplus(raw[..., d.s_dim:]) + SIGMA_FLOOR
    s = mu + sigma * eps
    return s, (mu, sigma), (h, s, raw_sum, count + 1)


def static_raw_columns(dims: ModelDims) -> np.ndarray:
    """Encoder-output columns holding the static slice's mu and raw sigma."""
    return np.concatenate([np.arange(dims.static_in),
                           dims.s_dim + np.arange(dims.static_in)])


def pool_static_raw(dims: ModelDims, raw: np.ndarray, raw_sum: np.ndarray,
                    count: int) -> np.ndarray:
    """Replace static-slice raw moments with their running mean, in place on
    raw_sum (accumulates the new step). Returns the pooled raw array."""
    cols = static_raw_columns(dims)
    raw_sum += raw[..., cols]
    pooled = raw.copy()
    pooled[..., cols] = raw_sum / (count + 1)
    return pooled


def features(model: WorldModel, s: np.ndarray):
    """Static and dynamic read-outs (c, d) from latent samples."""
    d = model.dims
    c_feat, _ = nk.net_forward(model.f_c, s[..., : d.static_in])
    d_feat, _ = nk.net_forward(model.f_d, s[..., d.static_in:])
    return c_feat, d_feat


def fc_weights(b: int, n: int) -> np.ndarray:
    w = np.ones((b, n, n))
    idx = np.arange(n)
    w[:, idx, idx] = 0.0
    return w


REGIME_CODES = {name: i for i, name in enumerate(REGIMES)}


def save_model(model: WorldModel, path) -> None:
    tensors = dict(model.params())
    tensors["meta/dims"] = model.dims.to_vector()
    tensors["meta/weights"] = model.weights.to_vector()
    tensors["meta/regime"] = np.array(float(REGIME_CODES[model.regime]))
    if model.mask is not None:
        tensors["meta/mask"] = np.array([model.mask.temperature, model.mask.p_edge])
    nk.save_tensors(path, tensors)


def load_model(path) -> WorldModel:
    tensors = nk.load_tensors(path)
    dims = ModelDims.from_vector(tensors.pop("meta/dims"))
    weights = LossWeights.from_vector(tensors.pop("meta/weights"))
    regime = REGIMES[int(tensors.pop("meta/regime"))]
    mask_meta = tensors.pop("meta/mask", None)
    model = make_model(dims, regime, np.random.default_rng(0), weights=weights)
    if mask_meta is not None and model.mask is not None:
        model.mask.temperature = float(mask_meta[0])
        model.mask.p_edge = float(mask_meta[1])
    params = model.params()
    missing = set(params) - set(tensors)
    if missing:
        raise nk.CheckpointError(f"checkpoint missing tensors: {sorted(missing)[:4]}")
    for key, arr in params.items():
        arr[...] = tensors[key]
    return model
