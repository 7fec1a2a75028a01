"""Interaction discovery by conditional independence testing.

For every target object j a full Gaussian regressor predicts its next
dynamic part from the action and all objects' dynamic parts; for each source
i an ablated regressor drops d^i. The per-transition log-likelihood gap is
the pointwise conditional-mutual-information score for edge (i, j); window
scores threshold into graph estimates.

Regressors are homoscedastic: the mean net is fitted by squared error and
the per-dimension sigma comes from training residuals. An adaptive sigma
head would absorb rare interaction surprises instead of exposing them, which
is exactly the signal CIT needs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import numkit as nk

CIT_THRESHOLD_DEFAULT = 0.02
CIT_SIGMA_FLOOR = 1e-2


@dataclass
class GaussianRegressor:
    net: nk.DenseNet          # in -> out (predictive mean)
    out_dim: int
    sigma: np.ndarray | None = None   # (out,) residual std, floored
    sigma_floor: float = CIT_SIGMA_FLOOR

    @property
    def trained(self) -> bool:
        return self.sigma is not None

    def predict(self, x: np.ndarray) -> np.ndarray:
        mu, _ = nk.net_forward(self.net, x)
        return mu

    def log_density(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self.sigma is None:
            raise RuntimeError("regressor is untrained")
        mu = self.predict(x)
        return nk.gaussian_logpdf(y, mu, self.sigma)


@dataclass
class CitModels:
    n_objects: int
    d_dim: int
    act_dim: int
    full: dict[int, GaussianRegressor] = field(default_factory=dict)
    ablated: dict[tuple[int, int], GaussianRegressor] = field(default_factory=dict)

    @property
    def trained(self) -> bool:
        return (len(self.full) == self.n_objects
                and all(m.trained for m in self.full.values())
                and all(m.trained for m in self.ablated.values()))


def _target_inputs(d: np.ndarray, actions: np.ndarray, target: int,
                   drop: int | None) -> np.ndarray:
    """Regressor inputs for one target: action, own dynamics, and the other
    objects' dynamics in coordinates relative to the target (interactions
    are translation-invariant, so this conditioning surfaces them). drop
    removes one source object entirely (the ablated model)."""
    s = d.shape[0]
    blocks = [actions, d[:, target]]
    for k in range(d.shape[1]):
        if k == target or k == drop:
            continue
        blocks.append(d[:, k] - d[:, target])
    return np.concatenate(blocks, axis=1)


def fit_regressor(x: np.ndarray, y: np.ndarray, hidden: int, rng: np.random.Generator,
                  epochs: int = 60, batch: int = 128, lr: float = 3e-3,
                  sigma_floor: float = CIT_SIGMA_FLOOR) -> GaussianRegressor:
    """Squared-error fit of the mean; sigma per dimension from residuals on
    a 20% calibration split so richer models don't earn a biased sigma.

    The second half of training oversamples the regressor's own worst
    residuals, so rare sharp events get enough gradient share to fit.
    """
    out_dim = y.shape[1]
    net = nk.dense((x.shape[1], hidden, hidden, out_dim), rng=rng)
    params = nk.net_params(net, "reg")
    opt = nk.adam_init(params, lr=lr)
    count = x.shape[0]
    order0 = rng.permutation(count)
    cut = max(1, int(round(count * 0.8)))
    fit_idx, calib_idx = order0[:cut], order0[cut:]
    if calib_idx.size == 0:
        calib_idx = fit_idx

    def sweep(n_epochs, probs):
        for _ in range(n_epochs):
            if probs is None:
                order = rng.permutation(fit_idx.size)
                batches = [fit_idx[order[lo: lo + batch]]
                           for lo in range(0, fit_idx.size, batch)]
            else:
                batches = [rng.choice(fit_idx, size=min(batch, fit_idx.size), p=probs)
                           for _ in range(max(1, fit_idx.size // batch))]
            for idx in batches:
                out, cache = nk.net_forward(net, x[idx])
                grads: dict[str, np.ndarray] = {}
                nk.net_backward(net, cache, 2.0 * (out - y[idx]) / idx.size,
                                grads, "reg")
                nk.clip_grad_norm(grads, 10.0)
                nk.adam_step(opt, params, grads)

    half = max(1, epochs // 2)
    sweep(half, None)
    pred, _ = nk.net_forward(net, x[fit_idx])
    resid2 = np.sum((pred - y[fit_idx]) ** 2, axis=1)
    w_samp = np.clip(resid2 - np.median(resid2), 0.0, None) + 1.0
    sweep(epochs - half, w_samp / w_samp.sum())

    resid, _ = nk.net_forward(net, x[calib_idx])
    sigma = np.maximum(np.sqrt(np.mean((resid - y[calib_idx]) ** 2, axis=0)), sigma_floor)
    return GaussianRegressor(net, out_dim, sigma=sigma, sigma_floor=sigma_floor)


def fit_cit_models(d: np.ndarray, d_next: np.ndarray, actions: np.ndarray,
                   rng: np.random.Generator, hidden: int = 48, epochs: int = 60,
                   sigma_floor: float = CIT_SIGMA_FLOOR) -> CitModels:
    """Train full and source-ablated predictors on one transition set.

    d, d_next: (S, N, d_dim) dynamic parts at t and t+1; actions (S, act).
    """
    s, n, dd = d.shape
    models = CitModels(n_objects=n, d_dim=dd, act_dim=actions.shape[1])
    for j in range(n):
        x_full = _target_inputs(d, actions, j, drop=None)
        models.full[j] = fit_regressor(x_full, d_next[:, j], hidden, rng,
                                       epochs=epochs, sigma_floor=sigma_floor)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            x_abl = _target_inputs(d, actions, j, drop=i)
            models.ablated[(i, j)] = fit_regressor(x_abl, d_next[:, j], hidden, rng,
                                                   epochs=epochs, sigma_floor=sigma_floor)
    return models


def pointwise_ratios(models: CitModels, d: np.ndarray, d_next: np.ndarray,
                     actions: np.ndarray) -> np.ndarray:
    """Per-transition log-likelihood gaps, shape (S, N, N); diagonal zero."""
    if not models.trained:
        raise RuntimeError("CIT models are untrained")
    s, n, _ = d.shape
    ratios = np.zeros((s, n, n))
    full_ll = {}
    for j in range(n):
        x_full = _target_inputs(d, actions, j, drop=None)
        full_ll[j] = models.full[j].log_density(x_full, d_next[:, j])
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            x_abl = _target_inputs(d, actions, j, drop=i)
            abl_ll = models.ablated[(i, j)].log_density(x_abl, d_next[:, j])
            ratios[:, i, j] = full_ll[j] - abl_ll
    return ratios


def cmi_score(models: CitModels, d: np.ndarray, d_next: np.ndarray,
              actions: np.ndarray, source: int, target: int) -> float:
    """Held-out mean log-likelihood gap for (source -> target), clipped at 0."""
    if source == target:
        raise ValueError("self-edges are excluded by construction")
    ratios = pointwise_ratios(models, d, d_next, actions)
    return max(0.0, float(ratios[:, source, target].mean()))


def infer_graph_cit(models: CitModels, d: np.ndarray, d_next: np.ndarray,
                    actions: np.ndarray, threshold: float = CIT_THRESHOLD_DEFAULT,
                    smooth: int = 1):
    """Per-transition graph estimates: edge iff the pointwise score clears
    the threshold; soft value is the score scaled by the threshold, capped.

    smooth > 1 averages scores over a centered temporal window of that
    length before thresholding (transitions are consecutive in that case);
    contact spikes dwarf the fitting noise this removes.

    Returns (soft (S, N, N) in [0, 1], hard (S, N, N) uint8).
    """
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    ratios = pointwise_ratios(models, d, d_next, actions)
    if smooth > 1:
        ratios = _smooth_time(ratios, smooth)
    hard = (ratios >= threshold).astype(np.uint8)
    soft = np.clip(ratios / threshold, 0.0, 1.0)
    n = ratios.shape[1]
    idx = np.arange(n)
    hard[:, idx, idx] = 0
    soft[:, idx, idx] = 0.0
    return soft, hard


def _smooth_time(ratios: np.ndarray, window: int) -> np.ndarray:
    half = window // 2
    s = ratios.shape[0]
    out = np.empty_like(ratios)
    for t in range(s):
        lo, hi = max(0, t - half), min(s, t + half + 1)
        out[t] = ratios[lo:hi].mean(axis=0)
    return out


def calibrate_threshold(models: CitModels, d: np.ndarray, d_next: np.ndarray,
                        actions: np.ndarray, reference: np.ndarray,
                        smooth: int = 1,
                        grid: np.ndarray | None = None) -> float:
    """Pick the detection threshold minimizing mismatches against reference
    graphs on a calibration split (the same role the paper's per-environment
    threshold table plays). reference: (S, N, N) binary graphs aligned with
    the transitions."""
    ratios = pointwise_ratios(models, d, d_next, actions)
    if smooth > 1:
        ratios = _smooth_time(ratios, smooth)
    if grid is None:
        grid = np.geomspace(0.02, 50.0, 24)
    n = ratios.shape[1]
    off = ~np.eye(n, dtype=bool)
    ref = np.asarray(reference, dtype=bool)[:, off]
    best_thr, best_err = float(grid[0]), np.inf
    for thr in grid:
        hard = (ratios >= thr)[:, off]
        err = float((hard != ref).mean())
        if err < best_err:
            best_err, best_thr = err, float(thr)
    return best_thr
