"""Joint window loss over episode segments, forward and analytic backward.

Term definitions (reported unweighted, combined with configured weights):
    recon        mean squared reconstruction error of observations
    pred         mean squared error of next-step observations decoded from
                 the graph-conditioned prior mean
    kl           posterior-vs-prior Gaussian KL, mean per slot-step (summed
                 over latent dims)
    static       per-window double sum of squared consecutive differences of
                 f_c outputs, batch-averaged
    contrastive  per-window InfoNCE over static features across slots at a
                 shifted timestep, batch-averaged
    reward       mean squared reward prediction error
    mask_nll     Gaussian negative log-likelihood of next dynamic parts under
                 the sampled soft graph (variational/codebook regimes)
    mask_kl      Bernoulli KL of edge posteriors vs the sparse prior
                 (variational regime)
    vq           codebook + commitment quantization losses (codebook regime)

The backward pass walks the window in reverse, accumulating per-step latent
gradients from every later consumer before differentiating the encoder and
recurrence; finite-difference agreement is enforced in the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import numkit as nk
from ..interaction import codebook as cbm
from ..interaction import variational as vm
from ..interaction.pairwise import pairwise_embed, pairwise_embed_backward
from .model import STATIC_PRIOR_STD, WorldModel, fc_weights, static_raw_columns
from .transition import predict_next, predict_next_backward

NORM_EPS = 1e-12


@dataclass
class LossBreakdown:
    recon: float
    pred: float
    kl: float
    static: float
    contrastive: float
    reward: float
    mask_nll: float = 0.0
    mask_kl: float = 0.0
    vq: float = 0.0
    total: float = 0.0

    def as_row(self) -> dict[str, float]:
        return {
            "recon": self.recon, "pred": self.pred, "kl": self.kl,
            "static": self.static, "contrastive": self.contrastive,
            "reward": self.reward, "mask_nll": self.mask_nll,
            "mask_kl": self.mask_kl, "vq": self.vq, "total": self.total,
        }


def combine(model: WorldModel, parts: LossBreakdown) -> float:
    w = model.weights
    return (parts.recon + w.alpha * parts.pred + w.beta * parts.kl
            + w.gamma * parts.static + w.eta * parts.contrastive
            + w.reward * parts.reward
            + w.mask * (parts.mask_nll + parts.mask_kl) + parts.vq)


# --- standalone loss terms (shared by the window loss and its oracles) ------

def static_loss(c_seq: np.ndarray) -> float:
    """Double sum over time gaps and slots of squared consecutive diffs.

    c_seq: (T, N, c_dim) for one window.
    """
    if c_seq.shape[0] < 2:
        raise ValueError("static loss needs at least two steps")
    diff = c_seq[1:] - c_seq[:-1]
    return float(np.sum(diff * diff))


def static_backward(c_seq: np.ndarray, scale: float = 1.0) -> np.ndarray:
    dc = np.zeros_like(c_seq)
    diff = c_seq[1:] - c_seq[:-1]
    dc[1:] += 2.0 * scale * diff
    dc[:-1] -= 2.0 * scale * diff
    return dc


def cosine_matrix(anchor: np.ndarray, cand: np.ndarray):
    """Pairwise cosine similarities along the last axis.

    anchor (..., N, dc) vs cand (..., N, dc) -> (..., N, N); zero-norm
    vectors get similarity 0 (flagged by the returned degenerate count).
    """
    an = np.linalg.norm(anchor, axis=-1)
    cn = np.linalg.norm(cand, axis=-1)
    degenerate = int((an < NORM_EPS).sum() + (cn < NORM_EPS).sum())
    safe_a = np.where(an < NORM_EPS, 1.0, an)
    safe_c = np.where(cn < NORM_EPS, 1.0, cn)
    dots = anchor @ np.swapaxes(cand, -1, -2)
    sims = dots / (safe_a[..., :, None] * safe_c[..., None, :])
    mask = (an[..., :, None] >= NORM_EPS) & (cn[..., None, :] >= NORM_EPS)
    return np.where(mask, sims, 0.0), degenerate


def contrastive_loss(c_seq: np.ndarray, tprime: np.ndarray, temperature: float):
    """InfoNCE over static features: positives are the same slot at another
    timestep, negatives the other slots at that timestep.

    c_seq (T, N, dc); tprime (T-1,) alternative timestep per anchor step.
    Returns (loss, degenerate_pair_count).
    """
    t_steps, n, _ = c_seq.shape
    if t_steps < 2 or n < 2:
        raise ValueError("contrastive loss needs T >= 2 and N >= 2")
    anchors = c_seq[:-1]
    cands = c_seq[np.asarray(tprime, dtype=int)]
    sims, degenerate = cosine_matrix(anchors, cands)
    logits = sims / temperature
    shift = logits.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(logits - shift).sum(axis=-1)) + shift[..., 0]
    idx = np.arange(n)
    loss = (lse - logits[:, idx, idx]).sum()
    return float(loss), degenerate


# --- window loss -------------------------------------------------------------

def sample_window_noise(model: WorldModel, b: int, t_steps: int,
                        rng: np.random.Generator) -> dict:
    """All stochastic draws a window evaluation needs, replayable."""
    d = model.dims
    n = d.n_objects
    p = n * (n - 1)
    noise = {
        "eps": rng.standard_normal((b, t_steps, n, d.s_dim)),
        "gumbel": nk.sample_gumbel(rng, (b, t_steps, p, 2)),
        "tprime": np.zeros((b, t_steps - 1), dtype=int),
    }
    for bi in range(b):
        for t in range(t_steps - 1):
            alt = rng.integers(0, t_steps - 1)
            noise["tprime"][bi, t] = alt if alt < t else alt + 1
    return noise


def window_loss(model: WorldModel, obs: np.ndarray, actions: np.ndarray,
                rewards: np.ndarray, noise: dict, compute_grads: bool = True,
                graph_override: np.ndarray | None = None,
                free_nats: float = 0.0,
                detach_dyn_target: bool = False):
    """Loss breakdown, gradients, and diagnostics for a batch of windows.

    obs (B, T, N, obs_dim); actions (B, T, act); rewards (B, T).
    noise: dict from sample_window_noise. graph_override (B, T, N, N) forces
    the soft weights (used by open-loop evaluation and ablations).

    free_nats masks the KL gradient for latent dimensions whose elementwise
    KL is below the floor (training-time collapse guard; reported values are
    the unmasked KL). detach_dyn_target stops the dynamics-likelihood
    gradient into its target latents, so predictability pressure trains the
    transition and graph but never squeezes information out of the encoder.
    Both default off, leaving the exact differentiable objective.

    Returns (LossBreakdown, grads | None, diag dict).
    """
    d = model.dims
    b, t_steps, n, obs_dim = obs.shape
    if t_steps < 2:
        raise ValueError("window length must be >= 2")
    w = model.weights
    eps_all = noise["eps"]
    gum_all = noise.get("gumbel")
    tprime = noise.get("tprime")

    recon_scale = 1.0 / (b * t_steps * n * obs_dim)
    pred_scale = 1.0 / (b * max(t_steps - 1, 1) * n * obs_dim)
    kl_scale = 1.0 / (b * t_steps * n)
    rew_scale = 1.0 / (b * t_steps)
    mask_count = b * max(t_steps - 1, 1) * n
    edge_count = b * max(t_steps - 1, 1) * n * (n - 1)

    steps: list[dict] = []
    s_prev = np.zeros((b, n, d.s_dim))
    h_prev = np.zeros((b, n, d.h_dim))
    c_prev = dd_prev = None
    pool_cols = static_raw_columns(d)
    raw_sum = np.zeros((b, n, pool_cols.size))

    sums = dict(recon=0.0, pred=0.0, kl=0.0, reward=0.0,
                mask_nll=0.0, mask_kl=0.0, vq=0.0)
    soft_graphs = np.zeros((b, t_steps, n, n))
    samples = np.zeros((b, t_steps, n, d.s_dim))
    c_all = np.zeros((b, t_steps, n, d.c_dim))

    for t in range(t_steps):
        st: dict = {"t": t}
        # --- prior over s_t ---------------------------------------------
        if t == 0:
            prior_mu = np.zeros((b, n, d.s_dim))
            prior_sig = np.ones((b, n, d.s_dim))
        else:
            if graph_override is not None:
                weights_t, q_t, g_cache = graph_override[:, t], None, None
            elif model.regime == "variational":
                weights_t, q_t, g_cache = vm.soft_graph(
                    model.mask, s_prev, gum_all[:, t] if gum_all is not None else None)
            elif model.regime == "codebook":
                u, pair_cache = pairwise_embed(model.mask.pair_net, s_prev)
                pooled = cbm.pool_embeddings(u)
                z, e_z, vq_losses, q_cache = cbm.quantize(model.codebook, pooled)
                weights_t, dec_cache = cbm.decode_code_to_graph(model.codebook, e_z)
                q_t = None
                g_cache = (pair_cache, q_cache, dec_cache, u.shape)
                sums["vq"] += (vq_losses["codebook"] + vq_losses["commitment"]) / max(t_steps - 1, 1)
            else:  # "fc" and "cit" train against a fully-connected graph
                weights_t, q_t, g_cache = fc_weights(b, n), None, None
            soft_graphs[:, t] = weights_t
            mu_d, sig_d, tr_cache = predict_next(
                model.trans, dd_prev, c_prev, actions[:, t - 1], weights_t)
            prior_mu = np.concatenate([s_prev[..., : d.static_in], mu_d], axis=-1)
            prior_sig = np.concatenate(
                [np.full((b, n, d.static_in), STATIC_PRIOR_STD), sig_d], axis=-1)
            st.update(weights=weights_t, q=q_t, g_cache=g_cache, tr_cache=tr_cache,
                      mu_d=mu_d, sig_d=sig_d)
        st.update(prior_mu=prior_mu, prior_sig=prior_sig)

        # --- posterior, sample, features ---------------------------------
        # static-slice raw moments are pooled by a running temporal mean
        h_t, gru_cache = nk.gru_forward(model.gru, s_prev, h_prev)
        enc_in = np.concatenate([obs[:, t], h_t], axis=-1)
        raw, enc_cache = nk.net_forward(model.enc, enc_in)
        raw_sum += raw[..., pool_cols]
        raw = raw.copy()
        raw[..., pool_cols] = raw_sum / (t + 1)
        mu_q = raw[..., : d.s_dim]
        sig_raw = raw[..., d.s_dim:]
        sig_q = nk.softplus(sig_raw) + 1e-4
        s_t = mu_q + sig_q * eps_all[:, t]
        samples[:, t] = s_t
        c_t, fc_cache = nk.net_forward(model.f_c, s_t[..., : d.static_in])
        d_t, fd_cache = nk.net_forward(model.f_d, s_t[..., d.static_in:])
        c_all[:, t] = c_t

        # --- losses at t ---------------------------------------------------
        dec_out, dec_cache_t = nk.net_forward(model.dec, s_t)
        rerr = dec_out - obs[:, t]
        sums["recon"] += float(np.sum(rerr * rerr)) * recon_scale

        others = d_t.shape[1] - 1
        pooled_obj = s_t[:, 1:].mean(axis=1) if others else np.zeros((b, d.s_dim))
        rew_in = np.concatenate([s_t[:, 0], pooled_obj, actions[:, t]], axis=-1)
        rhat, rew_cache = nk.net_forward(model.rew, rew_in)
        rdiff = rhat[:, 0] - rewards[:, t]
        sums["reward"] += float(np.sum(rdiff * rdiff)) * rew_scale

        kl_el = nk.gaussian_kl_elementwise(mu_q, sig_q, prior_mu, prior_sig)
        sums["kl"] += float(np.sum(kl_el)) * kl_scale
        st["kl_mask"] = (kl_el >= free_nats).astype(float) if free_nats > 0.0 else 1.0

        if t > 0:
            shat = np.concatenate([s_prev[..., : d.static_in], st["mu_d"]], axis=-1)
            pdec_out, pdec_cache = nk.net_forward(model.dec, shat)
            perr = pdec_out - obs[:, t]
            sums["pred"] += float(np.sum(perr * perr)) * pred_scale
            st.update(shat=shat, pdec_cache=pdec_cache, perr=perr)

            if model.regime in ("variational", "codebook"):
                dyn_target = s_t[..., d.static_in:]
                z = (dyn_target - st["mu_d"]) / st["sig_d"]
                sums["mask_nll"] += float(np.sum(
                    0.5 * z * z + np.log(st["sig_d"]) + 0.5 * np.log(2 * np.pi))) / mask_count
                st["mask_z"] = z
            if model.regime == "variational" and st["q"] is not None:
                sums["mask_kl"] += float(np.sum(nk.bernoulli_kl(st["q"], model.mask.p_edge))) / edge_count

        st.update(gru_cache=gru_cache, enc_cache=enc_cache, sig_raw=sig_raw,
                  mu_q=mu_q, sig_q=sig_q, s=s_t, c=c_t, dfeat=d_t,
                  fc_cache=fc_cache, fd_cache=fd_cache, dec_cache=dec_cache_t,
                  rerr=rerr, rew_cache=rew_cache, rdiff=rdiff, rew_in=rew_in)
        steps.append(st)
        s_prev, h_prev, c_prev, dd_prev = s_t, h_t, c_t, d_t

    # sequence-level terms
    static_sum = 0.0
    contrast_sum = 0.0
    degenerate = 0
    for bi in range(b):
        static_sum += static_loss(c_all[bi])
        ls, deg = contrastive_loss(c_all[bi], tprime[bi], model.contrastive_temp)
        contrast_sum += ls
        degenerate += deg

    parts = LossBreakdown(
        recon=sums["recon"], pred=sums["pred"], kl=sums["kl"],
        static=static_sum / b, contrastive=contrast_sum / b,
        reward=sums["reward"], mask_nll=sums["mask_nll"],
        mask_kl=sums["mask_kl"], vq=sums["vq"],
    )
    parts.total = combine(model, parts)
    diag = {"soft_graphs": soft_graphs, "samples": samples, "c": c_all,
            "degenerate_pairs": degenerate}
    if not compute_grads:
        return parts, None, diag

    grads: dict[str, np.ndarray] = {}
    ds_direct = np.zeros((b, t_steps, n, d.s_dim))
    dc_buf = np.zeros((b, t_steps, n, d.c_dim))
    dd_buf = np.zeros((b, t_steps, n, d.d_dim))
    dh_carry = np.zeros((b, n, d.h_dim))
    pool_accum = np.zeros((b, n, pool_cols.size))

    # sequence-level gradients into the feature buffers
    for bi in range(b):
        dc_buf[bi] += static_backward(c_all[bi], scale=w.gamma / b)
        dc_buf[bi] += _contrastive_backward(c_all[bi], tprime[bi],
                                            model.contrastive_temp, scale=w.eta / b)

    for t in range(t_steps - 1, -1, -1):
        st = steps[t]
        ds = ds_direct[:, t].copy()

        # recon
        ds += nk.net_backward(model.dec, st["dec_cache"],
                              2.0 * recon_scale * st["rerr"], grads, "dec")
        # reward
        drew_out = np.zeros((b, 1))
        drew_out[:, 0] = 2.0 * rew_scale * w.reward * st["rdiff"]
        drew_in = nk.net_backward(model.rew, st["rew_cache"], drew_out, grads, "rew")
        ds[:, 0] += drew_in[..., : d.s_dim]
        if n > 1:
            ds[:, 1:] += drew_in[..., d.s_dim: 2 * d.s_dim][:, None, :] / (n - 1)
        # mask nll target side
        if (t > 0 and not detach_dyn_target
                and model.regime in ("variational", "codebook") and "mask_z" in st):
            ds[..., d.static_in:] += w.mask * (st["mask_z"] / st["sig_d"]) / mask_count
        # features
        dc_t = dc_buf[:, t]
        ds[..., : d.static_in] += nk.net_backward(model.f_c, st["fc_cache"], dc_t, grads, "fc")
        ds[..., d.static_in:] += nk.net_backward(model.f_d, st["fd_cache"], dd_buf[:, t], grads, "fd")

        # posterior + KL (posterior side)
        mu_q, sig_q = st["mu_q"], st["sig_q"]
        pm, psig = st["prior_mu"], st["prior_sig"]
        fb = st["kl_mask"]
        dmu_q = ds.copy()
        dsig_q = ds * eps_all[:, t]
        dmu_q += fb * w.beta * kl_scale * (mu_q - pm) / (psig * psig)
        dsig_q += fb * w.beta * kl_scale * (sig_q / (psig * psig) - 1.0 / sig_q)
        draw = np.concatenate([dmu_q, dsig_q * nk.dsoftplus(st["sig_raw"])], axis=-1)
        # running-mean pooling: a static-column gradient at step t reaches
        # every earlier step's raw output with weight 1/(t+1)
        pool_accum += draw[..., pool_cols] / (t + 1)
        draw[..., pool_cols] = pool_accum
        denc_in = nk.net_backward(model.enc, st["enc_cache"], draw, grads, "enc")
        dh_t = denc_in[..., obs_dim:] + dh_carry
        dx_gru, dh_carry = nk.gru_backward(model.gru, st["gru_cache"], dh_t, grads, "gru")
        if t > 0:
            ds_direct[:, t - 1] += dx_gru

        # transition into t (writes into buffers at t-1)
        if t > 0:
            dmu_p = -fb * w.beta * kl_scale * (mu_q - pm) / (psig * psig)
            dsig_p = fb * w.beta * kl_scale * (
                1.0 / psig - (sig_q**2 + (mu_q - pm) ** 2) / psig**3)
            dmu_d = dmu_p[..., d.static_in:].copy()
            dsig_d = dsig_p[..., d.static_in:].copy()
            ds_direct[:, t - 1][..., : d.static_in] += dmu_p[..., : d.static_in]

            # pred term through the decoder at the prior mean
            dpdec = 2.0 * pred_scale * w.alpha * st["perr"]
            dshat = nk.net_backward(model.dec, st["pdec_cache"], dpdec, grads, "dec")
            ds_direct[:, t - 1][..., : d.static_in] += dshat[..., : d.static_in]
            dmu_d += dshat[..., d.static_in:]

            # mask nll prior side
            if model.regime in ("variational", "codebook") and "mask_z" in st:
                z, sig_d = st["mask_z"], st["sig_d"]
                dmu_d += w.mask * (-z / sig_d) / mask_count
                dsig_d += w.mask * ((1.0 / sig_d) - z * z / sig_d) / mask_count

            dd_prev_t, dc_prev_t, dw_t = predict_next_backward(
                model.trans, st["tr_cache"], dmu_d, dsig_d, grads, "trans")
            dd_buf[:, t - 1] += dd_prev_t
            dc_buf[:, t - 1] += dc_prev_t

            if graph_override is not None:
                pass
            elif model.regime == "variational":
                dq = None
                if st["q"] is not None:
                    eps_q = 1e-12
                    qc = np.clip(st["q"], eps_q, 1.0 - eps_q)
                    dq = w.mask * (np.log(qc) - np.log(model.mask.p_edge)
                                   - np.log(1.0 - qc) + np.log(1.0 - model.mask.p_edge)) / edge_count
                ds_direct[:, t - 1] += vm.soft_graph_backward(
                    model.mask, st["g_cache"], dw_t, dq, grads, "mask")
            elif model.regime == "codebook":
                pair_cache, q_cache, dec_cache, u_shape = st["g_cache"]
                de_z = cbm.decode_backward(model.codebook, dec_cache, dw_t, grads, "cb")
                du_pool = cbm.quantize_backward(
                    model.codebook, q_cache, de_z, grads, "cb",
                    loss_scale=1.0 / max(t_steps - 1, 1))
                du = np.repeat(du_pool[:, None, :], u_shape[1], axis=1) / u_shape[1]
                ds_direct[:, t - 1] += pairwise_embed_backward(
                    model.mask.pair_net, pair_cache, du, grads, "mask/pair")

    return parts, grads, diag


def _contrastive_backward(c_seq: np.ndarray, tprime: np.ndarray,
                          temperature: float, scale: float) -> np.ndarray:
    t_steps, n, _ = c_seq.shape
    dc = np.zeros_like(c_seq)
    anchors = c_seq[:-1]
    tp = np.asarray(tprime, dtype=int)
    cands = c_seq[tp]
    an = np.linalg.norm(anchors, axis=-1)
    cn = np.linalg.norm(cands, axis=-1)
    ok_a = an >= NORM_EPS
    ok_c = cn >= NORM_EPS
    safe_a = np.where(ok_a, an, 1.0)
    safe_c = np.where(ok_c, cn, 1.0)
    sims = (anchors @ np.swapaxes(cands, -1, -2)) / (
        safe_a[..., :, None] * safe_c[..., None, :])
    pair_ok = ok_a[..., :, None] & ok_c[..., None, :]
    sims = np.where(pair_ok, sims, 0.0)
    logit = sims / temperature
    logit -= logit.max(axis=-1, keepdims=True)
    p = np.exp(logit)
    p /= p.sum(axis=-1, keepdims=True)
    dlogit = p.copy()
    idx = np.arange(n)
    dlogit[:, idx, idx] -= 1.0
    dsims = np.where(pair_ok, dlogit * (scale / temperature), 0.0)
    # cosine backward: x = anchor_i, y = cand_j
    inv = 1.0 / (safe_a[..., :, None] * safe_c[..., None, :])
    danchor = np.einsum("tij,tjc->tic", dsims * inv, cands)
    danchor -= (dsims * sims / (safe_a**2)[..., :, None]).sum(axis=2)[..., None] * anchors
    dcand = np.einsum("tij,tic->tjc", dsims * inv, anchors)
    dcand -= (dsims * sims / (safe_c**2)[..., None, :]).sum(axis=1)[..., None] * cands
    dc[:-1] += np.where(ok_a[..., None], danchor, 0.0)
    np.add.at(dc, tp, np.where(ok_c[..., None], dcand, 0.0))
    return dc
