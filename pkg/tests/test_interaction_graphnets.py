"""Pairwise embedding, variational masks, transition nets: contracts and
finite-difference gradient checks on the composed paths."""
import numpy as np
import pytest

from fioc import interaction as ia
from fioc import numkit as nk
from fioc.wm import transition as tr


def rel_err(a, b):
    denom = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-10)
    return np.max(np.abs(a - b)) / denom


def fd_grads(scalar, params, step=1e-6):
    out = {}
    for key, arr in params.items():
        g = np.zeros_like(arr)
        flat, gf = arr.ravel(), g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = scalar()
            flat[i] = orig - step
            lo = scalar()
            flat[i] = orig
            gf[i] = (hi - lo) / (2 * step)
        out[key] = g
    return out


# --- pairwise embedding ------------------------------------------------------

def test_zero_encoder_gives_equal_embeddings():
    net = nk.dense((8, 6, 4))
    s = np.random.default_rng(0).standard_normal((2, 3, 4))
    u, _ = ia.pairwise_embed(net, s)
    assert u.shape == (2, 6, 4)
    assert np.allclose(u, u[:, :1, :])


def test_pair_count_for_three_objects():
    rng = np.random.default_rng(1)
    net = nk.dense((8, 6, 4), rng=rng)
    u, _ = ia.pairwise_embed(net, rng.standard_normal((1, 3, 4)))
    assert u.shape[1] == 6


def test_swapping_pair_inputs_changes_embedding():
    rng = np.random.default_rng(2)
    net = nk.dense((8, 6, 4), rng=rng)
    s = rng.standard_normal((1, 2, 4))
    u, _ = ia.pairwise_embed(net, s)
    # ordered pairs (0,1) and (1,0) differ for a generic encoder
    assert not np.allclose(u[0, 0], u[0, 1])


def test_pairwise_embed_needs_two_objects():
    net = nk.dense((8, 6, 4))
    with pytest.raises(ValueError):
        ia.pairwise_embed(net, np.zeros((1, 1, 4)))


# --- variational soft graph --------------------------------------------------

def test_uniform_logits_give_half_weights():
    mask = ia.make_variational(s_dim=4, u_dim=5, hidden=6)  # zero-initialized
    s = np.random.default_rng(3).standard_normal((2, 3, 4))
    weights, q, _ = ia.soft_graph(mask, s, noise=None)
    sen, rec = tr.pair_indices(3)
    assert np.allclose(weights[:, sen, rec], 0.5)
    assert np.allclose(q, 0.5)
    assert np.allclose(np.diagonal(weights, axis1=1, axis2=2), 0.0)


def test_low_temperature_hardening_matches_argmax():
    rng = np.random.default_rng(4)
    mask = ia.make_variational(s_dim=4, u_dim=5, hidden=6, rng=rng, temperature=0.01)
    s = rng.standard_normal((3, 3, 4))
    weights, q, _ = ia.soft_graph(mask, s, noise=None)
    hard = ia.harden(weights)
    sen, rec = tr.pair_indices(3)
    assert np.array_equal(hard[:, sen, rec].astype(bool), q > 0.5)


def test_edge_weights_in_open_interval_and_hardening_idempotent():
    rng = np.random.default_rng(5)
    mask = ia.make_variational(s_dim=4, u_dim=5, hidden=6, rng=rng)
    s = rng.standard_normal((2, 4, 4))
    noise = nk.sample_gumbel(rng, (2, 12, 2))
    weights, _, _ = ia.soft_graph(mask, s, noise)
    sen, rec = tr.pair_indices(4)
    w = weights[:, sen, rec]
    assert np.all(w > 0.0) and np.all(w < 1.0)
    hard = ia.harden(weights)
    assert np.array_equal(ia.harden(hard), hard)


def test_soft_graph_gradients_match_fd():
    rng = np.random.default_rng(6)
    mask = ia.make_variational(s_dim=3, u_dim=4, hidden=6, rng=rng)
    s = rng.standard_normal((2, 3, 3))
    noise = nk.sample_gumbel(rng, (2, 6, 2))
    cw = rng.standard_normal((2, 3, 3))
    cq = rng.standard_normal((2, 6))

    def scalar():
        weights, q, _ = ia.soft_graph(mask, s, noise)
        return float(np.sum(weights * cw) + np.sum(q * cq))

    weights, q, cache = ia.soft_graph(mask, s, noise)
    grads: dict = {}
    ds = ia.soft_graph_backward(mask, cache, cw, cq, grads, "mask")
    params = ia.variational_params(mask, "mask")
    fd = fd_grads(scalar, params)
    for key in params:
        assert rel_err(grads[key], fd[key]) < 1e-5, key
    fd_s = np.zeros_like(s)
    flat, ff = s.ravel(), fd_s.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + 1e-6
        hi = scalar()
        flat[i] = orig - 1e-6
        lo = scalar()
        flat[i] = orig
        ff[i] = (hi - lo) / 2e-6
    assert rel_err(ds, fd_s) < 1e-5


# --- transition nets ---------------------------------------------------------

def test_empty_graph_keeps_self_term_only():
    rng = np.random.default_rng(7)
    nets = tr.make_transition(d_dim=3, c_dim=2, dyn_out=3, act_dim=2, hidden=8, rng=rng)
    d = rng.standard_normal((2, 3, 3))
    c = rng.standard_normal((2, 3, 2))
    a = rng.standard_normal((2, 2))
    mu0, sig0, _ = tr.predict_next(nets, d, c, a, np.zeros((2, 3, 3)))
    self_in = np.concatenate([d, c, np.zeros((2, 3, 2))], axis=-1)
    self_in[:, 0, -2:] = a
    self_out, _ = nk.net_forward(nets.self_net, self_in)
    assert np.allclose(mu0, self_out[..., :3])


def test_messages_linear_in_edge_weight():
    rng = np.random.default_rng(8)
    nets = tr.make_transition(d_dim=3, c_dim=2, dyn_out=3, act_dim=2, hidden=8, rng=rng)
    d = rng.standard_normal((1, 3, 3))
    c = rng.standard_normal((1, 3, 2))
    a = rng.standard_normal((1, 2))
    w_full = np.zeros((1, 3, 3))
    w_full[0, 1, 2] = 1.0
    w_half = w_full * 0.5
    mu0, _, _ = tr.predict_next(nets, d, c, a, np.zeros((1, 3, 3)))
    mu1, _, _ = tr.predict_next(nets, d, c, a, w_full)
    muh, _, _ = tr.predict_next(nets, d, c, a, w_half)
    assert np.allclose(muh - mu0, 0.5 * (mu1 - mu0))  # exactly linear gating


def test_transition_gradients_match_fd():
    rng = np.random.default_rng(9)
    nets = tr.make_transition(d_dim=2, c_dim=2, dyn_out=2, act_dim=2, hidden=6, rng=rng)
    d = rng.standard_normal((2, 3, 2))
    c = rng.standard_normal((2, 3, 2))
    a = rng.standard_normal((2, 2))
    w = rng.uniform(0.0, 1.0, size=(2, 3, 3))
    idx = np.arange(3)
    w[:, idx, idx] = 0.0
    cmu = rng.standard_normal((2, 3, 2))
    csig = rng.standard_normal((2, 3, 2))

    def scalar():
        mu, sigma, _ = tr.predict_next(nets, d, c, a, w)
        return float(np.sum(mu * cmu) + np.sum(sigma * csig))

    mu, sigma, cache = tr.predict_next(nets, d, c, a, w)
    grads: dict = {}
    dd, dc, dw = tr.predict_next_backward(nets, cache, cmu, csig, grads, "trans")
    params = tr.transition_params(nets, "trans")
    fd = fd_grads(scalar, params)
    for key in params:
        assert rel_err(grads[key], fd[key]) < 1e-5, key
    for arr, got in ((d, dd), (c, dc), (w, dw)):
        fd_a = np.zeros_like(arr)
        flat, ff = arr.ravel(), fd_a.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + 1e-6
            hi = scalar()
            flat[i] = orig - 1e-6
            lo = scalar()
            flat[i] = orig
            ff[i] = (hi - lo) / 2e-6
        if arr is w:
            off = ~np.eye(3, dtype=bool)
            assert rel_err(got[:, off], fd_a[:, off]) < 1e-5
        else:
            assert rel_err(got, fd_a) < 1e-5


# --- mask ELBO ---------------------------------------------------------------

def test_edge_posterior_at_prior_gives_zero_kl():
    q = np.full((2, 6), 0.1)
    d = np.zeros((2, 3, 2))
    nll, kl = ia.mask_elbo_terms(d, np.zeros_like(d), np.ones_like(d), q, p_edge=0.1)
    assert kl == pytest.approx(0.0, abs=1e-9)


def test_deterministic_edge_vs_sparse_prior_kl():
    q = np.ones((1, 1))
    d = np.zeros((1, 1, 1))
    _, kl = ia.mask_elbo_terms(d, np.zeros_like(d), np.ones_like(d), q, p_edge=0.1)
    assert kl == pytest.approx(np.log(10.0), rel=1e-6)
    assert kl == pytest.approx(2.3026, abs=1e-4)


def test_mask_nll_matches_independent_density():
    rng = np.random.default_rng(10)
    d = rng.standard_normal((3, 2, 4))
    mu = rng.standard_normal((3, 2, 4))
    sigma = rng.uniform(0.5, 2.0, size=(3, 2, 4))
    q = rng.uniform(0.01, 0.99, size=(3, 2))
    nll, _ = ia.mask_elbo_terms(d, mu, sigma, q, p_edge=0.1)
    manual = []
    for b in range(3):
        for i in range(2):
            manual.append(-nk.gaussian_logpdf(d[b, i], mu[b, i], sigma[b, i]))
    assert nll == pytest.approx(float(np.mean(manual)), rel=1e-12)


def test_mask_elbo_backward_matches_fd():
    rng = np.random.default_rng(11)
    d = rng.standard_normal((2, 2, 3))
    mu = rng.standard_normal((2, 2, 3))
    sigma = rng.uniform(0.5, 2.0, size=(2, 2, 3))
    q = rng.uniform(0.05, 0.95, size=(2, 2))

    dmu, dsigma, dq, dd = ia.mask_elbo_backward(d, mu, sigma, q, p_edge=0.1)
    for arr, got in ((mu, dmu), (sigma, dsigma), (q, dq), (d, dd)):
        fd_a = np.zeros_like(arr)
        flat, ff = arr.ravel(), fd_a.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + 1e-6
            hn, hk = ia.mask_elbo_terms(d, mu, sigma, q, 0.1)
            flat[i] = orig - 1e-6
            ln_, lk = ia.mask_elbo_terms(d, mu, sigma, q, 0.1)
            flat[i] = orig
            ff[i] = ((hn + hk) - (ln_ + lk)) / 2e-6
        assert rel_err(got, fd_a) < 1e-4
