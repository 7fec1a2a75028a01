import numpy as np
import pytest

from fioc import numkit as nk


def finite_diff_param_grads(forward_scalar, params, step=1e-5):
    """Central differences of a scalar function w.r.t. a dict of arrays."""
    grads = {}
    for key, arr in params.items():
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gf = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = forward_scalar()
            flat[i] = orig - step
            lo = forward_scalar()
            flat[i] = orig
            gf[i] = (hi - lo) / (2.0 * step)
        grads[key] = g
    return grads


def rel_err(a, b):
    denom = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-8)
    return np.max(np.abs(a - b)) / denom


def test_zero_net_outputs_final_bias():
    net = nk.dense((3, 4, 2), activation="silu")
    net.biases[-1][:] = [0.7, -1.2]
    y, _ = nk.net_forward(net, np.array([5.0, -3.0, 2.0]))
    assert np.allclose(y, [0.7, -1.2])


def test_identity_single_layer_is_affine_with_exact_grads():
    rng = np.random.default_rng(0)
    net = nk.dense((3, 2), activation="identity", rng=rng)
    net.biases[0][:] = [0.1, -0.2]
    x = rng.standard_normal(3)
    dy = rng.standard_normal(2)
    y, dx, grads = nk.forward_backward(net, x, dy)
    assert np.allclose(y, net.weights[0] @ x + net.biases[0])
    assert np.allclose(dx, net.weights[0].T @ dy)
    assert np.allclose(grads["net/W0"], np.outer(dy, x))
    assert np.allclose(grads["net/b0"], dy)


def test_random_net_param_grads_match_finite_differences():
    rng = np.random.default_rng(1)
    net = nk.dense((4, 6, 3), activation="silu", rng=rng)
    for b in net.biases:
        b[:] = rng.standard_normal(b.shape) * 0.1
    x = rng.standard_normal(4)
    dy = rng.standard_normal(3)
    _, dx, grads = nk.forward_backward(net, x, dy)
    params = nk.net_params(net, "net")

    def scalar():
        y, _ = nk.net_forward(net, x)
        return float(y @ dy)

    fd = finite_diff_param_grads(scalar, params)
    for key in params:
        assert rel_err(grads[key], fd[key]) < 1e-6, key
    fd_x = np.zeros_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += 1e-5
        xm[i] -= 1e-5
        fd_x[i] = (nk.net_forward(net, xp)[0] @ dy - nk.net_forward(net, xm)[0] @ dy) / 2e-5
    assert rel_err(dx, fd_x) < 1e-6


@pytest.mark.parametrize("sizes,activation", [
    ((2, 5, 3), "silu"),
    ((9, 32, 28), "silu"),
    ((14, 32, 9), "silu"),
    ((22, 32, 16), "silu"),
    ((5, 2), "identity"),
])
def test_repo_shapes_gradient_sweep(sizes, activation):
    # quantified gradient-vs-FD sweep over many random draws per shape
    rng = np.random.default_rng(hash(sizes) % (2**32))
    net = nk.dense(sizes, activation=activation, rng=rng)
    for b in net.biases:
        b[:] = rng.standard_normal(b.shape) * 0.05
    draws = 25
    for _ in range(draws):
        x = rng.standard_normal(sizes[0])
        dy = rng.standard_normal(sizes[-1])
        _, _, grads = nk.forward_backward(net, x, dy)
        params = nk.net_params(net, "net")

        def scalar():
            y, _ = nk.net_forward(net, x)
            return float(y @ dy)

        fd = finite_diff_param_grads(scalar, params)
        for key in params:
            assert rel_err(grads[key], fd[key]) < 1e-5, (sizes, key)


def test_batched_forward_matches_loop():
    rng = np.random.default_rng(3)
    net = nk.dense((4, 8, 3), activation="silu", rng=rng)
    xs = rng.standard_normal((7, 4))
    ys, _ = nk.net_forward(net, xs)
    for i in range(7):
        yi, _ = nk.net_forward(net, xs[i])
        assert np.allclose(ys[i], yi)


def test_dimension_mismatch_rejected():
    net = nk.dense((3, 2))
    with pytest.raises(ValueError):
        nk.net_forward(net, np.zeros(4))
    with pytest.raises(ValueError):
        nk.dense((3, 0, 2))
    with pytest.raises(ValueError):
        nk.dense((3, 2), activation="relu")


def test_gru_zero_everything_gives_zero_hidden():
    cell = nk.gru(3, 4)
    h, _ = nk.gru_forward(cell, np.zeros(3), np.zeros(4))
    assert np.allclose(h, 0.0)


def test_gru_preserves_hidden_dimension_and_rejects_mismatch():
    rng = np.random.default_rng(4)
    cell = nk.gru(3, 5, rng=rng)
    h, _ = nk.gru_forward(cell, rng.standard_normal((6, 3)), rng.standard_normal((6, 5)))
    assert h.shape == (6, 5)
    with pytest.raises(ValueError):
        nk.gru_forward(cell, np.zeros(4), np.zeros(5))


def test_gru_gradients_match_finite_differences():
    rng = np.random.default_rng(5)
    cell = nk.gru(3, 4, rng=rng)
    x = rng.standard_normal(3)
    h = rng.standard_normal(4)
    dh_new = rng.standard_normal(4)
    grads = {}
    _, cache = nk.gru_forward(cell, x, h)
    dx, dh = nk.gru_backward(cell, cache, dh_new, grads, "gru")
    params = nk.gru_params(cell, "gru")

    def scalar():
        out, _ = nk.gru_forward(cell, x, h)
        return float(out @ dh_new)

    fd = finite_diff_param_grads(scalar, params)
    for key in params:
        assert rel_err(grads[key], fd[key]) < 1e-6, key

    for vec, dvec in ((x, dx), (h, dh)):
        fd_v = np.zeros_like(vec)
        for i in range(vec.size):
            orig = vec[i]
            vec[i] = orig + 1e-5
            hi = scalar()
            vec[i] = orig - 1e-5
            lo = scalar()
            vec[i] = orig
            fd_v[i] = (hi - lo) / 2e-5
        assert rel_err(dvec, fd_v) < 1e-6
