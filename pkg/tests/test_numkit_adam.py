import numpy as np
import pytest

from fioc import numkit as nk


def make_params(values):
    return {k: np.array(v, dtype=float) for k, v in values.items()}


def test_zero_grads_leave_params_unchanged():
    params = make_params({"w": [1.0, -2.0], "b": [[0.5]]})
    before = {k: v.copy() for k, v in params.items()}
    state = nk.adam_init(params, lr=0.1)
    nk.adam_step(state, params, {k: np.zeros_like(v) for k, v in params.items()})
    for k in params:
        assert np.allclose(params[k], before[k])


def test_first_step_moves_by_lr_times_sign():
    # closed form: bias correction makes the first update lr * g / (|g| + eps)
    for g in (3.7, -0.002, 1e4):
        params = make_params({"w": [0.0]})
        state = nk.adam_init(params, lr=0.01)
        nk.adam_step(state, params, {"w": np.array([g])})
        assert np.isclose(params["w"][0], -0.01 * g / (abs(g) + 1e-8), rtol=1e-12)
        assert np.isclose(params["w"][0], -np.sign(g) * 0.01, rtol=1e-4)


def test_two_opposed_steps_net_displacement_below_lr():
    params = make_params({"w": [0.0]})
    lr = 0.05
    state = nk.adam_init(params, lr=lr)
    g = 2.3
    nk.adam_step(state, params, {"w": np.array([g])})
    nk.adam_step(state, params, {"w": np.array([-g])})
    assert abs(params["w"][0]) < lr


def test_two_step_unrolled_closed_form():
    g, lr = 2.3, 0.05
    params = make_params({"w": [0.0]})
    state = nk.adam_init(params, lr=lr)
    nk.adam_step(state, params, {"w": np.array([g])})
    nk.adam_step(state, params, {"w": np.array([-g])})
    # manual unroll of the bias-corrected update
    b1, b2, eps = 0.9, 0.999, 1e-8
    m1, v1 = (1 - b1) * g, (1 - b2) * g * g
    step1 = -lr * (m1 / (1 - b1)) / (np.sqrt(v1 / (1 - b2)) + eps)
    m2, v2 = b1 * m1 + (1 - b1) * (-g), b2 * v1 + (1 - b2) * g * g
    step2 = -lr * (m2 / (1 - b1**2)) / (np.sqrt(v2 / (1 - b2**2)) + eps)
    assert np.isclose(params["w"][0], step1 + step2, rtol=1e-9)


def test_non_finite_gradient_rejected_with_key_name():
    params = make_params({"w": [0.0]})
    state = nk.adam_init(params, lr=0.1)
    with pytest.raises(FloatingPointError, match="w"):
        nk.adam_step(state, params, {"w": np.array([np.nan])})


def test_shape_mismatch_rejected():
    params = make_params({"w": [0.0, 1.0]})
    state = nk.adam_init(params, lr=0.1)
    with pytest.raises(ValueError):
        nk.adam_step(state, params, {"w": np.zeros(3)})
    with pytest.raises(KeyError):
        nk.adam_step(state, params, {"q": np.zeros(2)})


def test_clip_grad_norm_scales_to_bound():
    grads = {"a": np.array([3.0, 0.0]), "b": np.array([0.0, 4.0])}
    norm = nk.clip_grad_norm(grads, 1.0)
    assert np.isclose(norm, 5.0)
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    assert np.isclose(total, 1.0)
