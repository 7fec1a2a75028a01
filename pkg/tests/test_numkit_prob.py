import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fioc import numkit as nk


def test_gumbel_softmax_symmetric_case():
    out = nk.gumbel_softmax(np.zeros(2), 0.37, np.zeros(2))
    assert np.allclose(out, [0.5, 0.5])


def test_gumbel_softmax_closed_form():
    out = nk.gumbel_softmax(np.array([np.log(3.0), 0.0]), 1.0, np.zeros(2))
    assert np.allclose(out, [0.75, 0.25])


def test_gumbel_softmax_low_temperature_limit():
    out = nk.gumbel_softmax(np.array([1.0, 0.0]), 0.01, np.zeros(2))
    assert out[0] >= 0.99


def test_gumbel_softmax_rejects_bad_inputs():
    with pytest.raises(ValueError):
        nk.gumbel_softmax(np.zeros(2), 0.0, np.zeros(2))
    with pytest.raises(ValueError):
        nk.gumbel_softmax(np.zeros(2), -1.0, np.zeros(2))
    with pytest.raises(ValueError):
        nk.gumbel_softmax(np.zeros(2), 1.0, np.zeros(3))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=6),
       st.floats(0.01, 10.0))
def test_gumbel_softmax_is_probability_vector(logits, temperature):
    rng = np.random.default_rng(abs(hash(tuple(logits))) % (2**32))
    noise = nk.sample_gumbel(rng, len(logits))
    out = nk.gumbel_softmax(np.array(logits), temperature, noise)
    assert np.isclose(out.sum(), 1.0)
    # entries live in (0, 1) exactly; floats may saturate at the endpoints
    assert np.all(out >= 0.0) and np.all(out <= 1.0)


def test_gumbel_softmax_interior_for_moderate_inputs():
    out = nk.gumbel_softmax(np.array([2.0, -1.0, 0.3]), 1.0, np.array([0.1, 0.4, -0.2]))
    assert np.all(out > 0.0) and np.all(out < 1.0)


def test_gaussian_kl_identity_is_zero():
    m = np.array([0.3, -1.0])
    s = np.array([0.5, 2.0])
    assert nk.gaussian_kl(m, s, m, s) == pytest.approx(0.0, abs=1e-15)


def test_gaussian_kl_mean_shift_closed_form():
    assert nk.gaussian_kl([1.0], [1.0], [0.0], [1.0]) == pytest.approx(0.5)


def test_gaussian_kl_scale_closed_form():
    expected = np.log(0.5) + 4.0 / 2.0 - 0.5
    assert nk.gaussian_kl([0.0], [2.0], [0.0], [1.0]) == pytest.approx(expected)
    assert expected == pytest.approx(0.8069, abs=1e-4)


def test_gaussian_kl_rejects_nonpositive_std():
    with pytest.raises(ValueError):
        nk.gaussian_kl([0.0], [0.0], [0.0], [1.0])
    with pytest.raises(ValueError):
        nk.gaussian_kl([0.0], [1.0], [0.0], [-2.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=4),
       st.lists(st.floats(0.1, 5), min_size=1, max_size=4),
       st.lists(st.floats(-5, 5), min_size=1, max_size=4),
       st.lists(st.floats(0.1, 5), min_size=1, max_size=4))
def test_gaussian_kl_nonnegative_zero_iff_equal(m1, s1, m2, s2):
    n = min(len(m1), len(s1), len(m2), len(s2))
    m1, s1, m2, s2 = (np.array(v[:n]) for v in (m1, s1, m2, s2))
    kl = nk.gaussian_kl(m1, s1, m2, s2)
    assert kl >= -1e-12
    if np.array_equal(m1, m2) and np.array_equal(s1, s2):
        assert kl == pytest.approx(0.0, abs=1e-12)
    if kl == pytest.approx(0.0, abs=1e-12):
        assert np.allclose(m1, m2, atol=1e-5) and np.allclose(s1, s2, atol=1e-5)


def test_gumbel_sampler_matches_inverse_cdf_moments():
    rng = np.random.default_rng(7)
    draws = nk.sample_gumbel(rng, 200_000)
    # standard Gumbel has mean gamma and variance pi^2/6
    assert np.mean(draws) == pytest.approx(0.5772, abs=0.01)
    assert np.var(draws) == pytest.approx(np.pi**2 / 6, rel=0.02)


def test_bernoulli_kl_closed_form():
    assert nk.bernoulli_kl(np.array(1.0), 0.1) == pytest.approx(np.log(10.0), rel=1e-6)
    assert nk.bernoulli_kl(np.array(0.1), 0.1) == pytest.approx(0.0, abs=1e-9)


def test_gaussian_logpdf_matches_scipy_formula():
    x = np.array([0.3, -0.5])
    mean = np.array([0.0, 0.1])
    std = np.array([1.2, 0.4])
    manual = sum(-0.5 * ((xi - m) / s) ** 2 - np.log(s) - 0.5 * np.log(2 * np.pi)
                 for xi, m, s in zip(x, mean, std))
    assert nk.gaussian_logpdf(x, mean, std) == pytest.approx(manual)
