import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fioc.interaction import nshd


def random_graphs(seed, t=4, n=3):
    rng = np.random.default_rng(seed)
    g = rng.integers(0, 2, size=(t, n, n)).astype(np.uint8)
    idx = np.arange(n)
    g[:, idx, idx] = 0
    return g


def test_identical_sequences_zero():
    g = random_graphs(0)
    assert nshd(g, g) == 0.0


def test_complement_is_one():
    g = random_graphs(1)
    comp = 1 - g
    idx = np.arange(g.shape[1])
    comp[:, idx, idx] = 0
    assert nshd(comp, g) == 1.0


def test_single_wrong_entry_three_objects():
    g = np.zeros((1, 3, 3), dtype=np.uint8)
    est = g.copy()
    est[0, 0, 1] = 1
    assert nshd(est, g) == pytest.approx(1.0 / 6.0)
    assert nshd(est, g) == pytest.approx(0.1667, abs=1e-4)


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        nshd(np.zeros((2, 3, 3)), np.zeros((3, 3, 3)))
    with pytest.raises(ValueError):
        nshd(np.zeros((2, 3, 2)), np.zeros((2, 3, 2)))
    with pytest.raises(ValueError):
        nshd(np.zeros((2, 1, 1)), np.zeros((2, 1, 1)))


def test_accepts_single_graph_2d():
    a = np.zeros((3, 3), dtype=np.uint8)
    b = a.copy()
    b[1, 2] = 1
    assert nshd(a, b) == pytest.approx(1.0 / 6.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 100_000))
def test_nshd_is_a_metric(seed):
    a = random_graphs(seed)
    b = random_graphs(seed + 1)
    c = random_graphs(seed + 2)
    dab, dba = nshd(a, b), nshd(b, a)
    assert dab == dba                       # symmetry
    assert 0.0 <= dab <= 1.0
    assert nshd(a, a) == 0.0                # identity
    if dab == 0.0:
        assert np.array_equal(a, b)
    assert nshd(a, c) <= dab + nshd(b, c) + 1e-12   # triangle inequality
