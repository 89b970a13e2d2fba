import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from conecraft import tensorkit as tk
from conecraft.tensorkit import (BNState, DegenerateBatch, ShapeMismatch, Tape, Tensor,
                                 batch_norm, grad_check, no_grad)
from conecraft.netkit import run_gradcheck_suite
from oracles import numeric_grad


def test_every_op_passes_gradient_check():
    results = run_gradcheck_suite(seed=0)
    bad = {k: v for k, v in results.items() if v >= 1e-5}
    assert not bad


def test_add_backward_accumulates_shared_input():
    x = Tensor([1.0, 2.0], requires_grad=True)
    (x * x + x).sum().backward()
    np.testing.assert_allclose(x.grad, [3.0, 5.0])


def test_tape_is_topological():
    x = Tensor([1.0], requires_grad=True)
    y = x * 2.0
    z = y + x
    tape = Tape.record(z)
    pos = {id(n): i for i, n in enumerate(tape.nodes)}
    assert pos[id(x)] < pos[id(y)] < pos[id(z)]


def test_backward_needs_seed_for_vector_output():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with pytest.raises(ShapeMismatch):
        (x * 2.0).backward()
    (x * 2.0).backward(np.array([1.0, -1.0]))
    np.testing.assert_allclose(x.grad, [2.0, -2.0])


def test_no_grad_records_nothing():
    x = Tensor([1.0], requires_grad=True)
    with no_grad():
        y = x * 3.0
    assert not y.requires_grad and y._parents == ()
    assert tk.is_grad_enabled()


def test_broadcast_rules():
    a = Tensor(np.ones((3, 2)))
    for ok in (np.ones(2), np.ones((3, 1)), np.ones((1, 2)), 2.0):
        assert (a + ok).shape == (3, 2)
    with pytest.raises(ShapeMismatch):
        a + Tensor(np.ones(3))
    with pytest.raises(ShapeMismatch):
        tk.matmul(a, Tensor(np.ones((3, 3))))


def test_kink_derivatives_are_zero():
    x = Tensor([0.0, 1.0, -1.0], requires_grad=True)
    tk.relu(x).sum().backward()
    np.testing.assert_array_equal(x.grad, [0.0, 1.0, 0.0])
    x.zero_grad()
    tk.tabs(x).sum().backward()
    np.testing.assert_array_equal(x.grad, [0.0, 1.0, -1.0])


def test_sigmoid_and_softmax_are_stable():
    s = tk.sigmoid(Tensor([-800.0, 0.0, 800.0])).data
    np.testing.assert_allclose(s, [0.0, 0.5, 1.0])
    p = tk.softmax(Tensor([[1000.0, 1000.0, -1000.0]])).data
    np.testing.assert_allclose(p, [[0.5, 0.5, 0.0]])


def test_batch_norm_training_statistics():
    x = np.array([[1.0, 2.0], [3.0, 6.0], [5.0, 10.0]])
    st_ = BNState.create(2, momentum=0.5)
    out = batch_norm(Tensor(x), st_, True).data
    np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.var(axis=0), x.var(axis=0) / (x.var(axis=0) + 1e-5))
    # running variance folds in the unbiased estimate
    np.testing.assert_allclose(st_.running_var, 0.5 + 0.5 * x.var(axis=0, ddof=1))
    np.testing.assert_allclose(st_.running_mean, 0.5 * x.mean(axis=0))


def test_batch_norm_eval_uses_running_stats_and_rejects_single_sample_training():
    st_ = BNState.create(2)
    st_.running_mean = np.array([1.0, -1.0])
    st_.running_var = np.array([4.0, 1.0])
    out = batch_norm(Tensor([[3.0, 0.0]]), st_, False).data
    np.testing.assert_allclose(out, [[2.0 / np.sqrt(4 + 1e-5), 1.0 / np.sqrt(1 + 1e-5)]])
    with pytest.raises(DegenerateBatch):
        batch_norm(Tensor([[1.0, 2.0]]), st_, True)


def test_grad_check_flags_a_wrong_gradient():
    def bad(t):
        return Tensor._result(np.asarray((t.data ** 2).sum()), (t,), lambda g: (g * t.data,), "bad")
    assert grad_check(bad, np.array([1.0, 2.0])) > 0.1


def test_matmul_gradient_matches_numeric(rng):
    a = rng.standard_normal((3, 4))
    b = rng.standard_normal((4, 2))
    ta = Tensor(a, requires_grad=True)
    tk.matmul(ta, Tensor(b)).sum().backward()
    np.testing.assert_allclose(ta.grad, numeric_grad(lambda x: (x @ b).sum(), a), atol=1e-7)


@given(hnp.arrays(np.float64, st.tuples(st.integers(2, 6), st.integers(1, 5)),
                  elements=st.floats(-3, 3)))
def test_softmax_rows_sum_to_one(x):
    p = tk.softmax(Tensor(x)).data
    np.testing.assert_allclose(p.sum(axis=1), 1.0)
    assert (p >= 0).all()


@given(hnp.arrays(np.float64, st.tuples(st.integers(2, 5), st.integers(1, 4)),
                  elements=st.floats(-2, 2)),
       st.integers(0, 1000))
def test_weighted_sum_gradients(x, seed):
    w = np.random.default_rng(seed).standard_normal(x.shape)
    err = grad_check(lambda t: (tk.exp(t) * Tensor(w) + t * t).sum(), x)
    assert err < 1e-5
