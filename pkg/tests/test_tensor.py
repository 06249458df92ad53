import numpy as np
import pytest

from jeesdp import tensor as T


def tensor(data, grad=True):
    return T.Tensor(np.asarray(data, dtype=np.float64), requires_grad=grad)


def test_relu_forward():
    out = T.relu(tensor([-1.0, 0.0, 2.0]))
    assert np.array_equal(out.data, [0.0, 0.0, 2.0])


def test_softmax_uniform_on_zeros():
    out = T.softmax_last_axis(tensor([0.0, 0.0]))
    assert np.allclose(out.data, [0.5, 0.5], atol=0)


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(3)
    x = tensor(rng.normal(scale=20.0, size=(7, 11)))
    out = T.softmax_last_axis(x)
    assert np.all(out.data >= 0.0)
    assert np.max(np.abs(out.data.sum(axis=-1) - 1.0)) < 1e-12


def test_max_over_segment_brute_force_example():
    out = T.max_over_segment(tensor([3.0, 1.0, 4.0, 1.0, 5.0]), [(0, 2), (2, 5)])
    assert np.array_equal(out.data, [3.0, 5.0])


def test_max_over_segment_empty_segment_rejected():
    with pytest.raises(T.TensorError):
        T.max_over_segment(tensor([1.0, 2.0]), [(1, 1)])


def test_backward_sum_gives_ones():
    x = tensor([1.0, 2.0, 3.0])
    T.new_tape()
    T.backward(T.sum_axis(x))
    assert np.array_equal(x.grad, [1.0, 1.0, 1.0])


def test_backward_sum_of_squares():
    x = tensor([2.0, -3.0])
    T.new_tape()
    T.backward(T.sum_axis(T.mul(x, x)))
    assert np.allclose(x.grad, [4.0, -6.0])


def test_backward_requires_scalar():
    x = tensor([1.0, 2.0])
    T.new_tape()
    y = T.mul(x, x)
    with pytest.raises(T.TensorError):
        T.backward(y)


def test_backward_twice_without_new_forward():
    x = tensor([1.0, 2.0])
    T.new_tape()
    loss = T.sum_axis(x)
    T.backward(loss)
    with pytest.raises(T.TensorError):
        T.backward(loss)


def test_nonparticipating_leaf_gets_zero_grad():
    x = tensor([1.0])
    unused = tensor([5.0, 6.0])
    T.new_tape()
    T.backward(T.sum_axis(x), leaves=[x, unused])
    assert np.array_equal(unused.grad, [0.0, 0.0])


def test_matmul_shape_error_names_op_and_shapes():
    with pytest.raises(T.TensorError, match=r"matmul.*\(2, 3\).*\(2, 3\)"):
        T.matmul(tensor(np.ones((2, 3))), tensor(np.ones((2, 3))))


def test_concat_slice_roundtrip_exact():
    rng = np.random.default_rng(0)
    a, b = tensor(rng.normal(size=(3, 4))), tensor(rng.normal(size=(3, 2)))
    cat = T.concat([a, b], axis=-1)
    assert np.array_equal(T.slice_axis(cat, 0, 4).data, a.data)
    assert np.array_equal(T.slice_axis(cat, 4, 6).data, b.data)


def test_embedding_lookup_accumulates_duplicate_rows():
    table = tensor(np.zeros((4, 2)))
    T.new_tape()
    out = T.embedding_lookup(table, [1, 1, 3])
    T.backward(T.sum_axis(out))
    assert np.array_equal(table.grad, [[0, 0], [2, 2], [0, 0], [1, 1]])


def test_embedding_lookup_out_of_range():
    with pytest.raises(T.TensorError, match="index out of range"):
        T.embedding_lookup(tensor(np.zeros((4, 2))), [4])


def test_pick_rows():
    x = tensor([[1.0, 2.0], [3.0, 4.0]])
    out = T.pick_rows(x, [1, 0])
    assert np.array_equal(out.data, [2.0, 3.0])


def test_log_floor_clamps():
    x = tensor([0.0, 1.0])
    out = T.log(x, floor=1e-12)
    assert out.data[0] == np.log(1e-12)
    assert out.data[1] == 0.0


def test_dropout_eval_is_identity():
    x = tensor([1.0, 2.0])
    out = T.dropout(x, 0.5, np.random.default_rng(0), train=False)
    assert out is x


def test_dropout_train_zeroes_and_rescales():
    rng = np.random.default_rng(5)
    x = tensor(np.ones(1000))
    out = T.dropout(x, 0.25, rng, train=True)
    kept = out.data != 0.0
    assert np.allclose(out.data[kept], 1.0 / 0.75)
    assert 0.6 < kept.mean() < 0.9


def test_dropout_deterministic_per_seed():
    x = tensor(np.ones(64))
    a = T.dropout(x, 0.5, np.random.default_rng(9), train=True)
    b = T.dropout(x, 0.5, np.random.default_rng(9), train=True)
    assert np.array_equal(a.data, b.data)


def test_conv1d_rows_matches_loop():
    rng = np.random.default_rng(2)
    x = tensor(rng.normal(size=(6, 3)))
    w = tensor(rng.normal(size=(9, 2)))
    b = tensor(rng.normal(size=2))
    out = T.conv1d_rows(x, w, b, window=3)
    xpad = np.vstack([x.data, np.zeros((2, 3))])
    for i in range(6):
        expect = xpad[i:i + 3].reshape(-1) @ w.data + b.data
        assert np.allclose(out.data[i], expect)


def test_lstm_step_matches_unfused_ops():
    rng = np.random.default_rng(4)
    hidden = 3
    w = tensor(rng.normal(size=(hidden + 2, 4 * hidden)))
    b = tensor(rng.normal(size=4 * hidden))
    x = tensor(rng.normal(size=(1, 2)))
    h0 = tensor(rng.normal(size=(1, hidden)))
    c0 = tensor(rng.normal(size=(1, hidden)))
    h, c = T.lstm_step(x, h0, c0, w, b)
    z = np.concatenate([h0.data, x.data], axis=-1) @ w.data + b.data
    sig = lambda v: 1 / (1 + np.exp(-v))
    i, f, o, g = (sig(z[:, :3]), sig(z[:, 3:6]), sig(z[:, 6:9]), np.tanh(z[:, 9:]))
    c_ref = f * c0.data + i * g
    assert np.allclose(c.data, c_ref)
    assert np.allclose(h.data, o * np.tanh(c_ref))


def test_lstm_step_grad_check_all_inputs():
    rng = np.random.default_rng(6)
    hidden = 2
    w = tensor(rng.normal(size=(hidden + 3, 4 * hidden)))
    b = tensor(rng.normal(size=4 * hidden))
    x = tensor(rng.normal(size=(1, 3)))
    h0 = tensor(rng.normal(size=(1, hidden)))
    c0 = tensor(rng.normal(size=(1, hidden)))
    read_h = T.constant(rng.normal(size=(1, hidden)))
    read_c = T.constant(rng.normal(size=(1, hidden)))

    def f(_):
        h, c = T.lstm_step(x, h0, c0, w, b)
        return T.add(T.sum_axis(T.mul(h, read_h)), T.sum_axis(T.mul(c, read_c)))

    for t in (x, h0, c0, w, b):
        assert T.grad_check(f, t) < 1e-7


def _smooth_inputs(rng, shape):
    """Random values bounded away from relu/max kinks and ties."""
    x = rng.normal(size=shape)
    x[np.abs(x) < 0.05] += 0.1
    return x


PRIMITIVE_CASES = {
    "matmul": lambda x, aux: T.matmul(x, aux),
    "add": lambda x, aux: T.add(x, aux),
    "mul": lambda x, aux: T.mul(x, aux),
    "scalar_scale": lambda x, aux: T.scalar_scale(x, -2.5),
    "concat": lambda x, aux: T.concat([x, aux], axis=-1),
    "slice": lambda x, aux: T.slice_axis(x, 1, 3, axis=-1),
    "softmax": lambda x, aux: T.softmax_last_axis(x),
    "sigmoid": lambda x, aux: T.sigmoid(x),
    "tanh": lambda x, aux: T.tanh(x),
    "relu": lambda x, aux: T.relu(x),
    "exp": lambda x, aux: T.exp(T.scalar_scale(x, 0.3)),
    "sum": lambda x, aux: T.sum_axis(x, axis=0),
    "max_over_segment": lambda x, aux: T.max_over_segment(x, [(0, 2), (2, 4)]),
    "reshape": lambda x, aux: T.reshape(x, (x.size,)),
}


@pytest.mark.parametrize("name", sorted(PRIMITIVE_CASES))
def test_primitive_grad_check_ten_random_inputs(name):
    op = PRIMITIVE_CASES[name]
    rng = np.random.default_rng(hash(name) % 2**32)
    for trial in range(10):
        x = tensor(_smooth_inputs(rng, (4, 4)))
        aux = tensor(_smooth_inputs(rng, (4, 4)), grad=False)
        read = T.constant(rng.normal(size=op(x, aux).shape))

        def f(t):
            return T.sum_axis(T.mul(op(t, aux), read))

        err = T.grad_check(f, x)
        assert err < 1e-5, f"{name} trial {trial}: {err}"


def test_grad_check_quadratic_tight():
    x = tensor([1.0, -2.0, 3.0])
    err = T.grad_check(lambda t: T.sum_axis(T.mul(t, t)), x)
    assert err < 1e-8


def test_grad_check_constant_function_zero_error():
    x = tensor([1.0, 2.0])
    c = T.constant([4.0])

    def f(t):
        return T.add(T.scalar_scale(T.sum_axis(t), 0.0), T.sum_axis(c))

    assert T.grad_check(f, x) == 0.0


def test_no_grad_disables_recording():
    x = tensor([1.0, 2.0])
    T.new_tape()
    with T.no_grad():
        y = T.mul(x, x)
    assert not y.requires_grad
