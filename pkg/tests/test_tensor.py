"""Gradient and value checks for the autodiff core and nn blocks."""

import numpy as np
import pytest

from bfamr import nn, tensor
from bfamr.tensor import Parameter, Tensor


def finite_diff(loss_fn, param, h=1e-6):
    """Dense central-difference gradient of a scalar loss wrt one parameter."""
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + h
        up = loss_fn().item()
        flat[i] = saved - h
        down = loss_fn().item()
        flat[i] = saved
        gflat[i] = (up - down) / (2.0 * h)
    return grad


def check_op(loss_fn, params, tol=1e-6):
    for p in params:
        p.zero_grad()
    loss_fn().backward()
    for p in params:
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        numeric = finite_diff(loss_fn, p)
        np.testing.assert_allclose(analytic, numeric, rtol=tol, atol=tol)


class TestPrimitiveGradients:
    def test_square_gradient_is_six_at_three(self):
        w = Parameter("w", np.array([[3.0]]))
        loss = tensor.mul(w, w).sum()
        loss.backward()
        assert w.grad[0, 0] == pytest.approx(6.0)

    def test_add_mul_broadcast(self):
        rng = np.random.default_rng(0)
        a = Parameter("a", rng.normal(size=(3, 4)))
        b = Parameter("b", rng.normal(size=(4,)))
        weight = Tensor(rng.normal(size=(3, 4)))
        check_op(lambda: tensor.mul(tensor.add(a, b), weight).sum(), [a, b])

    def test_matmul_2d(self):
        rng = np.random.default_rng(1)
        a = Parameter("a", rng.normal(size=(3, 5)))
        b = Parameter("b", rng.normal(size=(5, 2)))
        weight = Tensor(rng.normal(size=(3, 2)))
        check_op(lambda: tensor.mul(tensor.matmul(a, b), weight).sum(), [a, b])

    def test_matmul_batched(self):
        rng = np.random.default_rng(2)
        a = Parameter("a", rng.normal(size=(4, 3, 5)))
        b = Parameter("b", rng.normal(size=(4, 5, 2)))
        check_op(lambda: tensor.matmul(a, b).sum(), [a, b])

    def test_matmul_broadcast_left(self):
        rng = np.random.default_rng(3)
        a = Parameter("a", rng.normal(size=(3, 5)))
        b = Parameter("b", rng.normal(size=(4, 5, 2)))
        check_op(lambda: tensor.matmul(a, b).sum(), [a, b])

    def test_matmul_rejects_vectors(self):
        with pytest.raises(ValueError, match="2D"):
            tensor.matmul(Tensor(np.ones(3)), Tensor(np.ones((3, 2))))

    def test_relu(self):
        x = Parameter("x", np.array([[-2.0, -0.5, 0.5, 2.0]]))
        weight = Tensor(np.array([[1.0, 2.0, 3.0, 4.0]]))
        check_op(lambda: tensor.mul(tensor.relu(x), weight).sum(), [x])

    def test_log_floor_value_and_grad(self):
        x = Parameter("x", np.array([[0.5, 1e-15]]))
        out = tensor.log_floor(x)
        assert out.data[0, 0] == pytest.approx(np.log(0.5))
        assert out.data[0, 1] == pytest.approx(np.log(1e-12))
        out.sum().backward()
        assert x.grad[0, 0] == pytest.approx(2.0)
        assert x.grad[0, 1] == 0.0

    def test_sum_axis_keepdims(self):
        rng = np.random.default_rng(4)
        x = Parameter("x", rng.normal(size=(3, 4)))
        w = Tensor(rng.normal(size=(3, 1)))
        check_op(lambda: tensor.mul(tensor.tensor_sum(x, axis=1, keepdims=True), w).sum(), [x])

    def test_mean(self):
        x = Parameter("x", np.arange(6.0).reshape(2, 3))
        out = tensor.mean(x, axis=1)
        np.testing.assert_allclose(out.data, [1.0, 4.0])
        out.sum().backward()
        np.testing.assert_allclose(x.grad, np.full((2, 3), 1.0 / 3.0))

    def test_reshape_swapaxes(self):
        rng = np.random.default_rng(5)
        x = Parameter("x", rng.normal(size=(2, 6)))
        w = Tensor(rng.normal(size=(3, 2, 2)))
        check_op(
            lambda: tensor.mul(tensor.swapaxes(tensor.reshape(x, (2, 3, 2)), 0, 1), w).sum(),
            [x],
        )

    def test_concat(self):
        rng = np.random.default_rng(6)
        a = Parameter("a", rng.normal(size=(2, 3)))
        b = Parameter("b", rng.normal(size=(2, 2)))
        w = Tensor(rng.normal(size=(2, 5)))
        check_op(lambda: tensor.mul(tensor.concat([a, b], axis=-1), w).sum(), [a, b])

    def test_gather_accumulates_duplicates(self):
        x = Parameter("x", np.array([[1.0, 2.0], [3.0, 4.0]]))
        out = tensor.gather(x, [0, 0, 1])
        assert out.shape == (3, 2)
        out.sum().backward()
        np.testing.assert_allclose(x.grad, [[2.0, 2.0], [1.0, 1.0]])

    def test_segment_sum_values_and_grad(self):
        x = Parameter("x", np.array([[1.0], [2.0], [4.0]]))
        out = tensor.segment_sum(x, [0, 1, 0], 2)
        np.testing.assert_allclose(out.data, [[5.0], [2.0]])
        w = Tensor(np.array([[2.0], [3.0]]))
        check_op(lambda: tensor.mul(tensor.segment_sum(x, [0, 1, 0], 2), w).sum(), [x])

    def test_dropout_train_and_eval(self):
        x = Parameter("x", np.ones((4, 4)))
        rng = np.random.default_rng(7)
        out = tensor.dropout(x, 0.5, rng, train=True)
        kept = out.data != 0.0
        np.testing.assert_allclose(out.data[kept], 2.0)
        assert tensor.dropout(x, 0.5, rng, train=False) is x
        out.sum().backward()
        np.testing.assert_allclose(x.grad[kept], 2.0)
        np.testing.assert_allclose(x.grad[~kept], 0.0)


class TestSoftmaxAndLayerNorm:
    def test_softmax_uniform_on_zeros(self):
        out = tensor.softmax(Tensor(np.zeros((1, 2))))
        np.testing.assert_allclose(out.data, [[0.5, 0.5]])

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(8)
        out = tensor.softmax(Tensor(rng.normal(size=(5, 7))))
        np.testing.assert_allclose(out.data.sum(axis=-1), np.ones(5))

    def test_softmax_mask_zeroes_positions(self):
        x = Parameter("x", np.array([[1.0, 2.0, 3.0]]))
        mask = np.array([[True, False, True]])
        out = tensor.softmax(x, mask=mask)
        assert out.data[0, 1] == 0.0
        assert out.data.sum() == pytest.approx(1.0)
        out_true = np.exp([1.0, 3.0]) / np.exp([1.0, 3.0]).sum()
        np.testing.assert_allclose(out.data[0, [0, 2]], out_true)
        w = Tensor(np.array([[1.0, 5.0, 2.0]]))
        check_op(lambda: tensor.mul(tensor.softmax(x, mask=mask), w).sum(), [x])

    def test_softmax_gradient(self):
        rng = np.random.default_rng(9)
        x = Parameter("x", rng.normal(size=(3, 5)))
        w = Tensor(rng.normal(size=(3, 5)))
        check_op(lambda: tensor.mul(tensor.softmax(x), w).sum(), [x])

    def test_layer_norm_constant_row_maps_to_bias(self):
        gain = Parameter("g", np.ones(4))
        bias = Parameter("b", np.full(4, 0.25))
        out = tensor.layer_norm(Tensor(np.full((2, 4), 3.0)), gain, bias)
        np.testing.assert_allclose(out.data, np.full((2, 4), 0.25))

    def test_layer_norm_normalizes(self):
        rng = np.random.default_rng(10)
        gain = Parameter("g", np.ones(8))
        bias = Parameter("b", np.zeros(8))
        out = tensor.layer_norm(Tensor(rng.normal(size=(3, 8))), gain, bias)
        np.testing.assert_allclose(out.data.mean(axis=-1), np.zeros(3), atol=1e-12)
        np.testing.assert_allclose(out.data.std(axis=-1), np.ones(3), atol=1e-3)

    def test_layer_norm_gradient(self):
        rng = np.random.default_rng(11)
        x = Parameter("x", rng.normal(size=(2, 6)))
        gain = Parameter("g", rng.normal(size=(6,)))
        bias = Parameter("b", rng.normal(size=(6,)))
        w = Tensor(rng.normal(size=(2, 6)))
        check_op(
            lambda: tensor.mul(tensor.layer_norm(x, gain, bias), w).sum(),
            [x, gain, bias],
            tol=1e-5,
        )


class TestTapeMechanics:
    def test_backward_requires_scalar(self):
        x = Parameter("x", np.ones((2, 2)))
        with pytest.raises(ValueError, match="scalar"):
            tensor.add(x, x).backward()

    def test_no_grad_blocks_recording(self):
        x = Parameter("x", np.ones((2, 2)))
        with tensor.no_grad():
            out = tensor.mul(x, x)
        assert not out.requires_grad
        assert out._parents == ()

    def test_diamond_reuse_accumulates(self):
        x = Parameter("x", np.array([[2.0]]))
        y = tensor.mul(x, x)
        loss = tensor.add(y, y).sum()
        loss.backward()
        assert x.grad[0, 0] == pytest.approx(8.0)

    def test_grad_accumulates_across_backwards(self):
        x = Parameter("x", np.array([[1.0]]))
        tensor.mul(x, x).sum().backward()
        tensor.mul(x, x).sum().backward()
        assert x.grad[0, 0] == pytest.approx(4.0)
        x.zero_grad()
        assert x.grad is None

    def test_nan_check_toggle(self):
        tensor.set_nan_checks(True)
        try:
            with pytest.raises(FloatingPointError):
                Tensor(np.array([np.inf]))
        finally:
            tensor.set_nan_checks(False)


class TestNnBlocks:
    def test_cross_entropy_one_hot_is_zero(self):
        dist = Tensor(np.array([[0.0, 1.0, 0.0]]))
        assert tensor.cross_entropy(dist, 1).item() == pytest.approx(0.0)

    def test_cross_entropy_value_and_grad(self):
        x = Parameter("x", np.array([[0.2, 0.3, 0.5]]))
        loss = tensor.cross_entropy(tensor.softmax(x), 2)
        probs = np.exp(x.data[0]) / np.exp(x.data[0]).sum()
        assert loss.item() == pytest.approx(-np.log(probs[2]))
        check_op(lambda: tensor.cross_entropy(tensor.softmax(x), 2), [x])

    def test_linear_bias_shapes(self):
        rng = np.random.default_rng(12)
        x = Parameter("x", rng.normal(size=(3, 4)))
        w = Parameter("w", rng.normal(size=(5, 4)))
        b = Parameter("b", rng.normal(size=(5,)))
        out = tensor.linear(x, w, b)
        assert out.shape == (3, 5)
        check_op(lambda: tensor.linear(x, w, b).sum(), [x, w, b])

    def test_ffn_gradient(self):
        rng = np.random.default_rng(13)
        x = Parameter("x", rng.normal(size=(2, 4)))
        w1 = Parameter("w1", rng.normal(size=(6, 4)))
        b1 = Parameter("b1", rng.normal(size=(6,)))
        w2 = Parameter("w2", rng.normal(size=(4, 6)))
        b2 = Parameter("b2", rng.normal(size=(4,)))
        check_op(lambda: nn.ffn(x, w1, b1, w2, b2).sum(), [x, w1, b1, w2, b2], tol=1e-5)

    def test_attention_single_key_returns_value(self):
        d, heads = 4, 2
        eye = Tensor(np.eye(d))
        query = Tensor(np.array([[0.3, -0.7, 0.1, 0.9]]))
        kv = Tensor(np.array([[1.0, 2.0, 3.0, 4.0]]))
        out = nn.multi_head_attention(query, kv, kv, eye, eye, eye, eye, heads)
        np.testing.assert_allclose(out.data, kv.data)

    def test_attention_mask_excludes_position(self):
        d, heads = 4, 2
        eye = Tensor(np.eye(d))
        query = Tensor(np.zeros((1, d)))
        keys = Tensor(np.array([[1.0, 0.0, 0.0, 0.0], [9.0, 9.0, 9.0, 9.0]]))
        mask = np.array([[True, False]])
        out = nn.multi_head_attention(query, keys, keys, eye, eye, eye, eye, heads, mask=mask)
        np.testing.assert_allclose(out.data, keys.data[0:1])

    def test_attention_gradient(self):
        rng = np.random.default_rng(14)
        d, heads = 6, 3
        q = Parameter("q", rng.normal(size=(2, d)))
        kv = Parameter("kv", rng.normal(size=(3, d)))
        mats = [Parameter(n, rng.normal(size=(d, d)) * 0.3) for n in "wq wk wv wo".split()]
        check_op(
            lambda: nn.multi_head_attention(q, kv, kv, *mats, heads).sum(),
            [q, kv, *mats],
            tol=1e-5,
        )

    def test_attention_rejects_bad_head_count(self):
        eye = Tensor(np.eye(5))
        x = Tensor(np.zeros((1, 5)))
        with pytest.raises(ValueError, match="divisible"):
            nn.multi_head_attention(x, x, x, eye, eye, eye, eye, 2)


class TestOptimizer:
    def test_adam_first_step_moves_by_lr(self):
        p = Parameter("p", np.array([[1.0]]))
        p.grad = np.array([[0.5]])
        state = nn.AdamState()
        nn.adam_step({"p": p}, state, lr=0.1)
        # bias-corrected first step is lr * g / (|g| + eps), i.e. ~lr
        assert p.data[0, 0] == pytest.approx(1.0 - 0.1, abs=1e-6)

    def test_adam_skips_gradless(self):
        p = Parameter("p", np.array([[1.0]]))
        nn.adam_step({"p": p}, nn.AdamState(), lr=0.1)
        assert p.data[0, 0] == 1.0

    def test_adam_converges_on_quadratic(self):
        p = Parameter("p", np.array([[5.0]]))
        state = nn.AdamState()
        for _ in range(400):
            p.zero_grad()
            tensor.mul(p, p).sum().backward()
            nn.adam_step({"p": p}, state, lr=0.05)
        assert abs(p.data[0, 0]) < 1e-2

    def test_clip_global_norm(self):
        a = Parameter("a", np.zeros(3))
        b = Parameter("b", np.zeros(4))
        a.grad = np.full(3, 3.0)
        b.grad = np.full(4, 4.0)
        norm = nn.clip_global_norm({"a": a, "b": b}, 1.0)
        expected = np.sqrt(3 * 9.0 + 4 * 16.0)
        assert norm == pytest.approx(expected)
        joint = np.sqrt((a.grad**2).sum() + (b.grad**2).sum())
        assert joint == pytest.approx(1.0)

    def test_clip_noop_below_threshold(self):
        a = Parameter("a", np.zeros(2))
        a.grad = np.array([0.3, 0.4])
        nn.clip_global_norm({"a": a}, 1.0)
        np.testing.assert_allclose(a.grad, [0.3, 0.4])

    def test_lr_schedule_shape(self):
        d, w = 512, 4000
        peak_region = nn.warmup_rsqrt_lr(w, d, w)
        assert nn.warmup_rsqrt_lr(1, d, w) == pytest.approx(d**-0.5 * w**-1.5)
        assert nn.warmup_rsqrt_lr(2, d, w) == pytest.approx(2 * nn.warmup_rsqrt_lr(1, d, w))
        assert nn.warmup_rsqrt_lr(4 * w, d, w) == pytest.approx(peak_region / 2)
        with pytest.raises(ValueError):
            nn.warmup_rsqrt_lr(0, d, w)


class TestGradCheckUtility:
    def test_reports_zero_error_for_correct_grads(self):
        rng = np.random.default_rng(15)
        w = Parameter("w", rng.normal(size=(3, 3)))
        x = Tensor(rng.normal(size=(2, 3)))
        report = nn.grad_check(lambda: tensor.matmul(x, w).sum(), {"w": w})
        assert report["w"] < 1e-6

    def test_detects_wrong_gradient(self):
        w = Parameter("w", np.array([[3.0]]))

        def broken_square():
            out = Tensor((w.data**2).sum(), requires_grad=True, parents=(w,))
            # claims d(w^2)/dw = w instead of 2w
            out._backward = lambda g: w.accumulate(g * w.data)
            return out

        report = nn.grad_check(broken_square, {"w": w})
        assert report["w"] > 0.1


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(16)
        params = {
            "alpha": Parameter("alpha", rng.normal(size=(3, 4))),
            "beta": Parameter("beta", rng.normal(size=(7,))),
        }
        nn.save_checkpoint(tmp_path / "ck", params, extra={"step": 12})
        tensors, extra = nn.load_checkpoint(tmp_path / "ck")
        assert extra == {"step": 12}
        for name, p in params.items():
            assert tensors[name].tobytes() == p.data.tobytes()
        fresh = {
            "alpha": Parameter("alpha", np.zeros((3, 4))),
            "beta": Parameter("beta", np.zeros(7)),
        }
        nn.load_params_into(fresh, tensors)
        for name in params:
            assert fresh[name].data.tobytes() == params[name].data.tobytes()

    def test_name_mismatch_raises(self, tmp_path):
        params = {"only": Parameter("only", np.zeros(2))}
        nn.save_checkpoint(tmp_path / "ck", params)
        tensors, _ = nn.load_checkpoint(tmp_path / "ck")
        with pytest.raises(ValueError, match="missing"):
            nn.load_params_into({"other": Parameter("other", np.zeros(2))}, tensors)

    def test_shape_mismatch_raises(self, tmp_path):
        params = {"w": Parameter("w", np.zeros((2, 3)))}
        nn.save_checkpoint(tmp_path / "ck", params)
        tensors, _ = nn.load_checkpoint(tmp_path / "ck")
        with pytest.raises(ValueError, match="shape"):
            nn.load_params_into({"w": Parameter("w", np.zeros((3, 2)))}, tensors)
