"""Tensor op semantics: forward values, error contracts, determinism."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exam import autodiff as ad
from exam.autodiff import Tensor
from exam.errors import ShapeError


def t64(data, requires_grad=False):
    return Tensor(np.asarray(data, dtype=np.float64), requires_grad=requires_grad)


class TestMatmul:
    def test_identity(self):
        eye = t64(np.eye(2))
        assert np.array_equal(ad.matmul(eye, eye).data, np.eye(2))

    def test_hand_product(self):
        out = ad.matmul(t64([[1, 2], [3, 4]]), t64([[1], [1]]))
        assert out.data.tolist() == [[3], [7]]

    def test_grad_of_sum_is_ones_times_bt(self):
        a = t64([[0.3, -0.2], [1.5, 0.7]], requires_grad=True)
        b = t64([[2.0, 1.0], [-1.0, 0.5]], requires_grad=True)
        ad.tensor_sum(ad.matmul(a, b)).backward()
        expected = np.ones((2, 2)) @ b.data.T
        assert np.allclose(a.grad, expected)

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 2\)"):
            ad.matmul(t64(np.zeros((2, 3))), t64(np.zeros((2, 2))))


class TestElementwise:
    def test_sigmoid_symmetry_point(self):
        assert ad.sigmoid(t64([0.0])).item() == pytest.approx(0.5)

    def test_relu_definition(self):
        out = ad.relu(t64([-3.0, 3.0]))
        assert out.data.tolist() == [0.0, 3.0]

    def test_tanh_derivative_matches_central_difference(self):
        x = t64([0.7], requires_grad=True)
        ad.tanh(x).backward()
        h = 1e-5
        numeric = (np.tanh(0.7 + h) - np.tanh(0.7 - h)) / (2 * h)
        assert abs(x.grad[0] - numeric) < 1e-6

    def test_log_clamps_non_positive(self):
        out = ad.log(t64([0.0, -2.0]))
        assert np.allclose(out.data, np.log(ad.LOG_EPS))

    def test_dispatcher_rejects_unknown_op(self):
        with pytest.raises(ValueError, match="unknown elementwise"):
            ad.elementwise("pow", t64([1.0]))

    @given(st.floats(-30, 30))
    def test_sigmoid_range_open_interval(self, x):
        y = ad.sigmoid(t64([x])).item()
        assert 0.0 < y < 1.0


class TestReduce:
    def test_max_over_axis_definition(self):
        out = ad.reduce("max_over_axis", t64([[1, 5], [3, 2]]), axis=0)
        assert out.data.tolist() == [3, 5]

    def test_mean_rows_idempotent_on_identical_rows(self):
        row = [1.5, -2.0, 0.25]
        out = ad.reduce("mean_rows", t64([row] * 4))
        assert out.data.tolist() == row

    def test_max_gradient_routes_to_argmax_only(self):
        x = t64([[1.0, 5.0], [3.0, 2.0]], requires_grad=True)
        ad.tensor_sum(ad.max_over_axis(x, axis=0)).backward()
        assert x.grad.tolist() == [[0.0, 1.0], [1.0, 0.0]]

    def test_max_tie_breaks_to_first_index(self):
        x = t64([[2.0], [2.0]], requires_grad=True)
        ad.max_over_axis(x, axis=0).backward()
        assert x.grad.tolist() == [[1.0], [0.0]]

    def test_empty_axis_is_an_error(self):
        with pytest.raises(ShapeError, match="empty"):
            ad.tensor_sum(t64(np.zeros((0, 3))), axis=0)


class TestEmbeddingLookup:
    def test_repeated_id_returns_copies(self):
        table = t64([[1.0, 2.0], [3.0, 4.0]])
        out = ad.embedding_lookup(table, [0, 0])
        assert out.data.tolist() == [[1.0, 2.0], [1.0, 2.0]]

    def test_unlooked_up_row_gets_zero_grad(self):
        table = t64(np.arange(6.0).reshape(3, 2), requires_grad=True)
        ad.tensor_sum(ad.embedding_lookup(table, [0, 2])).backward()
        assert table.grad[1].tolist() == [0.0, 0.0]

    def test_repeated_id_accumulates_twice(self):
        table = t64(np.arange(6.0).reshape(3, 2), requires_grad=True)
        ad.tensor_sum(ad.embedding_lookup(table, [1, 1])).backward()
        assert table.grad[1].tolist() == [2.0, 2.0]

    def test_out_of_range_id_raises(self):
        table = t64(np.zeros((3, 2)))
        with pytest.raises(IndexError, match="3 rows"):
            ad.embedding_lookup(table, [0, 3])


class TestSoftmax:
    def test_uniform_on_equal_inputs(self):
        out = ad.softmax_row(t64([[0.0, 0.0, 0.0]]))
        assert np.allclose(out.data, 1 / 3)

    @given(st.floats(-50, 50))
    @settings(max_examples=25)
    def test_shift_invariance(self, shift):
        x = np.array([[0.3, -1.2, 2.0, 0.0]])
        a = ad.softmax_row(t64(x)).data
        b = ad.softmax_row(t64(x + shift)).data
        assert np.allclose(a, b, atol=1e-12)

    def test_matches_high_precision_oracle(self):
        import mpmath

        x = [1.0, 2.0, 3.0]
        exps = [mpmath.e ** v for v in x]
        total = sum(exps)
        expected = [float(v / total) for v in exps]
        out = ad.softmax_row(t64([x])).data[0]
        assert np.allclose(out, expected, atol=1e-9)

    def test_rows_sum_to_one(self, rng):
        x = t64(rng.normal(size=(8, 11)) * 20)
        out = ad.softmax_row(x).data
        assert np.allclose(out.sum(axis=-1), 1.0, atol=1e-6)

    def test_large_inputs_stay_finite(self):
        out = ad.softmax_row(Tensor([[1000.0, 0.0, -1000.0]]))
        assert np.all(np.isfinite(out.data))


class TestGraphProperties:
    def test_backward_of_sum_equals_sum_of_backwards(self, rng):
        x_data = rng.uniform(-1, 1, (4, 3))
        x = t64(x_data, requires_grad=True)
        loss_a = ad.tensor_sum(ad.tanh(x))
        loss_b = ad.tensor_sum(ad.sigmoid(x))
        ad.add(loss_a, loss_b).backward()
        joint = x.grad.copy()

        x1 = t64(x_data, requires_grad=True)
        ad.tensor_sum(ad.tanh(x1)).backward()
        x2 = t64(x_data, requires_grad=True)
        ad.tensor_sum(ad.sigmoid(x2)).backward()
        assert np.allclose(joint, x1.grad + x2.grad, atol=1e-12)

    def test_reused_tensor_accumulates_both_paths(self):
        x = t64([2.0], requires_grad=True)
        ad.tensor_sum(ad.add(ad.mul(x, x), x)).backward()
        assert np.allclose(x.grad, [5.0])  # d/dx (x^2 + x) at 2

    def test_seeded_graph_is_bit_identical(self):
        def run():
            gen = np.random.default_rng(7)
            a = Tensor(gen.normal(size=(5, 4)).astype(np.float32),
                       requires_grad=True)
            b = Tensor(gen.normal(size=(4, 3)).astype(np.float32),
                       requires_grad=True)
            loss = ad.tensor_sum(ad.relu(ad.matmul(a, b)))
            loss.backward()
            return loss.data.copy(), a.grad.copy(), b.grad.copy()

        first, second = run(), run()
        for x, y in zip(first, second):
            assert np.array_equal(x, y)

    def test_shape_immutable_after_construction(self):
        x = Tensor(np.zeros((2, 3)))
        before = x.shape
        ad.reshape(x, (3, 2))
        assert x.shape == before

    def test_grad_matches_data_length(self):
        x = t64(np.ones((3, 2)), requires_grad=True)
        ad.tensor_sum(x).backward()
        assert x.grad.shape == x.data.shape

    def test_no_grad_suppresses_graph(self):
        x = t64([1.0], requires_grad=True)
        with ad.no_grad():
            out = ad.tanh(x)
        assert out._ctx is None and not out.requires_grad
