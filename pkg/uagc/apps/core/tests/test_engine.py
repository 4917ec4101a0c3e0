import numpy as np
from django.test import SimpleTestCase
from scipy import sparse

from uagc.forecasting.engine import (
    Adam,
    Parameter,
    SparseOperator,
    Tape,
    Tensor,
    abs_,
    adam_update,
    add,
    backward,
    causal_mask,
    concat,
    embedding_lookup,
    gradcheck,
    layer_norm,
    matmul,
    mean,
    mul,
    relu,
    reshape,
    scaled_dot_attention,
    sigmoid,
    slice_tensor,
    softmax,
    sparse_dense_matmul,
    stack,
    sub,
    sum_,
    tanh,
    transpose,
)
from uagc.forecasting.exceptions import NumericError, ShapeError

GRADCHECK_TOLERANCE = 1e-6


def leaf(rng, *shape, positive=False):
    value = rng.normal(size=shape)
    if positive:
        value = np.abs(value) + 0.5
    return Tensor(value, requires_grad=True)


class GradientCheckTests(SimpleTestCase):
    """Cada operação contra diferenças finitas centrais."""

    def setUp(self):
        self.rng = np.random.default_rng(0)

    def check(self, fn, *inputs):
        error = gradcheck(fn, inputs)
        self.assertLess(error, GRADCHECK_TOLERANCE)

    def test_elementwise_with_broadcast(self):
        a, b = leaf(self.rng, 3, 4), leaf(self.rng, 4)
        weights = self.rng.normal(size=(3, 4))
        self.check(lambda: sum_(mul(add(a, b), weights)), a, b)
        self.check(lambda: sum_(mul(sub(a, b), mul(a, b))), a, b)

    def test_matmul_batched_and_weights(self):
        x, w = leaf(self.rng, 2, 3, 4), leaf(self.rng, 4, 5)
        y = leaf(self.rng, 2, 4, 3)
        weights = self.rng.normal(size=(2, 3, 5))
        self.check(lambda: sum_(mul(matmul(x, w), weights)), x, w)
        batched_weights = self.rng.normal(size=(2, 3, 3))
        self.check(lambda: sum_(mul(matmul(x, y), batched_weights)), x, y)

    def test_activations(self):
        x = leaf(self.rng, 4, 3)
        weights = self.rng.normal(size=(4, 3))
        for op in (sigmoid, tanh, softmax):
            with self.subTest(op=op.__name__):
                self.check(lambda: sum_(mul(op(x), weights)), x)

    def test_relu_and_abs_away_from_kink(self):
        x = Tensor(np.array([[-1.5, 0.7], [2.0, -0.3]]), requires_grad=True)
        self.check(lambda: sum_(mul(relu(x), 3.0)), x)
        self.check(lambda: sum_(abs_(x)), x)

    def test_layer_norm(self):
        x, gain, bias = leaf(self.rng, 3, 5), leaf(self.rng, 5), leaf(self.rng, 5)
        weights = self.rng.normal(size=(3, 5))
        self.check(lambda: sum_(mul(layer_norm(x, gain, bias), weights)), x, gain, bias)

    def test_shape_ops(self):
        a, b = leaf(self.rng, 2, 3), leaf(self.rng, 2, 2)
        weights = self.rng.normal(size=(5, 2))
        self.check(lambda: sum_(mul(reshape(concat([a, b], axis=-1), (5, 2)), weights)), a, b)
        stacked_weights = self.rng.normal(size=(3, 2, 2))
        self.check(lambda: sum_(mul(transpose(stack([a, mul(a, a)], axis=0), (2, 0, 1)), stacked_weights)), a)
        self.check(lambda: sum_(mul(slice_tensor(a, (slice(None), slice(1, 3))), weights[:2])), a)
        self.check(lambda: sum_(mul(mean(mul(a, a), axis=1), weights[:2, 0])), a)

    def test_embedding_and_sparse(self):
        table = leaf(self.rng, 4, 3)
        indices = np.array([[0, 2], [2, 3]])
        weights = self.rng.normal(size=(2, 2, 3))
        self.check(lambda: sum_(mul(embedding_lookup(table, indices), weights)), table)

        operator = SparseOperator(sparse.random(4, 4, density=0.5, random_state=1))
        x = leaf(self.rng, 2, 4, 3)
        out_weights = self.rng.normal(size=(2, 4, 3))
        self.check(lambda: sum_(mul(sparse_dense_matmul(operator, x), out_weights)), x)

    def test_sparse_matches_dense_product(self):
        matrix = sparse.random(5, 5, density=0.4, random_state=2)
        x = np.random.default_rng(5).normal(size=(3, 5, 2))
        result = sparse_dense_matmul(matrix, Tensor(x)).value
        np.testing.assert_allclose(result, np.matmul(matrix.toarray(), x))

    def test_attention_plain_and_causal(self):
        q, k, v = leaf(self.rng, 2, 4, 3), leaf(self.rng, 2, 4, 3), leaf(self.rng, 2, 4, 2)
        weights = self.rng.normal(size=(2, 4, 2))
        self.check(lambda: sum_(mul(scaled_dot_attention(q, k, v), weights)), q, k, v)
        self.check(lambda: sum_(mul(scaled_dot_attention(q, k, v, causal=True), weights)), q, k, v)


class AttentionTests(SimpleTestCase):
    def test_causal_mask_blocks_future(self):
        mask = causal_mask(3)
        self.assertEqual(mask[0, 0], 0.0)
        self.assertLess(mask[0, 1], -1e8)
        self.assertEqual(mask[2, 0], 0.0)

    def test_first_position_attends_only_itself(self):
        rng = np.random.default_rng(3)
        q, k = Tensor(rng.normal(size=(4, 2))), Tensor(rng.normal(size=(4, 2)))
        v = Tensor(rng.normal(size=(4, 3)))
        out = scaled_dot_attention(q, k, v, causal=True).value
        np.testing.assert_allclose(out[0], v.value[0])

    def test_changing_future_keys_does_not_change_past(self):
        rng = np.random.default_rng(4)
        q, k, v = (rng.normal(size=(5, 2)) for _ in range(3))
        before = scaled_dot_attention(Tensor(q), Tensor(k), Tensor(v), causal=True).value
        k[4] += 10.0
        v[4] -= 3.0
        after = scaled_dot_attention(Tensor(q), Tensor(k), Tensor(v), causal=True).value
        np.testing.assert_array_equal(before[:4], after[:4])

    def test_shape_errors(self):
        with self.assertRaises(ShapeError):
            matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))
        with self.assertRaises(ShapeError):
            scaled_dot_attention(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 3))), Tensor(np.zeros((4, 1))), causal=True)


class TapeTests(SimpleTestCase):
    def test_linear_gradient(self):
        w = Parameter('w', np.array([[1.0, 2.0], [3.0, 4.0]]))
        x = np.array([[5.0], [7.0]])
        with Tape() as tape:
            loss = sum_(matmul(w, x))
        backward(tape, loss)
        np.testing.assert_array_equal(w.grad, [[5.0, 7.0], [5.0, 7.0]])

    def test_reused_parameter_sums_contributions(self):
        w = Parameter('w', np.array([1.5, -2.0]))
        with Tape() as tape:
            loss = sum_(add(mul(w, 3.0), mul(w, w)))
        backward(tape, loss)
        np.testing.assert_allclose(w.grad, 3.0 + 2.0 * w.value)

    def test_gradients_accumulate_across_calls(self):
        w = Parameter('w', np.ones(3))
        for _ in range(2):
            with Tape() as tape:
                loss = sum_(mul(w, 2.0))
            backward(tape, loss)
        np.testing.assert_array_equal(w.grad, 4.0)

    def test_no_recording_without_tape_or_grad(self):
        w = Parameter('w', np.ones(2))
        out = mul(w, 2.0)
        self.assertFalse(out.requires_grad)
        frozen = Parameter('frozen', np.ones(2), trainable=False)
        with Tape() as tape:
            mul(frozen, 2.0)
        self.assertEqual(len(tape), 0)

    def test_non_scalar_loss(self):
        w = Parameter('w', np.ones(2))
        with Tape() as tape:
            out = mul(w, 2.0)
        with self.assertRaises(ShapeError):
            backward(tape, out)


class AdamTests(SimpleTestCase):
    def test_zero_gradient_keeps_values(self):
        value = np.array([1.0, -2.0])
        new, m, v = adam_update(value, np.zeros(2), np.array([0.4, 0.2]), np.array([0.1, 0.1]), 3, 0.01)
        np.testing.assert_allclose(m, [0.36, 0.18])
        np.testing.assert_allclose(v, [0.0999, 0.0999])
        self.assertFalse(np.array_equal(new, value))
        new, _, _ = adam_update(value, np.zeros(2), np.zeros(2), np.zeros(2), 1, 0.01)
        np.testing.assert_array_equal(new, value)

    def test_first_step_closed_form(self):
        grad = np.array([0.5, -2.0, 1e-3])
        new, _, _ = adam_update(np.zeros(3), grad, np.zeros(3), np.zeros(3), 1, 0.1)
        np.testing.assert_allclose(new, -0.1 * grad / (np.abs(grad) + 1e-8), rtol=1e-12)

    def test_constant_gradient_decreases_monotonically(self):
        w = Parameter('w', np.array([0.0]))
        optimizer = Adam([w], lr=0.01)
        history = []
        for _ in range(100):
            optimizer.zero_grad()
            w.accumulate_grad(np.array([1.0]))
            optimizer.step()
            history.append(float(w.value[0]))
        self.assertTrue(all(b < a for a, b in zip(history, history[1:])))
        self.assertEqual(optimizer.step_count, 100)

    def test_non_finite_gradient_names_parameter(self):
        w = Parameter('layer.weight', np.zeros(2))
        optimizer = Adam([w])
        w.accumulate_grad(np.array([np.nan, 0.0]))
        with self.assertRaisesRegex(NumericError, 'layer.weight'):
            optimizer.step()
        np.testing.assert_array_equal(w.value, 0.0)

    def test_frozen_parameters_are_skipped(self):
        frozen = Parameter('frozen', np.ones(2), trainable=False)
        self.assertEqual(Adam([frozen]).params, [])
