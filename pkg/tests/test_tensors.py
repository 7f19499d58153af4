import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kvflow.errors import NumericError, ShapeError
from kvflow.tensors import (
    Rng,
    cosine_similarity,
    layer_norm,
    matmul,
    seeded_gaussian,
    softmax_rows,
)

GOLDEN = Path(__file__).parent / "golden"


def rand(shape, seed):
    return Rng(seed).gaussian(shape)


class TestMatmul:
    def test_identity(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
        assert np.array_equal(matmul(np.eye(2, dtype=np.float32), a), a)

    def test_direct_arithmetic(self):
        a = [[1.0, 2.0], [3.0, 4.0]]
        b = [[5.0, 6.0], [7.0, 8.0]]
        assert np.array_equal(matmul(a, b), np.array([[19.0, 22.0], [43.0, 50.0]], dtype=np.float32))

    def test_zero_case(self):
        assert np.array_equal(matmul([[0.0, 0.0]], [[1.0], [1.0]]), np.array([[0.0]], dtype=np.float32))

    def test_shape_error_names_both_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 2\)"):
            matmul(np.zeros((2, 3)), np.zeros((2, 2)))

    def test_rejects_non_2d(self):
        with pytest.raises(ShapeError):
            matmul(np.zeros(3), np.zeros((3, 3)))

    @given(seed=st.integers(0, 2**31))
    @settings(max_examples=50, deadline=None)
    def test_associativity(self, seed):
        r = Rng(seed)
        a, b, c = r.gaussian((3, 4)), r.gaussian((4, 5)), r.gaussian((5, 2))
        left = matmul(matmul(a, b), c)
        right = matmul(a, matmul(b, c))
        scale = max(float(np.abs(left).max()), 1e-3)
        assert np.abs(left - right).max() / scale < 1e-4


class TestSoftmaxRows:
    def test_symmetry(self):
        assert np.allclose(softmax_rows([[0.0, 0.0]]), [[0.5, 0.5]], atol=1e-7)

    def test_max_subtraction_no_overflow(self):
        out = softmax_rows([[1000.0, 1000.0]])
        assert np.all(np.isfinite(out))
        assert np.allclose(out, [[0.5, 0.5]], atol=1e-7)

    def test_hand_evaluated_logits(self):
        expected = math.exp(2.0) / (math.exp(2.0) + math.exp(-2.0))
        out = softmax_rows([[2.0, -2.0]])
        assert abs(float(out[0, 0]) - expected) < 1e-4
        assert abs(float(out[0, 0]) - 0.9820) < 1e-4

    def test_empty_rows_rejected(self):
        with pytest.raises(ShapeError):
            softmax_rows(np.zeros((2, 0), dtype=np.float32))

    def test_non_finite_rejected(self):
        with pytest.raises(NumericError):
            softmax_rows([[np.nan, 0.0]])

    @given(seed=st.integers(0, 2**31))
    @settings(max_examples=50, deadline=None)
    def test_rows_sum_to_one_and_order_preserved(self, seed):
        m = rand((4, 6), seed) * 5
        out = softmax_rows(m)
        assert np.allclose(out.sum(axis=1), 1.0, atol=1e-6)
        assert np.array_equal(np.argsort(m, axis=1), np.argsort(out, axis=1))

    @given(seed=st.integers(0, 2**31))
    @settings(max_examples=50, deadline=None)
    def test_duplication_invariance(self, seed):
        m = rand((3, 5), seed) * 3
        dup = softmax_rows(np.concatenate([m, m], axis=1))
        half = 0.5 * np.tile(softmax_rows(m), (1, 2))
        assert np.abs(dup - half).max() < 1e-7


class TestLayerNorm:
    def test_constant_vector_with_eps(self):
        assert np.array_equal(layer_norm(np.full(4, 5.0, dtype=np.float32), 1e-5), np.zeros(4, dtype=np.float32))

    def test_already_normalized(self):
        out = layer_norm(np.array([1.0, -1.0], dtype=np.float32), 0.0)
        assert np.allclose(out, [1.0, -1.0], atol=1e-7)

    def test_mean_one_std_one(self):
        out = layer_norm(np.array([0.0, 2.0], dtype=np.float32), 0.0)
        assert np.allclose(out, [-1.0, 1.0], atol=1e-7)

    def test_empty_axis_rejected(self):
        with pytest.raises(ShapeError):
            layer_norm(np.zeros((3, 0), dtype=np.float32))

    @given(seed=st.integers(0, 2**31))
    @settings(max_examples=50, deadline=None)
    def test_output_statistics(self, seed):
        x = rand((5, 16), seed) * 4 + 1
        out = layer_norm(x, 1e-6).astype(np.float64)
        assert np.abs(out.mean(axis=-1)).max() < 1e-5
        assert np.abs(out.var(axis=-1) - 1.0).max() < 1e-3

    @given(seed=st.integers(0, 2**31), c=st.floats(-100, 100, allow_nan=False))
    @settings(max_examples=50, deadline=None)
    def test_shift_invariance(self, seed, c):
        x = rand((16,), seed)
        assert np.abs(layer_norm(x + np.float32(c)) - layer_norm(x)).max() < 1e-5


class TestCosineSimilarity:
    def test_identity(self):
        assert cosine_similarity([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == pytest.approx(1.0, abs=1e-7)

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_antiparallel(self):
        assert cosine_similarity([1.0, 1.0], [-1.0, -1.0]) == pytest.approx(-1.0, abs=1e-7)

    def test_zero_norm_convention(self):
        assert cosine_similarity([0.0, 0.0], [1.0, 2.0]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            cosine_similarity([1.0], [1.0, 2.0])

    @given(seed=st.integers(0, 2**31))
    @settings(max_examples=50, deadline=None)
    def test_range(self, seed):
        r = Rng(seed)
        a, b = r.gaussian((8,)), r.gaussian((8,))
        assert -1.0 <= cosine_similarity(a, b) <= 1.0


class TestRng:
    def test_same_seed_bitwise_identical(self):
        a = seeded_gaussian((3, 4), Rng(123))
        b = seeded_gaussian((3, 4), Rng(123))
        assert a.tobytes() == b.tobytes()

    def test_seed_sensitivity(self):
        assert not np.array_equal(Rng(1).gaussian((8,)), Rng(2).gaussian((8,)))

    def test_statistical_bounds(self):
        g = seeded_gaussian((10000,), Rng(1))
        assert -0.05 < float(g.mean()) < 0.05
        assert 0.95 < float(g.std()) < 1.05

    def test_empty_shape(self):
        g = seeded_gaussian((0,), Rng(5))
        assert g.shape == (0,)
        assert g.dtype == np.float32

    def test_stream_advances(self):
        r = Rng(9)
        assert not np.array_equal(r.gaussian((4,)), r.gaussian((4,)))

    def test_splitmix64_reference_sequence(self):
        # first outputs of the published splitmix64 for seed 0
        expected = [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F, 0xF88BB8A8724C81EC]
        assert [int(x) for x in Rng(0).raw(4)] == expected

    def test_raw_stream_golden(self):
        got = Rng(42).raw(64).astype("<u8").tobytes()
        assert got == (GOLDEN / "rng_raw_seed42_n64.bin").read_bytes()

    def test_gaussian_stream_golden(self):
        got = Rng(42).gaussian((64,)).astype("<f4").tobytes()
        assert got == (GOLDEN / "rng_gaussian_seed42_n64.bin").read_bytes()

    def test_gaussian_values_finite(self):
        assert np.all(np.isfinite(Rng(3).gaussian((1000,))))
