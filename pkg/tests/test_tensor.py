import numpy as np
import pytest

from deepanalogy.tensor import (DimensionError, NNField, normalize,
                                response_magnitude, upsample_nnf, warp)


class TestNNField:
    def test_identity(self):
        f = NNField.identity(3, 4)
        assert f.height == 3 and f.width == 4
        assert f.target_shape == (3, 4)
        assert f.coords[2, 3, 0] == 2 and f.coords[2, 3, 1] == 3

    def test_random_within_bounds(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            f = NNField.random(5, 9, (4, 6), rng)
            assert f.coords[..., 0].min() >= 0
            assert f.coords[..., 0].max() < 4
            assert f.coords[..., 1].max() < 6

    def test_rejects_out_of_bounds(self):
        coords = np.zeros((2, 2, 2), dtype=np.int32)
        coords[1, 1] = (5, 0)
        with pytest.raises(DimensionError):
            NNField(coords, (3, 3))
        coords[1, 1] = (0, -1)
        with pytest.raises(DimensionError):
            NNField(coords, (3, 3))

    def test_rejects_bad_shapes(self):
        with pytest.raises(DimensionError):
            NNField(np.zeros((2, 2, 3), dtype=np.int32), (2, 2))
        with pytest.raises(DimensionError):
            NNField(np.zeros((2, 2, 2), dtype=np.int32), (0, 2))


class TestWarp:
    def test_identity_bit_exact(self):
        rng = np.random.default_rng(0)
        src = rng.normal(size=(4, 5, 3))
        out = warp(src, NNField.identity(4, 5))
        assert np.array_equal(out, src)

    def test_constant_field(self):
        rng = np.random.default_rng(1)
        src = rng.normal(size=(3, 3, 2))
        f = NNField(np.zeros((4, 4, 2), dtype=np.int32), (3, 3))
        out = warp(src, f)
        assert out.shape == (4, 4, 2)
        assert np.all(out == src[0, 0])

    def test_row_shift(self):
        rng = np.random.default_rng(2)
        src = rng.normal(size=(4, 4, 2))
        coords = NNField.identity(4, 4).coords.copy()
        coords[..., 0] = np.minimum(coords[..., 0] + 1, 3)
        out = warp(src, NNField(coords, (4, 4)))
        for r in range(3):
            assert np.array_equal(out[r], src[r + 1])
        assert np.array_equal(out[3], src[3])

    def test_bounds_mismatch_rejected(self):
        src = np.zeros((4, 4, 1))
        with pytest.raises(DimensionError):
            warp(src, NNField.identity(3, 3))

    def test_fuzz_random_fields(self):
        rng = np.random.default_rng(3)
        src = rng.normal(size=(6, 7, 2))
        flat = src.reshape(-1, 2)
        for _ in range(25):
            f = NNField.random(5, 4, (6, 7), rng)
            out = warp(src, f)
            # every output vector is literally one of the source vectors
            for v in out.reshape(-1, 2):
                assert np.any(np.all(flat == v, axis=1))


class TestUpsample:
    def test_identity_preserved(self):
        up = upsample_nnf(NNField.identity(4, 4), 8, 8, 8, 8)
        assert np.array_equal(up.coords, NNField.identity(8, 8).coords)

    def test_constant_shift_doubles_interior(self):
        coords = NNField.identity(4, 4).coords.copy()
        coords[..., 0] = np.minimum(coords[..., 0] + 1, 3)
        coords[..., 1] = np.minimum(coords[..., 1] + 1, 3)
        up = upsample_nnf(NNField(coords, (4, 4)), 8, 8, 8, 8)
        for r in range(6):
            for c in range(6):
                assert tuple(up.coords[r, c]) == (r + 2, c + 2)

    def test_degenerate_grid_keeps_displacement(self):
        # a 1x1 identity blown up to 2x2 stays the identity: the single
        # coarse cell has zero displacement and each fine position keeps it
        up = upsample_nnf(NNField.identity(1, 1), 2, 2, 2, 2)
        assert np.array_equal(up.coords, NNField.identity(2, 2).coords)

    def test_rejects_zero_dims(self):
        with pytest.raises(DimensionError):
            upsample_nnf(NNField.identity(2, 2), 0, 4, 4, 4)
        with pytest.raises(DimensionError):
            upsample_nnf(NNField.identity(2, 2), 4, 4, 4, 0)

    def test_fuzz_bounds_invariant(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            f = NNField.random(3, 5, (6, 2), rng)
            up = upsample_nnf(f, 7, 9, 11, 5)
            assert up.target_shape == (11, 5)
            assert up.coords[..., 0].max() < 11
            assert up.coords[..., 1].max() < 5
            assert up.coords.min() >= 0


class TestNormalize:
    def test_three_four_five(self):
        src = np.array([[[3.0, 4.0]]])
        out = normalize(src)
        assert np.allclose(out, [[[0.6, 0.8]]])

    def test_zero_vector_guard(self):
        src = np.zeros((2, 2, 3))
        src[0, 0] = (1.0, 0.0, 0.0)
        out = normalize(src)
        assert np.all(out[1, 1] == 0.0)
        assert np.allclose(out[0, 0], (1.0, 0.0, 0.0))

    def test_random_norms(self):
        rng = np.random.default_rng(5)
        out = normalize(rng.normal(size=(5, 5, 16)))
        norms = np.linalg.norm(out, axis=2)
        assert np.all((norms == 0) | (np.abs(norms - 1.0) < 1e-6))

    def test_idempotent(self):
        rng = np.random.default_rng(6)
        src = rng.normal(size=(4, 4, 8)) * 37.0
        once = normalize(src)
        assert np.allclose(normalize(once), once, atol=1e-6)


class TestResponseMagnitude:
    def test_uniform_map(self):
        src = np.full((3, 4, 2), 0.7)
        assert np.allclose(response_magnitude(src), 1.0)

    def test_all_zero_guard(self):
        assert np.all(response_magnitude(np.zeros((3, 3, 2))) == 0.0)

    def test_hand_computed(self):
        src = np.zeros((1, 3, 2))
        src[0, 0] = (1.0, 0.0)   # squared norm 1
        src[0, 1] = (1.0, 1.0)   # squared norm 2
        src[0, 2] = (0.0, 2.0)   # squared norm 4 (the max)
        out = response_magnitude(src)
        assert np.allclose(out[0], [0.25, 0.5, 1.0])
        assert out.max() == 1.0
