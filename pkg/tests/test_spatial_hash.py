import numpy as np
import pytest

from src.core import (
    CoordinateRangeError,
    GridConfig,
    LevelGeometry,
    index_map,
    repetition_offsets,
    resolution_schedule,
    spatial_hash,
    voxel_vertices,
)


class TestSpatialHash:
    def test_known_values(self):
        assert spatial_hash(0, 0, 4096) == 0
        assert spatial_hash(1, 0, 4096) == 1
        # 2654435761 = 0x9E3779B1, младшие 12 бит 0x9B1
        assert spatial_hash(0, 1, 4096) == 0x9B1

    def test_array_matches_scalar(self, rng):
        i = rng.integers(0, 400, size=50)
        j = rng.integers(0, 400, size=50)
        vectorised = spatial_hash(i, j, 1024)
        assert vectorised.shape == (50,)
        assert vectorised.tolist() == [spatial_hash(int(a), int(b), 1024) for a, b in zip(i, j)]

    def test_range(self, rng):
        i = rng.integers(0, 10**6, size=1000)
        j = rng.integers(0, 10**6, size=1000)
        values = spatial_hash(i, j, 256)
        assert values.min() >= 0 and values.max() < 256

    def test_raw_hash_collides_on_46_vertex_grid(self):
        """XOR-хеш сам по себе не инъективен на сетке 46×46; плотные уровни индексируются напрямую."""
        assert spatial_hash(35, 1, 4096) == spatial_hash(16, 34, 4096) == 2450


class TestIndexMap:
    def test_dense_levels_are_injective(self):
        config = GridConfig()
        for level in resolution_schedule(config):
            indices = index_map(level, config.table_size)
            assert indices.shape == (level.vertices_per_axis, level.vertices_per_axis)
            distinct = np.unique(indices).size
            if level.dense:
                assert distinct == level.vertex_count
                assert repetition_offsets(indices) is None
            else:
                assert distinct < level.vertex_count
                assert indices.min() >= 0 and indices.max() < config.table_size

    def test_dense_is_row_major(self):
        level = LevelGeometry(level=0, resolution=4, dense=True)
        indices = index_map(level, 64)
        assert indices[0, 1] == 1
        assert indices[1, 0] == 5
        assert indices[4, 4] == 24

    def test_hashed_level_repeats(self):
        level = LevelGeometry(level=0, resolution=68, dense=False)
        offset = repetition_offsets(index_map(level, 4096))
        assert offset is not None
        assert offset != (0, 0)


class TestVoxelVertices:
    def test_interior(self):
        voxel = voxel_vertices((0.35, 0.62), LevelGeometry(0, 10, True))
        assert [(v.i, v.j) for v in voxel.vertices] == [(3, 6), (4, 6), (3, 7), (4, 7)]
        np.testing.assert_allclose(voxel.fraction, (0.5, 0.2), atol=1e-12)

    def test_upper_boundary_clamped(self):
        voxel = voxel_vertices((1.0, 1.0), LevelGeometry(0, 10, True))
        assert (voxel.vertices[0].i, voxel.vertices[0].j) == (9, 9)
        np.testing.assert_allclose(voxel.fraction, (1.0, 1.0))

    @pytest.mark.parametrize("point", [(-0.01, 0.5), (0.5, 1.01), (np.nan, 0.5)])
    def test_out_of_range(self, point):
        with pytest.raises(CoordinateRangeError):
            voxel_vertices(point, LevelGeometry(0, 10, True))
