import graphviz

from src.core import GridConfig, HashGrid, ModelGraphBuilder, PixelDecoder


class TestModelGraphBuilder:
    def test_nodes_and_clusters(self, random_model):
        grid, decoder = random_model
        graph = ModelGraphBuilder(grid, decoder).build_graph()
        source = graph.source
        assert isinstance(graph, graphviz.Digraph)
        assert "cluster_dense" in source
        assert "cluster_hashed" in source
        assert "cluster_decoder" in source
        for level in range(4):
            assert f"level_{level}" in source

    def test_edges(self, random_model):
        grid, decoder = random_model
        source = ModelGraphBuilder(grid, decoder).build_graph().source
        assert source.count("-> features") == 4
        assert "features -> hidden" in source
        assert "hidden -> rgb" in source

    def test_labels(self, random_model):
        grid, decoder = random_model
        source = ModelGraphBuilder(grid, decoder).build_graph().source
        assert "N=32" in source
        assert f"({decoder.size()} параметров)" in source

    def test_dense_only_model(self, small_config, rng):
        config = GridConfig(**{**small_config.as_dict(), "table_size": 2**12})
        grid = HashGrid.random(config, rng)
        source = ModelGraphBuilder(grid, PixelDecoder.random(config.input_dim, rng, hidden=4)).build_graph().source
        assert "level_3" in source.split("cluster_hashed")[0]
