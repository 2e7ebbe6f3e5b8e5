import logging
from typing import Optional

import graphviz

from .hash_grid import HashGrid
from .pixel_decoder import PixelDecoder


class ModelGraphBuilder:
    """Строит диаграмму структуры модели: уровни хеш-таблицы, декодер и выход."""

    # Цвета кластеров с повышенной прозрачностью
    CLUSTER_COLORS = {
        "dense": "#4daf4a30",  # зеленый прозрачный
        "hashed": "#e41a1c30",  # красный прозрачный
        "decoder": "#377eb830",  # синий прозрачный
    }

    def __init__(
        self,
        grid: HashGrid,
        decoder: PixelDecoder,
        logger: Optional[logging.Logger] = None,
    ) -> None:
        """
        Инициализирует построитель диаграммы.

        Args:
            grid: Хеш-сетка модели
            decoder: Декодер модели
        """
        self.grid = grid
        self.decoder = decoder
        self.logger = logger or logging.getLogger(__name__)

    def _cluster(self, name: str, label: str) -> graphviz.Digraph:
        subgraph = graphviz.Digraph(name=f"cluster_{name}")
        subgraph.attr(
            label=label,
            style="filled,rounded",
            fillcolor=self.CLUSTER_COLORS[name],
            fontcolor="#333333",
            fontsize="14",
            fontname="Arial Bold",
            color="#88888860",
            penwidth="1.5",
            margin="16",
            labeljust="l",
        )
        return subgraph

    def build_graph(self) -> graphviz.Digraph:
        """Строит ориентированный граф: уровни -> вход декодера -> скрытый слой -> RGB."""
        config = self.grid.config
        graph = graphviz.Digraph(
            name="hash_encoding_model",
            comment="Hash encoding model structure",
            format="svg",
            engine="dot",
        )
        graph.attr(rankdir="LR", fontsize="12", fontname="Arial", nodesep="0.3", ranksep="1.2")
        node_style = dict(
            shape="box",
            style="filled,rounded",
            fillcolor="white",
            fontcolor="#333333",
            fontsize="10",
            fontname="Arial",
        )

        dense = self._cluster("dense", "Плотные уровни (без коллизий)")
        hashed = self._cluster("hashed", "Хешированные уровни")
        for level in self.grid.levels:
            target = dense if level.dense else hashed
            target.node(
                f"level_{level.level}",
                label=(
                    f"уровень {level.level}\\nN={level.resolution}\\n"
                    f"{level.vertex_count} вершин / T={config.table_size}"
                ),
                **node_style,
            )
        graph.subgraph(dense)
        graph.subgraph(hashed)

        decoder = self._cluster("decoder", f"Декодер ({self.decoder.size()} параметров)")
        decoder.node("features", label=f"признаки\\n{config.input_dim}", **node_style)
        decoder.node("hidden", label=f"ReLU\\n{self.decoder.hidden_width}", **node_style)
        decoder.node("rgb", label="RGB\\n3", **node_style)
        graph.subgraph(decoder)

        edge_style = dict(penwidth="0.7", arrowsize="0.6", color="#55555570", arrowhead="vee")
        for level in self.grid.levels:
            graph.edge(
                f"level_{level.level}",
                "features",
                label=f"k={config.k}, F={config.features_per_level}",
                fontsize="8",
                **edge_style,
            )
        graph.edge("features", "hidden", **edge_style)
        graph.edge("hidden", "rgb", **edge_style)

        self.logger.info(
            f"Создан граф модели: {config.levels} уровней, "
            f"{sum(level.dense for level in self.grid.levels)} плотных"
        )
        return graph
