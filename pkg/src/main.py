#!/usr/bin/env python3
"""
Hash encoding

Представляет изображения многоуровневыми пространственными хеш-таблицами,
декодируемыми попиксельно маленькой двухслойной сетью, и воспроизводит
эксперименты с интерполяцией, коллизиями, трансляционной инвариантностью и
оптическим потоком через градиенты по координатам.

Использование:
    hashenc fit --image a.png --out a.hshf [--k {1,2}] [--steps N] [--seed S]
    hashenc finetune --model a.hshf --image b.png --out b.hshf [--freeze-decoder]
    hashenc decode --model a.hshf --out a.png
    hashenc flow --model-a a.hshf --model-b b.hshf --mode image --truth "3,-2"
    hashenc analyze {invariance,ablation,sweep,hist,flow,indexmap,trace} ...
    hashenc model-info --model a.hshf [--diagram model]

Требования:
    - Python 3.10+
    - numpy, scipy, pillow, matplotlib, graphviz, pyyaml
    - Graphviz software установленный в системе (только для --diagram)
"""

import argparse
import dataclasses
import logging
import os
import shutil
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .core import (
    DEFAULT_HEATMAP_CHANNELS,
    EncodedField,
    FlowMode,
    FlowProblem,
    GridConfig,
    HashEncodingError,
    HashGrid,
    ImageBuffer,
    ModelGraphBuilder,
    RunDirectory,
    ShapeMismatchError,
    TrainConfig,
    Trainer,
    TrainMode,
    UsageError,
    entry_histograms,
    flow_benchmark,
    flow_visualization,
    grid_from_feature_maps,
    index_map,
    interpolant_trace,
    layer_ablation,
    load_config,
    load_image,
    load_model,
    plotting,
    pyramid_feature_maps,
    reconstruct,
    repetition_offsets,
    resolution_schedule,
    sample_points,
    save_image,
    save_model,
    solve_flow,
    sweep_inversions,
    table_size_sweep,
    translation_invariance,
)

# Настройка логирования
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(levelname)s - %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    """ArgumentParser, сообщающий об ошибках исключением вместо sys.exit."""

    def error(self, message: str) -> None:
        raise UsageError(f"{self.format_usage()}{self.prog}: ошибка: {message}")


def _bounded_int(lower: int):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError as e:
            raise argparse.ArgumentTypeError(f"ожидалось целое число: {text}") from e
        if value < lower:
            raise argparse.ArgumentTypeError(f"значение должно быть >= {lower}: {value}")
        return value

    return parse


_positive_int = _bounded_int(1)
_non_negative_int = _bounded_int(0)


def _int_list(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"ожидался список целых через запятую: {text}") from e


def _displacement(text: str) -> tuple:
    try:
        dx, dy = (float(item) for item in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"ожидалось смещение вида \"dx,dy\": {text}") from e
    return dx, dy


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="Зерно всех случайных выборок")
    common.add_argument("--threads", type=_positive_int, default=1, help="Число потоков для пакета пикселей")
    common.add_argument("--runs-dir", default="runs", help="Корень каталогов запусков")
    common.add_argument("--config", help="Путь к конфигурационному YAML-файлу (секции grid и train)")
    common.add_argument("--verbose", "-v", action="store_true", help="Включить подробное логирование")

    grid_options = _Parser(add_help=False)
    grid_options.add_argument("--k", type=int, choices=[1, 2], help="Полупорядок интерполяции")
    grid_options.add_argument("--table-size", type=int, help="Размер таблицы T (степень двойки)")
    grid_options.add_argument("--levels", type=int, help="Число уровней L")
    grid_options.add_argument("--steps", type=_positive_int, help="Число шагов обучения")
    grid_options.add_argument("--batch", type=_positive_int, help="Пикселей на шаг")

    parser = _Parser(
        prog="hashenc",
        description="Кодирует изображения многоуровневыми хеш-таблицами и анализирует их",
    )
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fit = commands.add_parser("fit", parents=[common, grid_options], help="Обучить модель по изображению")
    fit.add_argument("--image", action="append", required=True, help="Изображение (можно повторять)")
    fit.add_argument(
        "--mode",
        choices=[TrainMode.PER_IMAGE.value, TrainMode.SHARED_DECODER.value],
        default=TrainMode.PER_IMAGE.value,
    )
    fit.add_argument("--out", required=True, help="Файл модели HSHF")
    fit.add_argument("--half", action="store_true", help="Хранить значения в 16 битах")

    finetune = commands.add_parser("finetune", parents=[common], help="Дообучить таблицы под новое изображение")
    finetune.add_argument("--model", required=True)
    finetune.add_argument("--image", required=True)
    finetune.add_argument("--out", required=True)
    finetune.add_argument("--freeze-decoder", action="store_true", help="Обновлять только таблицы")
    finetune.add_argument("--steps", type=_positive_int, default=100)
    finetune.add_argument(
        "--init",
        choices=["model", "pyramid"],
        default="model",
        help="Начальные таблицы: из модели или агрегированием пирамиды изображения",
    )

    decode = commands.add_parser("decode", parents=[common], help="Восстановить изображение из модели")
    decode.add_argument("--model", required=True)
    decode.add_argument("--out", required=True)
    decode.add_argument("--width", type=_positive_int)
    decode.add_argument("--height", type=_positive_int)
    decode.add_argument("--k", type=int, choices=[1, 2])

    flow = commands.add_parser("flow", parents=[common], help="Оптический поток между двумя моделями")
    flow.add_argument("--model-a", required=True)
    flow.add_argument("--model-b", required=True)
    flow.add_argument("--mode", choices=[mode.value for mode in FlowMode], default=FlowMode.IMAGE.value)
    flow.add_argument("--k", type=int, choices=[1, 2])
    flow.add_argument("--samples", type=_positive_int, default=256)
    flow.add_argument("--margin", type=_non_negative_int, default=50)
    flow.add_argument("--steps", type=_positive_int, default=300)
    flow.add_argument("--truth", type=_displacement, help="Истинное смещение \"dx,dy\"")
    flow.add_argument("--out-image", help="Визуализация поля смещений (PNG)")

    analyze = commands.add_parser("analyze", help="Диагностические эксперименты")
    experiments = analyze.add_subparsers(dest="experiment", required=True, parser_class=_Parser)

    invariance = experiments.add_parser("invariance", parents=[common, grid_options])
    invariance.add_argument("--image", required=True)
    invariance.add_argument("--shifts", type=_int_list, default=[0, 10, 20, 40, 80])
    invariance.add_argument("--channels", type=_int_list, default=list(DEFAULT_HEATMAP_CHANNELS))

    ablation = experiments.add_parser("ablation", parents=[common])
    ablation.add_argument("--model", required=True)
    ablation.add_argument("--image", required=True)

    sweep = experiments.add_parser("sweep", parents=[common, grid_options])
    sweep.add_argument("--image", required=True)
    sweep.add_argument("--sizes", type=_int_list, default=[2**8, 2**10, 2**12, 2**14, 2**16])

    hist = experiments.add_parser("hist", parents=[common])
    hist.add_argument("--model", action="append", required=True, help="Модель (можно повторять)")
    hist.add_argument("--bins", type=_positive_int, default=64)

    flow_bench = experiments.add_parser("flow", parents=[common, grid_options])
    flow_bench.add_argument("--image", required=True)
    flow_bench.add_argument("--problems", type=_positive_int, default=20)
    flow_bench.add_argument("--samples", type=_positive_int, default=256)
    flow_bench.add_argument("--margin", type=_non_negative_int, default=50)
    flow_bench.add_argument("--flow-steps", type=_positive_int, default=300)

    experiments.add_parser("indexmap", parents=[common, grid_options])

    trace = experiments.add_parser("trace", parents=[common])
    trace.add_argument("--nodes", type=int, default=9, help="Число узлов одномерной сетки")
    trace.add_argument("--samples", type=_positive_int, default=512)

    info = commands.add_parser("model-info", parents=[common], help="Сведения о модели")
    info.add_argument("--model", required=True)
    info.add_argument("--diagram", help="Имя файла диаграммы (без расширения)")

    return parser


def _dataclass_kwargs(cls, section: Optional[Dict], name: str) -> Dict:
    known = {item.name for item in dataclasses.fields(cls)}
    values = dict(section or {})
    unknown = sorted(set(values) - known)
    if unknown:
        logger.warning(f"Неизвестные параметры в секции {name}: {unknown}")
    return {key: value for key, value in values.items() if key in known}


def resolve_configs(args: argparse.Namespace, file_config: Dict) -> tuple:
    """Собирает GridConfig и TrainConfig: флаги важнее файла, файл важнее умолчаний."""
    grid_values = _dataclass_kwargs(GridConfig, file_config.get("grid"), "grid")
    train_values = _dataclass_kwargs(TrainConfig, file_config.get("train"), "train")

    for flag, key in (("k", "k"), ("table_size", "table_size"), ("levels", "levels")):
        if getattr(args, flag, None) is not None:
            grid_values[key] = getattr(args, flag)
    for flag, key in (("steps", "steps"), ("batch", "batch_pixels")):
        if getattr(args, flag, None) is not None:
            train_values[key] = getattr(args, flag)
    train_values["seed"] = args.seed
    train_values["threads"] = args.threads

    grid_config = GridConfig(**grid_values)
    grid_config.validate()
    return grid_config, TrainConfig(**train_values)


def _model_summary(grid: HashGrid, decoder) -> Dict:
    return {
        "config": grid.config.as_dict(),
        "extent": list(grid.extent) if grid.extent else None,
        "levels": [
            {
                "level": level.level,
                "resolution": level.resolution,
                "vertices": level.vertex_count,
                "dense": level.dense,
            }
            for level in grid.levels
        ],
        "dense_levels": sum(level.dense for level in grid.levels),
        "table_parameters": grid.payload_values(),
        "decoder_parameters": decoder.size(),
        "hidden_width": decoder.hidden_width,
        "payload_bytes": grid.payload_bytes(32) + decoder.size() * 4,
        "payload_bytes_half": grid.payload_bytes(16) + decoder.size() * 2,
    }


def _indexed_path(path: str, index: int, total: int) -> str:
    if total == 1:
        return path
    stem, suffix = os.path.splitext(path)
    return f"{stem}-{index}{suffix}"


def _extent(grid: HashGrid, width: Optional[int] = None, height: Optional[int] = None) -> tuple:
    if width is not None and height is not None:
        return width, height
    if grid.extent is None:
        raise ShapeMismatchError("Размеры изображения не записаны в модели: укажите --width и --height")
    return width or grid.extent[0], height or grid.extent[1]


def _load_input_image(run: RunDirectory, path: str) -> ImageBuffer:
    run.add_input(path)
    return load_image(path)


def _load_input_model(run: RunDirectory, path: str):
    run.add_input(path)
    return load_model(path)


def cmd_fit(args, run: RunDirectory, grid_config: GridConfig, train_config: TrainConfig) -> None:
    images = [_load_input_image(run, path) for path in args.image]
    trainer = Trainer(grid_config, dataclasses.replace(train_config, mode=args.mode), logger)
    if args.mode == TrainMode.SHARED_DECODER.value:
        grids, decoder, report = trainer.fit_shared_decoder(images)
        results = [(grid, decoder) for grid in grids]
        reports = [report]
    else:
        results, reports = [], []
        for image in images:
            grid, decoder, report = trainer.fit_per_image(image)
            results.append((grid, decoder))
            reports.append(report)

    for index, (grid, decoder) in enumerate(results):
        target = _indexed_path(args.out, index, len(results))
        size = save_model(target, grid, decoder, args.half)
        run.register(os.path.abspath(target))
        logger.info(f"Модель сохранена: {target} ({size} байт)")
    run.write_json("report.json", [report.as_dict() for report in reports])


def cmd_finetune(args, run: RunDirectory, grid_config: GridConfig, train_config: TrainConfig) -> None:
    grid, decoder = _load_input_model(run, args.model)
    image = _load_input_image(run, args.image)
    if args.init == "pyramid":
        maps = pyramid_feature_maps(image.pixels, grid.config)
        spread = max(float(np.std(np.concatenate([m.ravel() for m in maps]))), 1e-12)
        # Масштаб пирамиды подгоняется к разбросу записей обученной модели
        scale = float(np.std(grid.tables)) / spread
        grid = grid_from_feature_maps(maps, grid.config, scale, (image.width, image.height))
        run.notes["pyramid_scale"] = scale
    trainer = Trainer(grid.config, train_config, logger)
    tuned_grid, tuned_decoder, report = trainer.finetune(
        grid, decoder, image, freeze_decoder=args.freeze_decoder, steps=args.steps
    )
    save_model(args.out, tuned_grid, tuned_decoder)
    run.register(os.path.abspath(args.out))
    run.write_json("report.json", report.as_dict())


def cmd_decode(args, run: RunDirectory, grid_config: GridConfig, train_config: TrainConfig) -> None:
    grid, decoder = _load_input_model(run, args.model)
    width, height = _extent(grid, args.width, args.height)
    pixels = reconstruct(grid, decoder, width, height, args.k)
    save_image(pixels, args.out)
    run.register(os.path.abspath(args.out))
    logger.info(f"Изображение {width}×{height} сохранено: {args.out}")


def cmd_flow(args, run: RunDirectory, grid_config: GridConfig, train_config: TrainConfig) -> None:
    grid_a, decoder_a = _load_input_model(run, args.model_a)
    grid_b, decoder_b = _load_input_model(run, args.model_b)
    width, height = _extent(grid_a)
    if grid_b.extent is not None and grid_b.extent != (width, height):
        raise ShapeMismatchError(f"Размеры моделей различаются: {grid_a.extent} и {grid_b.extent}")
    rng = np.random.default_rng(args.seed)
    problem = FlowProblem(
        field_a=EncodedField(grid_a, decoder_a),
        field_b=EncodedField(grid_b, decoder_b),
        samples=sample_points(width, height, args.samples, args.margin, rng),
        width=width,
        height=height,
        mode=args.mode,
        k=args.k,
        steps=args.steps,
        margin=args.margin,
        truth=args.truth,
        problem_id=os.path.basename(args.model_b),
    )
    estimate = solve_flow(problem)
    if estimate.mean_epe is not None:
        logger.info(f"Средний EPE: {estimate.mean_epe:.4f} px по {estimate.retained_count} точкам")
    run.write_json("flow.json", estimate.as_dict())
    if args.out_image:
        save_image(flow_visualization(estimate, width, height), args.out_image)
        run.register(os.path.abspath(args.out_image))


def cmd_invariance(args, run, grid_config, train_config) -> None:
    image = _load_input_image(run, args.image)
    results = translation_invariance(image, args.shifts, grid_config, train_config, logger)
    run.notes["heatmap_normalization"] = "цветовая шкала нормируется отдельно для каждого уровня"
    for result in results:
        plotting.save_invariance_heatmaps(
            result,
            args.channels,
            grid_config.features_per_level,
            run.file(f"heatmap_shift{result.shift:+d}.png"),
        )
    run.write_json("invariance.json", [result.as_dict() for result in results])


def cmd_ablation(args, run, grid_config, train_config) -> None:
    grid, decoder = _load_input_model(run, args.model)
    image = _load_input_image(run, args.image)
    result = layer_ablation(grid, decoder, image)
    logger.info(
        f"PSNR: полный {result.full:.2f}, плотные {result.dense_only:.2f}, "
        f"хешированные {result.hashed_only:.2f} дБ"
    )
    run.write_json("ablation.json", result.as_dict())


def cmd_sweep(args, run, grid_config, train_config) -> None:
    image = _load_input_image(run, args.image)
    points = table_size_sweep(image, args.sizes, grid_config, train_config, logger)
    plotting.save_sweep_curve(points, run.file("sweep.png"))
    run.write_json(
        "sweep.json",
        {
            "points": [dataclasses.asdict(point) for point in points],
            "inversions": sweep_inversions(points),
        },
    )


def cmd_hist(args, run, grid_config, train_config) -> None:
    grids = [_load_input_model(run, path)[0] for path in args.model]
    histograms = entry_histograms(grids, args.bins)
    plotting.save_histograms(histograms, run.file("histograms.png"))
    run.write_json(
        "histograms.json",
        {"models": len(grids), "levels": [histogram.as_dict() for histogram in histograms]},
    )


def cmd_flow_benchmark(args, run, grid_config, train_config) -> None:
    image = _load_input_image(run, args.image)
    estimates, table = flow_benchmark(
        image,
        args.problems,
        grid_config,
        train_config,
        samples=args.samples,
        margin=args.margin,
        steps=args.flow_steps,
        seed=args.seed,
        trainer_logger=logger,
    )
    text = table.to_text()
    logger.info("Средний EPE по k и режимам:\n" + text)
    with open(run.file("flow_table.txt"), "w", encoding="utf-8") as f:
        f.write(text + "\n")
    run.write_json("flow_table.json", table.as_dict())
    run.write_json("flow_estimates.json", [estimate.as_dict() for estimate in estimates])


def cmd_indexmap(args, run, grid_config, train_config) -> None:
    summary = []
    for level in resolution_schedule(grid_config):
        indices = index_map(level, grid_config.table_size)
        np.save(run.file(f"level{level.level:02d}.npy"), indices)
        plotting.save_index_map_image(indices, run.file(f"level{level.level:02d}.png"))
        summary.append(
            {
                "level": level.level,
                "resolution": level.resolution,
                "dense": level.dense,
                "distinct_entries": int(np.unique(indices).size),
                "repetition_offset": repetition_offsets(indices),
            }
        )
    run.write_json("indexmap.json", {"config": grid_config.as_dict(), "levels": summary})


def cmd_trace(args, run, grid_config, train_config) -> None:
    rng = np.random.default_rng(args.seed)
    nodes = rng.uniform(-1.0, 1.0, size=args.nodes)
    traces = {}
    for k in (1, 2):
        t, values, derivatives = interpolant_trace(nodes, k, args.samples)
        traces[k] = np.stack([t, values, derivatives], axis=1)
        np.savetxt(
            run.file(f"trace_k{k}.csv"),
            traces[k],
            delimiter=",",
            header="t,value,derivative",
            comments="",
        )
    plotting.save_trace_plot(traces, nodes, run.file("trace.png"))
    run.write_json("trace.json", {"nodes": nodes, "samples": args.samples})


def cmd_model_info(args, run, grid_config, train_config) -> None:
    grid, decoder = _load_input_model(run, args.model)
    summary = _model_summary(grid, decoder)
    run.write_json("model_info.json", summary)
    print(
        f"L={grid.config.levels} T={grid.config.table_size} F={grid.config.features_per_level} "
        f"N={grid.config.n_min}..{grid.config.n_max} k={grid.config.k}\n"
        f"плотных уровней: {summary['dense_levels']}, параметров таблиц: {summary['table_parameters']}, "
        f"декодера: {summary['decoder_parameters']}\n"
        f"полезная нагрузка: {summary['payload_bytes']} байт (16 бит: {summary['payload_bytes_half']})"
    )
    if args.diagram:
        graph = ModelGraphBuilder(grid, decoder, logger).build_graph()
        dot_file = f"{args.diagram}.gv"
        graph.save(dot_file)
        run.register(os.path.abspath(dot_file))
        logger.info(f"Сгенерирован DOT-файл: {dot_file}")
        if shutil.which("dot") is None:
            logger.warning("Graphviz не установлен в системе, SVG не создан: https://graphviz.org/download/")
            return
        output_path = graph.render(args.diagram, format="svg", cleanup=False)
        run.register(os.path.abspath(output_path))
        logger.info(f"Сгенерирована SVG-диаграмма: {output_path}")


COMMANDS = {
    "fit": cmd_fit,
    "finetune": cmd_finetune,
    "decode": cmd_decode,
    "flow": cmd_flow,
    "model-info": cmd_model_info,
}
EXPERIMENTS = {
    "invariance": cmd_invariance,
    "ablation": cmd_ablation,
    "sweep": cmd_sweep,
    "hist": cmd_hist,
    "flow": cmd_flow_benchmark,
    "indexmap": cmd_indexmap,
    "trace": cmd_trace,
}


def run(argv: Sequence[str]) -> int:
    """
    Выполняет одну команду и возвращает код завершения.

    0 - успех, 1 - ошибка использования (каталог запуска не создаётся),
    2 - ошибка выполнения.
    """
    try:
        args = build_parser().parse_args(list(argv))
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    if args.command == "analyze":
        handler = EXPERIMENTS[args.experiment]
        name = f"analyze-{args.experiment}"
    else:
        handler = COMMANDS[args.command]
        name = args.command

    try:
        grid_config, train_config = resolve_configs(args, load_config(args.config))
        echo = {
            key: value
            for key, value in vars(args).items()
            if key not in ("verbose",)
        }
        echo["grid"] = grid_config.as_dict()
        echo["train"] = train_config.as_dict()
        run_dir = RunDirectory(args.runs_dir, name, echo, args.seed, __version__)
        handler(args, run_dir, grid_config, train_config)
        run_dir.finalize()
    except (HashEncodingError, OSError) as e:
        logger.error(f"{name}: {e}")
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    """Точка входа консольного скрипта."""
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
