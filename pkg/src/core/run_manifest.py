"""Каталоги запусков, манифесты и конфигурация из YAML."""

import hashlib
import json
import logging
import math
import os
import time
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_NAMES = ("hashenc.yml", "hashenc.yaml")
MANIFEST_NAME = "manifest.json"
INFINITE = "infinite"


def load_config(config_path: Optional[str] = None) -> Dict:
    """
    Загружает конфигурацию запуска из YAML-файла, если он существует.

    Args:
        config_path: Путь к конфигурационному файлу

    Returns:
        Словарь с секциями grid/train или пустой словарь, если файл не найден
    """
    candidates = [config_path] if config_path else list(DEFAULT_CONFIG_NAMES)
    for name in candidates:
        if not os.path.exists(name):
            if config_path:
                logger.warning(f"Конфигурационный файл не найден: {name}")
            continue
        try:
            with open(name, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            logger.warning(f"Не удалось загрузить {name}: {e}")
            return {}
        if not isinstance(data, dict):
            logger.warning(f"Конфигурация {name} должна быть словарём, файл пропущен")
            return {}
        logger.info(f"Загружена конфигурация: {name}")
        return data
    return {}


def to_jsonable(value: Any) -> Any:
    """Приводит значения к виду JSON; бесконечности заменяются строкой "infinite"."""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and math.isinf(value):
        return INFINITE if value > 0 else f"-{INFINITE}"
    if isinstance(value, Enum):
        return value.value
    return value


def dump_json(data: Any) -> str:
    return json.dumps(to_jsonable(data), ensure_ascii=False, indent=2, sort_keys=True)


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


class RunDirectory:
    """
    Каталог одного запуска `<root>/<время>-<команда>/` с манифестом.

    Все файлы результата регистрируются через file(); манифест пишется
    атомарно в finalize().
    """

    def __init__(
        self,
        root: str,
        command: str,
        config: Dict,
        seed: int,
        version: str,
        clock: Optional[datetime] = None,
    ) -> None:
        stamp = (clock or datetime.now()).strftime("%Y%m%d-%H%M%S")
        base = os.path.join(root, f"{stamp}-{command}")
        path = base
        suffix = 1
        while os.path.exists(path):
            path = f"{base}-{suffix}"
            suffix += 1
        os.makedirs(path)
        self.path = path
        self.command = command
        self.config = config
        self.seed = seed
        self.version = version
        self.inputs: Dict[str, str] = {}
        self.outputs: List[str] = []
        self.notes: Dict[str, Any] = {}
        self._started = time.perf_counter()
        logger.info(f"Каталог запуска: {self.path}")

    def file(self, name: str) -> str:
        """Возвращает путь к файлу внутри каталога и регистрирует его."""
        target = os.path.join(self.path, name)
        self.register(target)
        return target

    def register(self, path: str) -> None:
        if path not in self.outputs:
            self.outputs.append(path)

    def add_input(self, path: str) -> None:
        self.inputs[path] = file_sha256(path)

    def write_json(self, name: str, data: Any) -> str:
        target = self.file(name)
        with open(target, "w", encoding="utf-8") as f:
            f.write(dump_json(data))
            f.write("\n")
        return target

    def finalize(self) -> str:
        """Пишет manifest.json через временный файл и os.replace."""
        missing = [path for path in self.outputs if not os.path.exists(path)]
        if missing:
            logger.warning(f"Зарегистрированные файлы не созданы и исключены: {missing}")
        manifest = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "inputs": self.inputs,
            "outputs": sorted(path for path in self.outputs if os.path.exists(path)),
            "notes": self.notes,
            "wall_clock": time.perf_counter() - self._started,
            "coordinates": "центры пикселей ((col+0.5)/W, (row+0.5)/H), оси нормируются независимо",
        }
        target = os.path.join(self.path, MANIFEST_NAME)
        temporary = target + ".tmp"
        with open(temporary, "w", encoding="utf-8") as f:
            f.write(dump_json(manifest))
            f.write("\n")
        os.replace(temporary, target)
        logger.info(f"Манифест записан: {target}")
        return target
