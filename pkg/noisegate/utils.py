"""Utility functions for noisegate."""
from __future__ import annotations

import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Sequence, TypeVar

import numpy as np
import yaml

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

T = TypeVar("T")
R = TypeVar("R")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def load_yaml(path: Path) -> Dict:
    """Load a YAML file, returning an empty dict for a missing or empty file."""
    if not path.exists():
        return {}
    return yaml.safe_load(path.read_text(encoding="utf-8")) or {}


def load_toml(path: Path) -> Dict:
    with open(path, "rb") as handle:
        return tomllib.load(handle)


def load_mapping(path: Path) -> Dict:
    """Load a config mapping from YAML or TOML, chosen by file suffix."""
    if path.suffix.lower() == ".toml":
        return load_toml(path)
    return load_yaml(path)


def to_builtin(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays and tuples into JSON-safe builtins."""
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_builtin(item) for item in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value) or math.isinf(value):
            return None
        return value
    return value


def dumps_json(data: Any) -> str:
    return json.dumps(to_builtin(data), indent=2, sort_keys=True, allow_nan=False) + "\n"


def dump_json(path: Path, data: Any) -> None:
    """Write JSON deterministically: sorted keys, no NaN, trailing newline."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(data), encoding="utf-8")


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent random stream for (seed, *keys); same keys give the same stream."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(k) for k in keys]]))


def derive_seed(seed: int, *keys: int) -> int:
    """Integer seed for libraries that take ``random_state`` instead of a Generator."""
    state = np.random.SeedSequence([int(seed), *[int(k) for k in keys]]).generate_state(1)
    return int(state[0])


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> List[R]:
    """Map ``fn`` over ``items`` keeping input order; ``jobs`` > 1 uses worker threads."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def configure_logging(level: str = "INFO") -> None:
    """Send noisegate logs to stderr at ``level``."""
    root = logging.getLogger("noisegate")
    root.setLevel(getattr(logging, level.upper(), logging.INFO))
    if not any(getattr(handler, "_noisegate", False) for handler in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._noisegate = True  # type: ignore[attr-defined]
        root.addHandler(handler)


def format_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Render a plain-text table for terminal summaries."""
    cells = [[_fmt_cell(value) for value in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in cells:
        for index, cell in enumerate(row):
            widths[index] = max(widths[index], len(cell))
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines)


def _fmt_cell(value: Any) -> str:
    if value is None:
        return "*"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.4g}"
    return str(value)
