"""Output layout for noisegate runs."""
from __future__ import annotations

from pathlib import Path
from typing import Optional

DEFAULT_OUTPUT_DIR = "noisegate-out"

REPORT_FILE = "report.json"
PERF_CURVES_FILE = "perf_curves.csv"
RANKS_FILE = "ranks.csv"
SUMMARY_FILE = "summary.txt"
DISCRETIZATION_FILE = "discretization.csv"
COMPLEXITY_FILE = "complexity.csv"
QUANTA_FILE = "quanta.csv"
OVERSAMPLE_FILE = "oversample.csv"
NOISY_TO_EXTREMES_FILE = "noisy_to_extremes.csv"
EXPERIMENTS_FILE = "experiments.json"


def _ensure_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def get_output_dir(base: Optional[str | Path] = None) -> Path:
    """The run's output directory, created if missing."""
    return _ensure_dir(Path(base or DEFAULT_OUTPUT_DIR))


def output_file(name: str, base: Optional[str | Path] = None) -> Path:
    return get_output_dir(base) / name


def get_schema_dir() -> Path:
    return Path(__file__).parent / "schema"


def get_learners_dir() -> Path:
    return Path(__file__).parent / "learners_definitions"
