"""
Utility functions for the Hankel approximation toolkit
Provides logging setup, deterministic JSON/CSV writers and float formatting
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

import numpy as np

PathLike = Union[str, Path]


def setup_logging(level: int = logging.INFO) -> None:
    """
    Setup logging configuration for all modules

    Args:
        level: Logging level (default: INFO)
    """
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )


def to_builtin(value: Any) -> Any:
    """
    Convert numpy scalars/arrays and tuples into plain JSON-serialisable Python objects

    Args:
        value: Arbitrary nested structure

    Returns:
        Same structure built from dict, list, float, int, str, bool and None
    """
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_builtin(item) for item in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        # JSON has no inf/nan
        return value if math.isfinite(value) else None
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    return value


def dumps_json(data: Any) -> str:
    """
    Serialise data as deterministic JSON (sorted keys, shortest round-trip floats)

    Args:
        data: Structure to serialise

    Returns:
        JSON text terminated by a newline
    """
    return json.dumps(to_builtin(data), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: PathLike, data: Any) -> Path:
    """
    Write data as deterministic JSON

    Args:
        path: Output file path
        data: Structure to serialise

    Returns:
        Path that was written
    """
    path = Path(path)
    path.write_text(dumps_json(data), encoding='utf-8')
    return path


def read_json(path: PathLike) -> Any:
    """
    Read a JSON file

    Args:
        path: Input file path

    Returns:
        Parsed content
    """
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def format_float(value: float) -> str:
    """
    Format a float with 17 significant digits (CSV convention)

    Args:
        value: Number to format

    Returns:
        Text representation
    """
    return f"{float(value):.17g}"


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    Write rows to a CSV file, floats with 17 significant digits

    Args:
        path: Output file path
        header: Column names
        rows: Row values

    Returns:
        Path that was written
    """
    path = Path(path)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v
                             for v in row])
    return path
