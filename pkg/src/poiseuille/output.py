"""
Result files: CSV series, SVG plots and the run manifest.
"""

import csv
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import OutputError, ShapeError  # noqa: E402

FLOAT_FORMAT = "{:.17g}"


def _format(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT.format(float(value))
    return str(value)


def ensure_directory(path: Path) -> Path:
    """
    Create the directory if needed.

    Raises:
        OutputError: the directory cannot be created
    """
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise OutputError(f"Cannot create output directory {path}: {e}") from e
    return path


def emit_csv(path: Path, columns: Mapping[str, Sequence[Any]]) -> Path:
    """
    Write equally long columns as a CSV file with a header row.

    Floats are written with 17 significant digits, so reading the file back
    recovers them exactly.

    Args:
        path (Path): the file to write
        columns (Mapping[str, Sequence[Any]]): column name to values, in
          header order

    Raises:
        ShapeError: no rows, or columns of different lengths
        OutputError: the file cannot be written

    Returns:
        Path: the written file
    """
    lengths = {len(values) for values in columns.values()}
    if len(lengths) != 1 or 0 in lengths:
        raise ShapeError(
            f"CSV columns must be non-empty and of equal length, got {lengths}"
        )

    names = list(columns)
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(names)
            for row in zip(*(columns[name] for name in names)):
                writer.writerow([_format(value) for value in row])
    except OSError as e:
        raise OutputError(f"Cannot write {path}: {e}") from e

    return path


def read_csv(path: Path) -> Dict[str, np.ndarray]:
    """Read a numeric CSV written by `emit_csv` into float columns."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(value) for value in row] for row in reader]

    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def emit_svg(
    path: Path,
    x: Sequence[float],
    series: Mapping[str, Sequence[float]],
    *,
    title: str = "",
    xlabel: str = "t",
    log_y: bool = True,
) -> Path:
    """
    Plot one or more series against x as an SVG line chart.

    Non-positive values are left out of log-scale plots. The SVG is written
    without a date and with a fixed hash salt, so it is reproducible.

    Raises:
        ShapeError: empty series
        OutputError: the file cannot be written
    """
    if len(x) == 0 or not series:
        raise ShapeError("Nothing to plot")

    with plt.rc_context({"svg.hashsalt": "poiseuille"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        try:
            for label, values in series.items():
                xs = np.asarray(x, dtype=float)
                ys = np.asarray(values, dtype=float)
                if log_y:
                    keep = ys > 0
                    xs, ys = xs[keep], ys[keep]
                ax.plot(xs, ys, label=label)

            if log_y:
                ax.set_yscale("log")
            ax.set_xlabel(xlabel)
            ax.set_title(title)
            ax.legend(frameon=False)
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as e:
            raise OutputError(f"Cannot write {path}: {e}") from e
        finally:
            plt.close(fig)

    return path


def write_manifest(path: Path, manifest: Mapping[str, Any]) -> Path:
    """
    Write the manifest as JSON, atomically.

    The document goes to a temporary file in the same directory, which then
    replaces the target.

    Raises:
        OutputError: the file cannot be written
    """
    directory = Path(path).parent
    try:
        with tempfile.NamedTemporaryFile(
            "w", dir=directory, suffix=".tmp", delete=False
        ) as f:
            temporary = f.name
            try:
                json.dump(
                    manifest, f, indent=2, sort_keys=True, default=_jsonable
                )
                f.write("\n")
            except BaseException:
                f.close()
                os.unlink(temporary)
                raise
        os.replace(temporary, path)
    except OSError as e:
        raise OutputError(f"Cannot write manifest {path}: {e}") from e

    return Path(path)


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serialisable")


def read_manifest(path: Path) -> Optional[Dict[str, Any]]:
    """The manifest at path, or None when there is none."""
    try:
        with open(path) as f:
            return json.load(f)  # type: ignore[no-any-return]
    except FileNotFoundError:
        return None
