"""
Mocking utilities and small builders shared by the tests.
"""

import json
from pathlib import Path
from typing import Any, Dict

import numpy as np

from poiseuille.grid import Field, Grid1D, build_grid, enforce_reality


# Logger
class MockLogger:
    def __init__(self: "MockLogger") -> None:
        self.warnings = []
        self.infos = []

    def warning(self: "MockLogger", message, exc_info: bool = None) -> None:
        print(f"Would have warned {message} with exc_info {exc_info}")
        self.warnings.append(str(message))

    def info(self: "MockLogger", message, exc_info: bool = None) -> None:
        print(f"Would have informed {message} with exc_info {exc_info}")
        self.infos.append(str(message))

    def debug(self: "MockLogger", message, exc_info: bool = None) -> None:
        print(f"Would have debugged {message} with exc_info {exc_info}")


# Grids
_GRIDS: Dict[Any, Grid1D] = {}


def grid(half_width: float = 10.0, n_y: int = 96) -> Grid1D:
    """A cached collocation grid, so tests share factorisations."""
    key = (half_width, n_y)
    if key not in _GRIDS:
        _GRIDS[key] = build_grid(half_width, n_y)
    return _GRIDS[key]


def random_field(
    k_values: np.ndarray, grid: Grid1D, nu: float, seed: int = 0
) -> Field:
    """Gaussian-localised random modes satisfying the reality condition."""
    rng = np.random.default_rng(seed)
    envelope = np.exp(-(grid.nodes**2) / 2.0)
    envelope[[0, -1]] = 0.0
    shape = (k_values.size, 3)
    coefficients = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    omega = np.array(
        [
            np.polynomial.polynomial.polyval(grid.nodes, c) * envelope
            for c in coefficients
        ]
    )
    return Field(k_values=k_values, omega=enforce_reality(omega), nu=nu)


# Configuration
def write_config(path: Path, document: Dict[str, Any]) -> Path:
    path.write_text(json.dumps(document))
    return path


def small_config(kind: str, **experiment: Any) -> Dict[str, Any]:
    """A configuration small enough for a unit test run."""
    return {
        "grid": {"L_y": 10.0, "n_y": 48},
        "spectrum": {"K_max": 1.0, "delta_k": 0.5, "dealias": 1.0},
        "physics": {"nu": 0.1},
        "time": {"dt": 0.05, "T": 0.5},
        "experiment": {
            "kind": kind,
            "k_list": [0.0, 1.0],
            "nu_list": [0.1],
            "n_samples": 2,
            "plots": False,
            **experiment,
        },
    }
