from .__about__ import (
    __author__,
    __copywrite__,
    __license__,
    __status__,
    __title__,
    __version__,
)
from .config import RunConfig, load_config
from .experiments import RunManifest, run_experiment
from .runner import build_app, main

__all__ = [
    "__title__",
    "__version__",
    "__author__",
    "__license__",
    "__copywrite__",
    "__status__",
    "RunConfig",
    "RunManifest",
    "build_app",
    "load_config",
    "main",
    "run_experiment",
]
