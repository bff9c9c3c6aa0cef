import logging
import sys
from pathlib import Path
from typing import Callable, Optional

from typer import Exit, Option, Typer, echo

from .config import KINDS, RunConfig, load_config
from .errors import PoiseuilleError
from .experiments import exit_code, run_experiment


def _setup_logger(name: str, log_level: int) -> logging.Logger:
    class _InfoFilter(logging.Filter):
        def filter(self: "_InfoFilter", rec: logging.LogRecord) -> bool:
            return rec.levelno in (logging.DEBUG, logging.INFO)

    logger = logging.getLogger(name)
    logger.setLevel(log_level)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    stdout_handler = logging.StreamHandler(sys.stdout)
    stdout_handler.setLevel(log_level)
    stdout_handler.addFilter(_InfoFilter())
    stderr_handler = logging.StreamHandler(sys.stderr)
    stderr_handler.setLevel(logging.WARNING)

    logger.addHandler(stdout_handler)
    logger.addHandler(stderr_handler)

    return logger


def run(
    kind: str,
    *,
    config_path: Optional[Path] = None,
    output: Optional[Path] = None,
    workers: int = 1,
    seed: Optional[int] = None,
    verbose: bool = False,
) -> int:
    """
    Load the configuration, run one experiment kind and report the outcome.

    A configuration that fails to load stops the run before anything is
    written.

    Args:
        kind (str): one of the experiment kinds
        config_path (Optional[Path]): JSON configuration, defaults if None
        output (Optional[Path]): overrides `output_dir` of the file
        workers (int): size of the worker pool
        seed (Optional[int]): overrides `seed` of the file
        verbose (bool): log at DEBUG level

    Returns:
        int: the process exit status
    """
    logger = _setup_logger(
        "poiseuille", logging.DEBUG if verbose else logging.INFO
    )

    try:
        config = load_config(config_path).with_overrides(
            kind=kind, output_dir=output, seed=seed
        )
        manifest = run_experiment(config, workers=workers, logger=logger)
    except PoiseuilleError as e:
        logger.error(f"{kind} failed: {e}")
        logger.debug(e, exc_info=True)
        return exit_code(e)

    for flag in manifest.flags:
        logger.debug(f"Flag: {flag}")
    logger.info(
        f"Done with {kind}: {len(manifest.files)} files in "
        f"{config.output_dir}."
    )
    return 0


def _command(kind: str) -> Callable[..., None]:
    def command(
        *,
        config: Optional[Path] = Option(
            None,
            "--config",
            "-c",
            help="A JSON configuration file. Defaults apply when omitted.",
        ),
        out: Optional[Path] = Option(
            None,
            "--out",
            "-o",
            help="The directory to write results to.",
        ),
        workers: int = Option(
            1,
            min=1,
            help="The number of independent cells to run concurrently.",
        ),
        seed: Optional[int] = Option(
            None,
            min=0,
            help="The seed of the random initial states.",
        ),
        verbose: bool = Option(
            False,
            "--verbose",
            "-v",
            help="The level of verbosity.",
        ),
    ) -> None:
        status = run(
            kind,
            config_path=config,
            output=out,
            workers=workers,
            seed=seed,
            verbose=verbose,
        )
        if status != 0:
            raise Exit(code=status)

    command.__doc__ = f"Run the {kind} experiment."
    return command


def defaults() -> None:
    """
    Print the default configuration as JSON.
    """
    echo(RunConfig().dumps(), nl=False)


def build_app() -> Typer:
    app = Typer(no_args_is_help=True, add_completion=False)
    for kind in KINDS:
        app.command(name=kind)(_command(kind))
    app.command(name="defaults")(defaults)
    return app


def main() -> None:
    build_app()()
