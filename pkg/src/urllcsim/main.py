from __future__ import annotations

import signal
import sys
from pathlib import Path
from typing import Literal, Optional

from loguru import logger as _loguru_logger
from pydantic import ValidationError
from rich.console import Console
from rich.traceback import install

from .api.main import eval_workload, run_analyze, run_es, run_eval, run_gen, run_train
from .bar import progress_bar
from .config import apply_overrides, config_hash, read_config
from .exceptions import ConfigError, InfeasibleError, ShapeError
from .log import get_logger
from .model import ExperimentConfig
from .queueing import max_slots
from .types import TrainState
from .version import get_version

# Supress keyboardinterrupt traceback
signal.signal(signal.SIGINT, lambda x, y: sys.exit(1))

# Install rich traceback
install()

# Console object, used by both progressbar and loguru
console = Console()

Command = Literal["gen", "es", "eval", "train", "analyze"]

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4


def main(
    command: Command,
    config: Optional[Path] = None,
    *,
    seed: Optional[int] = None,
    out: Optional[Path] = None,
    workers: Optional[int] = None,
    debug: bool = False,
) -> None:
    """
    Run one subcommand, log the outcome and exit with the code of its failure class:
    2 for configuration errors, 3 for infeasible models and 4 for I/O errors.
    """

    # Configure logger
    level = "DEBUG" if debug else "INFO"
    logger = get_logger(logger=_loguru_logger, level=level, sink=console)  # type: ignore

    # Read config file
    try:
        config_data = read_config(config) if config is not None else read_config(Path.cwd() / "urllcsim.yaml")
        config_data = apply_overrides(config_data, seed=seed, out=out, workers=workers)
    except FileNotFoundError as error:
        logger.error(f"Config file not found: {error.filename}")
        sys.exit(EXIT_CONFIG)
    except ValidationError as errors:
        logger.error(f"{errors.error_count()} error(s) in config")
        for err in errors.errors():
            location = ".".join(str(part) for part in err.get("loc", ()))
            logger.error(f"{location}: {err.get('msg')}")
        sys.exit(EXIT_CONFIG)
    except ConfigError as error:
        logger.error(error)
        sys.exit(EXIT_CONFIG)

    if config_data.output.logfile:
        logfile = config_data.output.dir / "urllcsim.log"
        logger = get_logger(logger=_loguru_logger, level=level, sink=console, logfile=logfile)  # type: ignore

    logger.debug(f"Version: {get_version()}")
    if config is not None:
        logger.info(f"Config: {config}")
    logger.info(f"Command: {command}")
    logger.info(f"Seed: {config_data.seed}")
    logger.info(f"Config Hash: {config_hash(config_data)}")
    logger.info(f"Output Directory: {config_data.output.dir}")

    try:
        files = _dispatch(command, config_data, debug)
    except (ValidationError, ConfigError, ShapeError) as error:
        logger.error(error)
        sys.exit(EXIT_CONFIG)
    except InfeasibleError as error:
        logger.error(f"Infeasible: {error}")
        sys.exit(EXIT_INFEASIBLE)
    except OSError as error:
        logger.error(f"I/O error: {error}")
        sys.exit(EXIT_IO)

    for file in files:
        logger.info(f"Wrote: {file}")


def _dispatch(command: Command, config_data: ExperimentConfig, debug: bool) -> list[Path]:
    """Run the subcommand under a progress bar and return the files it wrote"""
    if command == "gen":
        return run_gen(config_data).files

    if command == "es":
        rows = max_slots(config_data.scenario.lambda0, config_data.qos)
        with progress_bar(console=console, disable=debug) as progress:
            task = progress.add_task("ES...", total=rows, status="")
            output = run_es(config_data, on_row=lambda n0: progress.update(task, completed=n0, status=f"N0={n0}"))
        assert output.result is not None
        _loguru_logger.success(f"ES optimum: (N0, M0) = ({output.result.n0}, {output.result.m0})")
        return output.files

    if command == "eval":
        total = eval_workload(config_data)
        with progress_bar(console=console, disable=debug) as progress:
            task = progress.add_task("Monte Carlo...", total=total, status="")
            return run_eval(config_data, on_unit=lambda: progress.update(task, advance=1)).files

    if command == "train":
        with progress_bar(console=console, disable=debug) as progress:
            task = progress.add_task("Training...", total=config_data.train.iterations, status="")

            def on_iteration(state: TrainState, loss: float) -> None:
                progress.update(task, completed=state.iteration, status=f"loss {loss:.2f}")

            return run_train(config_data, on_iteration=on_iteration).files

    with progress_bar(console=console, disable=debug) as progress:
        task = progress.add_task("Analyze...", total=len(config_data.analyze.densities), status="")
        return run_analyze(config_data, on_density=lambda: progress.update(task, advance=1)).files
