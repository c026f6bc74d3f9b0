from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Literal, Optional

import loguru
from rich.markup import escape

if TYPE_CHECKING:
    from rich.console import Console

LogLevel = Literal["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"]

_LEVEL_STYLES = {
    "TRACE": "bold cyan",
    "DEBUG": "bold blue",
    "INFO": "bold white",
    "SUCCESS": "bold green",
    "WARNING": "bold yellow",
    "ERROR": "bold red",
    "CRITICAL": "bold white on red",
}


def _console_formatter(record: loguru.Record) -> str:
    """
    Rich markup formatter for the console sink, loguru's colour scheme

    ```log
    2026-01-20 00:03:47 | INFO     | ES: 21 (N0, M0) pairs over N0 <= 6
    2026-01-20 00:03:47 | SUCCESS  | ES optimum (6, 3), objective 1.31e-02
    ```
    """
    style = _LEVEL_STYLES.get(record["level"].name, "bold white")
    # markup, braces and angle brackets in the message stay literal
    message = escape(record["message"]).replace("{", "{{").replace("}", "}}").replace("<", r"\<")
    return (
        "[not bold green]{time:YYYY-MM-DD HH:mm:ss}[/not bold green]"
        " | "
        f"[{style}]{{level: <8}}[/{style}]"
        " | "
        f"[{style}]{message}[/{style}]"
    )


def get_logger(
    logger: loguru.Logger,
    level: LogLevel,
    sink: Console,
    *,
    logfile: Optional[Path] = None,
    disable: bool = False,
) -> loguru.Logger:
    """
    Configure loguru to print through a rich console, optionally mirroring
    every record at DEBUG level into a plain text file next to the results.
    """
    logger.remove()

    if disable:
        return logger

    handlers: list[dict[str, object]] = [
        {
            "sink": sink.print,
            "format": _console_formatter,
            "colorize": True,
            "level": level,
        },
    ]

    if logfile is not None:
        logfile.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(
            {
                "sink": logfile,
                "format": "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {name}:{function}:{line} | {message}",
                "colorize": False,
                "level": "DEBUG",
                "mode": "w",
                "encoding": "utf-8",
            }
        )

    logger.configure(handlers=handlers)  # type: ignore[arg-type]

    return logger
