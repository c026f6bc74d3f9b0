from __future__ import annotations

from typing import TYPE_CHECKING

from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    SpinnerColumn,
    TaskProgressColumn,
    TextColumn,
    TimeElapsedColumn,
    TimeRemainingColumn,
)

if TYPE_CHECKING:
    from rich.console import Console


def progress_bar(console: Console, transient: bool = False, disable: bool = False) -> Progress:
    """
    Progress bar shared by the long running subcommands.

    Every task must be added with a `status` field, rendered after the timers
    (e.g. the current loss of a training run), an empty string shows nothing.
    """
    return Progress(
        TextColumn("[progress.description]{task.description}"),
        SpinnerColumn(),
        BarColumn(),
        MofNCompleteColumn(),
        TextColumn("•"),
        TaskProgressColumn(),
        TextColumn("•"),
        TimeElapsedColumn(),
        TextColumn("<"),
        TimeRemainingColumn(),
        TextColumn("[cyan]{task.fields[status]}"),
        console=console,
        transient=transient,
        disable=disable,
    )


# Rendered as:
# Training... ⠼ ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━ 120/300 • 40% • 0:21:10 < 0:31:40 loss -2.41
