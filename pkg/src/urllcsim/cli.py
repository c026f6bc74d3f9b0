from pathlib import Path
from typing import Annotated, Optional

from cyclopts import App, Parameter, validators
from cyclopts.types import ResolvedExistingFile

from .main import main
from .version import get_version

app = App(
    name="urllcsim",
    help="Simulate and optimize random-repetition URLLC links in interference-limited networks",
    usage="Usage: urllcsim COMMAND [PARAMETERS]",
    version=get_version(),
    default_parameter=Parameter(negative="", show_default=False),
)

app["--help"].help = "display this message and exit"
app["--version"].help = "display application version"

ConfigOption = Annotated[
    ResolvedExistingFile,
    Parameter(
        help="path to the experiment config file (yaml or json)",
        env_var="URLLCSIM_CONFIG",
    ),
]
SeedOption = Annotated[
    Optional[int],
    Parameter(
        help="global seed, overrides config",
        validator=validators.Number(gte=0, lt=2**64),
    ),
]
OutOption = Annotated[
    Optional[Path],
    Parameter(
        help="output directory, overrides config",
    ),
]
WorkersOption = Annotated[
    Optional[int],
    Parameter(
        help="worker processes, defaults to every available core",
        validator=validators.Number(gte=1),
    ),
]
DebugOption = Annotated[
    bool,
    Parameter(
        env_var="URLLCSIM_DEBUG",
        help="show debug logs",
    ),
]

DEFAULT_CONFIG = Path.cwd() / "urllcsim.yaml"


@app.command
def gen(
    *,
    config: ConfigOption = DEFAULT_CONFIG,
    seed: SeedOption = None,
    out: OutOption = None,
    workers: WorkersOption = None,
    debug: DebugOption = False,
) -> None:
    """
    Generate network instance files.
    """
    main("gen", config, seed=seed, out=out, workers=workers, debug=debug)


@app.command
def es(
    *,
    config: ConfigOption = DEFAULT_CONFIG,
    seed: SeedOption = None,
    out: OutOption = None,
    workers: WorkersOption = None,
    debug: DebugOption = False,
) -> None:
    """
    Exhaustive search of (N0, M0) in the symmetric scenario.

    The queueing delay exponent counts time in slots unless qos.queue_time_unit is set to ms,
    which divides it by the slot duration in milliseconds and allows many more slots per frame.
    """
    main("es", config, seed=seed, out=out, workers=workers, debug=debug)


@app.command(name="eval")
def evaluate(
    *,
    config: ConfigOption = DEFAULT_CONFIG,
    seed: SeedOption = None,
    out: OutOption = None,
    workers: WorkersOption = None,
    debug: DebugOption = False,
) -> None:
    """
    Monte Carlo QoS violation probability of one or more policies.

    Queueing violations use qos.queue_time_unit, slot by default, see es --help.
    """
    main("eval", config, seed=seed, out=out, workers=workers, debug=debug)


@app.command
def train(
    *,
    config: ConfigOption = DEFAULT_CONFIG,
    seed: SeedOption = None,
    out: OutOption = None,
    workers: WorkersOption = None,
    debug: DebugOption = False,
) -> None:
    """
    Train the cascaded graph neural network policy.
    """
    main("train", config, seed=seed, out=out, workers=workers, debug=debug)


@app.command
def analyze(
    *,
    config: ConfigOption = DEFAULT_CONFIG,
    seed: SeedOption = None,
    out: OutOption = None,
    workers: WorkersOption = None,
    debug: DebugOption = False,
) -> None:
    """
    Approximation surfaces over a sweep of densities.

    Queueing violations use qos.queue_time_unit, slot by default, see es --help.
    """
    main("analyze", config, seed=seed, out=out, workers=workers, debug=debug)
