class UrllcsimError(Exception):
    """Base exception for all urllcsim errors"""

    pass


class ConfigError(UrllcsimError):
    """Invalid experiment configuration or API input"""

    pass


class InfeasibleError(UrllcsimError):
    """The requested model has no feasible operating point (unstable queue, unreachable target, empty search)"""

    pass


class DivergenceError(InfeasibleError):
    """A stochastic-geometry integral does not converge, e.g. path-loss exponent <= 2"""

    pass


class TrainingDivergedError(InfeasibleError):
    """The training loss became non-finite"""

    pass


class DomainError(UrllcsimError, ValueError):
    """Argument outside the mathematical domain of a function"""

    pass


class ShapeError(UrllcsimError, ValueError):
    """Array dimensions do not agree, or a checkpoint does not match the expected layout"""

    pass
