"""Exception hierarchy shared by all modules."""


class LandauBreatherError(Exception):
    """Base class; the CLI maps any subclass to a nonzero exit."""

    code = "error"


class HypothesisViolation(LandauBreatherError):
    code = "HypothesisViolation"


class FluxTooCoarse(LandauBreatherError):
    code = "FluxTooCoarse"


class BoxMismatch(LandauBreatherError):
    code = "BoxMismatch"


class ConvergenceFailure(LandauBreatherError):
    code = "ConvergenceFailure"


class ClusterAmbiguous(LandauBreatherError):
    code = "ClusterAmbiguous"


class HypothesisFailure(LandauBreatherError):
    """Supplied C2 does not satisfy chi_J(H) W chi_J(H) >= C2 chi_J(H)."""

    code = "HypothesisFailure"


class InsufficientData(LandauBreatherError):
    code = "InsufficientData"


class ConfigError(LandauBreatherError):
    code = "ConfigError"

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
