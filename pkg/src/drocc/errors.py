"""Exception hierarchy shared by all drocc modules."""


class DroccError(Exception):
    """Base class for every error raised by this package."""


class MalformedProblem(DroccError, ValueError):
    """LP data with mismatched dimensions or non-finite entries."""


class SolverError(DroccError, RuntimeError):
    """The simplex iteration limit was exceeded."""


class EmptySampleSet(DroccError, ValueError):
    pass


class PoolTooSmall(DroccError, ValueError):
    pass


class DimensionMismatch(DroccError, ValueError):
    pass


class NonLinearSet(DroccError, ValueError):
    """Operation needs a polyhedral set but got a mean-variance set."""


class InfeasibleSet(DroccError, ValueError):
    pass


class NominalOutsideSupport(DroccError, ValueError):
    pass


class InfeasibleAnchor(DroccError, ValueError):
    pass


class NonPositiveAlpha(DroccError, ValueError):
    pass


class EvaluationError(DroccError, ValueError):
    """An evaluator returned a non-finite value."""


class NoFeasibleStart(DroccError, RuntimeError):
    pass


class AllCandidatesInfeasible(DroccError, RuntimeError):
    pass


class MissingConstant(DroccError, ValueError):
    pass


class InvalidAlpha(DroccError, ValueError):
    pass


class TooFewFeasibleReplicates(DroccError, RuntimeError):
    pass


class ConfigError(DroccError, ValueError):
    pass
