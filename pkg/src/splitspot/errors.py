"""Exception hierarchy.

Every class carries a distinct ``exit_code`` used by the command-line runner.
"""


class SplitSpotError(Exception):
    exit_code = 1


class ConfigError(SplitSpotError):
    exit_code = 2

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class ThinCrystalViolation(SplitSpotError):
    exit_code = 3


class InconsistentScene(SplitSpotError):
    exit_code = 4


class NoPhaseMatch(SplitSpotError):
    exit_code = 5


class NoSplitSolution(SplitSpotError):
    exit_code = 6


class TotalInternalReflection(SplitSpotError):
    exit_code = 7


class InvalidDetectionPoint(SplitSpotError):
    exit_code = 8


class NoDonut(SplitSpotError):
    exit_code = 9


class EnvelopeTooLoose(SplitSpotError):
    exit_code = 10


class DetectorOverlap(SplitSpotError):
    exit_code = 11


class SortOrderViolation(SplitSpotError):
    exit_code = 12


class NoSignal(SplitSpotError):
    exit_code = 13


class FitDiverged(SplitSpotError):
    exit_code = 14

    def __init__(self, message, last_params=None):
        super().__init__(message)
        self.last_params = last_params


class GeometryViolation(SplitSpotError):
    exit_code = 15


class DivisionByZeroRate(SplitSpotError):
    exit_code = 16


class CalibrationError(SplitSpotError):
    exit_code = 17


class OutputError(SplitSpotError):
    exit_code = 18
