"""
Error types - every failure carries the process exit code the CLI reports
"""


class PinsttError(Exception):
    """Base error"""

    exit_code = 1

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class ScenarioError(PinsttError):
    """Scenario schema or invariant violation"""

    exit_code = 4

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message, path=path)
        self.path = path


class ModelFormatError(PinsttError):
    """Model file magic, version or length mismatch"""

    exit_code = 5


class NonFiniteError(PinsttError):
    """Non-finite parameter or intermediate value"""

    exit_code = 6

    def __init__(self, message: str, term: str = ""):
        super().__init__(message, term=term)
        self.term = term


class DivergenceError(PinsttError):
    """Training loss became NaN or infinite"""

    exit_code = 6

    def __init__(self, message: str, last_log=None):
        super().__init__(message)
        self.last_log = last_log


class PreconditionError(PinsttError):
    """Initial output outside the tube"""

    exit_code = 7


class SimulationBlowUpError(PinsttError):
    """Plant state became non-finite"""

    exit_code = 7

    def __init__(self, message: str, time: float):
        super().__init__(message, time=time)
        self.time = time


class InvalidTubeError(PinsttError):
    """Tube radius non-positive where the controller needs it"""

    exit_code = 7


class GridMismatchError(PinsttError):
    """Collocation grid not reproducible from the training config"""

    exit_code = 8


IO_EXIT_CODE = 9
