"""
Domain errors
Every error subclasses ValueError so the API layer answers them with a 400
"""


class VitriqError(ValueError):
    """Base class for all vitriq domain errors"""


class DimensionMismatchError(VitriqError):
    """Operand sizes do not agree"""


class UnsatisfiableSystemError(VitriqError):
    """The parity vector is not in the column space of the matrix"""


class InfeasibleEnsembleError(VitriqError):
    """The requested instance cannot be drawn without repeated rows"""


class MatrixStructureError(VitriqError):
    """A matrix lacks the structure an operation relies on"""


class UnloweredGateError(VitriqError):
    """A gate outside H/CNOT/MEASURE reached a lowered-only consumer"""


class CircuitSizeError(VitriqError):
    """The circuit is too large for dense state-vector simulation"""


class EmptySampleError(VitriqError):
    """A statistic was requested over an empty collection"""


class DegenerateDataError(VitriqError):
    """Data cannot support the requested fit"""


class ConfigurationError(VitriqError):
    """A configuration file or field is invalid"""


class QasmParseError(VitriqError):
    """QASM text outside the supported dialect"""


class OutputError(OSError):
    """Writing an artifact failed; not a client error"""

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"Failed writing {path}: {reason}")
