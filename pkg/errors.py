"""
Exception hierarchy for blockrank.

Every error carries the CLI exit code it maps to:
0 is reserved for success, 1 for verdict/hypothesis failures,
2 for input errors and 3 for numerical failures.
"""

from typing import Optional


class BlockRankError(Exception):
    """Base class for all errors raised by the library."""

    exit_code = 2


# Input errors (exit code 2)

class InvalidArgument(BlockRankError, ValueError):
    """A caller-supplied value violates a documented precondition."""


class InvalidMode(BlockRankError, ValueError):
    """A well-spread mode was requested for blocks it does not apply to."""


class InvalidScaling(BlockRankError, ValueError):
    """Scaling coefficients are singular or have the wrong shape."""


class OutputError(BlockRankError, OSError):
    """A report or scene file could not be written."""


class InvalidTriple(BlockRankError, ValueError):
    """A triple handed to the rigidity matrix is not collinear."""

    def __init__(self, triple, residual: float):
        self.triple = tuple(triple)
        self.residual = float(residual)
        super().__init__(
            f"triple {self.triple} is not collinear (residual {self.residual:.3e})"
        )


class SceneError(BlockRankError, ValueError):
    """A scene or matrix file could not be parsed or failed validation."""

    def __init__(self, message: str, field: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        self.field = field
        self.line = line
        self.column = column
        location = []
        if line is not None:
            location.append(f"line {line}")
            if column is not None:
                location.append(f"column {column}")
        if field:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(prefix + message)


# Verdict and hypothesis failures (exit code 1)

class HypothesisFailure(BlockRankError):
    """A theorem's hypothesis does not hold on the given input."""

    exit_code = 1

    def __init__(self, message: str, evidence: Optional[dict] = None):
        self.evidence = evidence or {}
        super().__init__(message)


class CertificateMismatch(BlockRankError):
    """A matrix could not be brought into the claimed design structure."""

    exit_code = 1


class DegenerateTriple(HypothesisFailure):
    """A Sylvester-Gallai triple produced a singular coefficient block."""


class DegeneratePair(HypothesisFailure):
    """Two lines (or their 2-spaces) coincide."""


class DegenerateConfiguration(BlockRankError):
    """No admissible generic transform was found for a point list."""

    exit_code = 1


class ConstructionFailure(BlockRankError):
    """A generated object failed its own verification."""

    exit_code = 1


# Numerical failures (exit code 3)

class NumericalFailure(BlockRankError):
    """A decomposition failed or a numerical cap was exceeded."""

    exit_code = 3


class SingularGram(NumericalFailure):
    """A row or column gram is not positive definite."""

    def __init__(self, eigenvalue: float, eigen_index: int,
                 axis: Optional[str] = None, position: Optional[int] = None,
                 step: Optional[int] = None):
        self.eigenvalue = float(eigenvalue)
        self.eigen_index = int(eigen_index)
        self.axis = axis
        self.position = position
        self.step = step
        where = ""
        if axis is not None:
            where = f" in {axis} {position}"
        if step is not None:
            where += f" at step {step}"
        super().__init__(
            f"singular gram{where}: eigenvalue {self.eigenvalue:.3e} "
            f"(index {self.eigen_index})"
        )

    def located(self, axis: str, position: int, step: Optional[int] = None) -> "SingularGram":
        """Return a copy annotated with where in the matrix the gram came from."""
        return SingularGram(self.eigenvalue, self.eigen_index, axis, position,
                            self.step if step is None else step)

    def to_dict(self) -> dict:
        return {
            "eigenvalue": self.eigenvalue,
            "eigen_index": self.eigen_index,
            "axis": self.axis,
            "position": self.position,
            "step": self.step,
        }
