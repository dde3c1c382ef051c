"""
Exception types shared across the package.

Every type derives from a built-in (ValueError / RuntimeError /
FileNotFoundError) so callers can keep catching the broad family.
"""

from __future__ import annotations


class SchemaError(ValueError):
    """Input file or object violates its schema."""

    def __init__(self, field: str, rule: str) -> None:
        self.field = field
        self.rule = rule
        super().__init__(f"{field}: {rule}")


class GeometryError(ValueError):
    """Invalid geometric input (empty mode, satellite below horizon, ...)."""


class NoFeasibleRegionError(GeometryError):
    """Visibility constraints leave no receiver position in the AOI."""

    def __init__(self, message: str = "no feasible region") -> None:
        super().__init__(message)


class SimulationError(RuntimeError):
    """Scenario generation could not produce a valid scene or epoch."""


class EpochError(RuntimeError):
    """
    A pipeline stage failed for one epoch.

    Carries the stage name and the original exception so the failure can
    be reported as a structured diagnostic.
    """

    def __init__(self, stage: str, cause: BaseException) -> None:
        self.stage = stage
        self.cause = cause
        super().__init__(f"epoch failed in stage '{stage}': {cause}")

    def to_dict(self) -> dict[str, str]:
        return {
            "stage": self.stage,
            "error": type(self.cause).__name__,
            "message": str(self.cause),
        }


class RunDirError(FileNotFoundError):
    """A run directory is missing files required for evaluation."""

    def __init__(self, run_dir: str, missing: list[str]) -> None:
        self.run_dir = run_dir
        self.missing = list(missing)
        super().__init__(
            f"run directory '{run_dir}' is incomplete; missing: {', '.join(missing)}"
        )
