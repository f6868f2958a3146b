# -*- coding: utf-8 -*-

"""
EXCEPTION HIERARCHY
===================

Every module raises one of these so the CLI can map failures to exit codes:

  1 → configuration / case / gain-file problems
  2 → runtime failures (convergence, solver, stage errors)
  3 → attack infeasible for every post-start step (raised by the runner)
"""


class GridLabError(Exception):
    """Root of all project errors."""


# ============================================================
# INPUT PROBLEMS (exit code 1)
# ============================================================

class CaseFormatError(GridLabError, ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        prefix = f"line {line_no}: " if line_no is not None else ""
        super().__init__(f"{prefix}{message}")


class CaseValidationError(GridLabError, ValueError):
    pass


class ScenarioConfigError(GridLabError, ValueError):
    pass


class GainError(GridLabError, ValueError):
    pass


# ============================================================
# RUNTIME PROBLEMS (exit code 2)
# ============================================================

class ConvergenceError(GridLabError, RuntimeError):
    def __init__(self, message: str, residual_norm: float = float("nan")):
        self.residual_norm = residual_norm
        super().__init__(f"{message} (residual norm {residual_norm:.3e})")


class InconsistentStateError(GridLabError, ValueError):
    pass


class StepSizeError(GridLabError, ValueError):
    pass


class CalibrationError(GridLabError, ValueError):
    pass


class AttackSynthesisError(GridLabError, RuntimeError):
    pass


class StageError(GridLabError, RuntimeError):
    def __init__(self, stage: str, step: int | None, cause: Exception):
        self.stage = stage
        self.step = step
        self.cause = cause
        where = f" at step {step}" if step is not None else ""
        super().__init__(f"{stage} failed{where}: {cause}")


class AttackInfeasibleError(GridLabError, RuntimeError):
    """Every attack step after the start reverted to the zero vector."""


INPUT_ERRORS = (CaseFormatError, CaseValidationError, ScenarioConfigError, GainError)
